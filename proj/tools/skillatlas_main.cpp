#include <CLI11.hpp>
#include <iostream>
#include <nlohmann/json.hpp>
#include <thread>

#include "skillatlas/error.hpp"
#include "skillatlas/pipeline.hpp"

namespace {

using skillatlas::ConfigError;
using skillatlas::Error;
using skillatlas::ProviderError;

void print_error(const Error& e, const char* category, const std::string& field = {},
                 std::optional<std::size_t> batch = std::nullopt) {
  nlohmann::ordered_json j;
  j["error"]["code"] = skillatlas::errc_name(e.code());
  j["error"]["category"] = category;
  j["error"]["message"] = e.what();
  if (!field.empty()) j["error"]["field"] = field;
  if (batch) j["error"]["batch_index"] = *batch;
  std::cerr << j.dump() << "\n";
}

struct Options {
  std::string config;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::vector<std::string> overrides;
  bool quiet = false;
};

int run(const std::string& subcommand, const Options& opts) {
  try {
    if (opts.config.empty()) throw ConfigError("config", "--config is required");
    auto cfg = skillatlas::load_config(opts.config);
    const auto base = std::filesystem::current_path();
    for (const auto& o : opts.overrides) skillatlas::apply_override(cfg, o, base);
    if (opts.output_dir) cfg.paths.output_dir = std::filesystem::absolute(*opts.output_dir);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.jobs) cfg.jobs = *opts.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : *opts.jobs;

    const auto summary = skillatlas::run_subcommand(subcommand, cfg);
    if (!opts.quiet) {
      for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& o : summary.outputs) std::cout << (cfg.paths.output_dir / o).string() << "\n";
    }
    return 0;
  } catch (const ProviderError& e) {
    print_error(e, "provider", {}, e.batch_index());
    return skillatlas::exit_code_for(skillatlas::ErrorCategory::Provider);
  } catch (const ConfigError& e) {
    print_error(e, "config", e.field());
    return skillatlas::exit_code_for(skillatlas::ErrorCategory::Config);
  } catch (const Error& e) {
    const char* cat = e.category() == skillatlas::ErrorCategory::Data       ? "data"
                      : e.category() == skillatlas::ErrorCategory::Provider ? "provider"
                                                                            : "config";
    print_error(e, cat);
    return skillatlas::exit_code_for(e.category());
  } catch (const std::exception& e) {
    nlohmann::ordered_json j;
    j["error"] = {{"code", "Internal"}, {"category", "data"}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skillatlas: infer labor-market skills from course syllabi"};
  app.set_version_flag("--version", std::string(skillatlas::library_version()));
  app.require_subcommand(1);

  Options opts;
  std::string chosen;
  for (const auto& name : skillatlas::subcommand_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " step");
    sub->add_option("-c,--config", opts.config, "pipeline config (JSON)");
    sub->add_option("-o,--output-dir", opts.output_dir, "override paths.output_dir");
    sub->add_option("--seed", opts.seed, "override the master seed");
    sub->add_option("-j,--jobs", opts.jobs, "worker threads (0 = all cores)");
    sub->add_option("--set", opts.overrides, "override a config field, e.g. options.top_k=5");
    sub->add_flag("-q,--quiet", opts.quiet, "suppress the output listing");
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    nlohmann::ordered_json j;
    j["error"] = {{"code", "ConfigInvalid"}, {"category", "config"}, {"field", "arguments"}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return skillatlas::exit_code_for(skillatlas::ErrorCategory::Config);
  }
  return run(chosen, opts);
}
