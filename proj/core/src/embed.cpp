#include "skillatlas/embed.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <random>

#include "skillatlas/error.hpp"
#include "skillatlas/util.hpp"

namespace skillatlas {

using nlohmann::json;

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::DimensionMismatch,
                "cosine of vectors with dims " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw Error(Errc::ZeroNormVector, "cosine of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) { return cosine(a.values, b.values); }

std::string cache_key(std::string_view text) { return sha256_hex(normalize_text(text)); }

EmbeddingVector test_provider(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw Error(Errc::InvalidArgument, "test provider needs dim >= 2");
  const std::string key = cache_key(text);
  std::uint64_t text_hash = 0;
  for (int i = 0; i < 16; ++i) {
    const char c = key[static_cast<std::size_t>(i)];
    text_hash = (text_hash << 4) | static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
  }
  std::mt19937_64 rng(derive_seed(seed, text_hash));
  std::normal_distribution<double> normal(0.0, 1.0);
  EmbeddingVector v;
  v.values.resize(dim);
  double norm2 = 0.0;
  for (double& x : v.values) {
    x = normal(rng);
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v.values) x *= inv;
  return v;
}

ProviderKind parse_provider_kind(std::string_view name) {
  if (name == "http") return ProviderKind::Http;
  if (name == "stdio") return ProviderKind::Stdio;
  if (name == "cache") return ProviderKind::Cache;
  if (name == "test") return ProviderKind::Test;
  throw ConfigError("provider.kind", "unknown provider kind '" + std::string(name) + "'");
}

std::string_view provider_kind_name(ProviderKind kind) noexcept {
  switch (kind) {
    case ProviderKind::Http: return "http";
    case ProviderKind::Stdio: return "stdio";
    case ProviderKind::Cache: return "cache";
    case ProviderKind::Test: return "test";
  }
  return "test";
}

namespace {

EmbeddingVector vector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("vector is not an array");
  EmbeddingVector v;
  v.values.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw std::invalid_argument("vector entry is not a number");
    v.values.push_back(x.get<double>());
  }
  return v;
}

std::vector<EmbeddingVector> vectors_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("'vectors' is not an array");
  std::vector<EmbeddingVector> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(vector_from_json(v));
  return out;
}

}  // namespace

// ---- test -----------------------------------------------------------------

TestEmbeddingProvider::TestEmbeddingProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 2) throw ConfigError("provider.dim", "test provider needs dim >= 2");
}

std::string TestEmbeddingProvider::id() const {
  return "test:dim=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_);
}

std::vector<EmbeddingVector> TestEmbeddingProvider::embed(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(test_provider(t, dim_, seed_));
  return out;
}

// ---- cache ----------------------------------------------------------------

CacheEmbeddingProvider::CacheEmbeddingProvider(const std::filesystem::path& path, std::size_t dim) : dim_(dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProviderError(Errc::ProviderUnavailable, "embedding cache not found: " + path.string(), 0);
  path_hash_ = sha256_file_hex(path).substr(0, 16);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      table_.insert_or_assign(j.at("key").get<std::string>(), vector_from_json(j.at("vector")));
    } catch (const std::exception& e) {
      throw Error(Errc::MalformedInput,
                  "embedding cache " + path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string CacheEmbeddingProvider::id() const { return "cache:" + path_hash_; }

std::vector<EmbeddingVector> CacheEmbeddingProvider::embed(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    const std::string key = cache_key(t);
    auto it = table_.find(key);
    if (it == table_.end()) {
      throw ProviderError(Errc::ProviderUnavailable, "embedding cache has no entry for key " + key, 0);
    }
    out.push_back(it->second);
  }
  return out;
}

void write_embedding_cache(const std::filesystem::path& path, std::span<const std::string> texts,
                           std::span<const EmbeddingVector> vectors) {
  if (texts.size() != vectors.size()) throw Error(Errc::LengthMismatch, "texts and vectors differ in length");
  std::string out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    json j;
    j["key"] = cache_key(texts[i]);
    j["vector"] = vectors[i].values;
    out += j.dump();
    out.push_back('\n');
  }
  write_file(path, out);
}

// ---- http -----------------------------------------------------------------

HttpEmbeddingProvider::HttpEmbeddingProvider(const ProviderConfig& cfg) : cfg_(cfg) {
  std::string_view ep = cfg.endpoint_or_path;
  const auto scheme_end = ep.find("://");
  if (scheme_end == std::string_view::npos) {
    throw ConfigError("provider.endpoint", "http endpoint must look like http://host:port[/path]");
  }
  const auto path_start = ep.find('/', scheme_end + 3);
  scheme_host_port_ = std::string(ep.substr(0, path_start));
  base_path_ = path_start == std::string_view::npos ? "" : std::string(ep.substr(path_start));
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

std::string HttpEmbeddingProvider::id() const {
  return "http:" + cfg_.endpoint_or_path + ":dim=" + std::to_string(cfg_.dim);
}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed(std::span<const std::string> texts) {
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration<double>(cfg_.timeout_seconds);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(secs).count();
  client.set_connection_timeout(usecs / 1000000, usecs % 1000000);
  client.set_read_timeout(usecs / 1000000, usecs % 1000000);
  client.set_write_timeout(usecs / 1000000, usecs % 1000000);

  json body;
  body["texts"] = std::vector<std::string>(texts.begin(), texts.end());
  auto res = client.Post(base_path_ + "/embed", body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const Errc code = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout
                          ? Errc::ProviderTimeout
                          : Errc::ProviderUnavailable;
    throw ProviderError(code, "http provider request failed: " + httplib::to_string(err), 0);
  }
  if (res->status != 200) {
    throw ProviderError(Errc::ProviderUnavailable, "http provider returned status " + std::to_string(res->status), 0);
  }
  try {
    const json j = json::parse(res->body);
    const auto dim = j.at("dim").get<std::size_t>();
    if (dim != cfg_.dim) {
      throw ProviderError(Errc::DimensionMismatch,
                          "http provider dim " + std::to_string(dim) + " != configured " + std::to_string(cfg_.dim), 0);
    }
    return vectors_from_json(j.at("vectors"));
  } catch (const ProviderError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProviderError(Errc::ProviderUnavailable, std::string("http provider sent a bad response: ") + e.what(), 0);
  }
}

// ---- stdio ----------------------------------------------------------------

StdioEmbeddingProvider::StdioEmbeddingProvider(const ProviderConfig& cfg) : cfg_(cfg) {
  if (cfg.endpoint_or_path.empty()) throw ConfigError("provider.endpoint", "stdio provider needs a command");
  ::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0) throw ProviderError(Errc::ProviderUnavailable, "pipe() failed", 0);
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ProviderError(Errc::ProviderUnavailable, "pipe() failed", 0);
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw ProviderError(Errc::ProviderUnavailable, "fork() failed", 0);
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execl("/bin/sh", "sh", "-c", cfg_.endpoint_or_path.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

StdioEmbeddingProvider::~StdioEmbeddingProvider() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == 0) {
      ::kill(pid_, SIGTERM);
      ::waitpid(pid_, &status, 0);
    }
  }
}

std::string StdioEmbeddingProvider::id() const {
  return "stdio:" + cfg_.endpoint_or_path + ":dim=" + std::to_string(cfg_.dim);
}

std::string StdioEmbeddingProvider::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(cfg_.timeout_seconds);
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw ProviderError(Errc::ProviderTimeout, "stdio provider timed out", 0);
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (rc == 0) throw ProviderError(Errc::ProviderTimeout, "stdio provider timed out", 0);
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw ProviderError(Errc::ProviderUnavailable, "poll() failed on stdio provider", 0);
    }
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw ProviderError(Errc::ProviderUnavailable, "stdio provider closed its output", 0);
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<EmbeddingVector> StdioEmbeddingProvider::embed(std::span<const std::string> texts) {
  std::lock_guard lock(mu_);
  const std::uint64_t id = next_id_++;
  json req;
  req["id"] = id;
  req["texts"] = std::vector<std::string>(texts.begin(), texts.end());
  std::string line = req.dump();
  line.push_back('\n');
  std::size_t off = 0;
  while (off < line.size()) {
    const ssize_t n = ::write(to_child_, line.data() + off, line.size() - off);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw ProviderError(Errc::ProviderUnavailable, "stdio provider is not accepting input", 0);
    off += static_cast<std::size_t>(n);
  }
  const std::string reply = read_line();
  try {
    const json j = json::parse(reply);
    if (j.at("id").get<std::uint64_t>() != id) {
      throw ProviderError(Errc::ProviderUnavailable, "stdio provider answered out of order", 0);
    }
    return vectors_from_json(j.at("vectors"));
  } catch (const ProviderError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProviderError(Errc::ProviderUnavailable, std::string("stdio provider sent a bad response: ") + e.what(), 0);
  }
}

// ---- memo -----------------------------------------------------------------

MemoEmbeddingProvider::MemoEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner) : inner_(std::move(inner)) {}

std::vector<EmbeddingVector> MemoEmbeddingProvider::embed(std::span<const std::string> texts) {
  std::vector<std::string> keys;
  keys.reserve(texts.size());
  for (const auto& t : texts) keys.push_back(cache_key(t));

  std::vector<std::string> missing;
  std::vector<std::string> missing_keys;
  {
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (!memo_.contains(keys[i]) &&
          std::find(missing_keys.begin(), missing_keys.end(), keys[i]) == missing_keys.end()) {
        missing.push_back(texts[i]);
        missing_keys.push_back(keys[i]);
      }
    }
  }
  std::vector<EmbeddingVector> fresh;
  if (!missing.empty()) fresh = inner_->embed(missing);
  if (fresh.size() != missing.size()) {
    throw ProviderError(Errc::ProviderUnavailable, "provider returned the wrong number of vectors", 0);
  }
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < missing.size(); ++i) memo_.try_emplace(missing_keys[i], std::move(fresh[i]));
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& k : keys) out.push_back(memo_.at(k));
  return out;
}

// ---- factory / batching ---------------------------------------------------

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& cfg) {
  if (cfg.dim < 1) throw ConfigError("provider.dim", "dim must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("provider.batch_size", "batch_size must be >= 1");
  switch (cfg.kind) {
    case ProviderKind::Test: return std::make_unique<TestEmbeddingProvider>(cfg.dim, cfg.seed);
    case ProviderKind::Cache: return std::make_unique<CacheEmbeddingProvider>(cfg.endpoint_or_path, cfg.dim);
    case ProviderKind::Http: return std::make_unique<HttpEmbeddingProvider>(cfg);
    case ProviderKind::Stdio: return std::make_unique<StdioEmbeddingProvider>(cfg);
  }
  throw ConfigError("provider.kind", "unknown provider kind");
}

std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts, EmbeddingProvider& provider,
                                         std::size_t batch_size) {
  if (batch_size == 0) batch_size = 1;
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  const std::size_t dim = provider.dim();
  for (std::size_t start = 0, batch = 0; start < texts.size(); start += batch_size, ++batch) {
    const auto chunk = texts.subspan(start, std::min(batch_size, texts.size() - start));
    std::vector<EmbeddingVector> got;
    try {
      got = provider.embed(chunk);
    } catch (const ProviderError& e) {
      throw ProviderError(e.code(), std::string(e.what()) + " (batch " + std::to_string(batch) + ")", batch);
    }
    if (got.size() != chunk.size()) {
      throw ProviderError(Errc::ProviderUnavailable,
                          "provider returned " + std::to_string(got.size()) + " vectors for " +
                              std::to_string(chunk.size()) + " texts (batch " + std::to_string(batch) + ")",
                          batch);
    }
    for (auto& v : got) {
      if (v.dim() != dim) {
        throw ProviderError(Errc::DimensionMismatch,
                            "provider vector has dim " + std::to_string(v.dim()) + ", expected " +
                                std::to_string(dim) + " (batch " + std::to_string(batch) + ")",
                            batch);
      }
      if (!std::all_of(v.values.begin(), v.values.end(), [](double x) { return std::isfinite(x); })) {
        throw ProviderError(Errc::ProviderUnavailable,
                            "provider returned non-finite values (batch " + std::to_string(batch) + ")", batch);
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts, const ProviderConfig& cfg) {
  auto provider = make_provider(cfg);
  return embed_batch(texts, *provider, cfg.batch_size);
}

}  // namespace skillatlas
