#include "skillatlas/skill_score.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <set>

#include "skillatlas/csv.hpp"
#include "skillatlas/error.hpp"
#include "skillatlas/util.hpp"

namespace skillatlas {

using nlohmann::json;

std::string_view taxonomy_kind_name(TaxonomyKind kind) noexcept {
  switch (kind) {
    case TaxonomyKind::Dwa: return "dwa";
    case TaxonomyKind::Task: return "task";
    case TaxonomyKind::Ability: return "ability";
  }
  return "dwa";
}

TaxonomyKind parse_taxonomy_kind(std::string_view name) {
  if (name == "dwa") return TaxonomyKind::Dwa;
  if (name == "task") return TaxonomyKind::Task;
  if (name == "ability") return TaxonomyKind::Ability;
  throw Error(Errc::MalformedInput, "unknown taxonomy kind '" + std::string(name) + "'");
}

std::size_t expected_taxonomy_size(TaxonomyKind kind) noexcept {
  switch (kind) {
    case TaxonomyKind::Dwa: return 2070;
    case TaxonomyKind::Task: return 17992;
    case TaxonomyKind::Ability: return 52;
  }
  return 0;
}

std::vector<std::string> SkillTaxonomy::ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.skill_id);
  return out;
}

std::vector<std::string> SkillTaxonomy::texts() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.text);
  return out;
}

std::string SkillTaxonomy::fingerprint() const {
  std::string joined;
  for (const auto& e : entries) {
    joined += e.skill_id;
    joined.push_back('\n');
  }
  return sha256_hex(joined);
}

SkillTaxonomy load_taxonomy(const std::filesystem::path& path, TaxonomyKind kind, std::vector<std::string>* warnings) {
  const csv::Table table = csv::read(path);
  std::optional<std::size_t> id_col;
  std::optional<std::size_t> text_col;
  switch (kind) {
    case TaxonomyKind::Dwa:
      id_col = table.find_column({"dwa_id", "DWA ID"});
      text_col = table.find_column({"dwa_title", "DWA Title"});
      break;
    case TaxonomyKind::Task:
      id_col = table.find_column({"task_id", "Task ID"});
      text_col = table.find_column({"task_statement", "Task"});
      break;
    case TaxonomyKind::Ability:
      id_col = table.find_column({"ability_id", "Element ID"});
      text_col = table.find_column({"ability_name", "Element Name"});
      break;
  }
  if (!id_col || !text_col) {
    throw Error(Errc::MalformedInput, "taxonomy " + path.string() + " lacks the id/text columns for kind " +
                                          std::string(taxonomy_kind_name(kind)));
  }
  SkillTaxonomy tax;
  tax.kind = kind;
  std::set<std::string, std::less<>> seen;
  for (const auto& row : table.rows) {
    if (row.fields.size() <= std::max(*id_col, *text_col)) {
      throw Error(Errc::MalformedInput, path.string() + " line " + std::to_string(row.line_no) + ": missing columns");
    }
    std::string id(trim(row.fields[*id_col]));
    std::string text(trim(row.fields[*text_col]));
    if (id.empty() || text.empty()) {
      throw Error(Errc::MalformedInput, path.string() + " line " + std::to_string(row.line_no) + ": empty id or text");
    }
    if (!seen.insert(id).second) {
      throw Error(Errc::DuplicateSkillId, "duplicate skill id '" + id + "' in " + path.string());
    }
    tax.entries.push_back({std::move(id), std::move(text)});
  }
  if (tax.entries.empty()) throw Error(Errc::EmptyTaxonomy, "taxonomy is empty: " + path.string());
  const std::size_t want = expected_taxonomy_size(kind);
  if (warnings && tax.size() != want) {
    warnings->push_back("taxonomy " + path.filename().string() + " has " + std::to_string(tax.size()) +
                        " entries, expected " + std::to_string(want));
  }
  return tax;
}

std::string skill_vector_to_jsonl(const SkillVector& v) {
  json j;
  j["syllabus_id"] = v.syllabus_id;
  j["taxonomy_kind"] = taxonomy_kind_name(v.kind);
  j["scores"] = v.scores;
  j["empty_content"] = v.empty_content;
  return j.dump();
}

SkillVector skill_vector_from_jsonl(std::string_view line) {
  try {
    const json j = json::parse(line);
    SkillVector v;
    v.syllabus_id = j.at("syllabus_id").get<std::string>();
    v.kind = parse_taxonomy_kind(j.at("taxonomy_kind").get<std::string>());
    v.scores = j.at("scores").get<std::vector<double>>();
    v.empty_content = j.at("empty_content").get<bool>();
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::MalformedInput, std::string("bad skill vector line: ") + e.what());
  }
}

std::vector<SkillVector> read_skill_vectors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::FileNotFound, "cannot open " + path.string());
  std::vector<SkillVector> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) out.push_back(skill_vector_from_jsonl(line));
  }
  return out;
}

void write_skill_vectors(const std::filesystem::path& path, std::span<const SkillVector> vectors) {
  std::string out;
  for (const auto& v : vectors) {
    out += skill_vector_to_jsonl(v);
    out.push_back('\n');
  }
  write_file(path, out);
}

std::string skill_vectors_to_csv(std::span<const SkillVector> vectors, const SkillTaxonomy& taxonomy) {
  std::vector<std::string> header = {"syllabus_id", "empty_content"};
  for (const auto& e : taxonomy.entries) header.push_back(e.skill_id);
  std::string out = csv::join_line(header);
  for (const auto& v : vectors) {
    std::vector<std::string> row = {v.syllabus_id, v.empty_content ? "true" : "false"};
    for (double s : v.scores) row.push_back(format_double(s));
    out += csv::join_line(row);
  }
  return out;
}

SkillScorer::SkillScorer(SkillTaxonomy taxonomy, EmbeddingProvider& provider, std::size_t batch_size)
    : taxonomy_(std::move(taxonomy)), provider_(provider), batch_size_(batch_size) {
  if (taxonomy_.entries.empty()) throw Error(Errc::EmptyTaxonomy, "cannot score against an empty taxonomy");
  const auto texts = taxonomy_.texts();
  skill_vecs_ = embed_batch(texts, provider_, batch_size_);
}

SkillVector SkillScorer::score(std::string_view syllabus_id, std::span<const Sentence> kept) const {
  SkillVector out;
  out.syllabus_id = std::string(syllabus_id);
  out.kind = taxonomy_.kind;
  out.scores.assign(taxonomy_.size(), 0.0);
  if (kept.empty()) {
    out.empty_content = true;
    return out;
  }
  std::vector<std::string> texts;
  texts.reserve(kept.size());
  for (const auto& s : kept) texts.push_back(s.text);
  std::vector<EmbeddingVector> sent_vecs;
  try {
    sent_vecs = embed_batch(texts, provider_, batch_size_);
  } catch (const ProviderError& e) {
    throw ProviderError(e.code(), "syllabus " + std::string(syllabus_id) + ": " + e.what(), e.batch_index());
  }
  for (std::size_t s = 0; s < taxonomy_.size(); ++s) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& sv : sent_vecs) best = std::max(best, cosine(sv, skill_vecs_[s]));
    out.scores[s] = best;
  }
  return out;
}

SkillVector score_syllabus(std::span<const Sentence> kept, const SkillTaxonomy& taxonomy, EmbeddingProvider& provider,
                           std::size_t batch_size) {
  const std::string id = kept.empty() ? std::string() : kept.front().syllabus_id;
  return SkillScorer(taxonomy, provider, batch_size).score(id, kept);
}

void require_uniform(std::span<const SkillVector> vectors, TaxonomyKind kind, std::size_t size) {
  for (const auto& v : vectors) {
    if (v.kind != kind || v.scores.size() != size) {
      throw Error(Errc::MixedTaxonomy, "vector for syllabus '" + v.syllabus_id + "' is " +
                                           std::string(taxonomy_kind_name(v.kind)) + "/" +
                                           std::to_string(v.scores.size()) + ", expected " +
                                           std::string(taxonomy_kind_name(kind)) + "/" + std::to_string(size));
    }
  }
}

std::vector<NegativeShare> negative_value_report(std::span<const SkillVector> vectors, const SkillTaxonomy& taxonomy) {
  require_uniform(vectors, taxonomy.kind, taxonomy.size());
  std::vector<std::size_t> neg(taxonomy.size(), 0);
  for (const auto& v : vectors) {
    for (std::size_t s = 0; s < v.scores.size(); ++s) {
      if (v.scores[s] < 0.0) ++neg[s];
    }
  }
  std::vector<NegativeShare> out;
  out.reserve(taxonomy.size());
  for (std::size_t s = 0; s < taxonomy.size(); ++s) {
    const double frac = vectors.empty() ? 0.0 : static_cast<double>(neg[s]) / static_cast<double>(vectors.size());
    out.push_back({taxonomy.entries[s].skill_id, frac});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.fraction > b.fraction; });
  return out;
}

}  // namespace skillatlas
