#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skillatlas/embed.hpp"
#include "skillatlas/text_prep.hpp"

namespace skillatlas {

enum class TaxonomyKind { Dwa, Task, Ability };

std::string_view taxonomy_kind_name(TaxonomyKind kind) noexcept;
TaxonomyKind parse_taxonomy_kind(std::string_view name);
/// Size of the full O*NET 20.1 reference list for the kind.
std::size_t expected_taxonomy_size(TaxonomyKind kind) noexcept;

struct SkillEntry {
  std::string skill_id;
  std::string text;
};

/// Ordered skill descriptors; vector index i corresponds to entries[i].
struct SkillTaxonomy {
  TaxonomyKind kind = TaxonomyKind::Dwa;
  std::vector<SkillEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  std::vector<std::string> ids() const;
  std::vector<std::string> texts() const;
  /// SHA-256 over the ordered skill ids; pins feature alignment of models.
  std::string fingerprint() const;
};

/// Reads (dwa_id, dwa_title) / (task_id, task_statement) /
/// (ability_id, ability_name) CSV, or the O*NET tab-separated reference
/// files. A size different from the full O*NET list is reported through
/// `warnings`, not treated as an error.
SkillTaxonomy load_taxonomy(const std::filesystem::path& path, TaxonomyKind kind,
                            std::vector<std::string>* warnings = nullptr);

struct SkillVector {
  std::string syllabus_id;
  TaxonomyKind kind = TaxonomyKind::Dwa;
  std::vector<double> scores;
  bool empty_content = false;

  bool operator==(const SkillVector&) const = default;
};

std::string skill_vector_to_jsonl(const SkillVector& v);
SkillVector skill_vector_from_jsonl(std::string_view line);
std::vector<SkillVector> read_skill_vectors(const std::filesystem::path& path);
void write_skill_vectors(const std::filesystem::path& path, std::span<const SkillVector> vectors);
/// Columnar form: syllabus_id, empty_content, then one column per skill id.
std::string skill_vectors_to_csv(std::span<const SkillVector> vectors, const SkillTaxonomy& taxonomy);

/// Embeds the taxonomy once, then scores any number of syllabi against it.
class SkillScorer {
 public:
  SkillScorer(SkillTaxonomy taxonomy, EmbeddingProvider& provider, std::size_t batch_size = 64);

  /// score[s] = max over sentences of cosine(sentence, skill s); an empty
  /// sentence list yields all zeros with empty_content set.
  SkillVector score(std::string_view syllabus_id, std::span<const Sentence> kept) const;

  const SkillTaxonomy& taxonomy() const noexcept { return taxonomy_; }
  const std::vector<EmbeddingVector>& skill_embeddings() const noexcept { return skill_vecs_; }

 private:
  SkillTaxonomy taxonomy_;
  EmbeddingProvider& provider_;
  std::size_t batch_size_;
  std::vector<EmbeddingVector> skill_vecs_;
};

SkillVector score_syllabus(std::span<const Sentence> kept, const SkillTaxonomy& taxonomy, EmbeddingProvider& provider,
                           std::size_t batch_size = 64);

struct NegativeShare {
  std::string skill_id;
  double fraction = 0.0;
};

/// Per skill, the share of vectors with a negative score; sorted by fraction
/// descending, ties in taxonomy order.
std::vector<NegativeShare> negative_value_report(std::span<const SkillVector> vectors, const SkillTaxonomy& taxonomy);

/// Throws MixedTaxonomy unless every vector has `kind` and `size` scores.
void require_uniform(std::span<const SkillVector> vectors, TaxonomyKind kind, std::size_t size);

}  // namespace skillatlas
