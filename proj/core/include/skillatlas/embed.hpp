#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace skillatlas {

/// Dense embedding, always stored as 64-bit reals (narrower provider output
/// is widened on ingest).
struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

/// dot(a, b) / (|a| |b|), clamped to [-1, 1].
/// Throws DimensionMismatch or ZeroNormVector.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);
double cosine(std::span<const double> a, std::span<const double> b);

/// Deterministic stand-in for a sentence encoder: dim standard-normal draws
/// from a PRNG keyed on (seed, normalized text), L2-normalized.
EmbeddingVector test_provider(std::string_view text, std::size_t dim, std::uint64_t seed);

enum class ProviderKind { Http, Stdio, Cache, Test };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::Test;
  std::string endpoint_or_path;
  std::size_t dim = 768;
  std::size_t batch_size = 64;
  double timeout_seconds = 30.0;
  std::uint64_t seed = 0;  // test provider only
};

ProviderKind parse_provider_kind(std::string_view name);
std::string_view provider_kind_name(ProviderKind kind) noexcept;

/// Embeds one batch at a time. Implementations report failures as
/// ProviderError; the batch index is filled in by embed_batch().
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  /// Stable identifier used to key descriptor caches.
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
};

class TestEmbeddingProvider final : public EmbeddingProvider {
 public:
  TestEmbeddingProvider(std::size_t dim, std::uint64_t seed);
  std::string id() const override;
  std::size_t dim() const override { return dim_; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Cache file key: SHA-256 hex of the normalized text.
std::string cache_key(std::string_view text);

/// JSONL cache, one {"key": <sha256 hex>, "vector": [...]} object per line.
class CacheEmbeddingProvider final : public EmbeddingProvider {
 public:
  CacheEmbeddingProvider(const std::filesystem::path& path, std::size_t dim);
  std::string id() const override;
  std::size_t dim() const override { return dim_; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::string path_hash_;
  std::size_t dim_;
  std::unordered_map<std::string, EmbeddingVector> table_;
};

void write_embedding_cache(const std::filesystem::path& path, std::span<const std::string> texts,
                           std::span<const EmbeddingVector> vectors);

/// POST {endpoint}/embed with {"texts": [...]}; expects
/// {"dim": N, "vectors": [[...], ...]} and status 200.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(const ProviderConfig& cfg);
  std::string id() const override;
  std::size_t dim() const override { return cfg_.dim; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

 private:
  ProviderConfig cfg_;
  std::string scheme_host_port_;
  std::string base_path_;
};

/// Child process speaking line-delimited JSON on stdin/stdout:
/// request {"id": k, "texts": [...]}, response {"id": k, "vectors": [[...]]}.
class StdioEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit StdioEmbeddingProvider(const ProviderConfig& cfg);
  ~StdioEmbeddingProvider() override;
  StdioEmbeddingProvider(const StdioEmbeddingProvider&) = delete;
  StdioEmbeddingProvider& operator=(const StdioEmbeddingProvider&) = delete;

  std::string id() const override;
  std::size_t dim() const override { return cfg_.dim; }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

 private:
  std::string read_line();

  ProviderConfig cfg_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::uint64_t next_id_ = 0;
  std::mutex mu_;
};

/// Session memo keyed by (provider id, text hash): repeated texts are sent to
/// the wrapped provider once and always map to the same vector.
class MemoEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit MemoEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner);
  std::string id() const override { return inner_->id(); }
  std::size_t dim() const override { return inner_->dim(); }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  std::mutex mu_;
  std::unordered_map<std::string, EmbeddingVector> memo_;
};

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderConfig& cfg);

/// Splits texts into batches of batch_size, embeds them in order and checks
/// shape and finiteness. Output i corresponds to texts[i].
std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts, EmbeddingProvider& provider,
                                         std::size_t batch_size);
std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts, const ProviderConfig& cfg);

}  // namespace skillatlas
