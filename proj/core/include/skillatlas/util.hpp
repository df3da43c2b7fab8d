#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace skillatlas {

// ---- hashing --------------------------------------------------------------

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file_hex(const std::filesystem::path& path);

/// SplitMix64 finalizer; used to derive independent seeds from a master seed.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

// ---- text -----------------------------------------------------------------

std::string_view trim(std::string_view s) noexcept;
std::string to_lower_ascii(std::string_view s);
/// Lowercase and collapse every whitespace run into a single space; trimmed.
std::string normalize_text(std::string_view s);
bool is_ascii_space(char c) noexcept;

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for our purposes: truncate then write.
void write_file(const std::filesystem::path& path, std::string_view content);

// ---- numbers --------------------------------------------------------------

/// Shortest round-trip decimal representation; stable across runs.
std::string format_double(double v);

/// Pairwise (cascade) summation; the result depends only on element order.
double pairwise_sum(std::span<const double> values) noexcept;

/// Percentile in [0, 100] with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty.
double percentile_sorted(std::span<const double> sorted, double p);

// ---- parallelism ----------------------------------------------------------

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Every index is
/// processed; if any call throws, the exception from the lowest index is
/// rethrown after all workers finish, so failures are reproducible.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace skillatlas
