#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace skillatlas {

enum class Errc {
  // data errors
  FileNotFound,
  MalformedInput,
  TooManyMalformedRows,
  EmptyList,
  EmptyLearningList,
  DuplicateSkillId,
  EmptyTaxonomy,
  MixedTaxonomy,
  TaxonomyMismatch,
  EmptyJoin,
  TooFewSamples,
  ZeroRowSum,
  UnknownFos,
  TooFewPoints,
  EmptyGraph,
  LengthMismatch,
  EmptyFilter,
  ZeroWeight,
  GroupTooSmall,
  ZeroNormVector,
  DimensionMismatch,
  InvalidArgument,
  // provider errors
  ProviderUnavailable,
  ProviderTimeout,
  // config errors
  ConfigInvalid,
};

enum class ErrorCategory { Data, Config, Provider };

std::string_view errc_name(Errc code) noexcept;
ErrorCategory category_of(Errc code) noexcept;

/// Process exit code for a category: 1 data, 2 config, 3 provider.
int exit_code_for(ErrorCategory cat) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  Errc code_;
};

/// Raised by embedding providers. Carries the index of the failing batch so a
/// caller can resume from it.
class ProviderError : public Error {
 public:
  ProviderError(Errc code, const std::string& message, std::size_t batch_index)
      : Error(code, message), batch_index_(batch_index) {}

  std::size_t batch_index() const noexcept { return batch_index_; }

 private:
  std::size_t batch_index_;
};

/// Configuration problem tied to a named config field (e.g. "paths.corpus").
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(Errc::ConfigInvalid, message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace skillatlas
