#include "skillatlas/error.hpp"

namespace skillatlas {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::FileNotFound: return "FileNotFound";
    case Errc::MalformedInput: return "MalformedInput";
    case Errc::TooManyMalformedRows: return "TooManyMalformedRows";
    case Errc::EmptyList: return "EmptyList";
    case Errc::EmptyLearningList: return "EmptyLearningList";
    case Errc::DuplicateSkillId: return "DuplicateSkillId";
    case Errc::EmptyTaxonomy: return "EmptyTaxonomy";
    case Errc::MixedTaxonomy: return "MixedTaxonomy";
    case Errc::TaxonomyMismatch: return "TaxonomyMismatch";
    case Errc::EmptyJoin: return "EmptyJoin";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::ZeroRowSum: return "ZeroRowSum";
    case Errc::UnknownFos: return "UnknownFos";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::EmptyGraph: return "EmptyGraph";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyFilter: return "EmptyFilter";
    case Errc::ZeroWeight: return "ZeroWeight";
    case Errc::GroupTooSmall: return "GroupTooSmall";
    case Errc::ZeroNormVector: return "ZeroNormVector";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ProviderUnavailable: return "ProviderUnavailable";
    case Errc::ProviderTimeout: return "Timeout";
    case Errc::ConfigInvalid: return "ConfigError";
  }
  return "Unknown";
}

ErrorCategory category_of(Errc code) noexcept {
  switch (code) {
    case Errc::ProviderUnavailable:
    case Errc::ProviderTimeout:
      return ErrorCategory::Provider;
    case Errc::ConfigInvalid:
      return ErrorCategory::Config;
    default:
      return ErrorCategory::Data;
  }
}

int exit_code_for(ErrorCategory cat) noexcept {
  switch (cat) {
    case ErrorCategory::Data: return 1;
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Provider: return 3;
  }
  return 1;
}

}  // namespace skillatlas
