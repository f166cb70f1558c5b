// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obd {

enum class ErrorKind {
  kValidation,
  kUnknownOutcomePair,
  kDoseMismatch,
  kNonPositivePrior,
  kDimensionMismatch,
  kDomainError,
  kUnanchoredUtility,
  kEmptyDose,
  kUnmappedIce,
  kMissingStratumLabel,
  kNoTestedDoses,
  kEmptyAdmissibleSet,
  kInfeasibleAssociation,
  kNotFound,
  kConflict,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so that the CLI and the
/// HTTP layer can map it to an exit code or status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace obd
