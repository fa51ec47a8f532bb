#pragma once

// SPDX-License-Identifier: Apache-2.0

#include <stdexcept>
#include <string>

namespace specdec {

/// Weights that cannot be turned into a probability distribution
/// (all zero, negative, or non-finite entries).
struct NormalizationError : std::runtime_error {
  explicit NormalizationError(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside its mathematical domain (T <= 0, gamma < 1, ...).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Mismatched vector/vocabulary sizes.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid experiment or batch configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace specdec
