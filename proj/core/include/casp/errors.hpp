#pragma once

#include <stdexcept>
#include <string>

namespace casp {

/// Raised when a policy places stage-2 mass outside the feasible map or its
/// shape does not match the environment it is evaluated against.
class FeasibilityError : public std::runtime_error {
 public:
  explicit FeasibilityError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an importance ratio or burden term needs a behavior propensity
/// that is exactly zero and no denominator floor is active. Carries the
/// offending (context, generator, item) triple.
class OffSupportError : public std::runtime_error {
 public:
  OffSupportError(int context, int generator, int item, const std::string& what)
      : std::runtime_error(what), context_id(context), generator_id(generator), item_id(item) {}

  OffSupportError(int context, int generator, int item)
      : OffSupportError(context, generator, item,
                        "zero behavior propensity with no floor at context " +
                            std::to_string(context) + ", generator " + std::to_string(generator) +
                            ", item " + std::to_string(item)) {}

  int context_id;
  int generator_id;
  int item_id;
};

/// Invalid configuration (bad grids, negative penalties, fold counts, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or missing input data (dataset files, empty tables, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace casp
