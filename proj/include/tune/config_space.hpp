// Typed configuration parameters, configuration points and their numeric
// encoding for tree models.
#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tune/random.hpp"

namespace tune {

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PoolExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ParamKind { kContinuous, kInteger, kCategorical };

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::kContinuous;
  double lo = 0.0;  // numeric kinds only
  double hi = 1.0;
  std::vector<std::string> categories;  // categorical only, ordinal order
  std::string units;

  static ParamSpec Continuous(std::string name, double lo, double hi, std::string units = {});
  static ParamSpec Integer(std::string name, long lo, long hi, std::string units = {});
  static ParamSpec Categorical(std::string name, std::vector<std::string> values,
                               std::string units = {});

  // Throws DomainError if the spec itself is malformed.
  void Validate() const;

  // Number of distinct values; 0 for continuous parameters.
  std::size_t Cardinality() const;
};

// A parameter value: a number for continuous/integer parameters, a label for
// categorical ones.
using ParamValue = std::variant<double, std::string>;

struct Configuration {
  std::vector<ParamValue> values;

  bool operator==(const Configuration&) const = default;
};

class ConfigSpace {
 public:
  ConfigSpace() = default;
  explicit ConfigSpace(std::vector<ParamSpec> params);

  std::size_t size() const { return params_.size(); }
  const std::vector<ParamSpec>& params() const { return params_; }
  const ParamSpec& param(std::size_t j) const { return params_.at(j); }

  // Index of the named parameter; throws DomainError when absent.
  std::size_t IndexOf(const std::string& name) const;
  bool Contains(const std::string& name) const;

  // Throws DomainError describing the first violation.
  void Validate(const Configuration& config) const;

  // Total number of distinct points, or 0 when the space has a continuous
  // parameter or the count overflows.
  std::size_t FiniteCardinality() const;

 private:
  std::vector<ParamSpec> params_;
};

Configuration SampleRandom(const ConfigSpace& space, Rng& rng);

// Continuous and integer values pass through; categorical values map to
// their ordinal index. Output length equals space.size().
std::vector<double> Encode(const ConfigSpace& space, const Configuration& config);

// n distinct configurations drawn i.i.d. uniformly, duplicates rejected.
std::vector<Configuration> CandidatePool(const ConfigSpace& space, std::size_t n, Rng& rng);

// Text form of a single value, as written to trace files.
std::string FormatValue(const ParamValue& value);
ParamValue ParseValue(const ParamSpec& spec, const std::string& text);

// Config-space definition files (JSON). Schema:
//   {"params": [{"name": str, "kind": "continuous"|"integer"|"categorical",
//                "lo": num, "hi": num, "values": [str...], "units": str}]}
ConfigSpace ParseSpaceJson(const std::string& text);
std::string SpaceToJson(const ConfigSpace& space);
ConfigSpace LoadSpace(const std::filesystem::path& path);

// The hardware + Spark parameter space used throughout the examples
// (25 parameters).
ConfigSpace SparkClusterSpace();

}  // namespace tune
