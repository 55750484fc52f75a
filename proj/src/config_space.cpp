#include "tune/config_space.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tune {

namespace {

std::string KindName(ParamKind kind) {
  switch (kind) {
    case ParamKind::kContinuous:
      return "continuous";
    case ParamKind::kInteger:
      return "integer";
    case ParamKind::kCategorical:
      return "categorical";
  }
  return "?";
}

ParamKind KindFromName(const std::string& name) {
  if (name == "continuous") return ParamKind::kContinuous;
  if (name == "integer") return ParamKind::kInteger;
  if (name == "categorical") return ParamKind::kCategorical;
  throw DomainError("unknown parameter kind '" + name + "'");
}

}  // namespace

ParamSpec ParamSpec::Continuous(std::string name, double lo, double hi, std::string units) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::kContinuous;
  p.lo = lo;
  p.hi = hi;
  p.units = std::move(units);
  p.Validate();
  return p;
}

ParamSpec ParamSpec::Integer(std::string name, long lo, long hi, std::string units) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::kInteger;
  p.lo = static_cast<double>(lo);
  p.hi = static_cast<double>(hi);
  p.units = std::move(units);
  p.Validate();
  return p;
}

ParamSpec ParamSpec::Categorical(std::string name, std::vector<std::string> values,
                                 std::string units) {
  ParamSpec p;
  p.name = std::move(name);
  p.kind = ParamKind::kCategorical;
  p.lo = 0.0;
  p.hi = values.empty() ? 0.0 : static_cast<double>(values.size() - 1);
  p.categories = std::move(values);
  p.units = std::move(units);
  p.Validate();
  return p;
}

void ParamSpec::Validate() const {
  if (name.empty()) throw DomainError("parameter name must not be empty");
  if (kind == ParamKind::kCategorical) {
    if (categories.empty()) throw DomainError(name + ": categorical list is empty");
    std::set<std::string> seen(categories.begin(), categories.end());
    if (seen.size() != categories.size()) throw DomainError(name + ": duplicate category values");
    return;
  }
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw DomainError(name + ": requires finite lo < hi");
  }
  if (kind == ParamKind::kInteger && (lo != std::floor(lo) || hi != std::floor(hi))) {
    throw DomainError(name + ": integer bounds must be integral");
  }
}

std::size_t ParamSpec::Cardinality() const {
  switch (kind) {
    case ParamKind::kContinuous:
      return 0;
    case ParamKind::kInteger:
      return static_cast<std::size_t>(hi - lo) + 1;
    case ParamKind::kCategorical:
      return categories.size();
  }
  return 0;
}

ConfigSpace::ConfigSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {
  std::set<std::string> names;
  for (const auto& p : params_) {
    p.Validate();
    if (!names.insert(p.name).second) throw DomainError("duplicate parameter name '" + p.name + "'");
  }
}

std::size_t ConfigSpace::IndexOf(const std::string& name) const {
  for (std::size_t j = 0; j < params_.size(); ++j) {
    if (params_[j].name == name) return j;
  }
  throw DomainError("unknown parameter '" + name + "'");
}

bool ConfigSpace::Contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

void ConfigSpace::Validate(const Configuration& config) const {
  if (config.values.size() != params_.size()) {
    throw DomainError("configuration has " + std::to_string(config.values.size()) +
                      " values, space has " + std::to_string(params_.size()));
  }
  for (std::size_t j = 0; j < params_.size(); ++j) {
    const ParamSpec& p = params_[j];
    const ParamValue& v = config.values[j];
    if (p.kind == ParamKind::kCategorical) {
      const auto* label = std::get_if<std::string>(&v);
      if (label == nullptr) throw DomainError(p.name + ": expected a category label");
      if (std::find(p.categories.begin(), p.categories.end(), *label) == p.categories.end()) {
        throw DomainError(p.name + ": '" + *label + "' is not a declared category");
      }
      continue;
    }
    const auto* x = std::get_if<double>(&v);
    if (x == nullptr) throw DomainError(p.name + ": expected a numeric value");
    if (!std::isfinite(*x) || *x < p.lo || *x > p.hi) {
      throw DomainError(p.name + ": value " + FormatValue(v) + " outside [" +
                        FormatValue(p.lo) + ", " + FormatValue(p.hi) + "]");
    }
    if (p.kind == ParamKind::kInteger && *x != std::floor(*x)) {
      throw DomainError(p.name + ": value " + FormatValue(v) + " is not integral");
    }
  }
}

std::size_t ConfigSpace::FiniteCardinality() const {
  std::size_t total = 1;
  for (const auto& p : params_) {
    const std::size_t k = p.Cardinality();
    if (k == 0) return 0;
    if (total > std::numeric_limits<std::size_t>::max() / k) return 0;
    total *= k;
  }
  return total;
}

Configuration SampleRandom(const ConfigSpace& space, Rng& rng) {
  Configuration c;
  c.values.reserve(space.size());
  for (const auto& p : space.params()) {
    switch (p.kind) {
      case ParamKind::kContinuous:
        c.values.emplace_back(UniformReal(rng, p.lo, p.hi));
        break;
      case ParamKind::kInteger:
        c.values.emplace_back(p.lo + static_cast<double>(UniformIndex(rng, p.Cardinality())));
        break;
      case ParamKind::kCategorical:
        c.values.emplace_back(p.categories[UniformIndex(rng, p.categories.size())]);
        break;
    }
  }
  return c;
}

std::vector<double> Encode(const ConfigSpace& space, const Configuration& config) {
  space.Validate(config);
  std::vector<double> out(space.size());
  for (std::size_t j = 0; j < space.size(); ++j) {
    const ParamSpec& p = space.param(j);
    if (p.kind == ParamKind::kCategorical) {
      const auto& label = std::get<std::string>(config.values[j]);
      const auto it = std::find(p.categories.begin(), p.categories.end(), label);
      out[j] = static_cast<double>(it - p.categories.begin());
    } else {
      out[j] = std::get<double>(config.values[j]);
    }
  }
  return out;
}

std::vector<Configuration> CandidatePool(const ConfigSpace& space, std::size_t n, Rng& rng) {
  if (n == 0) throw DomainError("candidate pool size must be at least 1");
  const std::size_t finite = space.FiniteCardinality();
  if (finite != 0 && finite < n) {
    throw PoolExhaustedError("space has only " + std::to_string(finite) +
                             " distinct configurations, " + std::to_string(n) + " requested");
  }
  std::vector<Configuration> pool;
  pool.reserve(n);
  std::set<std::vector<double>> seen;
  // Near-saturated finite spaces can make rejection slow; the attempt cap
  // turns that into an error instead of a hang.
  const std::size_t max_attempts = 1000 * n + 10000;
  for (std::size_t attempt = 0; pool.size() < n; ++attempt) {
    if (attempt >= max_attempts) {
      throw PoolExhaustedError("could not draw " + std::to_string(n) + " distinct configurations");
    }
    Configuration c = SampleRandom(space, rng);
    if (seen.insert(Encode(space, c)).second) pool.push_back(std::move(c));
  }
  return pool;
}

std::string FormatValue(const ParamValue& value) {
  if (const auto* label = std::get_if<std::string>(&value)) return *label;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), std::get<double>(value));
  return std::string(buf, res.ptr);
}

ParamValue ParseValue(const ParamSpec& spec, const std::string& text) {
  if (spec.kind == ParamKind::kCategorical) return text;
  double x = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, x);
  if (res.ec != std::errc() || res.ptr != end) {
    throw DomainError(spec.name + ": cannot parse '" + text + "' as a number");
  }
  return x;
}

ConfigSpace ParseSpaceJson(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("config space: invalid JSON: ") + e.what());
  }
  if (!doc.contains("params") || !doc["params"].is_array()) {
    throw DomainError("config space: missing 'params' array");
  }
  std::vector<ParamSpec> params;
  for (const auto& item : doc["params"]) {
    ParamSpec p;
    try {
      p.name = item.at("name").get<std::string>();
      p.kind = KindFromName(item.at("kind").get<std::string>());
      p.units = item.value("units", std::string{});
      if (p.kind == ParamKind::kCategorical) {
        p.categories = item.at("values").get<std::vector<std::string>>();
        p.lo = 0.0;
        p.hi = p.categories.empty() ? 0.0 : static_cast<double>(p.categories.size() - 1);
      } else {
        p.lo = item.at("lo").get<double>();
        p.hi = item.at("hi").get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw DomainError(std::string("config space: malformed parameter entry: ") + e.what());
    }
    params.push_back(std::move(p));
  }
  return ConfigSpace(std::move(params));
}

std::string SpaceToJson(const ConfigSpace& space) {
  nlohmann::ordered_json doc;
  doc["params"] = nlohmann::ordered_json::array();
  for (const auto& p : space.params()) {
    nlohmann::ordered_json item;
    item["name"] = p.name;
    item["kind"] = KindName(p.kind);
    if (p.kind == ParamKind::kCategorical) {
      item["values"] = p.categories;
    } else if (p.kind == ParamKind::kInteger) {
      item["lo"] = static_cast<long>(p.lo);
      item["hi"] = static_cast<long>(p.hi);
    } else {
      item["lo"] = p.lo;
      item["hi"] = p.hi;
    }
    if (!p.units.empty()) item["units"] = p.units;
    doc["params"].push_back(std::move(item));
  }
  return doc.dump(2) + "\n";
}

ConfigSpace LoadSpace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config space file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseSpaceJson(buf.str());
}

ConfigSpace SparkClusterSpace() {
  using P = ParamSpec;
  const std::vector<std::string> kBool = {"false", "true"};
  return ConfigSpace({
      P::Continuous("cpu.freq", 1.0, 3.7, "GHz"),
      P::Continuous("uncore.freq", 1.0, 2.4, "GHz"),
      P::Categorical("hyperthreading", {"off", "on"}),
      P::Integer("n.sockets", 1, 2),
      P::Integer("n.cores", 1, 12, "cores per socket"),
      P::Integer("spark.reducer.maxSizeInFlight", 24, 128, "MB"),
      P::Integer("spark.shuffle.file.buffer", 24, 128, "KB"),
      P::Integer("spark.shuffle.sort.bypassMergeThreshold", 100, 1000),
      P::Integer("spark.speculation.interval", 100, 1000, "ms"),
      P::Continuous("spark.speculation.multiplier", 1.0, 5.0),
      P::Continuous("spark.speculation.quantile", 0.0, 1.0),
      P::Integer("spark.broadcast.blockSize", 2, 128, "MB"),
      P::Integer("spark.io.compression.snappy.blockSize", 24, 128, "KB"),
      P::Integer("spark.kryoserializer.buffer.max", 24, 128, "MB"),
      P::Integer("spark.kryoserializer.buffer", 24, 128, "KB"),
      P::Integer("spark.driver.memory", 6, 12, "GB"),
      P::Integer("spark.executor.memory", 6, 16, "GB"),
      P::Integer("spark.network.timeout", 20, 500, "s"),
      P::Integer("spark.locality.wait", 1, 10, "s"),
      P::Integer("spark.task.maxFailures", 1, 8),
      P::Categorical("spark.shuffle.compress", kBool),
      P::Continuous("spark.memory.fraction", 0.0, 1.0),
      P::Categorical("spark.shuffle.spill.compress", kBool),
      P::Categorical("spark.broadcast.compress", kBool),
      P::Continuous("spark.memory.storageFraction", 0.5, 1.0),
  });
}

}  // namespace tune
