#pragma once

// Core value types shared by the controller, evaluator, tuner and benchmark.
// Every tunable parameter is a bounded numeric grid; the tuner only ever
// manipulates integer grid indices ("genes").

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crosstune {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad bounds, non-finite values, missing fields.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Name collisions and out-of-order protocol actions.
class ConflictError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// A snapshot lacks a tuning metric. The controller never produces one.
class IncompleteStateError : public Error {
 public:
  using Error::Error;
};

class PersistenceError : public Error {
 public:
  using Error::Error;
};

enum class Changeability { kOnline, kOffline };

enum class Direction { kMaximize, kMinimize, kAuxiliary };

std::string_view to_string(Changeability c);
std::string_view to_string(Direction d);
Changeability parse_changeability(std::string_view s);
Direction parse_direction(std::string_view s);

struct ParameterSpec {
  std::string name;
  std::string layer;
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;
  Changeability changeability = Changeability::kOnline;
};

// Throws ValidationError unless min <= max, step > 0 and all bounds finite.
void validate_spec(const ParameterSpec& spec);

// floor((max - min) / step) + 1. A relative tolerance keeps steps such as
// 1/9 from losing the final grid point to floating-point error.
std::int64_t n_values(const ParameterSpec& spec);

// Nearest grid index, ties rounded up, out-of-range values clamped.
std::int64_t grid_index(const ParameterSpec& spec, double value);

// min + index * step. Throws std::out_of_range outside [0, n_values - 1].
double grid_value(const ParameterSpec& spec, std::int64_t index);

// Product of grid sizes. `count` saturates at UINT64_MAX; `ln` is exact
// enough to stay meaningful for spaces far beyond 64 bits.
struct SearchVolume {
  std::uint64_t count = 1;
  bool saturated = false;
  double ln = 0.0;
};

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<ParameterSpec> params);

  // Throws ConflictError on duplicate names, ValidationError on bad specs.
  void add(ParameterSpec spec);

  const std::vector<ParameterSpec>& params() const { return params_; }
  std::size_t dims() const { return params_.size(); }
  bool empty() const { return params_.empty(); }

  const ParameterSpec* find(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;

 private:
  std::vector<ParameterSpec> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

SearchVolume search_volume(const SearchSpace& space);

// Full assignment of grid indices. Equality compares genes only; the epoch
// records which publication carried the assignment.
struct Configuration {
  std::map<std::string, std::int64_t> genes;
  std::uint64_t epoch = 0;

  bool operator==(const Configuration& other) const { return genes == other.genes; }
};

// Throws ValidationError if a gene is unknown, missing, or out of range.
void check_configuration(const Configuration& config, const SearchSpace& space);

// Gene vector in the space's parameter order; absent genes become 0.
std::vector<std::int64_t> to_genome(const Configuration& config, const SearchSpace& space);
Configuration from_genome(const std::vector<std::int64_t>& genome, const SearchSpace& space,
                          std::uint64_t epoch = 0);

struct TuningDirective {
  Direction direction = Direction::kMaximize;
  std::optional<double> lower_threshold;
  std::optional<double> upper_threshold;
  double weight = 1.0;

  bool is_tuning() const { return direction != Direction::kAuxiliary; }
};

void validate_directive(const TuningDirective& directive);

struct MetricSample {
  std::string name;
  double value = 0.0;
  TuningDirective directive;
  std::map<std::string, std::string> labels;
};

struct SystemState {
  std::vector<MetricSample> metrics;
  Configuration config;
  std::chrono::steady_clock::time_point timestamp{};
};

struct Snapshot {
  std::map<std::string, double> metrics;
  Configuration config;
  int window = 1;
};

// One evaluated configuration. Re-evaluations of the same configuration are
// folded into the record: each keeps its snapshot so the running mean can be
// recomputed whenever metric bounds move.
struct StateRecord {
  Snapshot snapshot;
  std::vector<Snapshot> reevaluations;
  double score = 0.0;
  int eval_count = 1;
  double score_sum = 0.0;
  std::int64_t step_index = 0;
  // Tuning step at which this record was last appended or merged.
  std::int64_t updated_step = 0;
};

}  // namespace crosstune
