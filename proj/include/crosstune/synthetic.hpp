#pragma once

// Synthetic tuning problems: d parameters on [0, 1] grids of v values, and m
// maximize-metrics, each a simple function (sum, log, square, product,
// difference, average) of a random parameter subset. Overlapping subsets
// create interdependent and conflicting objectives.
//
// The aggregate objective is the mean of per-metric values min-max
// normalized over each metric's range on the grid. Its grid maximum (the
// reference optimum) is found exhaustively for small spaces and by
// multi-start coordinate ascent otherwise.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "crosstune/domain.hpp"
#include "crosstune/entropy.hpp"
#include "crosstune/tuner.hpp"

namespace crosstune {

enum class FunctionKind { kSum, kLog, kSquare, kProduct, kDifference, kAverage };

inline constexpr std::array<FunctionKind, 6> kFunctionKinds{
    FunctionKind::kSum,     FunctionKind::kLog,        FunctionKind::kSquare,
    FunctionKind::kProduct, FunctionKind::kDifference, FunctionKind::kAverage};

std::string_view to_string(FunctionKind kind);

struct MetricAssignment {
  FunctionKind kind = FunctionKind::kSum;
  std::vector<std::size_t> params;  // ordered; difference uses the first as minuend
};

struct SyntheticSystem {
  SearchSpace space;
  std::vector<MetricAssignment> metrics;
  std::uint64_t seed = 0;
};

// d parameters named p0..p{d-1}, each min 0, max 1, step 1/(v-1).
SearchSpace make_unit_grid_space(int d, int v);

// Deterministic in seed. The first min(m, 6) metrics use a seeded
// permutation of the six kinds; later ones redraw kinds with fresh subsets.
// Subset sizes are uniform in [2, min(5, d)]. Throws ValidationError unless
// d >= 2, m >= 1, v >= 2.
SyntheticSystem gen_problem(int d, int m, int v, std::uint64_t seed);

double eval_function(FunctionKind kind, std::span<const double> xs);

// Metric values for per-parameter real values x (space order).
std::vector<double> metric_values(const SyntheticSystem& system, std::span<const double> x);

// Samples named m0..m{m-1}, all maximize with weight 1.
std::vector<MetricSample> eval_metrics(const SyntheticSystem& system, const Configuration& config);

struct MetricRange {
  double lo = 0.0;
  double hi = 0.0;
};

// Exact range of every metric over the grid. Each family is monotone in
// each coordinate, so the extremes sit on corners of the subset's box.
std::vector<MetricRange> metric_ranges(const SyntheticSystem& system);

double objective(const SyntheticSystem& system, std::span<const MetricRange> ranges,
                 std::span<const double> x);

// Real parameter values of a genome.
std::vector<double> genome_values(const SearchSpace& space, const Genome& genome);

struct OptimumResult {
  double value = 0.0;
  Genome genome;
  bool exhaustive = false;
};

inline constexpr std::uint64_t kExhaustiveLimit = 1'000'000;

// Exhaustive when the grid volume is at most kExhaustiveLimit, otherwise
// ascent_optimum with 100 restarts.
OptimumResult reference_optimum(const SyntheticSystem& system);

// Full grid enumeration, parallelized over flat grid indices. Ties resolve
// to the lowest flat index, matching the serial reference exactly.
OptimumResult exhaustive_optimum(const SyntheticSystem& system);

// Best of `restarts` seeded coordinate ascents, each run to a fixpoint.
OptimumResult ascent_optimum(const SyntheticSystem& system, int restarts = 100);

namespace reference {
OptimumResult exhaustive_optimum(const SyntheticSystem& system);
}  // namespace reference

struct TrialOptions {
  double target_frac = 0.95;
  int cap = 5000;
  TunerParams tuner;
  EntropyConstants entropy;
  // Reuse a precomputed optimum instead of solving again.
  std::optional<double> reference;
};

struct TrialResult {
  std::optional<int> steps_to_target;
  int steps_run = 0;
  double best_fraction = 0.0;
  double reference = 0.0;
  std::int64_t complexity = 0;
  std::uint64_t seed = 0;

  bool capped() const { return !steps_to_target.has_value(); }
};

// Runs the full controller loop against the system as an in-process agent
// (zero cycle time, window 1, no settling, exact feedback) until the
// evaluated objective reaches target_frac * reference or `cap` steps pass.
// If `trajectory` is given it receives best_fraction after every step.
TrialResult run_trial(const SyntheticSystem& system, std::uint64_t seed,
                      const TrialOptions& options = {},
                      std::vector<double>* trajectory = nullptr);

}  // namespace crosstune
