#include "crosstune/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <omp.h>

#include "crosstune/controller.hpp"
#include "crosstune/rng.hpp"

namespace crosstune {

std::string_view to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::kSum:
      return "sum";
    case FunctionKind::kLog:
      return "log";
    case FunctionKind::kSquare:
      return "square";
    case FunctionKind::kProduct:
      return "product";
    case FunctionKind::kDifference:
      return "difference";
    case FunctionKind::kAverage:
      return "average";
  }
  return "sum";
}

SearchSpace make_unit_grid_space(int d, int v) {
  SearchSpace space;
  const double step = 1.0 / static_cast<double>(v - 1);
  for (int i = 0; i < d; ++i) {
    space.add(ParameterSpec{"p" + std::to_string(i), "synthetic", 0.0, 1.0, step,
                            Changeability::kOnline});
  }
  return space;
}

SyntheticSystem gen_problem(int d, int m, int v, std::uint64_t seed) {
  if (d < 2 || m < 1 || v < 2) {
    throw ValidationError("synthetic problem needs d >= 2, m >= 1, v >= 2");
  }
  SyntheticSystem system;
  system.space = make_unit_grid_space(d, v);
  system.seed = seed;
  Rng rng(seed);

  std::array<FunctionKind, 6> kinds = kFunctionKinds;
  for (std::size_t i = kinds.size() - 1; i > 0; --i) {
    std::swap(kinds[i], kinds[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
  }

  std::vector<std::size_t> pool(static_cast<std::size_t>(d));
  const int max_size = std::min(5, d);
  for (int j = 0; j < m; ++j) {
    MetricAssignment metric;
    metric.kind = j < 6 ? kinds[static_cast<std::size_t>(j)]
                        : kFunctionKinds[static_cast<std::size_t>(rng.uniform_int(0, 5))];
    const auto size = static_cast<std::size_t>(rng.uniform_int(2, max_size));
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < size; ++i) {
      const auto k = static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(d) - 1));
      std::swap(pool[i], pool[k]);
      metric.params.push_back(pool[i]);
    }
    system.metrics.push_back(std::move(metric));
  }
  return system;
}

double eval_function(FunctionKind kind, std::span<const double> xs) {
  switch (kind) {
    case FunctionKind::kSum:
      return std::accumulate(xs.begin(), xs.end(), 0.0);
    case FunctionKind::kLog:
      return std::log1p(std::accumulate(xs.begin(), xs.end(), 0.0));
    case FunctionKind::kSquare:
      return std::inner_product(xs.begin(), xs.end(), xs.begin(), 0.0);
    case FunctionKind::kProduct:
      return std::accumulate(xs.begin(), xs.end(), 1.0, std::multiplies<>());
    case FunctionKind::kDifference:
      return xs.empty() ? 0.0 : xs.front() - std::accumulate(xs.begin() + 1, xs.end(), 0.0);
    case FunctionKind::kAverage:
      return xs.empty() ? 0.0
                        : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  }
  return 0.0;
}

namespace {

double eval_metric(const MetricAssignment& metric, std::span<const double> x) {
  std::array<double, 8> buffer{};
  std::vector<double> heap;
  std::span<double> xs;
  if (metric.params.size() <= buffer.size()) {
    xs = std::span<double>(buffer.data(), metric.params.size());
  } else {
    heap.resize(metric.params.size());
    xs = heap;
  }
  for (std::size_t i = 0; i < metric.params.size(); ++i) xs[i] = x[metric.params[i]];
  return eval_function(metric.kind, xs);
}

double normalized(double value, const MetricRange& range) {
  const double span = range.hi - range.lo;
  return span > 0.0 ? (value - range.lo) / span : 1.0;
}

// Grid values per parameter, indexed [param][index].
std::vector<std::vector<double>> grid_table(const SearchSpace& space) {
  std::vector<std::vector<double>> table;
  for (const auto& p : space.params()) {
    std::vector<double> values(static_cast<std::size_t>(n_values(p)));
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = grid_value(p, static_cast<std::int64_t>(i));
    }
    table.push_back(std::move(values));
  }
  return table;
}

struct FlatGrid {
  std::vector<std::vector<double>> table;
  std::vector<std::uint64_t> radix;
  std::uint64_t volume = 1;
};

FlatGrid flat_grid(const SearchSpace& space) {
  FlatGrid g;
  g.table = grid_table(space);
  for (const auto& values : g.table) {
    g.radix.push_back(values.size());
    g.volume *= values.size();
  }
  return g;
}

void decode(const FlatGrid& g, std::uint64_t flat, Genome& genome, std::vector<double>& x) {
  for (std::size_t i = 0; i < g.radix.size(); ++i) {
    const std::uint64_t idx = flat % g.radix[i];
    flat /= g.radix[i];
    genome[i] = static_cast<std::int64_t>(idx);
    x[i] = g.table[i][idx];
  }
}

struct Candidate {
  double value = -std::numeric_limits<double>::infinity();
  std::uint64_t flat = std::numeric_limits<std::uint64_t>::max();

  bool better_than(const Candidate& o) const {
    return value > o.value || (value == o.value && flat < o.flat);
  }
};

OptimumResult finish(const FlatGrid& g, const Candidate& best, double value) {
  OptimumResult out;
  out.value = value;
  out.exhaustive = true;
  out.genome.assign(g.radix.size(), 0);
  std::vector<double> x(g.radix.size());
  decode(g, best.flat, out.genome, x);
  return out;
}

}  // namespace

std::vector<double> metric_values(const SyntheticSystem& system, std::span<const double> x) {
  std::vector<double> out;
  out.reserve(system.metrics.size());
  for (const auto& metric : system.metrics) out.push_back(eval_metric(metric, x));
  return out;
}

std::vector<double> genome_values(const SearchSpace& space, const Genome& genome) {
  std::vector<double> x(genome.size());
  for (std::size_t i = 0; i < genome.size(); ++i) x[i] = grid_value(space.params()[i], genome[i]);
  return x;
}

std::vector<MetricSample> eval_metrics(const SyntheticSystem& system, const Configuration& config) {
  const std::vector<double> x = genome_values(system.space, to_genome(config, system.space));
  const std::vector<double> values = metric_values(system, x);
  std::vector<MetricSample> out;
  for (std::size_t j = 0; j < values.size(); ++j) {
    out.push_back(MetricSample{"m" + std::to_string(j), values[j], TuningDirective{}, {}});
  }
  return out;
}

std::vector<MetricRange> metric_ranges(const SyntheticSystem& system) {
  std::vector<MetricRange> ranges;
  const auto& params = system.space.params();
  for (const auto& metric : system.metrics) {
    const std::size_t k = metric.params.size();
    std::vector<double> xs(k);
    MetricRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
      for (std::size_t i = 0; i < k; ++i) {
        const ParameterSpec& p = params[metric.params[i]];
        xs[i] = (mask >> i) & 1U ? grid_value(p, n_values(p) - 1) : grid_value(p, 0);
      }
      const double f = eval_function(metric.kind, xs);
      r.lo = std::min(r.lo, f);
      r.hi = std::max(r.hi, f);
    }
    ranges.push_back(r);
  }
  return ranges;
}

double objective(const SyntheticSystem& system, std::span<const MetricRange> ranges,
                 std::span<const double> x) {
  if (system.metrics.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < system.metrics.size(); ++j) {
    total += normalized(eval_metric(system.metrics[j], x), ranges[j]);
  }
  return total / static_cast<double>(system.metrics.size());
}

OptimumResult exhaustive_optimum(const SyntheticSystem& system) {
  const FlatGrid g = flat_grid(system.space);
  const std::vector<MetricRange> ranges = metric_ranges(system);
  const std::size_t dims = g.radix.size();
  Candidate best;
#pragma omp parallel
  {
    Candidate local;
    Genome genome(dims);
    std::vector<double> x(dims);
#pragma omp for schedule(static) nowait
    for (std::int64_t flat = 0; flat < static_cast<std::int64_t>(g.volume); ++flat) {
      decode(g, static_cast<std::uint64_t>(flat), genome, x);
      const Candidate c{objective(system, ranges, x), static_cast<std::uint64_t>(flat)};
      if (c.better_than(local)) local = c;
    }
#pragma omp critical(crosstune_exhaustive_merge)
    {
      if (local.better_than(best)) best = local;
    }
  }
  return finish(g, best, best.value);
}

namespace reference {

OptimumResult exhaustive_optimum(const SyntheticSystem& system) {
  const FlatGrid g = flat_grid(system.space);
  const std::vector<MetricRange> ranges = metric_ranges(system);
  Genome genome(g.radix.size());
  std::vector<double> x(g.radix.size());
  Candidate best;
  for (std::uint64_t flat = 0; flat < g.volume; ++flat) {
    decode(g, flat, genome, x);
    const Candidate c{objective(system, ranges, x), flat};
    if (c.better_than(best)) best = c;
  }
  return finish(g, best, best.value);
}

}  // namespace reference

OptimumResult ascent_optimum(const SyntheticSystem& system, int restarts) {
  const auto table = grid_table(system.space);
  const std::vector<MetricRange> ranges = metric_ranges(system);
  const std::size_t dims = table.size();

  std::vector<std::vector<std::size_t>> touching(dims);
  for (std::size_t j = 0; j < system.metrics.size(); ++j) {
    for (std::size_t p : system.metrics[j].params) touching[p].push_back(j);
  }

  Rng rng(mix_seed(system.seed ^ 0xa5c3'17e2'9b04'd6f1ULL));
  OptimumResult best;
  best.value = -std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    Genome genome(dims);
    std::vector<double> x(dims);
    for (std::size_t i = 0; i < dims; ++i) {
      genome[i] = rng.uniform_int(0, static_cast<std::int64_t>(table[i].size()) - 1);
      x[i] = table[i][static_cast<std::size_t>(genome[i])];
    }
    bool improved = true;
    while (improved) {
      improved = false;
      for (std::size_t p = 0; p < dims; ++p) {
        const auto local = [&](double value) {
          x[p] = value;
          double s = 0.0;
          for (std::size_t j : touching[p]) {
            s += normalized(eval_metric(system.metrics[j], x), ranges[j]);
          }
          return s;
        };
        const auto current = static_cast<std::size_t>(genome[p]);
        double best_local = local(table[p][current]);
        std::size_t best_index = current;
        for (std::size_t i = 0; i < table[p].size(); ++i) {
          if (i == current) continue;
          const double s = local(table[p][i]);
          if (s > best_local + 1e-12) {
            best_local = s;
            best_index = i;
          }
        }
        x[p] = table[p][best_index];
        if (best_index != current) {
          genome[p] = static_cast<std::int64_t>(best_index);
          improved = true;
        }
      }
    }
    const double value = objective(system, ranges, x);
    if (value > best.value) {
      best.value = value;
      best.genome = genome;
    }
  }
  best.exhaustive = false;
  return best;
}

OptimumResult reference_optimum(const SyntheticSystem& system) {
  const SearchVolume volume = search_volume(system.space);
  if (!volume.saturated && volume.count <= kExhaustiveLimit) {
    return exhaustive_optimum(system);
  }
  return ascent_optimum(system, 100);
}

TrialResult run_trial(const SyntheticSystem& system, std::uint64_t seed,
                      const TrialOptions& options, std::vector<double>* trajectory) {
  TrialResult result;
  result.seed = seed;
  const auto d = static_cast<std::int64_t>(system.space.dims());
  const auto v = system.space.empty() ? 0 : n_values(system.space.params().front());
  result.complexity = d * v * static_cast<std::int64_t>(system.metrics.size());
  result.reference = options.reference ? *options.reference : reference_optimum(system).value;
  const double target = options.target_frac * result.reference;
  const std::vector<MetricRange> ranges = metric_ranges(system);

  LoopConfig loop;
  loop.cycle_time = std::chrono::milliseconds(0);
  loop.report_timeout = std::chrono::milliseconds(0);
  loop.snapshot_window = 1;
  loop.settle_cycles = 0;
  loop.seed = mix_seed(seed ^ 0x7f4a'7c15'9e37'79b9ULL);
  Controller controller(loop, options.tuner, options.entropy);

  PcaManifest manifest;
  manifest.name = "synthetic";
  manifest.layer = "synthetic";
  for (std::size_t j = 0; j < system.metrics.size(); ++j) {
    manifest.metrics.push_back(MetricDecl{"m" + std::to_string(j), TuningDirective{}, {}, false});
  }
  for (const auto& p : system.space.params()) {
    manifest.parameters.push_back(ParameterDecl{p.name, p.min, p.max, p.step, p.changeability, {}});
  }
  const std::string id = controller.register_pca(manifest).pca_id;

  StateReport report;
  report.pca_id = id;
  report.timestamp = "1970-01-01T00:00:00Z";
  report.metrics.resize(system.metrics.size());
  for (std::size_t j = 0; j < system.metrics.size(); ++j) {
    report.metrics[j].name = manifest.metrics[j].name;
  }

  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> x(system.space.dims());
  TimePoint now{};
  while (result.steps_run < options.cap) {
    const ConfigView view = controller.config_view(id);
    controller.acknowledge(id, view.epoch);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = view.parameters[i].value;
    const std::vector<double> values = metric_values(system, x);
    for (std::size_t j = 0; j < values.size(); ++j) report.metrics[j].value = values[j];
    report.epoch = view.epoch;
    controller.submit_report(report, now);
    const CycleResult cycle = controller.tick(now);
    now += std::chrono::milliseconds(1);
    if (cycle.outcome != CycleOutcome::kStep) {
      // With window 1 and no settling every acknowledged cycle is a step.
      throw std::logic_error("synthetic trial cycle did not complete a step: " +
                             std::string(to_string(cycle.outcome)));
    }

    ++result.steps_run;
    best = std::max(best, objective(system, ranges, x));
    result.best_fraction = result.reference > 0.0 ? best / result.reference : 0.0;
    if (trajectory != nullptr) trajectory->push_back(result.best_fraction);
    if (best >= target) {
      result.steps_to_target = result.steps_run;
      break;
    }
  }
  return result;
}

}  // namespace crosstune
