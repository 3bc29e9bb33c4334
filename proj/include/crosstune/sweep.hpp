#pragma once

// Complexity sweeps over the synthetic benchmark. Trials run in parallel;
// rows are emitted to the sink strictly in trial order so that the CSV is
// byte-identical regardless of thread count.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "crosstune/synthetic.hpp"

namespace crosstune {

struct SweepRow {
  std::int64_t complexity = 0;
  int d = 0;
  int m = 0;
  int v = 0;
  int rep = 0;
  int steps = 0;  // steps to target, or the cap when capped
  bool capped = false;

  bool operator==(const SweepRow&) const = default;
};

struct SweepSpec {
  std::vector<int> d_list;
  std::vector<int> m_list;
  std::vector<int> v_list;
  int reps = 1;
  std::uint64_t seed0 = 1;
  TrialOptions options;

  std::size_t trial_count() const { return d_list.size() * m_list.size() * v_list.size() * reps; }
};

// d, m in {5, 10, 20, 30, 40}, v in {10, 100, 2000, 5000, 10000}, 1000 reps.
SweepSpec full_paper_grid(std::uint64_t seed0 = 1);

// Trial index -> (d, m, v, rep), iterating d, then m, then v, then rep.
struct TrialCoordinates {
  int d, m, v, rep;
};
TrialCoordinates trial_coordinates(const SweepSpec& spec, std::size_t index);

SweepRow run_sweep_trial(const SweepSpec& spec, std::size_t index);

// Runs trials [start, trial_count). The sink, if any, sees each row once,
// in index order. Trial i uses seed seed0 + i.
std::vector<SweepRow> run_sweep(const SweepSpec& spec,
                                const std::function<void(const SweepRow&)>& sink = {},
                                std::size_t start = 0);

inline constexpr const char* kSweepCsvHeader = "complexity,d,m,v,rep,steps,capped";

std::string to_csv(const SweepRow& row);
// Throws ValidationError on malformed rows.
SweepRow parse_sweep_row(const std::string& line);
// Reads a sweep CSV (header required). A torn final line is ignored.
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path);

struct SweepSummary {
  std::size_t trials = 0;
  double within_1000 = 0.0;
  double capped = 0.0;
};

SweepSummary summarize(const std::vector<SweepRow>& rows);

double median_steps(std::vector<SweepRow> rows);

}  // namespace crosstune
