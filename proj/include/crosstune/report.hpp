#pragma once

// Static CSV + SVG reports from a history file or a sweep CSV.
//
// History reports:
//   timeseries.csv   step, score and every metric of each record
//   boxes.csv        per-metric box statistics over groups of `group` steps
//   best_score.csv   running best score by step
//   best_score.svg, box_<metric>.svg
//
// Sweep reports:
//   steps_vs_complexity.csv   per-cell box statistics of steps-to-target
//   steps_cdf.csv             empirical CDF of steps (capped trials at the cap)
//   steps_vs_complexity.svg, steps_cdf.svg

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crosstune/domain.hpp"
#include "crosstune/sweep.hpp"

namespace crosstune {

struct BoxStats {
  std::size_t n = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Quartiles by linear interpolation between order statistics. Empty input
// gives n == 0 and zeros.
BoxStats box_stats(std::vector<double> values);

struct TrajectoryPoint {
  std::int64_t step = 0;
  double score = 0.0;
  double best = 0.0;
};

// Records ordered by step_index with the running maximum of their scores.
std::vector<TrajectoryPoint> best_trajectory(const std::vector<StateRecord>& history);

struct CdfPoint {
  int steps = 0;
  double fraction = 0.0;
};

// One point per distinct step count, fraction of trials at or below it.
std::vector<CdfPoint> steps_cdf(const std::vector<SweepRow>& rows);

std::vector<std::filesystem::path> report_history(const std::vector<StateRecord>& history,
                                                  const std::filesystem::path& out_dir,
                                                  int group = 25);

std::vector<std::filesystem::path> report_sweep(const std::vector<SweepRow>& rows,
                                                const std::filesystem::path& out_dir);

}  // namespace crosstune
