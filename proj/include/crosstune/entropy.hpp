#pragma once

// Entropy schedule: maps controller telemetry to an entropy level in
// [h_min, 1] through a softened staircase of plateaus. The schedule shape is
// fixed; its position in wall-clock steps comes from alpha, which is
// normalized by search-space complexity.

#include <cstdint>
#include <string_view>
#include <vector>

namespace crosstune {

struct Telemetry {
  std::int64_t step_index = 0;
  std::int64_t history_len = 0;
  double ln_volume = 0.0;
  std::int64_t dims = 1;
};

struct EntropyConstants {
  double horizon = 0.25;
  double softening = 0.015;
  double inflection = 0.3;
  // Descending levels; the last one is the entropy floor.
  std::vector<double> plateaus{1.0, 0.6, 0.35, 0.15, 0.02};
};

struct EntropySchedule {
  std::vector<double> plateaus;
  std::vector<double> transitions;
  double softening = 0.015;
  double h_min = 0.02;
  double horizon = 0.25;
};

enum class Phase { kExploration, kExploitation };

std::string_view to_string(Phase phase);

// (step_index + history_len) / (2 * horizon * max(ln_volume, 1) * dims)
double alpha(const Telemetry& telemetry, double horizon = EntropyConstants{}.horizon);

// Transitions evenly spaced at j / P, j = 1..P, for P = plateaus - 1.
// Inputs are accepted for interface symmetry; complexity positioning lives in
// alpha, so the shape does not depend on them.
EntropySchedule make_schedule(double ln_volume, std::int64_t dims,
                              const EntropyConstants& constants = {});

// H(a) = L_P + sum_j (L_{j-1} - L_j) * logistic((t_j - a) / s), clamped.
double entropy(double alpha, const EntropySchedule& schedule);

bool is_exploitation(double entropy, double inflection = EntropyConstants{}.inflection);

}  // namespace crosstune
