#include "crosstune/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crosstune {

std::string_view to_string(Phase phase) {
  return phase == Phase::kExploration ? "exploration" : "exploitation";
}

double alpha(const Telemetry& telemetry, double horizon) {
  const double dims = static_cast<double>(std::max<std::int64_t>(telemetry.dims, 1));
  const double scale = 2.0 * horizon * std::max(telemetry.ln_volume, 1.0) * dims;
  return static_cast<double>(telemetry.step_index + telemetry.history_len) / scale;
}

EntropySchedule make_schedule(double /*ln_volume*/, std::int64_t /*dims*/,
                              const EntropyConstants& constants) {
  if (constants.plateaus.size() < 2) {
    throw std::invalid_argument("entropy schedule needs at least two plateaus");
  }
  if (!std::is_sorted(constants.plateaus.rbegin(), constants.plateaus.rend()) ||
      constants.plateaus.back() <= 0.0 || constants.plateaus.front() > 1.0) {
    throw std::invalid_argument("plateaus must descend within (0, 1]");
  }
  EntropySchedule s;
  s.plateaus = constants.plateaus;
  s.softening = constants.softening;
  s.h_min = constants.plateaus.back();
  s.horizon = constants.horizon;
  const auto steps = static_cast<double>(s.plateaus.size() - 1);
  for (std::size_t j = 1; j < s.plateaus.size(); ++j) {
    s.transitions.push_back(static_cast<double>(j) / steps);
  }
  return s;
}

double entropy(double alpha, const EntropySchedule& schedule) {
  const auto& levels = schedule.plateaus;
  double h = levels.back();
  for (std::size_t j = 1; j < levels.size(); ++j) {
    const double z = (schedule.transitions[j - 1] - alpha) / schedule.softening;
    h += (levels[j - 1] - levels[j]) / (1.0 + std::exp(-z));
  }
  return std::clamp(h, schedule.h_min, 1.0);
}

bool is_exploitation(double entropy, double inflection) { return entropy < inflection; }

}  // namespace crosstune
