#include "crosstune/state_evaluator.hpp"

#include <algorithm>
#include <cmath>

namespace crosstune {

double round_bound(double x, RoundSide side) {
  if (x == 0.0) return 0.0;
  const double magnitude = std::max(std::fabs(x), kRoundEpsilon);
  const double h = 0.5 * std::pow(10.0, std::floor(std::log10(magnitude)));
  double r;
  if (side == RoundSide::kDown) {
    r = std::floor(x / h) * h;
    if (r > x) r -= h;
  } else {
    r = std::ceil(x / h) * h;
    if (r < x) r += h;
  }
  return r;
}

bool ExtremaTracker::update(const std::string& name, double value) {
  auto it = bounds_.find(name);
  if (it == bounds_.end()) {
    MetricBounds b{value, value, round_bound(value, RoundSide::kDown),
                   round_bound(value, RoundSide::kUp)};
    bounds_.emplace(name, b);
    ++revision_;
    return true;
  }
  MetricBounds& b = it->second;
  b.raw_lo = std::min(b.raw_lo, value);
  b.raw_hi = std::max(b.raw_hi, value);
  const double lo = round_bound(b.raw_lo, RoundSide::kDown);
  const double hi = round_bound(b.raw_hi, RoundSide::kUp);
  if (lo == b.lo && hi == b.hi) return false;
  b.lo = lo;
  b.hi = hi;
  ++revision_;
  return true;
}

const MetricBounds* ExtremaTracker::bounds(std::string_view name) const {
  auto it = bounds_.find(name);
  return it == bounds_.end() ? nullptr : &it->second;
}

double normalize(double value, double lo, double hi, Direction direction) {
  const double span = hi - lo;
  if (!(span > 0.0)) return 0.5;
  const double t = direction == Direction::kMinimize ? (hi - value) / span : (value - lo) / span;
  return std::clamp(t, 0.0, 1.0);
}

bool violates_threshold(double value, const TuningDirective& directive) {
  return (directive.lower_threshold && value < *directive.lower_threshold) ||
         (directive.upper_threshold && value > *directive.upper_threshold);
}

double metric_score(double value, const TuningDirective& directive, double lo, double hi) {
  double overshoot = 0.0;
  if (directive.lower_threshold && value < *directive.lower_threshold) {
    overshoot = *directive.lower_threshold - value;
  } else if (directive.upper_threshold && value > *directive.upper_threshold) {
    overshoot = value - *directive.upper_threshold;
  } else {
    return normalize(value, lo, hi, directive.direction);
  }
  const double span = hi - lo;
  const double penalty = span > 0.0 ? std::clamp(overshoot / span, 0.0, 1.0) : 1.0;
  return -1.0 - penalty;
}

ScoreBreakdown score_state(const Snapshot& snapshot, const DirectiveMap& directives,
                           const ExtremaTracker& tracker) {
  ScoreBreakdown out;
  double weighted = 0.0;
  for (const auto& [name, directive] : directives) {
    if (!directive.is_tuning()) continue;
    auto it = snapshot.metrics.find(name);
    if (it == snapshot.metrics.end()) {
      throw IncompleteStateError("snapshot is missing tuning metric '" + name + "'");
    }
    const double value = it->second;
    const MetricBounds* b = tracker.bounds(name);
    const double lo = b ? b->lo : value;
    const double hi = b ? b->hi : value;
    const double s = metric_score(value, directive, lo, hi);
    out.scores.emplace(name, s);
    out.violations.emplace(name, violates_threshold(value, directive));
    weighted += directive.weight * s;
    out.weights_sum += directive.weight;
  }
  out.total = out.weights_sum > 0.0 ? weighted / out.weights_sum : 0.0;
  return out;
}

namespace {

void rescore_record(StateRecord& record, const DirectiveMap& directives,
                    const ExtremaTracker& tracker) {
  double sum = score_state(record.snapshot, directives, tracker).total;
  for (const auto& snap : record.reevaluations) {
    sum += score_state(snap, directives, tracker).total;
  }
  record.eval_count = 1 + static_cast<int>(record.reevaluations.size());
  record.score_sum = sum;
  record.score = sum / record.eval_count;
}

}  // namespace

void rescore_history(std::span<StateRecord> history, const DirectiveMap& directives,
                     const ExtremaTracker& tracker) {
  const auto n = static_cast<std::ptrdiff_t>(history.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    rescore_record(history[static_cast<std::size_t>(i)], directives, tracker);
  }
}

namespace reference {

void rescore_history(std::span<StateRecord> history, const DirectiveMap& directives,
                     const ExtremaTracker& tracker) {
  for (auto& record : history) {
    rescore_record(record, directives, tracker);
  }
}

}  // namespace reference

bool StateEvaluator::observe(const Snapshot& snapshot) {
  bool changed = false;
  for (const auto& [name, directive] : directives_) {
    if (!directive.is_tuning()) continue;
    auto it = snapshot.metrics.find(name);
    if (it == snapshot.metrics.end()) continue;
    changed = tracker_.update(name, it->second) || changed;
  }
  return changed;
}

bool StateEvaluator::rescore_if_stale(std::span<StateRecord> history) {
  if (tracker_.revision() == scored_revision_) return false;
  rescore_history(history, directives_, tracker_);
  scored_revision_ = tracker_.revision();
  return true;
}

}  // namespace crosstune
