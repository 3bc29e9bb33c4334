#pragma once

// Scores snapshots into one comparable number. Each tuning metric is
// normalized against adaptively tracked extrema, penalized when it leaves its
// thresholds, and combined as a weighted mean.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "crosstune/domain.hpp"

namespace crosstune {

enum class RoundSide { kDown, kUp };

inline constexpr double kRoundEpsilon = 1e-9;

// Rounds x outward to a multiple of h = 0.5 * 10^floor(log10(max(|x|, eps))).
// round_bound(x, kDown) <= x <= round_bound(x, kUp) always holds.
double round_bound(double x, RoundSide side);

struct MetricBounds {
  double raw_lo = 0.0;
  double raw_hi = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

class ExtremaTracker {
 public:
  // Widens the observed range of `name`; returns true (and bumps the
  // revision) only when the rounded bounds move.
  bool update(const std::string& name, double value);

  const MetricBounds* bounds(std::string_view name) const;
  std::uint64_t revision() const { return revision_; }
  const std::map<std::string, MetricBounds, std::less<>>& all() const { return bounds_; }

 private:
  std::map<std::string, MetricBounds, std::less<>> bounds_;
  std::uint64_t revision_ = 0;
};

inline bool update_extrema(ExtremaTracker& tracker, const MetricSample& sample) {
  return tracker.update(sample.name, sample.value);
}

// Position of value within [lo, hi] oriented by direction, clamped to [0, 1].
// A degenerate range yields 0.5.
double normalize(double value, double lo, double hi, Direction direction);

// Normalized score in [0, 1] when thresholds hold; otherwise
// -1 - clamp(overshoot / (hi - lo), 0, 1), which lies in [-2, -1].
// Thresholds are inclusive: value == threshold is satisfying.
double metric_score(double value, const TuningDirective& directive, double lo, double hi);

bool violates_threshold(double value, const TuningDirective& directive);

using DirectiveMap = std::map<std::string, TuningDirective, std::less<>>;

struct ScoreBreakdown {
  std::map<std::string, double> scores;
  std::map<std::string, bool> violations;
  double total = 0.0;
  double weights_sum = 0.0;
};

// Weighted mean of metric scores over non-auxiliary metrics. Metrics the
// tracker has never seen are scored against the degenerate range [v, v].
// Throws IncompleteStateError if a tuning metric is absent.
ScoreBreakdown score_state(const Snapshot& snapshot, const DirectiveMap& directives,
                           const ExtremaTracker& tracker);

// Recomputes every record's score under the tracker's current bounds. Each
// record's score is the mean of its per-snapshot scores. Records are
// processed in parallel.
void rescore_history(std::span<StateRecord> history, const DirectiveMap& directives,
                     const ExtremaTracker& tracker);

namespace reference {
// Serial rescoring, kept as the oracle for the parallel kernel.
void rescore_history(std::span<StateRecord> history, const DirectiveMap& directives,
                     const ExtremaTracker& tracker);
}  // namespace reference

// Tracker plus directives plus the revision history was last scored at.
class StateEvaluator {
 public:
  explicit StateEvaluator(DirectiveMap directives = {}) : directives_(std::move(directives)) {}

  void set_directives(DirectiveMap directives) { directives_ = std::move(directives); }
  const DirectiveMap& directives() const { return directives_; }
  const ExtremaTracker& tracker() const { return tracker_; }

  // Feeds every tuning metric of the snapshot into the tracker. Returns true
  // if any rounded bound changed.
  bool observe(const Snapshot& snapshot);

  ScoreBreakdown score(const Snapshot& snapshot) const {
    return score_state(snapshot, directives_, tracker_);
  }

  // Rescores history only when bounds changed since the last call.
  bool rescore_if_stale(std::span<StateRecord> history);

 private:
  DirectiveMap directives_;
  ExtremaTracker tracker_;
  std::uint64_t scored_revision_ = 0;
};

}  // namespace crosstune
