#pragma once

// The reconfiguration controller. It owns the agent registry, the window of
// collected states, the evaluator, the history and the random source, and
// advances one cycle per tick():
//
//   collect a complete, epoch-coherent state from every registered agent
//   -> wait out the settle countdown -> fill the snapshot window
//   -> snapshot (per-metric median) -> update extrema, rescore if needed
//   -> append or merge a history record and persist it
//   -> telemetry -> entropy -> propose -> validate -> publish (epoch + 1)
//
// The controller is single-threaded and clock-agnostic: callers pass `now`.
// ControlService drives it in real time; benchmark trials drive it directly.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crosstune/domain.hpp"
#include "crosstune/entropy.hpp"
#include "crosstune/history_store.hpp"
#include "crosstune/protocol.hpp"
#include "crosstune/rng.hpp"
#include "crosstune/state_evaluator.hpp"
#include "crosstune/tuner.hpp"

namespace crosstune {

using SteadyClock = std::chrono::steady_clock;
using TimePoint = SteadyClock::time_point;

struct LoopConfig {
  std::chrono::milliseconds cycle_time{5000};
  int snapshot_window = 3;
  int settle_cycles = 2;
  std::chrono::milliseconds report_timeout{5000};
  std::string history_path;
  // Windowing starts once this many agents have registered.
  int min_pcas = 1;
  std::uint64_t seed = 1;
};

// Throws ValidationError for a window < 1, negative settle cycles or
// negative durations.
void validate_loop_config(const LoopConfig& config);

struct PcaEntry {
  std::string id;
  PcaManifest manifest;
  std::optional<std::uint64_t> acked_epoch;
  std::optional<TimePoint> last_report_at;

  bool owns_parameters() const { return !manifest.parameters.empty(); }
};

class PcaRegistry {
 public:
  // Validates the manifest and rejects any agent, metric or parameter name
  // that is already registered (ConflictError).
  const PcaEntry& add(const PcaManifest& manifest);

  PcaEntry& at(const std::string& id);
  const PcaEntry& at(const std::string& id) const;
  const std::vector<PcaEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  const SearchSpace& space() const { return space_; }
  const DirectiveMap& directives() const { return directives_; }
  bool has_tuning_metric() const;

 private:
  std::vector<PcaEntry> entries_;
  SearchSpace space_;
  DirectiveMap directives_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Per-metric median across the states; config from the shared epoch.
// Throws std::logic_error for an empty window or mixed epochs.
Snapshot make_snapshot(std::span<const SystemState> states);

enum class CycleOutcome {
  kIdle,       // preconditions for tuning not met yet
  kDiscarded,  // some agent missed the report window
  kStale,      // complete, but some agent is not running the current epoch
  kSettling,   // complete and coherent, still inside the settle interval
  kCollected,  // added to the snapshot window
  kStep,       // window completed a tuning step and a new epoch was published
};

std::string_view to_string(CycleOutcome outcome);

struct CollectResult {
  enum class Kind { kComplete, kDiscarded, kStale } kind = Kind::kDiscarded;
  std::optional<SystemState> state;
  std::vector<std::string> missing;
};

struct CycleResult {
  CycleOutcome outcome = CycleOutcome::kIdle;
  std::vector<std::string> missing;
  std::optional<std::int64_t> step;  // index of the record touched by a kStep
};

struct RuntimeStats {
  std::int64_t step_index = 0;  // completed tuning steps
  std::uint64_t epoch = 0;
  double alpha = 0.0;
  double entropy = 1.0;
  Phase phase = Phase::kExploration;
  std::optional<ScoreBreakdown> last_breakdown;
  std::optional<double> last_score;
  std::optional<ProposalKind> proposal_kind;
  std::vector<std::int64_t> proposal_parents;
  std::optional<double> best_score;
  std::optional<Configuration> best_config;
  std::uint64_t discarded_cycles = 0;
  std::uint64_t stale_cycles = 0;
  std::size_t history_size = 0;
};

Json to_json(const RuntimeStats& stats);

class Controller {
 public:
  // A null store keeps history in memory only.
  explicit Controller(LoopConfig config, TunerParams tuner = {}, EntropyConstants entropy = {},
                      std::unique_ptr<HistoryStore> store = nullptr);

  // Reloads persisted history: rebuilds extrema, rescores, and resumes the
  // step counter and epoch after the last persisted values.
  void restore();

  RegisterResponse register_pca(const PcaManifest& manifest);
  StateReply submit_report(const StateReport& report, TimePoint now);
  AckReply acknowledge(const std::string& pca_id, std::uint64_t epoch);
  ConfigView config_view(const std::string& pca_id) const;

  CycleResult tick(TimePoint now);

  // Individual loop stages, public for testing.
  CollectResult collect_cycle(TimePoint now);
  Configuration validate(const Configuration& proposal) const;
  std::uint64_t publish(Configuration config);

  bool ready() const;
  std::uint64_t epoch() const { return epoch_; }
  const Configuration& published() const { return published_; }
  std::span<const StateRecord> history() const { return history_; }
  const RuntimeStats& stats() const { return stats_; }
  const PcaRegistry& registry() const { return registry_; }
  const LoopConfig& loop_config() const { return config_; }
  const StateEvaluator& evaluator() const { return evaluator_; }
  const EntropySchedule& schedule() const { return schedule_; }

  // Called after each completed step.
  void on_step(std::function<void(const RuntimeStats&)> callback) {
    step_callback_ = std::move(callback);
  }

 private:
  struct PendingReport {
    StateReport report;
    TimePoint received;
  };

  std::int64_t complete_step(const Snapshot& snapshot);
  void refresh_best();

  LoopConfig config_;
  TunerParams tuner_;
  EntropyConstants entropy_constants_;
  EntropySchedule schedule_;
  std::unique_ptr<HistoryStore> store_;
  Rng rng_;

  PcaRegistry registry_;
  StateEvaluator evaluator_;
  double ln_volume_ = 0.0;

  std::map<std::string, PendingReport> pending_;
  std::vector<SystemState> window_;
  int settle_remaining_ = 0;

  std::vector<StateRecord> history_;
  std::map<std::map<std::string, std::int64_t>, std::size_t> record_by_config_;
  std::int64_t steps_completed_ = 0;

  std::uint64_t epoch_ = 0;
  Configuration published_;
  // Genes before the latest publication; -1 marks a value the agent has not
  // been told yet (no initial value in its manifest).
  Configuration previous_;

  RuntimeStats stats_;
  std::function<void(const RuntimeStats&)> step_callback_;
};

}  // namespace crosstune
