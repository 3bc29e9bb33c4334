#include "crosstune/controller.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace crosstune {

void validate_loop_config(const LoopConfig& config) {
  if (config.snapshot_window < 1) throw ValidationError("snapshot_window must be >= 1");
  if (config.settle_cycles < 0) throw ValidationError("settle_cycles must be >= 0");
  if (config.cycle_time.count() < 0) throw ValidationError("cycle_time must be >= 0");
  if (config.report_timeout.count() < 0) throw ValidationError("report_timeout must be >= 0");
  if (config.min_pcas < 1) throw ValidationError("min_pcas must be >= 1");
}

// ---------------------------------------------------------------------------
// Registry

const PcaEntry& PcaRegistry::add(const PcaManifest& manifest) {
  validate_manifest(manifest);
  for (const auto& e : entries_) {
    if (e.manifest.name == manifest.name) {
      throw ConflictError("agent '" + manifest.name + "' is already registered");
    }
  }
  for (const auto& m : manifest.metrics) {
    if (directives_.count(m.name) != 0) {
      throw ConflictError("metric '" + m.name + "' is already registered");
    }
  }
  for (const auto& p : manifest.parameters) {
    if (space_.find(p.name) != nullptr) {
      throw ConflictError("parameter '" + p.name + "' is already registered");
    }
  }

  for (const auto& p : manifest.parameters) space_.add(to_spec(p, manifest.layer));
  for (const auto& m : manifest.metrics) directives_.emplace(m.name, m.directive);

  PcaEntry entry;
  entry.id = "pca-" + std::to_string(entries_.size() + 1);
  entry.manifest = manifest;
  index_.emplace(entry.id, entries_.size());
  entries_.push_back(std::move(entry));
  return entries_.back();
}

PcaEntry& PcaRegistry::at(const std::string& id) {
  auto it = index_.find(id);
  if (it == index_.end()) throw NotFoundError("unknown agent '" + id + "'");
  return entries_[it->second];
}

const PcaEntry& PcaRegistry::at(const std::string& id) const {
  return const_cast<PcaRegistry*>(this)->at(id);
}

bool PcaRegistry::has_tuning_metric() const {
  return std::any_of(directives_.begin(), directives_.end(),
                     [](const auto& kv) { return kv.second.is_tuning(); });
}

// ---------------------------------------------------------------------------
// Snapshots

namespace {

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

Snapshot make_snapshot(std::span<const SystemState> states) {
  if (states.empty()) throw std::logic_error("snapshot window is empty");
  const std::uint64_t epoch = states.front().config.epoch;
  std::map<std::string, std::vector<double>> series;
  for (const auto& state : states) {
    if (state.config.epoch != epoch) {
      throw std::logic_error("snapshot window mixes configuration epochs");
    }
    for (const auto& m : state.metrics) series[m.name].push_back(m.value);
  }
  Snapshot snap;
  snap.config = states.front().config;
  snap.window = static_cast<int>(states.size());
  for (auto& [name, values] : series) snap.metrics.emplace(name, median(std::move(values)));
  return snap;
}

std::string_view to_string(CycleOutcome outcome) {
  switch (outcome) {
    case CycleOutcome::kIdle:
      return "idle";
    case CycleOutcome::kDiscarded:
      return "discarded";
    case CycleOutcome::kStale:
      return "stale";
    case CycleOutcome::kSettling:
      return "settling";
    case CycleOutcome::kCollected:
      return "collected";
    case CycleOutcome::kStep:
      return "step";
  }
  return "idle";
}

Json to_json(const RuntimeStats& stats) {
  Json best{{"config", stats.best_config ? to_json(*stats.best_config) : Json(nullptr)},
            {"score", stats.best_score ? Json(*stats.best_score) : Json(nullptr)}};
  Json proposal{{"kind", stats.proposal_kind ? Json(std::string(to_string(*stats.proposal_kind)))
                                             : Json(nullptr)},
                {"parents", stats.proposal_parents}};
  return Json{
      {"alpha", stats.alpha},
      {"best", std::move(best)},
      {"discarded_cycles", stats.discarded_cycles},
      {"entropy", stats.entropy},
      {"epoch", stats.epoch},
      {"history_size", stats.history_size},
      {"last_breakdown", stats.last_breakdown ? to_json(*stats.last_breakdown) : Json(nullptr)},
      {"last_score", stats.last_score ? Json(*stats.last_score) : Json(nullptr)},
      {"phase", std::string(to_string(stats.phase))},
      {"proposal", std::move(proposal)},
      {"stale_cycles", stats.stale_cycles},
      {"step_index", stats.step_index},
  };
}

// ---------------------------------------------------------------------------
// Controller

Controller::Controller(LoopConfig config, TunerParams tuner, EntropyConstants entropy,
                       std::unique_ptr<HistoryStore> store)
    : config_(std::move(config)),
      tuner_(tuner),
      entropy_constants_(std::move(entropy)),
      schedule_(make_schedule(0.0, 1, entropy_constants_)),
      store_(std::move(store)),
      rng_(config_.seed) {
  validate_loop_config(config_);
}

void Controller::restore() {
  if (!store_) return;
  history_ = store_->load();
  record_by_config_.clear();
  std::uint64_t max_epoch = 0;
  std::int64_t last_step = -1;
  for (std::size_t i = 0; i < history_.size(); ++i) {
    const auto& r = history_[i];
    record_by_config_[r.snapshot.config.genes] = i;
    max_epoch = std::max(max_epoch, r.snapshot.config.epoch);
    for (const auto& s : r.reevaluations) max_epoch = std::max(max_epoch, s.config.epoch);
    last_step = std::max({last_step, r.updated_step, r.step_index});
  }
  steps_completed_ = last_step + 1;
  epoch_ = history_.empty() ? epoch_ : max_epoch + 1;
  published_.epoch = epoch_;
  stats_.step_index = steps_completed_;
  stats_.epoch = epoch_;
  stats_.history_size = history_.size();
  refresh_best();
}

RegisterResponse Controller::register_pca(const PcaManifest& manifest) {
  if (!history_.empty()) {
    const auto& known = history_.front().snapshot.metrics;
    for (const auto& m : manifest.metrics) {
      if (m.directive.is_tuning() && known.count(m.name) == 0) {
        throw ConflictError("metric '" + m.name +
                            "' is absent from the existing history; the tuning metric set is "
                            "fixed once history exists");
      }
    }
  }
  const PcaEntry& entry = registry_.add(manifest);

  for (const auto& p : manifest.parameters) {
    const ParameterSpec& spec = *registry_.space().find(p.name);
    const std::int64_t index =
        p.initial ? grid_index(spec, *p.initial) : rng_.uniform_int(0, n_values(spec) - 1);
    published_.genes[p.name] = index;
    previous_.genes[p.name] = p.initial ? index : -1;
  }
  published_.epoch = epoch_;

  evaluator_ = StateEvaluator(registry_.directives());
  if (!history_.empty()) {
    for (const auto& r : history_) {
      evaluator_.observe(r.snapshot);
      for (const auto& s : r.reevaluations) evaluator_.observe(s);
    }
    if (registry_.has_tuning_metric()) {
      const auto& known = history_.front().snapshot.metrics;
      const bool complete =
          std::all_of(registry_.directives().begin(), registry_.directives().end(),
                      [&](const auto& kv) { return !kv.second.is_tuning() || known.count(kv.first); });
      if (complete) {
        evaluator_.rescore_if_stale(history_);
        refresh_best();
      }
    }
  }
  ln_volume_ = search_volume(registry_.space()).ln;
  schedule_ = make_schedule(ln_volume_, static_cast<std::int64_t>(registry_.space().dims()),
                            entropy_constants_);
  window_.clear();
  return RegisterResponse{entry.id, epoch_};
}

StateReply Controller::submit_report(const StateReport& report, TimePoint now) {
  PcaEntry& entry = registry_.at(report.pca_id);
  if (report.epoch > epoch_) {
    throw ValidationError("report names epoch " + std::to_string(report.epoch) +
                          " but the current epoch is " + std::to_string(epoch_));
  }
  std::set<std::string> seen;
  for (const auto& m : report.metrics) {
    if (!std::isfinite(m.value)) {
      throw ValidationError("metric '" + m.name + "' is not finite");
    }
    seen.insert(m.name);
  }
  for (const auto& decl : entry.manifest.metrics) {
    if (seen.count(decl.name) == 0) {
      throw ValidationError("report is missing metric '" + decl.name + "'");
    }
  }
  pending_.insert_or_assign(entry.id, PendingReport{report, now});
  entry.last_report_at = now;
  return StateReply{true, epoch_};
}

AckReply Controller::acknowledge(const std::string& pca_id, std::uint64_t epoch) {
  PcaEntry& entry = registry_.at(pca_id);
  if (epoch > epoch_) {
    throw ConflictError("cannot acknowledge future epoch " + std::to_string(epoch));
  }
  entry.acked_epoch = std::max(entry.acked_epoch.value_or(0), epoch);
  return AckReply{true};
}

ConfigView Controller::config_view(const std::string& pca_id) const {
  const PcaEntry& entry = registry_.at(pca_id);
  ConfigView view;
  view.epoch = epoch_;
  for (const auto& p : entry.manifest.parameters) {
    const ParameterSpec& spec = *registry_.space().find(p.name);
    const std::int64_t index = published_.genes.at(p.name);
    view.parameters.push_back(ParameterValue{p.name, grid_value(spec, index), p.changeability});
    auto prev = previous_.genes.find(p.name);
    const bool changed = prev == previous_.genes.end() || prev->second != index;
    if (changed && p.changeability == Changeability::kOffline) view.requires_restart = true;
  }
  return view;
}

bool Controller::ready() const {
  return registry_.size() >= static_cast<std::size_t>(config_.min_pcas) &&
         registry_.has_tuning_metric() && !registry_.space().empty();
}

CollectResult Controller::collect_cycle(TimePoint now) {
  CollectResult result;
  for (const auto& entry : registry_.entries()) {
    auto it = pending_.find(entry.id);
    if (it == pending_.end() || now - it->second.received > config_.report_timeout) {
      result.missing.push_back(entry.id);
    }
  }
  if (!result.missing.empty()) {
    pending_.clear();
    result.kind = CollectResult::Kind::kDiscarded;
    return result;
  }

  SystemState state;
  state.config = published_;
  state.timestamp = now;
  bool coherent = true;
  for (const auto& entry : registry_.entries()) {
    const StateReport& report = pending_.at(entry.id).report;
    for (const auto& decl : entry.manifest.metrics) {
      auto it = std::find_if(report.metrics.begin(), report.metrics.end(),
                             [&](const MetricValue& m) { return m.name == decl.name; });
      MetricSample sample{decl.name, it->value, decl.directive, {}};
      if (decl.unit) sample.labels.emplace("unit", *decl.unit);
      state.metrics.push_back(std::move(sample));
    }
    if (entry.owns_parameters() &&
        (report.epoch != epoch_ || !entry.acked_epoch || *entry.acked_epoch < epoch_)) {
      coherent = false;
    }
  }
  pending_.clear();
  result.kind = coherent ? CollectResult::Kind::kComplete : CollectResult::Kind::kStale;
  result.state = std::move(state);
  return result;
}

Configuration Controller::validate(const Configuration& proposal) const {
  Configuration out;
  out.epoch = proposal.epoch;
  for (const auto& spec : registry_.space().params()) {
    auto it = proposal.genes.find(spec.name);
    std::int64_t index;
    if (it != proposal.genes.end()) {
      index = std::clamp(it->second, std::int64_t{0}, n_values(spec) - 1);
    } else {
      auto cur = published_.genes.find(spec.name);
      index = cur != published_.genes.end() ? cur->second : 0;
    }
    out.genes.emplace(spec.name, index);
  }
  return out;
}

std::uint64_t Controller::publish(Configuration config) {
  previous_.genes = published_.genes;
  ++epoch_;
  config.epoch = epoch_;
  published_ = std::move(config);
  window_.clear();
  settle_remaining_ = config_.settle_cycles;
  stats_.epoch = epoch_;
  return epoch_;
}

CycleResult Controller::tick(TimePoint now) {
  CycleResult result;
  if (!ready()) {
    result.outcome = CycleOutcome::kIdle;
    return result;
  }
  CollectResult collected = collect_cycle(now);
  if (collected.kind == CollectResult::Kind::kDiscarded) {
    ++stats_.discarded_cycles;
    result.outcome = CycleOutcome::kDiscarded;
    result.missing = std::move(collected.missing);
    return result;
  }
  if (collected.kind == CollectResult::Kind::kStale) {
    ++stats_.stale_cycles;
    result.outcome = CycleOutcome::kStale;
    return result;
  }
  if (settle_remaining_ > 0) {
    --settle_remaining_;
    result.outcome = CycleOutcome::kSettling;
    return result;
  }
  window_.push_back(std::move(*collected.state));
  if (window_.size() < static_cast<std::size_t>(config_.snapshot_window)) {
    result.outcome = CycleOutcome::kCollected;
    return result;
  }
  const Snapshot snapshot = make_snapshot(window_);
  window_.clear();
  result.step = complete_step(snapshot);
  result.outcome = CycleOutcome::kStep;
  return result;
}

std::int64_t Controller::complete_step(const Snapshot& snapshot) {
  evaluator_.observe(snapshot);
  evaluator_.rescore_if_stale(history_);
  ScoreBreakdown breakdown = evaluator_.score(snapshot);

  std::size_t touched;
  auto found = record_by_config_.find(snapshot.config.genes);
  if (found != record_by_config_.end()) {
    touched = found->second;
    StateRecord& r = history_[touched];
    r.reevaluations.push_back(snapshot);
    r.eval_count = 1 + static_cast<int>(r.reevaluations.size());
    r.score_sum += breakdown.total;
    r.score = r.score_sum / r.eval_count;
    r.updated_step = steps_completed_;
  } else {
    StateRecord r;
    r.snapshot = snapshot;
    r.score = breakdown.total;
    r.score_sum = breakdown.total;
    r.step_index = steps_completed_;
    r.updated_step = steps_completed_;
    touched = history_.size();
    record_by_config_.emplace(snapshot.config.genes, touched);
    history_.push_back(std::move(r));
  }
  if (store_) store_->append(history_[touched]);
  ++steps_completed_;

  const SearchSpace& space = registry_.space();
  const Telemetry telemetry{steps_completed_, static_cast<std::int64_t>(history_.size()),
                            ln_volume_, static_cast<std::int64_t>(space.dims())};
  const double a = alpha(telemetry, schedule_.horizon);
  const double h = entropy(a, schedule_);
  Proposal proposal = propose(history_, space, h, tuner_, rng_);
  publish(validate(proposal.config));

  stats_.step_index = steps_completed_;
  stats_.alpha = a;
  stats_.entropy = h;
  stats_.phase = is_exploitation(h, entropy_constants_.inflection) ? Phase::kExploitation
                                                                    : Phase::kExploration;
  stats_.last_score = breakdown.total;
  stats_.last_breakdown = std::move(breakdown);
  stats_.proposal_kind = proposal.kind;
  stats_.proposal_parents = std::move(proposal.parents);
  stats_.history_size = history_.size();
  refresh_best();
  if (step_callback_) step_callback_(stats_);
  return history_[touched].step_index;
}

void Controller::refresh_best() {
  const StateRecord* best = nullptr;
  for (const auto& r : history_) {
    if (best == nullptr || r.score > best->score ||
        (r.score == best->score && r.step_index > best->step_index)) {
      best = &r;
    }
  }
  if (best != nullptr) {
    stats_.best_score = best->score;
    stats_.best_config = best->snapshot.config;
  } else {
    stats_.best_score.reset();
    stats_.best_config.reset();
  }
}

}  // namespace crosstune
