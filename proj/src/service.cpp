#include "crosstune/service.hpp"

#include <algorithm>

namespace crosstune {

void ManualClock::wait_until(std::unique_lock<std::mutex>& lock, std::condition_variable& cv,
                             TimePoint deadline) {
  // Give other threads a moment to enqueue before time jumps forward.
  if (cv.wait_for(lock, std::chrono::milliseconds{1}) == std::cv_status::no_timeout) return;
  TimePoint current = now_.load();
  while (current < deadline && !now_.compare_exchange_weak(current, deadline)) {
  }
}

ControlService::ControlService(ServiceOptions options, std::unique_ptr<HistoryStore> store,
                               std::shared_ptr<Clock> clock)
    : options_(std::move(options)),
      clock_(std::move(clock)),
      controller_(options_.loop, options_.tuner, options_.entropy, std::move(store)),
      state_(std::make_shared<PublishedState>()) {}

ControlService::~ControlService() { stop(); }

void ControlService::start() {
  if (thread_.joinable()) return;
  controller_.restore();
  if (!options_.stats_path.empty()) {
    std::filesystem::path path(options_.stats_path);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    stats_log_.open(path, std::ios::app);
    if (!stats_log_) throw PersistenceError("cannot open stats log '" + options_.stats_path + "'");
  }
  republish(true);
  running_ = true;
  thread_ = std::thread([this] { run(); });
}

void ControlService::stop() {
  {
    std::lock_guard lock(mailbox_mutex_);
    stop_requested_ = true;
  }
  mailbox_cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  running_ = false;
  state_cv_.notify_all();
}

void ControlService::on_tick(std::function<void(TimePoint, const CycleResult&)> callback) {
  tick_callback_ = std::move(callback);
}

template <class Reply, class Msg>
Reply ControlService::send(Msg msg) {
  std::future<Reply> reply = msg.reply.get_future();
  {
    std::lock_guard lock(mailbox_mutex_);
    if (stop_requested_ || !running_) throw Error("control loop is not running");
    mailbox_.emplace_back(std::move(msg));
  }
  mailbox_cv_.notify_all();
  return reply.get();
}

RegisterResponse ControlService::register_pca(const PcaManifest& manifest) {
  return send<RegisterResponse>(RegisterMsg{manifest, {}});
}

StateReply ControlService::submit_report(const StateReport& report) {
  return send<StateReply>(ReportMsg{report, {}});
}

AckReply ControlService::acknowledge(const std::string& pca_id, std::uint64_t epoch) {
  return send<AckReply>(AckMsg{pca_id, epoch, {}});
}

std::shared_ptr<const PublishedState> ControlService::state() const {
  std::lock_guard lock(state_mutex_);
  return state_;
}

ConfigView ControlService::config(const std::string& pca_id,
                                  std::optional<std::uint64_t> wait_epoch,
                                  std::chrono::milliseconds timeout) const {
  std::unique_lock lock(state_mutex_);
  if (state_->views.count(pca_id) == 0) throw NotFoundError("unknown agent '" + pca_id + "'");
  if (wait_epoch) {
    state_cv_.wait_for(lock, timeout, [&] {
      return state_->epoch > *wait_epoch || !running_.load() || state_->failure.has_value();
    });
  }
  return state_->views.at(pca_id);
}

std::string ControlService::history_jsonl(std::int64_t from) const {
  const auto snapshot = state();
  std::string out;
  const auto begin = std::lower_bound(snapshot->history_steps.begin(),
                                      snapshot->history_steps.end(), from);
  for (auto i = static_cast<std::size_t>(begin - snapshot->history_steps.begin());
       i < snapshot->history_lines.size(); ++i) {
    out += snapshot->history_lines[i];
    out += '\n';
  }
  return out;
}

void ControlService::run() {
  std::unique_lock lock(mailbox_mutex_);
  TimePoint next = clock_->now() + options_.loop.cycle_time;
  for (;;) {
    while (!stop_requested_ && mailbox_.empty() && clock_->now() < next) {
      clock_->wait_until(lock, mailbox_cv_, next);
    }
    if (stop_requested_) break;
    if (!mailbox_.empty()) {
      Message message = std::move(mailbox_.front());
      mailbox_.pop_front();
      lock.unlock();
      handle(message);
      lock.lock();
      continue;
    }
    lock.unlock();
    const TimePoint now = clock_->now();
    CycleResult result;
    try {
      result = controller_.tick(now);
    } catch (const std::exception& e) {
      lock.lock();
      stop_requested_ = true;
      auto failed = std::make_shared<PublishedState>(*state());
      failed->failure = e.what();
      {
        std::lock_guard state_lock(state_mutex_);
        state_ = std::move(failed);
      }
      break;
    }
    if (result.outcome != CycleOutcome::kIdle) log_stats();
    republish(result.outcome == CycleOutcome::kStep);
    if (tick_callback_) tick_callback_(now, result);
    next = now + options_.loop.cycle_time;
    lock.lock();
  }
  // Anything still queued gets an error instead of a hang.
  for (auto& message : mailbox_) {
    std::visit(
        [](auto& m) {
          m.reply.set_exception(std::make_exception_ptr(Error("control loop stopped")));
        },
        message);
  }
  mailbox_.clear();
  running_ = false;
  state_cv_.notify_all();
}

void ControlService::handle(Message& message) {
  std::visit(
      [this](auto& m) {
        using T = std::decay_t<decltype(m)>;
        try {
          if constexpr (std::is_same_v<T, RegisterMsg>) {
            auto response = controller_.register_pca(m.manifest);
            republish(true);
            m.reply.set_value(std::move(response));
          } else if constexpr (std::is_same_v<T, ReportMsg>) {
            m.reply.set_value(controller_.submit_report(m.report, clock_->now()));
          } else {
            m.reply.set_value(controller_.acknowledge(m.pca_id, m.epoch));
          }
        } catch (...) {
          m.reply.set_exception(std::current_exception());
        }
      },
      message);
}

void ControlService::republish(bool history_changed) {
  auto next = std::make_shared<PublishedState>();
  const auto previous = state();
  next->epoch = controller_.epoch();
  for (const auto& entry : controller_.registry().entries()) {
    next->views.emplace(entry.id, controller_.config_view(entry.id));
  }
  next->stats = to_json(controller_.stats());
  if (history_changed) {
    for (const auto& record : controller_.history()) {
      next->history_steps.push_back(record.step_index);
      next->history_lines.push_back(history_line(record));
    }
  } else {
    next->history_steps = previous->history_steps;
    next->history_lines = previous->history_lines;
  }
  {
    std::lock_guard lock(state_mutex_);
    state_ = std::move(next);
  }
  state_cv_.notify_all();
}

void ControlService::log_stats() {
  if (!stats_log_.is_open()) return;
  stats_log_ << to_json(controller_.stats()).dump() << '\n';
  stats_log_.flush();
}

}  // namespace crosstune
