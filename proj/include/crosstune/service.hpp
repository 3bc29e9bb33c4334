#pragma once

// ControlService runs a Controller on a dedicated loop thread. Protocol
// handlers never touch the controller: mutations travel through a mailbox
// and are answered through futures, and reads come from an immutable
// PublishedState swapped in after every change.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "crosstune/controller.hpp"

namespace crosstune {

// Time source for the loop. wait_until blocks on `cv` until `deadline` or a
// notification, whichever is first.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimePoint now() const = 0;
  virtual void wait_until(std::unique_lock<std::mutex>& lock, std::condition_variable& cv,
                          TimePoint deadline) = 0;
};

class RealClock final : public Clock {
 public:
  TimePoint now() const override { return SteadyClock::now(); }
  void wait_until(std::unique_lock<std::mutex>& lock, std::condition_variable& cv,
                  TimePoint deadline) override {
    cv.wait_until(lock, deadline);
  }
};

// Deterministic clock: waiting jumps straight to the deadline.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(TimePoint start = TimePoint{}) : now_(start) {}
  TimePoint now() const override { return now_.load(); }
  void wait_until(std::unique_lock<std::mutex>& lock, std::condition_variable& cv,
                  TimePoint deadline) override;
  void advance(std::chrono::milliseconds by) { now_.store(now_.load() + by); }

 private:
  std::atomic<TimePoint> now_;
};

struct PublishedState {
  std::uint64_t epoch = 0;
  std::map<std::string, ConfigView> views;
  Json stats;
  std::vector<std::int64_t> history_steps;
  std::vector<std::string> history_lines;  // ordered by step_index
  std::optional<std::string> failure;
};

struct ServiceOptions {
  LoopConfig loop;
  TunerParams tuner;
  EntropyConstants entropy;
  // Per-tick RuntimeStats lines; empty disables the log.
  std::string stats_path;
};

class ControlService {
 public:
  ControlService(ServiceOptions options, std::unique_ptr<HistoryStore> store,
                 std::shared_ptr<Clock> clock = std::make_shared<RealClock>());
  ~ControlService();

  ControlService(const ControlService&) = delete;
  ControlService& operator=(const ControlService&) = delete;

  // Restores history and starts the loop thread.
  void start();
  // Stops the loop after the cycle in progress. Idempotent.
  void stop();
  bool running() const { return running_.load(); }

  // Each call blocks until the loop has processed the message and rethrows
  // the controller's exception, if any.
  RegisterResponse register_pca(const PcaManifest& manifest);
  StateReply submit_report(const StateReport& report);
  AckReply acknowledge(const std::string& pca_id, std::uint64_t epoch);

  // Returns once the published epoch exceeds `wait_epoch` or `timeout`
  // elapses. Throws NotFoundError for an unknown agent.
  ConfigView config(const std::string& pca_id, std::optional<std::uint64_t> wait_epoch = {},
                    std::chrono::milliseconds timeout = std::chrono::milliseconds{0}) const;

  std::shared_ptr<const PublishedState> state() const;
  Json stats() const { return state()->stats; }
  // JSON Lines of every record with step_index >= from.
  std::string history_jsonl(std::int64_t from = 0) const;

  // Invoked on the loop thread after each tick, with the tick's time.
  void on_tick(std::function<void(TimePoint, const CycleResult&)> callback);

 private:
  struct RegisterMsg {
    PcaManifest manifest;
    std::promise<RegisterResponse> reply;
  };
  struct ReportMsg {
    StateReport report;
    std::promise<StateReply> reply;
  };
  struct AckMsg {
    std::string pca_id;
    std::uint64_t epoch;
    std::promise<AckReply> reply;
  };
  using Message = std::variant<RegisterMsg, ReportMsg, AckMsg>;

  template <class Reply, class Msg>
  Reply send(Msg msg);

  void run();
  void handle(Message& message);
  void republish(bool history_changed);
  void log_stats();

  ServiceOptions options_;
  std::shared_ptr<Clock> clock_;
  Controller controller_;

  mutable std::mutex mailbox_mutex_;
  std::condition_variable mailbox_cv_;
  std::deque<Message> mailbox_;
  bool stop_requested_ = false;

  mutable std::mutex state_mutex_;
  mutable std::condition_variable state_cv_;
  std::shared_ptr<const PublishedState> state_;

  std::function<void(TimePoint, const CycleResult&)> tick_callback_;
  std::ofstream stats_log_;
  std::thread thread_;
  std::atomic<bool> running_{false};
};

}  // namespace crosstune
