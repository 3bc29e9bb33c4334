#include <gtest/gtest.h>

#include <thread>

#include "../support/three_agents.hpp"
#include "crosstune/service.hpp"

using namespace crosstune;
using namespace std::chrono_literals;

namespace {

ServiceOptions options(std::chrono::milliseconds cycle) {
  ServiceOptions o;
  o.loop.cycle_time = cycle;
  o.loop.report_timeout = 10 * cycle;
  o.loop.snapshot_window = 1;
  o.loop.settle_cycles = 0;
  return o;
}

PcaManifest knob_agent() {
  PcaManifest m{"knob", "app", {}, {}};
  m.metrics.push_back(MetricDecl{"gain", {}, {}, false});
  m.parameters.push_back(ParameterDecl{"k", 0, 20, 1, Changeability::kOnline, 0.0});
  return m;
}

// Polls, acks and reports gain = k until `stop` is set.
void drive_knob(ControlService& service, const std::string& id, std::atomic<bool>& stop) {
  while (!stop) {
    try {
      const ConfigView v = service.config(id);
      service.acknowledge(id, v.epoch);
      service.submit_report(StateReport{id, v.epoch, {{"gain", v.parameters[0].value}},
                                        "2026-01-01T00:00:00Z"});
    } catch (const std::exception&) {
      return;
    }
    std::this_thread::sleep_for(2ms);
  }
}

template <class Pred>
bool eventually(Pred pred, std::chrono::milliseconds limit = 10s) {
  const auto deadline = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(2ms);
  }
  return pred();
}

}  // namespace

TEST(Cadence, ManualClockTicksExactlyOneCycleApart) {
  auto clock = std::make_shared<ManualClock>();
  ControlService service(options(1000ms), nullptr, clock);
  std::mutex m;
  std::vector<TimePoint> ticks;
  service.on_tick([&](TimePoint t, const CycleResult&) {
    std::lock_guard lock(m);
    ticks.push_back(t);
  });
  const TimePoint start = clock->now();
  service.start();
  ASSERT_TRUE(eventually([&] {
    std::lock_guard lock(m);
    return ticks.size() >= 20;
  }));
  service.stop();
  ASSERT_GE(ticks.front() - start, 1000ms);
  for (std::size_t i = 1; i < ticks.size(); ++i) EXPECT_EQ(ticks[i] - ticks[i - 1], 1000ms);
}

TEST(Cadence, RealClockNeverTicksEarly) {
  ControlService service(options(40ms), nullptr);
  std::mutex m;
  std::vector<TimePoint> ticks;
  service.on_tick([&](TimePoint t, const CycleResult&) {
    std::lock_guard lock(m);
    ticks.push_back(t);
  });
  service.start();
  // Messages arriving mid-cycle must not pull the next tick forward.
  const auto id = service.register_pca(knob_agent()).pca_id;
  std::atomic<bool> stop{false};
  std::thread agent(drive_knob, std::ref(service), id, std::ref(stop));
  std::this_thread::sleep_for(450ms);
  stop = true;
  agent.join();
  service.stop();
  ASSERT_GE(ticks.size(), 3u);
  EXPECT_LE(ticks.size(), 12u);
  for (std::size_t i = 1; i < ticks.size(); ++i) EXPECT_GE(ticks[i] - ticks[i - 1], 40ms);
}

TEST(Service, MailboxRethrowsControllerErrors) {
  ControlService service(options(50ms), nullptr);
  service.start();
  const auto id = service.register_pca(knob_agent()).pca_id;
  EXPECT_THROW(service.register_pca(knob_agent()), ConflictError);
  EXPECT_THROW(service.submit_report(StateReport{id, 0, {}, "2026-01-01T00:00:00Z"}),
               ValidationError);
  EXPECT_THROW(service.acknowledge(id, 5), ConflictError);
  EXPECT_THROW(service.config("pca-77"), NotFoundError);
  service.stop();
  EXPECT_THROW(service.register_pca(knob_agent()), Error);
}

TEST(Service, LongPollTimesOutWithUnchangedEpoch) {
  ControlService service(options(50ms), nullptr);
  service.start();
  const auto id = service.register_pca(knob_agent()).pca_id;
  const auto t0 = std::chrono::steady_clock::now();
  const ConfigView v = service.config(id, 0, 150ms);
  EXPECT_GE(std::chrono::steady_clock::now() - t0, 140ms);
  EXPECT_EQ(v.epoch, 0u);
}

TEST(Service, LongPollWakesOnPublish) {
  ControlService service(options(10ms), nullptr);
  service.start();
  const auto id = service.register_pca(knob_agent()).pca_id;
  std::atomic<bool> stop{false};
  std::thread agent(drive_knob, std::ref(service), id, std::ref(stop));
  const ConfigView v = service.config(id, 0, 10s);
  EXPECT_GE(v.epoch, 1u);
  ASSERT_TRUE(eventually([&] { return service.stats().at("step_index").get<int>() >= 10; }));
  stop = true;
  agent.join();
  const auto state = service.state();
  EXPECT_EQ(state->history_lines.size(), state->stats.at("history_size").get<std::size_t>());
  const std::string tail = service.history_jsonl(5);
  std::size_t lines = 0;
  for (char c : tail) lines += c == '\n';
  std::size_t expected = 0;
  for (auto step : state->history_steps) expected += step >= 5;
  EXPECT_EQ(lines, expected);
}

TEST(Service, PersistenceFailureHaltsTheLoop) {
  auto store = std::make_unique<MemoryHistoryStore>();
  store->fail_next_append();
  ControlService service(options(5ms), std::move(store));
  service.start();
  const auto id = service.register_pca(knob_agent()).pca_id;
  std::atomic<bool> stop{false};
  std::thread agent(drive_knob, std::ref(service), id, std::ref(stop));
  ASSERT_TRUE(eventually([&] { return !service.running(); }));
  stop = true;
  agent.join();
  ASSERT_TRUE(service.state()->failure.has_value());
  EXPECT_NE(service.state()->failure->find("injected"), std::string::npos);
}

TEST(Service, StatsLogGetsOneLinePerActiveCycle) {
  const auto path = std::filesystem::temp_directory_path() /
                    ("crosstune_stats_" + std::to_string(::getpid()) + ".jsonl");
  std::filesystem::remove(path);
  auto o = options(5ms);
  o.stats_path = path.string();
  {
    ControlService service(o, nullptr);
    service.start();
    const auto id = service.register_pca(knob_agent()).pca_id;
    std::atomic<bool> stop{false};
    std::thread agent(drive_knob, std::ref(service), id, std::ref(stop));
    ASSERT_TRUE(eventually([&] { return service.stats().at("step_index").get<int>() >= 5; }));
    stop = true;
    agent.join();
  }
  const auto lines = read_lines(path);
  EXPECT_GE(lines.size(), 5u);
  for (const auto& l : lines) EXPECT_NO_THROW(parse_json(l).at("entropy"));
  std::filesystem::remove(path);
}
