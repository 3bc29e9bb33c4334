// Drives the crosstune executable as a subprocess.

#include <arpa/inet.h>
#include <gtest/gtest.h>
#include <httplib.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <thread>

#include "crosstune/json_codec.hpp"

extern char** environ;

namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

struct RunResult {
  int code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(CROSSTUNE_CLI) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) r.output += buf.data();
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir =
      fs::temp_directory_path() / ("crosstune_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

class ServeProcess {
 public:
  explicit ServeProcess(std::vector<std::string> args) {
    std::vector<std::string> argv{CROSSTUNE_CLI, "serve"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::vector<char*> raw;
    for (auto& a : argv) raw.push_back(a.data());
    raw.push_back(nullptr);
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 2, "/dev/null", O_WRONLY, 0);
    ::posix_spawn(&pid_, CROSSTUNE_CLI, &actions, nullptr, raw.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
  }
  ~ServeProcess() {
    if (pid_ > 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
    }
  }

  int signal_and_wait(int sig) {
    ::kill(pid_, sig);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  int wait() {
    int status = 0;
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

 private:
  pid_t pid_ = -1;
};

// Polls GET /v1/stats until it answers or the deadline passes.
std::optional<crosstune::Json> stats_within(int port, std::chrono::milliseconds budget) {
  const auto deadline = std::chrono::steady_clock::now() + budget;
  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(0, 100'000);
  while (std::chrono::steady_clock::now() < deadline) {
    if (auto res = client.Get("/v1/stats"); res && res->status == 200) {
      return crosstune::parse_json(res->body);
    }
    std::this_thread::sleep_for(20ms);
  }
  return std::nullopt;
}

std::string fast_config(const fs::path& dir) {
  const auto path = dir / "config.json";
  write_file(path, R"({"loop": {"cycle_time_ms": 20, "snapshot_window": 1, "settle_cycles": 0, "report_timeout_ms": 2000}})");
  return path.string();
}

}  // namespace

TEST(Cli, HelpListsEverySubcommand) {
  const auto r = run_cli("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* s : {"serve", "bench", "report"}) EXPECT_NE(r.output.find(s), std::string::npos);
  const auto bench = run_cli("bench --help");
  for (const char* f : {"--params", "--metrics", "--values", "--reps", "--seed", "--out",
                        "--full-paper-grid", "--jobs", "--resume"}) {
    EXPECT_NE(bench.output.find(f), std::string::npos) << f;
  }
  EXPECT_EQ(run_cli("frobnicate").code, 2);
}

TEST(Cli, BadConfigExitsTwoNamingTheField) {
  const auto dir = scratch("badconfig");
  write_file(dir / "bad.json", R"({"loop": {"snapshot_window": 0}})");
  auto r = run_cli("serve --config " + (dir / "bad.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("loop.snapshot_window"), std::string::npos) << r.output;
  write_file(dir / "broken.json", R"({"loop": )");
  EXPECT_EQ(run_cli("serve --config " + (dir / "broken.json").string()).code, 2);
  EXPECT_EQ(run_cli("serve --config " + (dir / "missing.json").string()).code, 2);
}

TEST(Cli, ServeAnswersStatsAndStopsOnSigterm) {
  const auto dir = scratch("serve");
  const int port = free_port();
  ServeProcess serve({"--config", fast_config(dir), "--bind", "127.0.0.1:" + std::to_string(port)});
  const auto stats = stats_within(port, 1000ms);
  ASSERT_TRUE(stats.has_value());
  EXPECT_EQ(stats->at("step_index"), 0);
  EXPECT_EQ(serve.signal_and_wait(SIGTERM), 0);
}

TEST(Cli, BusyPortExitsThree) {
  const auto dir = scratch("busy");
  const int port = free_port();
  const std::string bind = "127.0.0.1:" + std::to_string(port);
  ServeProcess first({"--config", fast_config(dir), "--bind", bind});
  ASSERT_TRUE(stats_within(port, 2000ms).has_value());
  ServeProcess second({"--config", fast_config(dir), "--bind", bind});
  EXPECT_EQ(second.wait(), 3);
  EXPECT_EQ(first.signal_and_wait(SIGINT), 0);
}

TEST(Cli, RestartResumesFromPersistedHistory) {
  const auto dir = scratch("restart");
  const auto history = (dir / "history.jsonl").string();
  const std::string manifest =
      R"({"layer":"app","metrics":[{"direction":"maximize","name":"rate"}],"name":"agent",)"
      R"("parameters":[{"changeability":"online","initial":1.0,"max":9.0,"min":0.0,"name":"k","step":1.0}]})";
  std::int64_t steps_before = 0;
  {
    const int port = free_port();
    ServeProcess serve({"--config", fast_config(dir), "--bind", "127.0.0.1:" + std::to_string(port),
                        "--history", history});
    ASSERT_TRUE(stats_within(port, 2000ms).has_value());
    httplib::Client client("127.0.0.1", port);
    auto reg = client.Post("/v1/pcas", manifest, "application/json");
    ASSERT_EQ(reg->status, 200);
    const std::string id = crosstune::parse_json(reg->body).at("pca_id");
    std::uint64_t epoch = 0;
    while (steps_before < 5) {
      auto cfg = client.Get("/v1/pcas/" + id + "/config?wait_epoch=" + std::to_string(epoch) +
                            "&timeout_ms=100");
      ASSERT_EQ(cfg->status, 200);
      const auto view = crosstune::parse_json(cfg->body);
      epoch = view.at("epoch");
      const double k = view.at("parameters")[0].at("value");
      client.Post("/v1/pcas/" + id + "/ack", R"({"epoch":)" + std::to_string(epoch) + "}",
                  "application/json");
      const std::string report = R"({"epoch":)" + std::to_string(epoch) +
                                 R"(,"metrics":[{"name":"rate","value":)" + std::to_string(k) +
                                 R"(}],"timestamp":"2026-01-01T00:00:00Z"})";
      client.Post("/v1/pcas/" + id + "/state", report, "application/json");
      steps_before = crosstune::parse_json(client.Get("/v1/stats")->body).at("step_index");
    }
    // Abrupt termination: only what reached the history file survives.
    EXPECT_EQ(serve.signal_and_wait(SIGKILL), -1);
  }
  const int port = free_port();
  ServeProcess serve({"--config", fast_config(dir), "--bind", "127.0.0.1:" + std::to_string(port),
                      "--history", history});
  const auto stats = stats_within(port, 2000ms);
  ASSERT_TRUE(stats.has_value());
  EXPECT_GE(stats->at("step_index").get<std::int64_t>(), steps_before);
  EXPECT_GE(stats->at("history_size").get<std::int64_t>(), 1);
  EXPECT_EQ(serve.signal_and_wait(SIGTERM), 0);
}

TEST(Cli, BenchIsDeterministicAndPrintsSummary) {
  const auto dir = scratch("bench");
  const std::string args = "bench --params 2,3 --metrics 2 --values 5 --reps 2 --seed 4 --cap 500 --out ";
  const auto a = run_cli(args + (dir / "a.csv").string());
  const auto b = run_cli(args + (dir / "b.csv").string() + " --jobs 1");
  ASSERT_EQ(a.code, 0) << a.output;
  ASSERT_EQ(b.code, 0) << b.output;
  EXPECT_NE(a.output.find("fraction within 1000 steps"), std::string::npos);
  const auto text = slurp(dir / "a.csv");
  EXPECT_EQ(text, slurp(dir / "b.csv"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_EQ(text.rfind("complexity,d,m,v,rep,steps,capped\n", 0), 0u);

  // Resume from a truncated file reproduces the same bytes.
  const auto cut = text.find('\n', text.find('\n', text.find('\n') + 1) + 1);
  write_file(dir / "c.csv", text.substr(0, cut + 1));
  ASSERT_EQ(run_cli(args + (dir / "c.csv").string() + " --resume").code, 0);
  EXPECT_EQ(slurp(dir / "c.csv"), text);
}

TEST(Cli, BenchUnwritableOutputExitsThree) {
  EXPECT_EQ(run_cli("bench --params 2 --metrics 2 --values 5 --reps 1 --out /nonexistent/dir/x.csv")
                .code,
            3);
  EXPECT_EQ(run_cli("bench --params 1 --metrics 2 --values 5 --out /tmp/x.csv").code, 2);
}

TEST(Cli, ReportHandlesEmptyAndMalformedInputs) {
  const auto dir = scratch("report");
  write_file(dir / "empty.jsonl", "");
  auto r = run_cli("report --history " + (dir / "empty.jsonl").string() + " --out " +
                   (dir / "out").string());
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir / "out" / "timeseries.csv"));
  write_file(dir / "bad.jsonl", "{not json}\n{\"also\": \"bad\"}\n");
  EXPECT_EQ(run_cli("report --history " + (dir / "bad.jsonl").string() + " --out " +
                    (dir / "out2").string())
                .code,
            2);
  write_file(dir / "bad.csv", "nope\n");
  EXPECT_EQ(run_cli("report --sweep " + (dir / "bad.csv").string() + " --out " +
                    (dir / "out3").string())
                .code,
            2);
}
