// crosstune: run the control service, benchmark sweeps, and reports.
//
// Exit codes: 0 ok, 2 usage/config/input error, 3 environment or I/O error.

#include <omp.h>

#include <CLI11.hpp>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "crosstune/config_file.hpp"
#include "crosstune/history_store.hpp"
#include "crosstune/http_server.hpp"
#include "crosstune/report.hpp"
#include "crosstune/service.hpp"
#include "crosstune/sweep.hpp"

namespace {

using namespace crosstune;

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kEnvironment = 3;

struct ServeArgs {
  std::string config;
  std::string bind;
  std::string history;
};

int serve(const ServeArgs& args) {
  CliConfig config;
  try {
    config = load_cli_config(args.config);
    if (!args.bind.empty()) {
      parse_bind_address(args.bind);
      config.bind = args.bind;
    }
    if (!args.history.empty()) config.service.loop.history_path = args.history;
    validate_loop_config(config.service.loop);
  } catch (const ValidationError& e) {
    std::cerr << "crosstune serve: " << e.what() << '\n';
    return kUsage;
  }

  // Signals are consumed synchronously below; every thread inherits the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const auto [host, port] = parse_bind_address(config.bind);
  std::unique_ptr<HistoryStore> store;
  try {
    if (!config.service.loop.history_path.empty()) {
      store = std::make_unique<JsonlHistoryStore>(config.service.loop.history_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "crosstune serve: " << e.what() << '\n';
    return kEnvironment;
  }

  ControlService service(config.service, std::move(store));
  try {
    service.start();
  } catch (const ValidationError& e) {
    std::cerr << "crosstune serve: history is malformed: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "crosstune serve: " << e.what() << '\n';
    return kEnvironment;
  }

  HttpOptions http;
  http.host = host;
  http.port = port;
  http.default_poll_timeout = config.poll_timeout;
  HttpServer server(service, http);
  try {
    const int bound = server.start();
    std::cerr << "crosstune serve: listening on " << host << ':' << bound << std::endl;
  } catch (const BindError& e) {
    std::cerr << "crosstune serve: " << e.what() << '\n';
    service.stop();
    return kEnvironment;
  }

  int code = kOk;
  for (;;) {
    timespec poll{0, 200'000'000};
    const int sig = sigtimedwait(&signals, nullptr, &poll);
    if (sig == SIGINT || sig == SIGTERM) {
      std::cerr << "crosstune serve: shutting down\n";
      break;
    }
    if (!service.running()) {
      const auto failure = service.state()->failure;
      std::cerr << "crosstune serve: control loop stopped: " << failure.value_or("unknown") << '\n';
      code = kEnvironment;
      break;
    }
  }
  server.stop();
  service.stop();
  return code;
}

struct BenchArgs {
  std::vector<int> params{5, 10};
  std::vector<int> metrics{5, 10};
  std::vector<int> values{10, 100};
  int reps = 100;
  std::uint64_t seed = 1;
  std::string out;
  bool full_grid = false;
  int jobs = 0;
  bool resume = false;
  int cap = 5000;
  double target = 0.95;
};

int bench(const BenchArgs& args) {
  SweepSpec spec;
  if (args.full_grid) {
    spec = full_paper_grid(args.seed);
  } else {
    spec.d_list = args.params;
    spec.m_list = args.metrics;
    spec.v_list = args.values;
    spec.reps = args.reps;
    spec.seed0 = args.seed;
  }
  spec.options.cap = args.cap;
  spec.options.target_frac = args.target;
  if (spec.reps < 1 || spec.trial_count() == 0) {
    std::cerr << "crosstune bench: the grid is empty\n";
    return kUsage;
  }
  for (int d : spec.d_list) {
    if (d < 2) return std::cerr << "crosstune bench: --params values must be >= 2\n", kUsage;
  }
  for (int m : spec.m_list) {
    if (m < 1) return std::cerr << "crosstune bench: --metrics values must be >= 1\n", kUsage;
  }
  for (int v : spec.v_list) {
    if (v < 2) return std::cerr << "crosstune bench: --values values must be >= 2\n", kUsage;
  }
  if (args.jobs > 0) omp_set_num_threads(args.jobs);

  std::vector<SweepRow> done;
  if (args.resume && std::filesystem::exists(args.out)) {
    try {
      done = read_sweep_csv(args.out);
    } catch (const ValidationError& e) {
      std::cerr << "crosstune bench: cannot resume: " << e.what() << '\n';
      return kUsage;
    }
    if (done.size() > spec.trial_count()) {
      std::cerr << "crosstune bench: cannot resume: file has more rows than the grid\n";
      return kUsage;
    }
  }

  std::ofstream out(args.out, std::ios::trunc);
  if (!out) {
    std::cerr << "crosstune bench: cannot write '" << args.out << "'\n";
    return kEnvironment;
  }
  out << kSweepCsvHeader << '\n';
  for (const auto& r : done) out << to_csv(r) << '\n';
  out.flush();

  std::vector<SweepRow> rows = done;
  bool failed = false;
  run_sweep(
      spec,
      [&](const SweepRow& row) {
        rows.push_back(row);
        out << to_csv(row) << '\n';
        out.flush();
        if (!out) failed = true;
      },
      done.size());
  if (failed) {
    std::cerr << "crosstune bench: write to '" << args.out << "' failed\n";
    return kEnvironment;
  }

  const SweepSummary s = summarize(rows);
  std::printf("trials: %zu\n", s.trials);
  std::printf("fraction within 1000 steps: %.4f (reference figure: 0.915)\n", s.within_1000);
  std::printf("fraction capped at %d steps: %.4f\n", spec.options.cap, s.capped);
  return kOk;
}

struct ReportArgs {
  std::string history;
  std::string sweep;
  std::string out;
  int group = 25;
};

int report(const ReportArgs& args) {
  try {
    std::vector<std::filesystem::path> written;
    if (!args.history.empty()) {
      if (!std::filesystem::exists(args.history)) {
        throw ValidationError("history '" + args.history + "' does not exist");
      }
      written = report_history(replay_history(read_lines(args.history)), args.out, args.group);
    } else {
      written = report_sweep(read_sweep_csv(args.sweep), args.out);
    }
    for (const auto& p : written) std::cout << p.string() << '\n';
    return kOk;
  } catch (const ValidationError& e) {
    std::cerr << "crosstune report: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "crosstune report: " << e.what() << '\n';
    return kEnvironment;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crosstune: cross-layer configuration tuner"};
  app.require_subcommand(1);

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the control loop and protocol server");
  serve_cmd->add_option("--config", serve_args.config, "JSON configuration file")->required();
  serve_cmd->add_option("--bind", serve_args.bind, "host:port, overrides server.bind");
  serve_cmd->add_option("--history", serve_args.history, "History file, overrides loop.history_path");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Run a synthetic benchmark sweep");
  bench_cmd->add_option("--params", bench_args.params, "Parameter counts")->delimiter(',');
  bench_cmd->add_option("--metrics", bench_args.metrics, "Metric counts")->delimiter(',');
  bench_cmd->add_option("--values", bench_args.values, "Values per parameter")->delimiter(',');
  bench_cmd->add_option("--reps", bench_args.reps, "Repetitions per cell");
  bench_cmd->add_option("--seed", bench_args.seed, "Seed of trial 0");
  bench_cmd->add_option("--out", bench_args.out, "Output CSV")->required();
  bench_cmd->add_flag("--full-paper-grid", bench_args.full_grid,
                      "Use the 5x5x5 grid with 1000 repetitions");
  bench_cmd->add_option("--jobs", bench_args.jobs, "Worker threads (default: all cores)");
  bench_cmd->add_flag("--resume", bench_args.resume, "Continue an interrupted sweep");
  bench_cmd->add_option("--cap", bench_args.cap, "Step cap per trial")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--target", bench_args.target, "Target fraction of the optimum")
      ->check(CLI::Range(0.0, 1.0));

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Render CSV and SVG reports");
  auto* hist = report_cmd->add_option("--history", report_args.history, "History JSONL");
  auto* sweep = report_cmd->add_option("--sweep", report_args.sweep, "Sweep CSV");
  hist->excludes(sweep);
  report_cmd->add_option("--out", report_args.out, "Output directory")->required();
  report_cmd->add_option("--group", report_args.group, "Steps per box")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
    if (report_cmd->parsed() && report_args.history.empty() && report_args.sweep.empty()) {
      throw CLI::RequiredError("--history or --sweep");
    }
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (serve_cmd->parsed()) return serve(serve_args);
  if (bench_cmd->parsed()) return bench(bench_args);
  return report(report_args);
}
