#include "crosstune/config_file.hpp"

#include <fstream>
#include <sstream>

#include "crosstune/json_codec.hpp"

namespace crosstune {

namespace jf = json_field;

namespace {

const Json* section(const Json& root, const char* key) {
  if (!root.contains(key)) return nullptr;
  const Json& s = root.at(key);
  if (!s.is_object()) throw ValidationError(std::string("field '") + key + "': expected an object");
  return &s;
}

template <class T, class Read>
void maybe(const Json* s, const char* key, const char* context, T& out, Read read) {
  if (s != nullptr && s->contains(key)) out = static_cast<T>(read(*s, key, context));
}

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ValidationError("field '" + field + "': " + what);
}

}  // namespace

CliConfig cli_config_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("configuration must be a JSON object");
  CliConfig c;
  LoopConfig& loop = c.service.loop;
  TunerParams& tuner = c.service.tuner;
  EntropyConstants& ec = c.service.entropy;

  if (const Json* s = section(j, "loop")) {
    std::int64_t cycle = loop.cycle_time.count();
    maybe(s, "cycle_time_ms", "loop", cycle, jf::integer);
    check(cycle >= 0, "loop.cycle_time_ms", "must be >= 0");
    loop.cycle_time = std::chrono::milliseconds(cycle);
    std::int64_t timeout = cycle;
    maybe(s, "report_timeout_ms", "loop", timeout, jf::integer);
    check(timeout >= 0, "loop.report_timeout_ms", "must be >= 0");
    loop.report_timeout = std::chrono::milliseconds(timeout);
    maybe(s, "snapshot_window", "loop", loop.snapshot_window, jf::integer);
    check(loop.snapshot_window >= 1, "loop.snapshot_window", "must be >= 1");
    maybe(s, "settle_cycles", "loop", loop.settle_cycles, jf::integer);
    check(loop.settle_cycles >= 0, "loop.settle_cycles", "must be >= 0");
    maybe(s, "min_pcas", "loop", loop.min_pcas, jf::integer);
    check(loop.min_pcas >= 1, "loop.min_pcas", "must be >= 1");
    maybe(s, "seed", "loop", loop.seed, jf::unsigned_integer);
    maybe(s, "history_path", "loop", loop.history_path, jf::string);
  }

  if (const Json* s = section(j, "tuner")) {
    maybe(s, "c_re", "tuner", tuner.c_re, jf::number);
    maybe(s, "c_sm", "tuner", tuner.c_sm, jf::number);
    check(tuner.c_re >= 0 && tuner.c_sm >= 0 && tuner.c_re + tuner.c_sm <= 1, "tuner.c_re",
          "c_re and c_sm must be non-negative and sum to at most 1");
    maybe(s, "top_k", "tuner", tuner.top_k, jf::integer);
    check(tuner.top_k >= 1, "tuner.top_k", "must be >= 1");
    maybe(s, "batch", "tuner", tuner.batch, jf::integer);
    check(tuner.batch >= 1, "tuner.batch", "must be >= 1");
    maybe(s, "mut_frac", "tuner", tuner.mut_frac, jf::number);
    check(tuner.mut_frac >= 0 && tuner.mut_frac <= 1, "tuner.mut_frac", "must be in [0, 1]");
    maybe(s, "delta_frac", "tuner", tuner.delta_frac, jf::number);
    check(tuner.delta_frac >= 0 && tuner.delta_frac <= 1, "tuner.delta_frac", "must be in [0, 1]");
    maybe(s, "dedup_retries", "tuner", tuner.dedup_retries, jf::integer);
    check(tuner.dedup_retries >= 0, "tuner.dedup_retries", "must be >= 0");
  }

  if (const Json* s = section(j, "entropy")) {
    maybe(s, "horizon", "entropy", ec.horizon, jf::number);
    check(ec.horizon > 0, "entropy.horizon", "must be > 0");
    maybe(s, "softening", "entropy", ec.softening, jf::number);
    check(ec.softening > 0, "entropy.softening", "must be > 0");
    maybe(s, "inflection", "entropy", ec.inflection, jf::number);
    check(ec.inflection > 0 && ec.inflection < 1, "entropy.inflection", "must be in (0, 1)");
    if (s->contains("plateaus")) {
      const Json& p = s->at("plateaus");
      check(p.is_array() && p.size() >= 2, "entropy.plateaus", "expected an array of >= 2 numbers");
      ec.plateaus.clear();
      for (const auto& level : p) {
        check(level.is_number(), "entropy.plateaus", "expected numbers");
        ec.plateaus.push_back(level.get<double>());
      }
      check(ec.plateaus.front() <= 1.0 && ec.plateaus.back() > 0.0, "entropy.plateaus",
            "levels must lie in (0, 1]");
      for (std::size_t i = 1; i < ec.plateaus.size(); ++i) {
        check(ec.plateaus[i] < ec.plateaus[i - 1], "entropy.plateaus", "levels must descend");
      }
    }
  }

  if (const Json* s = section(j, "server")) {
    maybe(s, "bind", "server", c.bind, jf::string);
    try {
      parse_bind_address(c.bind);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("field 'server.bind': ") + e.what());
    }
    std::int64_t poll = c.poll_timeout.count();
    maybe(s, "poll_timeout_ms", "server", poll, jf::integer);
    check(poll >= 0, "server.poll_timeout_ms", "must be >= 0");
    c.poll_timeout = std::chrono::milliseconds(poll);
  }

  if (j.contains("stats_path")) c.service.stats_path = jf::string(j, "stats_path", "config");
  return c;
}

CliConfig load_cli_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return cli_config_from_json(parse_json(buffer.str()));
}

Json to_json(const CliConfig& c) {
  const auto& loop = c.service.loop;
  const auto& t = c.service.tuner;
  const auto& e = c.service.entropy;
  return Json{{"entropy",
               {{"horizon", e.horizon},
                {"inflection", e.inflection},
                {"plateaus", e.plateaus},
                {"softening", e.softening}}},
              {"loop",
               {{"cycle_time_ms", loop.cycle_time.count()},
                {"history_path", loop.history_path},
                {"min_pcas", loop.min_pcas},
                {"report_timeout_ms", loop.report_timeout.count()},
                {"seed", loop.seed},
                {"settle_cycles", loop.settle_cycles},
                {"snapshot_window", loop.snapshot_window}}},
              {"server", {{"bind", c.bind}, {"poll_timeout_ms", c.poll_timeout.count()}}},
              {"stats_path", c.service.stats_path},
              {"tuner",
               {{"batch", t.batch},
                {"c_re", t.c_re},
                {"c_sm", t.c_sm},
                {"dedup_retries", t.dedup_retries},
                {"delta_frac", t.delta_frac},
                {"mut_frac", t.mut_frac},
                {"top_k", t.top_k}}}};
}

}  // namespace crosstune
