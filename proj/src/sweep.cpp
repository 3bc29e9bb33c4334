#include "crosstune/sweep.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

namespace crosstune {

SweepSpec full_paper_grid(std::uint64_t seed0) {
  SweepSpec spec;
  spec.d_list = {5, 10, 20, 30, 40};
  spec.m_list = {5, 10, 20, 30, 40};
  spec.v_list = {10, 100, 2000, 5000, 10000};
  spec.reps = 1000;
  spec.seed0 = seed0;
  return spec;
}

TrialCoordinates trial_coordinates(const SweepSpec& spec, std::size_t index) {
  const auto reps = static_cast<std::size_t>(spec.reps);
  TrialCoordinates c{};
  c.rep = static_cast<int>(index % reps);
  index /= reps;
  c.v = spec.v_list[index % spec.v_list.size()];
  index /= spec.v_list.size();
  c.m = spec.m_list[index % spec.m_list.size()];
  index /= spec.m_list.size();
  c.d = spec.d_list[index % spec.d_list.size()];
  return c;
}

SweepRow run_sweep_trial(const SweepSpec& spec, std::size_t index) {
  const TrialCoordinates c = trial_coordinates(spec, index);
  const std::uint64_t seed = spec.seed0 + index;
  const SyntheticSystem system = gen_problem(c.d, c.m, c.v, seed);
  const TrialResult r = run_trial(system, seed, spec.options);
  SweepRow row;
  row.complexity = static_cast<std::int64_t>(c.d) * c.v * c.m;
  row.d = c.d;
  row.m = c.m;
  row.v = c.v;
  row.rep = c.rep;
  row.capped = r.capped();
  row.steps = r.capped() ? spec.options.cap : *r.steps_to_target;
  return row;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec,
                                const std::function<void(const SweepRow&)>& sink,
                                std::size_t start) {
  const std::size_t total = spec.trial_count();
  if (start >= total) return {};
  const std::size_t count = total - start;
  std::vector<SweepRow> rows(count);
  std::vector<char> done(count, 0);
  std::size_t next = 0;
  std::mutex emit;

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
    const auto k = static_cast<std::size_t>(i);
    SweepRow row = run_sweep_trial(spec, start + k);
    std::lock_guard lock(emit);
    rows[k] = row;
    done[k] = 1;
    while (next < count && done[next]) {
      if (sink) sink(rows[next]);
      ++next;
    }
  }
  return rows;
}

std::string to_csv(const SweepRow& row) {
  std::ostringstream out;
  out << row.complexity << ',' << row.d << ',' << row.m << ',' << row.v << ',' << row.rep << ','
      << row.steps << ',' << (row.capped ? 1 : 0);
  return out.str();
}

SweepRow parse_sweep_row(const std::string& line) {
  std::vector<std::int64_t> fields;
  std::stringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    try {
      std::size_t used = 0;
      fields.push_back(std::stoll(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw ValidationError("malformed sweep row: '" + line + "'");
    }
  }
  if (fields.size() != 7 || (fields[6] != 0 && fields[6] != 1)) {
    throw ValidationError("malformed sweep row: '" + line + "'");
  }
  SweepRow row;
  row.complexity = fields[0];
  row.d = static_cast<int>(fields[1]);
  row.m = static_cast<int>(fields[2]);
  row.v = static_cast<int>(fields[3]);
  row.rep = static_cast<int>(fields[4]);
  row.steps = static_cast<int>(fields[5]);
  row.capped = fields[6] == 1;
  return row;
}

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read sweep '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty() || lines.front() != kSweepCsvHeader) {
    throw ValidationError("sweep '" + path.string() + "' lacks the expected header");
  }
  std::vector<SweepRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      rows.push_back(parse_sweep_row(lines[i]));
    } catch (const ValidationError&) {
      if (i + 1 == lines.size()) break;
      throw;
    }
  }
  return rows;
}

SweepSummary summarize(const std::vector<SweepRow>& rows) {
  SweepSummary s;
  s.trials = rows.size();
  if (rows.empty()) return s;
  std::size_t within = 0;
  std::size_t capped = 0;
  for (const auto& r : rows) {
    if (!r.capped && r.steps <= 1000) ++within;
    if (r.capped) ++capped;
  }
  s.within_1000 = static_cast<double>(within) / static_cast<double>(rows.size());
  s.capped = static_cast<double>(capped) / static_cast<double>(rows.size());
  return s;
}

double median_steps(std::vector<SweepRow> rows) {
  if (rows.empty()) return 0.0;
  std::sort(rows.begin(), rows.end(),
            [](const SweepRow& a, const SweepRow& b) { return a.steps < b.steps; });
  const std::size_t n = rows.size();
  return n % 2 == 1 ? rows[n / 2].steps : 0.5 * (rows[n / 2 - 1].steps + rows[n / 2].steps);
}

}  // namespace crosstune
