#include "crosstune/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace crosstune {

namespace fs = std::filesystem;

BoxStats box_stats(std::vector<double> values) {
  BoxStats b;
  b.n = values.size();
  if (values.empty()) return b;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  b.min = values.front();
  b.q1 = quantile(0.25);
  b.median = quantile(0.5);
  b.q3 = quantile(0.75);
  b.max = values.back();
  return b;
}

std::vector<TrajectoryPoint> best_trajectory(const std::vector<StateRecord>& history) {
  std::vector<const StateRecord*> ordered;
  for (const auto& r : history) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->step_index < b->step_index; });
  std::vector<TrajectoryPoint> out;
  for (const auto* r : ordered) {
    const double best = out.empty() ? r->score : std::max(out.back().best, r->score);
    out.push_back(TrajectoryPoint{r->step_index, r->score, best});
  }
  return out;
}

std::vector<CdfPoint> steps_cdf(const std::vector<SweepRow>& rows) {
  std::map<int, std::size_t> counts;
  for (const auto& r : rows) ++counts[r.steps];
  std::vector<CdfPoint> out;
  std::size_t seen = 0;
  for (const auto& [steps, count] : counts) {
    seen += count;
    out.push_back(CdfPoint{steps, static_cast<double>(seen) / static_cast<double>(rows.size())});
  }
  return out;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw PersistenceError("cannot write '" + path.string() + "'");
  out << std::setprecision(10);
  return out;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Minimal fixed-size SVG canvas with linear axes.
class Plot {
 public:
  Plot(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  void extend(double x, double y) {
    x0_ = std::min(x0_, x);
    x1_ = std::max(x1_, x);
    y0_ = std::min(y0_, y);
    y1_ = std::max(y1_, y);
  }

  void polyline(const std::vector<std::pair<double, double>>& points, const char* color) {
    if (points.empty()) return;
    std::ostringstream s;
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : points) s << px(x) << ',' << py(y) << ' ';
    s << "\"/>\n";
    body_ += s.str();
  }

  void box(double x, double half_width, const BoxStats& b) {
    if (b.n == 0) return;
    std::ostringstream s;
    const double left = px(x - half_width);
    const double right = px(x + half_width);
    const double mid = px(x);
    s << "<line x1=\"" << mid << "\" y1=\"" << py(b.min) << "\" x2=\"" << mid << "\" y2=\""
      << py(b.max) << "\" stroke=\"#444\"/>\n";
    s << "<rect x=\"" << left << "\" y=\"" << py(b.q3) << "\" width=\"" << right - left
      << "\" height=\"" << std::max(0.5, py(b.q1) - py(b.q3))
      << "\" fill=\"#9ecae1\" stroke=\"#444\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << py(b.median) << "\" x2=\"" << right << "\" y2=\""
      << py(b.median) << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    body_ += s.str();
  }

  // Must be called after all extend() calls and before drawing.
  void freeze() {
    if (x0_ > x1_) x0_ = 0, x1_ = 1;
    if (y0_ > y1_) y0_ = 0, y1_ = 1;
    if (x0_ == x1_) x0_ -= 0.5, x1_ += 0.5;
    if (y0_ == y1_) y0_ -= 0.5, y1_ += 0.5;
  }

  void write(const fs::path& path) const {
    std::ofstream out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(title_) << "</text>\n";
    out << "<line x1=\"" << kL << "\" y1=\"" << kH - kB << "\" x2=\"" << kW - kR << "\" y2=\""
        << kH - kB << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kL << "\" y1=\"" << kT << "\" x2=\"" << kL << "\" y2=\"" << kH - kB
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double fx = x0_ + (x1_ - x0_) * i / 4.0;
      const double fy = y0_ + (y1_ - y0_) * i / 4.0;
      out << "<text x=\"" << px(fx) << "\" y=\"" << kH - kB + 16
          << "\" text-anchor=\"middle\">" << tick(fx) << "</text>\n";
      out << "<text x=\"" << kL - 6 << "\" y=\"" << py(fy) + 4 << "\" text-anchor=\"end\">"
          << tick(fy) << "</text>\n";
    }
    out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 8 << "\" text-anchor=\"middle\">"
        << escape(xlabel_) << "</text>\n";
    out << "<text transform=\"translate(14," << kH / 2
        << ") rotate(-90)\" text-anchor=\"middle\">" << escape(ylabel_) << "</text>\n";
    out << body_ << "</svg>\n";
  }

 private:
  static constexpr double kW = 720, kH = 420, kL = 70, kR = 20, kT = 35, kB = 45;

  double px(double x) const { return kL + (x - x0_) / (x1_ - x0_) * (kW - kL - kR); }
  double py(double y) const { return kH - kB - (y - y0_) / (y1_ - y0_) * (kH - kT - kB); }
  static std::string tick(double v) {
    std::ostringstream s;
    s << std::setprecision(4) << v;
    return s.str();
  }

  std::string title_, xlabel_, ylabel_, body_;
  double x0_ = INFINITY, x1_ = -INFINITY, y0_ = INFINITY, y1_ = -INFINITY;
};

std::string file_safe(const std::string& name) {
  std::string out;
  for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

void write_box_row(std::ostream& out, const BoxStats& b) {
  out << b.n << ',' << b.min << ',' << b.q1 << ',' << b.median << ',' << b.q3 << ',' << b.max;
}

}  // namespace

std::vector<fs::path> report_history(const std::vector<StateRecord>& history,
                                     const fs::path& out_dir, int group) {
  if (group < 1) throw ValidationError("box group size must be >= 1");
  fs::create_directories(out_dir);
  std::vector<fs::path> written;

  std::set<std::string> names;
  for (const auto& r : history) {
    for (const auto& [name, value] : r.snapshot.metrics) names.insert(name);
  }
  const auto trajectory = best_trajectory(history);
  std::vector<const StateRecord*> ordered;
  for (const auto& r : history) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->step_index < b->step_index; });

  {
    const fs::path path = out_dir / "timeseries.csv";
    auto out = open_out(path);
    out << "step,group,score";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (const auto* r : ordered) {
      out << r->step_index << ',' << r->step_index / group << ',' << r->score;
      for (const auto& n : names) {
        out << ',';
        if (auto it = r->snapshot.metrics.find(n); it != r->snapshot.metrics.end()) {
          out << it->second;
        }
      }
      out << '\n';
    }
    written.push_back(path);
  }

  std::map<std::string, std::map<std::int64_t, std::vector<double>>> grouped;
  for (const auto* r : ordered) {
    for (const auto& [name, value] : r->snapshot.metrics) {
      grouped[name][r->step_index / group].push_back(value);
    }
  }
  {
    const fs::path path = out_dir / "boxes.csv";
    auto out = open_out(path);
    out << "metric,group,first_step,last_step,n,min,q1,median,q3,max\n";
    for (const auto& [name, groups] : grouped) {
      for (const auto& [g, values] : groups) {
        out << name << ',' << g << ',' << g * group << ',' << (g + 1) * group - 1 << ',';
        write_box_row(out, box_stats(values));
        out << '\n';
      }
    }
    written.push_back(path);
  }

  {
    const fs::path path = out_dir / "best_score.csv";
    auto out = open_out(path);
    out << "step,score,best_score\n";
    for (const auto& p : trajectory) out << p.step << ',' << p.score << ',' << p.best << '\n';
    written.push_back(path);
  }

  {
    Plot plot("Best score by step", "step", "score");
    std::vector<std::pair<double, double>> scores, best;
    for (const auto& p : trajectory) {
      plot.extend(static_cast<double>(p.step), p.score);
      scores.emplace_back(static_cast<double>(p.step), p.score);
      best.emplace_back(static_cast<double>(p.step), p.best);
    }
    plot.freeze();
    plot.polyline(scores, "#bbbbbb");
    plot.polyline(best, "#1f77b4");
    const fs::path path = out_dir / "best_score.svg";
    plot.write(path);
    written.push_back(path);
  }

  for (const auto& [name, groups] : grouped) {
    Plot plot(name + " per " + std::to_string(group) + "-step group", "step group", name);
    std::vector<std::pair<std::int64_t, BoxStats>> boxes;
    for (const auto& [g, values] : groups) {
      boxes.emplace_back(g, box_stats(values));
      plot.extend(static_cast<double>(g) - 0.5, boxes.back().second.min);
      plot.extend(static_cast<double>(g) + 0.5, boxes.back().second.max);
    }
    plot.freeze();
    for (const auto& [g, b] : boxes) plot.box(static_cast<double>(g), 0.35, b);
    const fs::path path = out_dir / ("box_" + file_safe(name) + ".svg");
    plot.write(path);
    written.push_back(path);
  }
  return written;
}

std::vector<fs::path> report_sweep(const std::vector<SweepRow>& rows, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;

  struct CellKey {
    std::int64_t complexity;
    int d, m, v;
    auto operator<=>(const CellKey&) const = default;
  };
  std::map<CellKey, std::vector<const SweepRow*>> cells;
  for (const auto& r : rows) cells[{r.complexity, r.d, r.m, r.v}].push_back(&r);

  {
    const fs::path path = out_dir / "steps_vs_complexity.csv";
    auto out = open_out(path);
    out << "complexity,d,m,v,n,min,q1,median,q3,max,capped_fraction\n";
    for (const auto& [key, members] : cells) {
      std::vector<double> steps;
      std::size_t capped = 0;
      for (const auto* r : members) {
        steps.push_back(r->steps);
        capped += r->capped ? 1 : 0;
      }
      out << key.complexity << ',' << key.d << ',' << key.m << ',' << key.v << ',';
      write_box_row(out, box_stats(steps));
      out << ',' << static_cast<double>(capped) / static_cast<double>(members.size()) << '\n';
    }
    written.push_back(path);
  }

  const auto cdf = steps_cdf(rows);
  {
    const fs::path path = out_dir / "steps_cdf.csv";
    auto out = open_out(path);
    out << "steps,fraction\n";
    for (const auto& p : cdf) out << p.steps << ',' << p.fraction << '\n';
    written.push_back(path);
  }

  {
    Plot plot("Steps to target by cell (ordered by complexity)", "cell", "steps");
    std::vector<BoxStats> boxes;
    for (const auto& [key, members] : cells) {
      std::vector<double> steps;
      for (const auto* r : members) steps.push_back(r->steps);
      boxes.push_back(box_stats(steps));
      const double x = static_cast<double>(boxes.size() - 1);
      plot.extend(x - 0.5, boxes.back().min);
      plot.extend(x + 0.5, boxes.back().max);
    }
    plot.freeze();
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      plot.box(static_cast<double>(i), 0.35, boxes[i]);
    }
    const fs::path path = out_dir / "steps_vs_complexity.svg";
    plot.write(path);
    written.push_back(path);
  }

  {
    Plot plot("Cumulative distribution of steps to target", "steps", "fraction of trials");
    std::vector<std::pair<double, double>> points;
    for (const auto& p : cdf) {
      points.emplace_back(p.steps, p.fraction);
      plot.extend(p.steps, p.fraction);
    }
    plot.extend(0.0, 0.0);
    plot.freeze();
    plot.polyline(points, "#1f77b4");
    const fs::path path = out_dir / "steps_cdf.svg";
    plot.write(path);
    written.push_back(path);
  }
  return written;
}

}  // namespace crosstune
