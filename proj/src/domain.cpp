#include "crosstune/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crosstune {

std::string_view to_string(Changeability c) {
  return c == Changeability::kOnline ? "online" : "offline";
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::kMaximize:
      return "maximize";
    case Direction::kMinimize:
      return "minimize";
    case Direction::kAuxiliary:
      return "auxiliary";
  }
  return "auxiliary";
}

Changeability parse_changeability(std::string_view s) {
  if (s == "online") return Changeability::kOnline;
  if (s == "offline") return Changeability::kOffline;
  throw ValidationError("unknown changeability '" + std::string(s) + "'");
}

Direction parse_direction(std::string_view s) {
  if (s == "maximize") return Direction::kMaximize;
  if (s == "minimize") return Direction::kMinimize;
  if (s == "auxiliary") return Direction::kAuxiliary;
  throw ValidationError("unknown direction '" + std::string(s) + "'");
}

void validate_spec(const ParameterSpec& spec) {
  if (spec.name.empty()) {
    throw ValidationError("parameter name must not be empty");
  }
  if (!std::isfinite(spec.min) || !std::isfinite(spec.max) || !std::isfinite(spec.step)) {
    throw ValidationError("parameter '" + spec.name + "': bounds must be finite");
  }
  if (spec.step <= 0.0) {
    throw ValidationError("parameter '" + spec.name + "': step must be > 0");
  }
  if (spec.min > spec.max) {
    throw ValidationError("parameter '" + spec.name + "': min must be <= max");
  }
}

std::int64_t n_values(const ParameterSpec& spec) {
  const double ratio = (spec.max - spec.min) / spec.step;
  return static_cast<std::int64_t>(std::floor(ratio * (1.0 + 1e-12) + 1e-9)) + 1;
}

std::int64_t grid_index(const ParameterSpec& spec, double value) {
  const std::int64_t last = n_values(spec) - 1;
  if (std::isnan(value)) {
    return 0;
  }
  const double clamped = std::clamp(value, spec.min, spec.max);
  const double raw = std::floor((clamped - spec.min) / spec.step + 0.5);
  return std::clamp(static_cast<std::int64_t>(raw), std::int64_t{0}, last);
}

double grid_value(const ParameterSpec& spec, std::int64_t index) {
  if (index < 0 || index >= n_values(spec)) {
    throw std::out_of_range("grid index " + std::to_string(index) + " out of range for '" +
                            spec.name + "'");
  }
  return spec.min + static_cast<double>(index) * spec.step;
}

SearchSpace::SearchSpace(std::vector<ParameterSpec> params) {
  for (auto& p : params) {
    add(std::move(p));
  }
}

void SearchSpace::add(ParameterSpec spec) {
  validate_spec(spec);
  if (index_.count(spec.name) != 0) {
    throw ConflictError("parameter '" + spec.name + "' already registered");
  }
  index_.emplace(spec.name, params_.size());
  params_.push_back(std::move(spec));
}

const ParameterSpec* SearchSpace::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

std::optional<std::size_t> SearchSpace::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SearchVolume search_volume(const SearchSpace& space) {
  SearchVolume v;
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  for (const auto& p : space.params()) {
    const auto n = static_cast<std::uint64_t>(n_values(p));
    v.ln += std::log(static_cast<double>(n));
    if (v.saturated) continue;
    if (n != 0 && v.count > kMax / n) {
      v.count = kMax;
      v.saturated = true;
    } else {
      v.count *= n;
    }
  }
  return v;
}

void check_configuration(const Configuration& config, const SearchSpace& space) {
  for (const auto& [name, index] : config.genes) {
    const ParameterSpec* spec = space.find(name);
    if (spec == nullptr) {
      throw ValidationError("unknown gene '" + name + "'");
    }
    if (index < 0 || index >= n_values(*spec)) {
      throw ValidationError("gene '" + name + "' out of range");
    }
  }
  if (config.genes.size() != space.dims()) {
    throw ValidationError("configuration is missing genes");
  }
}

std::vector<std::int64_t> to_genome(const Configuration& config, const SearchSpace& space) {
  std::vector<std::int64_t> genome(space.dims(), 0);
  const auto& params = space.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto it = config.genes.find(params[i].name);
    if (it != config.genes.end()) genome[i] = it->second;
  }
  return genome;
}

Configuration from_genome(const std::vector<std::int64_t>& genome, const SearchSpace& space,
                          std::uint64_t epoch) {
  Configuration config;
  config.epoch = epoch;
  const auto& params = space.params();
  for (std::size_t i = 0; i < params.size() && i < genome.size(); ++i) {
    config.genes.emplace(params[i].name, genome[i]);
  }
  return config;
}

void validate_directive(const TuningDirective& directive) {
  const auto finite_or_absent = [](const std::optional<double>& v) {
    return !v.has_value() || std::isfinite(*v);
  };
  if (!finite_or_absent(directive.lower_threshold) ||
      !finite_or_absent(directive.upper_threshold)) {
    throw ValidationError("thresholds must be finite");
  }
  if (directive.direction == Direction::kAuxiliary) {
    if (directive.lower_threshold || directive.upper_threshold) {
      throw ValidationError("auxiliary metrics carry no thresholds");
    }
    return;
  }
  if (!(directive.weight > 0.0) || !std::isfinite(directive.weight)) {
    throw ValidationError("weight must be > 0");
  }
  if (directive.lower_threshold && directive.upper_threshold &&
      *directive.lower_threshold > *directive.upper_threshold) {
    throw ValidationError("lower_threshold must be <= upper_threshold");
  }
}

}  // namespace crosstune
