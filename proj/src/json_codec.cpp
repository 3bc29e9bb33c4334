#include "crosstune/json_codec.hpp"

#include <cmath>

namespace crosstune {

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
}

namespace json_field {

namespace {

[[noreturn]] void fail(std::string_view context, const char* key, const char* expected) {
  std::string where(context);
  if (!where.empty()) where += '.';
  where += key;
  throw ValidationError("field '" + where + "': expected " + expected);
}

}  // namespace

const Json& require(const Json& j, const char* key, std::string_view context) {
  if (!j.is_object()) fail(context, key, "an enclosing object");
  auto it = j.find(key);
  if (it == j.end()) fail(context, key, "a value (missing)");
  return *it;
}

double number(const Json& j, const char* key, std::string_view context) {
  const Json& v = require(j, key, context);
  if (!v.is_number()) fail(context, key, "a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(context, key, "a finite number");
  return d;
}

std::int64_t integer(const Json& j, const char* key, std::string_view context) {
  const Json& v = require(j, key, context);
  if (!v.is_number_integer()) fail(context, key, "an integer");
  return v.get<std::int64_t>();
}

std::uint64_t unsigned_integer(const Json& j, const char* key, std::string_view context) {
  const Json& v = require(j, key, context);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                 v.get<std::int64_t>() < 0)) {
    fail(context, key, "a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string string(const Json& j, const char* key, std::string_view context) {
  const Json& v = require(j, key, context);
  if (!v.is_string()) fail(context, key, "a string");
  return v.get<std::string>();
}

bool boolean(const Json& j, const char* key, std::string_view context) {
  const Json& v = require(j, key, context);
  if (!v.is_boolean()) fail(context, key, "a boolean");
  return v.get<bool>();
}

std::optional<double> optional_number(const Json& j, const char* key, std::string_view context) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return number(j, key, context);
}

}  // namespace json_field

Json to_json(const Configuration& config) {
  Json genes = Json::object();
  for (const auto& [name, index] : config.genes) genes[name] = index;
  return Json{{"epoch", config.epoch}, {"genes", std::move(genes)}};
}

Configuration configuration_from_json(const Json& j) {
  Configuration config;
  config.epoch = json_field::unsigned_integer(j, "epoch", "config");
  const Json& genes = json_field::require(j, "genes", "config");
  if (!genes.is_object()) throw ValidationError("field 'config.genes': expected an object");
  for (const auto& [name, value] : genes.items()) {
    if (!value.is_number_integer()) {
      throw ValidationError("field 'config.genes." + name + "': expected an integer");
    }
    config.genes.emplace(name, value.get<std::int64_t>());
  }
  return config;
}

Json to_json(const Snapshot& snapshot) {
  Json metrics = Json::object();
  for (const auto& [name, value] : snapshot.metrics) metrics[name] = value;
  return Json{{"config", to_json(snapshot.config)},
              {"metrics", std::move(metrics)},
              {"window", snapshot.window}};
}

Snapshot snapshot_from_json(const Json& j) {
  Snapshot s;
  s.config = configuration_from_json(json_field::require(j, "config", "snapshot"));
  const Json& metrics = json_field::require(j, "metrics", "snapshot");
  if (!metrics.is_object()) throw ValidationError("field 'snapshot.metrics': expected an object");
  for (const auto& [name, value] : metrics.items()) {
    if (!value.is_number()) {
      throw ValidationError("field 'snapshot.metrics." + name + "': expected a number");
    }
    s.metrics.emplace(name, value.get<double>());
  }
  s.window = static_cast<int>(json_field::integer(j, "window", "snapshot"));
  if (s.window < 1) throw ValidationError("field 'snapshot.window': expected >= 1");
  return s;
}

Json to_json(const StateRecord& record) {
  Json reevals = Json::array();
  for (const auto& s : record.reevaluations) reevals.push_back(to_json(s));
  return Json{{"eval_count", record.eval_count},   {"reevaluations", std::move(reevals)},
              {"score", record.score},             {"score_sum", record.score_sum},
              {"snapshot", to_json(record.snapshot)}, {"step_index", record.step_index},
              {"updated_step", record.updated_step}};
}

StateRecord state_record_from_json(const Json& j) {
  StateRecord r;
  r.snapshot = snapshot_from_json(json_field::require(j, "snapshot", "record"));
  if (j.contains("reevaluations")) {
    for (const auto& s : j.at("reevaluations")) r.reevaluations.push_back(snapshot_from_json(s));
  }
  r.score = json_field::number(j, "score", "record");
  r.score_sum = json_field::number(j, "score_sum", "record");
  r.eval_count = static_cast<int>(json_field::integer(j, "eval_count", "record"));
  r.step_index = json_field::integer(j, "step_index", "record");
  r.updated_step = j.contains("updated_step") ? json_field::integer(j, "updated_step", "record")
                                              : r.step_index;
  if (r.eval_count != 1 + static_cast<int>(r.reevaluations.size())) {
    throw ValidationError("field 'record.eval_count': does not match reevaluations");
  }
  return r;
}

Json to_json(const ParameterSpec& spec) {
  return Json{{"changeability", to_string(spec.changeability)},
              {"layer", spec.layer},
              {"max", spec.max},
              {"min", spec.min},
              {"name", spec.name},
              {"step", spec.step}};
}

ParameterSpec parameter_spec_from_json(const Json& j) {
  ParameterSpec spec;
  spec.name = json_field::string(j, "name", "parameter");
  spec.layer = j.contains("layer") ? json_field::string(j, "layer", "parameter") : "";
  spec.min = json_field::number(j, "min", "parameter");
  spec.max = json_field::number(j, "max", "parameter");
  spec.step = json_field::number(j, "step", "parameter");
  spec.changeability = parse_changeability(json_field::string(j, "changeability", "parameter"));
  return spec;
}

Json to_json(const ScoreBreakdown& breakdown) {
  Json scores = Json::object();
  for (const auto& [name, s] : breakdown.scores) scores[name] = s;
  Json violations = Json::object();
  for (const auto& [name, v] : breakdown.violations) violations[name] = v;
  return Json{{"scores", std::move(scores)},
              {"total", breakdown.total},
              {"violations", std::move(violations)},
              {"weights_sum", breakdown.weights_sum}};
}

}  // namespace crosstune
