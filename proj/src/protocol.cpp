#include "crosstune/protocol.hpp"

#include <ctime>
#include <iomanip>
#include <regex>
#include <set>
#include <sstream>

namespace crosstune {

namespace jf = json_field;

ParameterSpec to_spec(const ParameterDecl& decl, const std::string& layer) {
  return ParameterSpec{decl.name, layer, decl.min, decl.max, decl.step, decl.changeability};
}

void validate_manifest(const PcaManifest& manifest) {
  if (manifest.name.empty()) throw ValidationError("manifest name must not be empty");
  std::set<std::string> names;
  for (const auto& m : manifest.metrics) {
    if (m.name.empty()) throw ValidationError("metric name must not be empty");
    if (!names.insert(m.name).second) {
      throw ValidationError("metric '" + m.name + "' declared twice");
    }
    try {
      validate_directive(m.directive);
    } catch (const ValidationError& e) {
      throw ValidationError("metric '" + m.name + "': " + e.what());
    }
  }
  names.clear();
  for (const auto& p : manifest.parameters) {
    validate_spec(to_spec(p, manifest.layer));
    if (!names.insert(p.name).second) {
      throw ValidationError("parameter '" + p.name + "' declared twice");
    }
    if (p.initial && (*p.initial < p.min || *p.initial > p.max)) {
      throw ValidationError("parameter '" + p.name + "': initial outside [min, max]");
    }
  }
}

Json to_json(const PcaManifest& manifest) {
  Json metrics = Json::array();
  for (const auto& m : manifest.metrics) {
    Json jm{{"direction", to_string(m.directive.direction)}, {"name", m.name}};
    if (m.directive.lower_threshold) jm["lower_threshold"] = *m.directive.lower_threshold;
    if (m.directive.upper_threshold) jm["upper_threshold"] = *m.directive.upper_threshold;
    if (m.weight_given) jm["weight"] = m.directive.weight;
    if (m.unit) jm["unit"] = *m.unit;
    metrics.push_back(std::move(jm));
  }
  Json params = Json::array();
  for (const auto& p : manifest.parameters) {
    Json jp{{"changeability", to_string(p.changeability)},
            {"max", p.max},
            {"min", p.min},
            {"name", p.name},
            {"step", p.step}};
    if (p.initial) jp["initial"] = *p.initial;
    params.push_back(std::move(jp));
  }
  return Json{{"layer", manifest.layer},
              {"metrics", std::move(metrics)},
              {"name", manifest.name},
              {"parameters", std::move(params)}};
}

PcaManifest manifest_from_json(const Json& j) {
  PcaManifest m;
  m.name = jf::string(j, "name", "manifest");
  m.layer = j.contains("layer") ? jf::string(j, "layer", "manifest") : "";
  if (j.contains("metrics")) {
    const Json& metrics = j.at("metrics");
    if (!metrics.is_array()) throw ValidationError("field 'manifest.metrics': expected an array");
    for (const auto& jm : metrics) {
      MetricDecl d;
      d.name = jf::string(jm, "name", "metric");
      d.directive.direction = parse_direction(jf::string(jm, "direction", "metric"));
      d.directive.lower_threshold = jf::optional_number(jm, "lower_threshold", "metric");
      d.directive.upper_threshold = jf::optional_number(jm, "upper_threshold", "metric");
      if (auto w = jf::optional_number(jm, "weight", "metric")) {
        d.directive.weight = *w;
        d.weight_given = true;
      }
      if (jm.contains("unit")) d.unit = jf::string(jm, "unit", "metric");
      m.metrics.push_back(std::move(d));
    }
  }
  if (j.contains("parameters")) {
    const Json& params = j.at("parameters");
    if (!params.is_array()) {
      throw ValidationError("field 'manifest.parameters': expected an array");
    }
    for (const auto& jp : params) {
      ParameterDecl p;
      p.name = jf::string(jp, "name", "parameter");
      p.min = jf::number(jp, "min", "parameter");
      p.max = jf::number(jp, "max", "parameter");
      p.step = jf::number(jp, "step", "parameter");
      p.changeability = parse_changeability(jf::string(jp, "changeability", "parameter"));
      p.initial = jf::optional_number(jp, "initial", "parameter");
      m.parameters.push_back(std::move(p));
    }
  }
  return m;
}

Json to_json(const RegisterResponse& r) { return Json{{"epoch", r.epoch}, {"pca_id", r.pca_id}}; }

RegisterResponse register_response_from_json(const Json& j) {
  return RegisterResponse{jf::string(j, "pca_id", "response"),
                          jf::unsigned_integer(j, "epoch", "response")};
}

Json to_json(const StateReport& report) {
  Json metrics = Json::array();
  for (const auto& m : report.metrics) metrics.push_back(Json{{"name", m.name}, {"value", m.value}});
  return Json{{"epoch", report.epoch},
              {"metrics", std::move(metrics)},
              {"pca_id", report.pca_id},
              {"timestamp", report.timestamp}};
}

StateReport state_report_from_json(const Json& j) {
  StateReport r;
  r.pca_id = j.contains("pca_id") ? jf::string(j, "pca_id", "report") : "";
  r.epoch = jf::unsigned_integer(j, "epoch", "report");
  const Json& metrics = jf::require(j, "metrics", "report");
  if (!metrics.is_array()) throw ValidationError("field 'report.metrics': expected an array");
  for (const auto& jm : metrics) {
    r.metrics.push_back(MetricValue{jf::string(jm, "name", "report.metrics"),
                                    jf::number(jm, "value", "report.metrics")});
  }
  r.timestamp = jf::string(j, "timestamp", "report");
  if (!is_rfc3339(r.timestamp)) {
    throw ValidationError("field 'report.timestamp': expected an RFC 3339 timestamp");
  }
  return r;
}

Json to_json(const StateReply& reply) {
  return Json{{"accepted", reply.accepted}, {"current_epoch", reply.current_epoch}};
}

StateReply state_reply_from_json(const Json& j) {
  return StateReply{jf::boolean(j, "accepted", "reply"),
                    jf::unsigned_integer(j, "current_epoch", "reply")};
}

Json to_json(const ConfigView& view) {
  Json params = Json::array();
  for (const auto& p : view.parameters) {
    params.push_back(Json{{"changeability", to_string(p.changeability)},
                          {"name", p.name},
                          {"value", p.value}});
  }
  return Json{{"epoch", view.epoch},
              {"parameters", std::move(params)},
              {"requires_restart", view.requires_restart}};
}

ConfigView config_view_from_json(const Json& j) {
  ConfigView v;
  v.epoch = jf::unsigned_integer(j, "epoch", "config");
  for (const auto& jp : jf::require(j, "parameters", "config")) {
    v.parameters.push_back(
        ParameterValue{jf::string(jp, "name", "config.parameters"),
                       jf::number(jp, "value", "config.parameters"),
                       parse_changeability(jf::string(jp, "changeability", "config.parameters"))});
  }
  v.requires_restart = jf::boolean(j, "requires_restart", "config");
  return v;
}

Json to_json(const AckRequest& ack) { return Json{{"epoch", ack.epoch}}; }

AckRequest ack_request_from_json(const Json& j) {
  return AckRequest{jf::unsigned_integer(j, "epoch", "ack")};
}

Json to_json(const AckReply& reply) { return Json{{"ok", reply.ok}}; }

AckReply ack_reply_from_json(const Json& j) { return AckReply{jf::boolean(j, "ok", "ack")}; }

Json error_body(std::string_view message) { return Json{{"error", std::string(message)}}; }

int http_status_for(const std::exception& e) {
  if (dynamic_cast<const NotFoundError*>(&e) != nullptr) return 404;
  if (dynamic_cast<const ConflictError*>(&e) != nullptr) return 409;
  if (dynamic_cast<const ValidationError*>(&e) != nullptr) return 422;
  if (dynamic_cast<const IncompleteStateError*>(&e) != nullptr) return 422;
  return 500;
}

bool is_rfc3339(std::string_view timestamp) {
  static const std::regex pattern(
      R"(^\d{4}-\d{2}-\d{2}[Tt ]\d{2}:\d{2}:\d{2}(\.\d+)?([Zz]|[+-]\d{2}:\d{2})$)");
  return std::regex_match(timestamp.begin(), timestamp.end(), pattern);
}

std::string format_rfc3339(std::chrono::system_clock::time_point tp) {
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(tp.time_since_epoch()).count() % 1000;
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm utc{};
  gmtime_r(&t, &utc);
  std::ostringstream out;
  out << std::put_time(&utc, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0')
      << ms << 'Z';
  return out.str();
}

}  // namespace crosstune
