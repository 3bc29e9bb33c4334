#pragma once

// Wire types exchanged between the controller (HTTP server) and agents.
//
//   POST /v1/pcas                 PcaManifest   -> RegisterResponse
//   POST /v1/pcas/{id}/state      StateReport   -> StateReply
//   GET  /v1/pcas/{id}/config     ?wait_epoch=n -> ConfigView
//   POST /v1/pcas/{id}/ack        AckRequest    -> AckReply
//   GET  /v1/stats                              -> runtime statistics
//   GET  /v1/history?from=k                     -> JSON Lines
//
// Values on the wire are real numbers in native units; grid indices never
// leave the controller. Errors are {"error": "..."} with a 4xx/5xx status.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crosstune/domain.hpp"
#include "crosstune/json_codec.hpp"

namespace crosstune {

struct MetricDecl {
  std::string name;
  TuningDirective directive;
  std::optional<std::string> unit;
  // Set when the manifest carried an explicit weight; kept so that the
  // manifest round-trips without inventing fields.
  bool weight_given = false;
};

struct ParameterDecl {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;
  Changeability changeability = Changeability::kOnline;
  std::optional<double> initial;
};

struct PcaManifest {
  std::string name;
  std::string layer;
  std::vector<MetricDecl> metrics;
  std::vector<ParameterDecl> parameters;
};

ParameterSpec to_spec(const ParameterDecl& decl, const std::string& layer);

// Domain validation plus name uniqueness inside the manifest.
void validate_manifest(const PcaManifest& manifest);

struct RegisterResponse {
  std::string pca_id;
  std::uint64_t epoch = 0;
};

struct MetricValue {
  std::string name;
  double value = 0.0;
};

struct StateReport {
  std::string pca_id;
  std::uint64_t epoch = 0;
  std::vector<MetricValue> metrics;
  std::string timestamp;
};

struct StateReply {
  bool accepted = true;
  std::uint64_t current_epoch = 0;
};

struct ParameterValue {
  std::string name;
  double value = 0.0;
  Changeability changeability = Changeability::kOnline;
};

struct ConfigView {
  std::uint64_t epoch = 0;
  std::vector<ParameterValue> parameters;
  bool requires_restart = false;
};

struct AckRequest {
  std::uint64_t epoch = 0;
};

struct AckReply {
  bool ok = true;
};

Json to_json(const PcaManifest& manifest);
PcaManifest manifest_from_json(const Json& j);

Json to_json(const RegisterResponse& r);
RegisterResponse register_response_from_json(const Json& j);

Json to_json(const StateReport& report);
StateReport state_report_from_json(const Json& j);

Json to_json(const StateReply& reply);
StateReply state_reply_from_json(const Json& j);

Json to_json(const ConfigView& view);
ConfigView config_view_from_json(const Json& j);

Json to_json(const AckRequest& ack);
AckRequest ack_request_from_json(const Json& j);

Json to_json(const AckReply& reply);
AckReply ack_reply_from_json(const Json& j);

Json error_body(std::string_view message);

// 404 for NotFoundError, 409 for ConflictError, 422 for ValidationError and
// IncompleteStateError, 500 otherwise.
int http_status_for(const std::exception& e);

bool is_rfc3339(std::string_view timestamp);
std::string format_rfc3339(std::chrono::system_clock::time_point tp);

}  // namespace crosstune
