#pragma once

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "crosstune/json_codec.hpp"
#include "crosstune/protocol.hpp"

namespace crosstune::test_support {

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(CROSSTUNE_FIXTURE_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing fixture " + name);
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  return text;
}

// Fixture file -> decode then re-encode through the matching codec.
inline const std::map<std::string, std::function<Json(const Json&)>>& golden_codecs() {
  static const std::map<std::string, std::function<Json(const Json&)>> codecs{
      {"manifest_runtime.json", [](const Json& j) { return to_json(manifest_from_json(j)); }},
      {"manifest_workload.json", [](const Json& j) { return to_json(manifest_from_json(j)); }},
      {"manifest_web.json", [](const Json& j) { return to_json(manifest_from_json(j)); }},
      {"register_response.json",
       [](const Json& j) { return to_json(register_response_from_json(j)); }},
      {"state_report.json", [](const Json& j) { return to_json(state_report_from_json(j)); }},
      {"state_reply.json", [](const Json& j) { return to_json(state_reply_from_json(j)); }},
      {"config_view.json", [](const Json& j) { return to_json(config_view_from_json(j)); }},
      {"ack_request.json", [](const Json& j) { return to_json(ack_request_from_json(j)); }},
      {"ack_reply.json", [](const Json& j) { return to_json(ack_reply_from_json(j)); }},
      {"error.json", [](const Json& j) { return error_body(j.at("error").get<std::string>()); }},
      {"state_record.json", [](const Json& j) { return to_json(state_record_from_json(j)); }},
  };
  return codecs;
}

// Returns the re-encoded text; equal to the fixture when the schema is stable.
inline std::string golden_roundtrip(const std::string& name) {
  const std::string text = read_fixture(name);
  return golden_codecs().at(name)(parse_json(text)).dump();
}

}  // namespace crosstune::test_support
