#pragma once

// Canonical JSON for the domain types. Output is compact with keys in
// lexicographic order, so serialize(deserialize(canonical)) is byte-identical.
// Unknown input fields are ignored; optional fields are emitted only when set.

#include <string>
#include <string_view>

#include <json.hpp>

#include "crosstune/domain.hpp"
#include "crosstune/state_evaluator.hpp"

namespace crosstune {

using Json = nlohmann::json;

// Throws ValidationError on syntax errors.
Json parse_json(std::string_view text);

namespace json_field {
// Typed accessors that name the offending field in their ValidationError.
const Json& require(const Json& j, const char* key, std::string_view context);
double number(const Json& j, const char* key, std::string_view context);
std::int64_t integer(const Json& j, const char* key, std::string_view context);
std::uint64_t unsigned_integer(const Json& j, const char* key, std::string_view context);
std::string string(const Json& j, const char* key, std::string_view context);
bool boolean(const Json& j, const char* key, std::string_view context);
std::optional<double> optional_number(const Json& j, const char* key, std::string_view context);
}  // namespace json_field

Json to_json(const Configuration& config);
Configuration configuration_from_json(const Json& j);

Json to_json(const Snapshot& snapshot);
Snapshot snapshot_from_json(const Json& j);

Json to_json(const StateRecord& record);
StateRecord state_record_from_json(const Json& j);

Json to_json(const ParameterSpec& spec);
ParameterSpec parameter_spec_from_json(const Json& j);

Json to_json(const ScoreBreakdown& breakdown);

}  // namespace crosstune
