#pragma once

// Internal JSON (de)serialization helpers shared between translation units.
// Public headers stay JSON-free; the documented file formats live here and in
// the per-module *_to_json/_from_json functions.

#include <json.hpp>

#include "abacx/abac.hpp"
#include "abacx/meta.hpp"

namespace abacx {

Policy policy_from_json(const nlohmann::json& doc);
nlohmann::ordered_json policy_to_json(const Policy& policy);

Request request_from_json(const nlohmann::json& doc);
nlohmann::ordered_json request_to_json(const Request& request);

MetaPolicy meta_from_json(const nlohmann::json& doc);
nlohmann::ordered_json meta_to_json(const MetaPolicy& meta);

}  // namespace abacx
