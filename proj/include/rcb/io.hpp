#pragma once

#include <string>

#include "json.hpp"
#include "rcb/discretize.hpp"
#include "rcb/env.hpp"
#include "rcb/policy.hpp"

namespace rcb {

using Json = nlohmann::json;

/// Reads and parses a JSON file; ConfigError on I/O or syntax errors.
Json load_json_file(const std::string& path);

/// Instance document:
///   {"schema": 1, "contexts": [probs], "actions": K, "null_action": a,
///    "budgets": [T, B_1, ...], "horizon": T,
///    "outcomes": [[[{"r": .., "c": [..], "p": ..}, ...] per action] per context]}
/// `where` is the JSON pointer of `j` inside its file, used in messages.
/// Structural problems raise ConfigError; the returned instance still needs
/// validate_instance.
Instance instance_from_json(const Json& j, const std::string& where = "");
Json instance_to_json(const Instance& inst);

/// Policy matrix [[action per context] per policy]; the null policy is added.
PolicySet policies_from_json(const Json& j, const Instance& inst, const std::string& where = "");
Json policies_to_json(const PolicySet& policies);

/// {"schema": 1, "contexts": [probs], "lipschitz": L,
///  "sales_rate": [[[p, S], ...] per context]}
PricingModel pricing_from_json(const Json& j, const std::string& where = "");
Json pricing_to_json(const PricingModel& model);

/// Checks `"schema": 1` at `where`.
void require_schema(const Json& j, const std::string& where);

/// Typed field access that reports the JSON pointer on failure.
const Json& require_field(const Json& j, const std::string& key, const std::string& where);
double json_number(const Json& j, const std::string& where);
std::size_t json_index(const Json& j, const std::string& where);

}  // namespace rcb
