#pragma once

#include <string>

#include <json.hpp>

#include "simile/policy.hpp"
#include "simile/simile.hpp"

namespace simile {

/// Versioned, lossless JSON encodings. Doubles round-trip exactly
/// (shortest-representation printing on save, exact parse on load).
nlohmann::json forest_to_json(const SmoothForest& forest);
SmoothForest forest_from_json(const nlohmann::json& j);

nlohmann::json policy_to_json(const EnsemblePolicy& policy);
EnsemblePolicy policy_from_json(const nlohmann::json& j);

void save_policy(const EnsemblePolicy& policy, const std::string& path);
EnsemblePolicy load_policy(const std::string& path);

nlohmann::json record_to_json(const IterationRecord& r);

/// Writes to a temp file in the same directory, then renames into place.
void write_text_atomic(const std::string& path, const std::string& content);

}  // namespace simile
