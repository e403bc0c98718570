#pragma once

#include <string>

#include <json.hpp>

#include "treeinfluence/gbdt.hpp"

namespace treeinf {

inline constexpr int kModelFormatVersion = 1;

// Single self-describing JSON document: params, bias, tree structures and
// leaf values, and (unless dropped) the training data and the full training
// trace. Numeric arrays round-trip doubles exactly.
nlohmann::json model_to_json(const TrainedModel& model, bool include_trace = true);
TrainedModel model_from_json(const nlohmann::json& doc);

void save_model(const TrainedModel& model, const std::string& path,
                bool include_trace = true);
TrainedModel load_model(const std::string& path);

// Write-then-rename so failed writes never leave partial files behind.
void write_text_atomic(const std::string& path, const std::string& contents);
std::string read_text(const std::string& path);

// Round-trip-exact decimal formatting for doubles in CSV output.
std::string format_double(double v);

}  // namespace treeinf
