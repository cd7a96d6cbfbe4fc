#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "elc/pipeline.hpp"

namespace elc {

using Json = nlohmann::json;

// Chain sites are 1-based in JSON and 0-based in memory.

void to_json(Json& j, const LatticeConfig& v);
void from_json(const Json& j, LatticeConfig& v);
void to_json(Json& j, const HubbardParams& v);
void from_json(const Json& j, HubbardParams& v);
void to_json(Json& j, const TransferProblem& v);
void from_json(const Json& j, TransferProblem& v);
void to_json(Json& j, const OpticsConfig& v);
void from_json(const Json& j, OpticsConfig& v);
void to_json(Json& j, const BiasOptimConfig& v);
void from_json(const Json& j, BiasOptimConfig& v);
void to_json(Json& j, const Stage2Grid& v);
void from_json(const Json& j, Stage2Grid& v);
void to_json(Json& j, const Thresholds& v);
void from_json(const Json& j, Thresholds& v);
void to_json(Json& j, const PipelineConfig& v);
void from_json(const Json& j, PipelineConfig& v);

void to_json(Json& j, const BiasVector& v);
void from_json(const Json& j, BiasVector& v);
void to_json(Json& j, const DMDPattern& v);
void from_json(const Json& j, DMDPattern& v);
void to_json(Json& j, const CandidateController& v);
void from_json(const Json& j, CandidateController& v);
void to_json(Json& j, const DMDSolution& v);
void from_json(const Json& j, DMDSolution& v);
void to_json(Json& j, const SensitivityRecord& v);
void from_json(const Json& j, SensitivityRecord& v);
void to_json(Json& j, const ControllerRecord& v);
void from_json(const Json& j, ControllerRecord& v);
void to_json(Json& j, const RunProvenance& v);
void from_json(const Json& j, RunProvenance& v);
void to_json(Json& j, const ControllerDatabase& v);
void from_json(const Json& j, ControllerDatabase& v);

/// Parses a configuration document; missing keys keep their defaults.
/// Throws ValidationError on malformed input or invalid values.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text);

ControllerDatabase load_database(const std::filesystem::path& path);
void save_database(const ControllerDatabase& db, const std::filesystem::path& path);

/// Pretty-printed JSON with a trailing newline.
std::string dump(const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace elc
