#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "pens/ensemble.hpp"
#include "pens/eval.hpp"

namespace pens {

using json = nlohmann::json;

// Snapshots. Doubles are written with 17 significant digits, so a save/load
// cycle reproduces every value bit for bit.

json to_json(const FuzzyRule& rule);
FuzzyRule rule_from_json(const json& j);

json to_json(const PClassModel& model);
PClassModel model_from_json(const json& j);

json to_json(const LearnerConfig& cfg);
LearnerConfig config_from_json(const json& j);

json to_json(const Ensemble& ens);
Ensemble ensemble_from_json(const json& j);

void save_snapshot(const Ensemble& ens, const std::string& path);
Ensemble load_snapshot(const std::string& path);

/// FNV-1a 64 of the compact snapshot text.
std::uint64_t snapshot_hash(const Ensemble& ens);

// Metrics files: one JSON object per line. Stamp records carry
// "record": "stamp", the final one "record": "summary".

json to_json(const StampMetrics& s);
json summary_json(const RunMetrics& m);
void write_metrics(std::ostream& out, const RunMetrics& m);
void write_metrics(const std::string& path, const RunMetrics& m);

/// Parses a metrics file back. Throws data_error naming the line on bad input.
RunMetrics read_metrics(const std::string& path);

}  // namespace pens
