#pragma once

#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "dynrisk/indices.hpp"
#include "dynrisk/measure_sets.hpp"
#include "dynrisk/scenario_tree.hpp"

namespace dynrisk::io {

using nlohmann::json;

struct TreeDocument {
  ScenarioTree tree;
  std::map<std::string, AdaptedProcess> processes;
};

/// All parsers throw InputError with a path-like location on schema violations.
TreeSpec parse_tree_spec(const json& doc);
TreeDocument parse_tree_document(const json& doc);
TreeDocument load_tree_document(const std::string& path);

json tree_to_json(const ScenarioTree& tree);
json process_to_json(const ScenarioTree& tree, const AdaptedProcess& d);

MeasureSet parse_measure_set(const ScenarioTree& tree, const json& doc);
/// {"sets": [...]} or a single set (made constant).
MeasureSetSequence parse_sequence(const ScenarioTree& tree, const json& doc);
json measure_set_to_json(const ScenarioTree& tree, const MeasureSet& set);

json level_to_json(const Level& level);
Level level_from_json(const json& doc);

json fixture_to_json(const CounterexampleFixture& fixture, const json& set = json{});
CounterexampleFixture parse_fixture(const json& doc);

json load_json(const std::string& path);

}  // namespace dynrisk::io
