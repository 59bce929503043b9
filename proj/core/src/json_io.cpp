#include "dynrisk/json_io.hpp"

#include <fstream>

#include "dynrisk/errors.hpp"

namespace dynrisk::io {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw InputError(where + ": " + what);
}

const json& member(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) bad(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) bad(where, std::string("missing \"") + key + "\"");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) bad(where, "expected a number");
  return v.get<double>();
}

int integer(const json& v, const std::string& where) {
  if (!v.is_number_integer()) bad(where, "expected an integer");
  return v.get<int>();
}

std::string string(const json& v, const std::string& where) {
  if (!v.is_string()) bad(where, "expected a string");
  return v.get<std::string>();
}

/// Leaf-label map to a leaf-indexed vector; absent leaves get 0.
StateVector leaf_map(const ScenarioTree& tree, const json& v, const std::string& where) {
  if (!v.is_object()) bad(where, "expected an object mapping leaf ids to probabilities");
  StateVector out(tree.leaf_count(), 0.0);
  for (auto it = v.begin(); it != v.end(); ++it) {
    const auto id = tree.find(it.key());
    if (!id || !tree.is_leaf(*id)) bad(where + "." + it.key(), "not a leaf of the tree");
    out[tree.leaf_index(*id)] = number(it.value(), where + "." + it.key());
  }
  return out;
}

json leaf_map_json(const ScenarioTree& tree, std::span<const double> q) {
  json out = json::object();
  for (std::size_t leaf = 0; leaf < q.size(); ++leaf) {
    out[tree.node(tree.leaf_node(leaf)).label] = q[leaf];
  }
  return out;
}

}  // namespace

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

TreeSpec parse_tree_spec(const json& doc) {
  TreeSpec spec;
  spec.horizon = integer(member(doc, "horizon", "tree"), "tree.horizon");
  const auto& nodes = member(doc, "nodes", "tree");
  if (!nodes.is_array()) bad("tree.nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "tree.nodes[" + std::to_string(i) + "]";
    const auto& n = nodes[i];
    TreeSpec::RawNode raw;
    raw.id = string(member(n, "id", where), where + ".id");
    raw.time = integer(member(n, "time", where), where + ".time");
    if (auto it = n.find("parent"); it != n.end() && !it->is_null()) {
      raw.parent = string(*it, where + ".parent");
    }
    if (auto it = n.find("children"); it != n.end()) {
      if (!it->is_array()) bad(where + ".children", "expected an array");
      for (const auto& c : *it) raw.children.push_back(string(c, where + ".children"));
    }
    spec.nodes.push_back(std::move(raw));
  }
  const auto& probs = member(doc, "reference_probability", "tree");
  if (!probs.is_object()) bad("tree.reference_probability", "expected an object");
  for (auto it = probs.begin(); it != probs.end(); ++it) {
    spec.reference_probability[it.key()] =
        number(it.value(), "tree.reference_probability." + it.key());
  }
  return spec;
}

TreeDocument parse_tree_document(const json& doc) {
  TreeDocument out{ScenarioTree::from_spec(parse_tree_spec(doc)), {}};
  if (auto it = doc.find("processes"); it != doc.end()) {
    if (!it->is_object()) bad("tree.processes", "expected an object");
    for (auto p = it->begin(); p != it->end(); ++p) {
      const std::string where = "tree.processes." + p.key();
      if (!p->is_object()) bad(where, "expected an object mapping node ids to values");
      std::map<std::string, double> values;
      for (auto v = p->begin(); v != p->end(); ++v) {
        values[v.key()] = number(v.value(), where + "." + v.key());
      }
      try {
        out.processes.emplace(p.key(), AdaptedProcess::from_labels(out.tree, values));
      } catch (const InputError& e) {
        bad(where, e.what());
      }
    }
  }
  return out;
}

TreeDocument load_tree_document(const std::string& path) {
  const auto doc = load_json(path);
  try {
    return parse_tree_document(doc);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

json tree_to_json(const ScenarioTree& tree) {
  json nodes = json::array();
  for (NodeId id = 0; id < tree.node_count(); ++id) {
    const auto& n = tree.node(id);
    json children = json::array();
    for (auto c : n.children) children.push_back(tree.node(c).label);
    nodes.push_back({{"id", n.label},
                     {"time", n.time},
                     {"parent", n.parent ? json(tree.node(*n.parent).label) : json(nullptr)},
                     {"children", children}});
  }
  return {{"horizon", tree.horizon()},
          {"nodes", nodes},
          {"reference_probability", leaf_map_json(tree, tree.reference_probability())}};
}

json process_to_json(const ScenarioTree& tree, const AdaptedProcess& d) {
  json out = json::object();
  for (NodeId id = 0; id < tree.node_count(); ++id) out[tree.node(id).label] = d[id];
  return out;
}

MeasureSet parse_measure_set(const ScenarioTree& tree, const json& doc) {
  const std::string kind = string(member(doc, "kind", "set"), "set.kind");
  MeasureSet set;
  if (kind == "singleton") {
    set = sets::Singleton{leaf_map(tree, member(doc, "q", "set"), "set.q")};
  } else if (kind == "full_support") {
    set = sets::FullSupport{};
  } else if (kind == "extreme_points") {
    const auto& v = member(doc, "vertices", "set");
    if (!v.is_array() || v.empty()) bad("set.vertices", "expected a nonempty array");
    sets::ExtremePoints ep;
    for (std::size_t i = 0; i < v.size(); ++i) {
      ep.vertices.push_back(leaf_map(tree, v[i], "set.vertices[" + std::to_string(i) + "]"));
    }
    set = std::move(ep);
  } else if (kind == "cap_upper") {
    set = sets::CapUpper{number(member(doc, "a", "set"), "set.a")};
  } else if (kind == "cap_lower") {
    set = sets::CapLower{number(member(doc, "a", "set"), "set.a")};
  } else if (kind == "exclude_one") {
    set = sets::ExcludeOne{leaf_map(tree, member(doc, "excluded", "set"), "set.excluded")};
  } else {
    bad("set.kind", "unknown kind \"" + kind + "\"");
  }
  validate_measure_set(tree, set);
  return set;
}

MeasureSetSequence parse_sequence(const ScenarioTree& tree, const json& doc) {
  if (!doc.is_object()) bad("sequence", "expected an object");
  if (auto it = doc.find("sets"); it != doc.end()) {
    if (!it->is_array()) bad("sequence.sets", "expected an array");
    MeasureSetSequence seq;
    for (const auto& s : *it) seq.sets.push_back(parse_measure_set(tree, s));
    validate_sequence(tree, seq);
    return seq;
  }
  return MeasureSetSequence::constant(tree, parse_measure_set(tree, doc));
}

json measure_set_to_json(const ScenarioTree& tree, const MeasureSet& set) {
  json out = {{"kind", kind_name(set)}};
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, sets::Singleton>) {
          out["q"] = leaf_map_json(tree, s.q);
        } else if constexpr (std::is_same_v<S, sets::ExtremePoints>) {
          json v = json::array();
          for (const auto& q : s.vertices) v.push_back(leaf_map_json(tree, q));
          out["vertices"] = v;
        } else if constexpr (std::is_same_v<S, sets::CapUpper> ||
                             std::is_same_v<S, sets::CapLower>) {
          out["a"] = s.a;
        } else if constexpr (std::is_same_v<S, sets::ExcludeOne>) {
          out["excluded"] = leaf_map_json(tree, s.excluded);
        }
      },
      set);
  return out;
}

json level_to_json(const Level& level) {
  if (level.is_infinite()) return "inf";
  return level.value();
}

Level level_from_json(const json& doc) {
  if (doc.is_string() && doc.get<std::string>() == "inf") return Level::infinity();
  return Level::finite(number(doc, "level"));
}

json fixture_to_json(const CounterexampleFixture& fx, const json& set) {
  json tree = tree_to_json(fx.tree);
  tree["processes"] = {{"D", process_to_json(fx.tree, fx.d)}};
  json children = json::array();
  for (const auto& c : fx.children) {
    children.push_back({{"node", fx.tree.node(c.node).label}, {"level", level_to_json(c.level)}});
  }
  json out = {{"index", fx.index},
              {"seed", fx.seed},
              {"candidate", fx.candidate},
              {"tree", tree},
              {"witness",
               {{"t", fx.t},
                {"atom", fx.tree.node(fx.atom).label},
                {"payment", fx.payment},
                {"level", level_to_json(fx.level)},
                {"children", children}}}};
  if (!set.is_null()) out["set"] = set;
  return out;
}

CounterexampleFixture parse_fixture(const json& doc) {
  auto tree_doc = parse_tree_document(member(doc, "tree", "fixture"));
  auto it = tree_doc.processes.find("D");
  if (it == tree_doc.processes.end()) bad("fixture.tree.processes", "missing process \"D\"");
  const auto& w = member(doc, "witness", "fixture");
  CounterexampleFixture fx{string(member(doc, "index", "fixture"), "fixture.index"),
                           member(doc, "seed", "fixture").get<std::uint64_t>(),
                           member(doc, "candidate", "fixture").get<std::size_t>(),
                           tree_doc.tree,
                           it->second,
                           integer(member(w, "t", "fixture.witness"), "fixture.witness.t"),
                           0,
                           number(member(w, "payment", "fixture.witness"), "fixture.witness.payment"),
                           level_from_json(member(w, "level", "fixture.witness")),
                           {}};
  fx.atom = fx.tree.require(string(member(w, "atom", "fixture.witness"), "fixture.witness.atom"));
  for (const auto& c : member(w, "children", "fixture.witness")) {
    fx.children.push_back({fx.tree.require(string(member(c, "node", "child"), "child.node")),
                           level_from_json(member(c, "level", "child"))});
  }
  return fx;
}

}  // namespace dynrisk::io
