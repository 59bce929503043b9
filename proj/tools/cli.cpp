#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dynrisk/duality.hpp"
#include "dynrisk/errors.hpp"
#include "dynrisk/generators.hpp"
#include "dynrisk/indices.hpp"
#include "dynrisk/json_io.hpp"
#include "dynrisk/risk_measures.hpp"

namespace dynrisk::cli {

namespace {

using nlohmann::json;

struct RunConfig {
  std::string subcommand;
  std::string tree_path;
  std::string process;
  std::string times;
  std::string measure;
  std::string set_spec;
  std::vector<std::string> positional;
  std::string x_grid = "geom:1e-3:1e3:32";
  std::optional<double> dual_level;
  double h_scale = 1.0;
  std::size_t trials = 100;
  std::size_t trees = 5;
  std::size_t corpus = 50;
  std::uint64_t seed = 0;
  std::optional<double> tol;
  std::string format = "text";
  std::size_t budget = 100000;
  unsigned workers = 1;
  std::string out_path = "d7_counterexample.json";
  std::string axioms;
  bool variants = false;
  bool roundtrip = false;
  bool strong = false;
  bool dynamic = false;
  bool weak = false;
};

// ---------------------------------------------------------------------------
// Input helpers

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(what + ": not a number: '" + s + "'");
  }
}

std::vector<double> parse_grid(const std::string& spec) {
  if (spec.rfind("geom:", 0) == 0) {
    const auto parts = split(spec.substr(5), ':');
    if (parts.size() != 3) throw InputError("--x-grid: expected geom:LO:HI:COUNT");
    const double count = parse_double(parts[2], "--x-grid count");
    if (count < 2 || count != std::floor(count)) throw InputError("--x-grid: count must be >= 2");
    return geometric_grid(parse_double(parts[0], "--x-grid"), parse_double(parts[1], "--x-grid"),
                          static_cast<std::size_t>(count));
  }
  std::vector<double> out;
  for (const auto& p : split(spec, ',')) out.push_back(parse_double(p, "--x-grid"));
  if (out.empty()) throw InputError("--x-grid is empty");
  return out;
}

std::vector<int> parse_times(const ScenarioTree& tree, const std::string& spec) {
  std::vector<int> out;
  if (spec.empty()) {
    for (int t = 0; t <= tree.horizon(); ++t) out.push_back(t);
    return out;
  }
  for (const auto& p : split(spec, ',')) {
    const double v = parse_double(p, "--time");
    if (v != std::floor(v) || v < 0 || v > tree.horizon()) {
      throw InputError("--time: " + p + " is not in 0.." + std::to_string(tree.horizon()));
    }
    out.push_back(static_cast<int>(v));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// A set given inline ("cap_upper:a=3", "cap_upper a=3") or as a JSON file.
struct SetSpec {
  std::string text;
  bool is_file() const {
    return text.size() > 5 && (text.ends_with(".json") || std::filesystem::exists(text));
  }
  bool empty() const { return text.empty(); }
};

SetSpec set_spec(const RunConfig& cfg) {
  if (!cfg.set_spec.empty()) return {cfg.set_spec};
  std::string joined;
  for (const auto& p : cfg.positional) {
    if (joined.empty()) {
      joined = p;
    } else {
      joined += (joined.find(':') == std::string::npos ? ":" : ",") + p;
    }
  }
  return {joined};
}

std::map<std::string, std::string> inline_params(const std::string& text, std::string& kind) {
  const auto colon = text.find(':');
  kind = text.substr(0, colon);
  std::map<std::string, std::string> params;
  if (colon == std::string::npos) return params;
  for (const auto& kv : split(text.substr(colon + 1), ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InputError("set parameter '" + kv + "' is not key=value");
    params[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return params;
}

MeasureSetSequence load_sequence(const ScenarioTree& tree, const SetSpec& spec) {
  if (spec.empty()) throw InputError("a measure set is required (--set KIND[:params] or PATH)");
  if (spec.is_file()) return io::parse_sequence(tree, io::load_json(spec.text));
  std::string kind;
  const auto params = inline_params(spec.text, kind);
  json doc = {{"kind", kind}};
  const auto p = tree.reference_probability();
  StateVector ref(p.begin(), p.end());
  if (kind == "cap_upper" || kind == "cap_lower") {
    auto it = params.find("a");
    if (it == params.end()) throw InputError(kind + " needs a parameter a=VALUE");
    doc["a"] = parse_double(it->second, "a");
  } else if (kind == "singleton" || kind == "exclude_one") {
    // Inline form uses the reference measure.
    return MeasureSetSequence::constant(
        tree, kind == "singleton" ? MeasureSet{sets::Singleton{ref}} : MeasureSet{sets::ExcludeOne{ref}});
  } else if (kind != "full_support") {
    throw InputError("unknown set kind '" + kind + "' (inline kinds: full_support, cap_upper, "
                     "cap_lower, singleton, exclude_one; others need a JSON file)");
  }
  return MeasureSetSequence::constant(tree, io::parse_measure_set(tree, doc));
}

MeasureSet load_single_set(const ScenarioTree& tree, const SetSpec& spec) {
  const auto seq = load_sequence(tree, spec);
  for (const auto& s : seq.sets) {
    if (io::measure_set_to_json(tree, s) != io::measure_set_to_json(tree, seq.sets.front())) {
      throw InputError("this operation needs a single measure set, not a varying sequence");
    }
  }
  return seq.sets.front();
}

LevelMap level_map(double scale) {
  if (!(scale > 0.0)) throw InputError("--h-scale must be positive");
  return [scale](double x) { return scale * x; };
}

bool is_index_measure(const std::string& m) {
  return m == "dglr" || m == "draroc" || m == "upper-limit" || m == "lower-limit" ||
         m == "family-index";
}

LimitDirection family_direction(const ScenarioTree& tree, const RunConfig& cfg,
                                const SetSpec& spec) {
  if (cfg.measure == "upper-limit") return LimitDirection::upper;
  if (cfg.measure == "lower-limit") return LimitDirection::lower;
  // family-index: the set kind selects the family, its a is replaced by 1 + h(x)
  std::string kind = "cap_upper";
  if (!spec.empty()) inline_params(spec.text, kind);
  (void)tree;
  if (kind == "cap_upper") return LimitDirection::upper;
  if (kind == "cap_lower") return LimitDirection::lower;
  throw InputError("family-index supports the cap_upper and cap_lower families");
}

AcceptabilityIndex make_index(const ScenarioTree& tree, const RunConfig& cfg) {
  const auto spec = set_spec(cfg);
  if (cfg.measure == "dglr") return dglr_index();
  if (cfg.measure == "draroc") {
    return draroc_index(spec.empty() ? MeasureSet{sets::FullSupport{}} : load_single_set(tree, spec));
  }
  if (cfg.measure == "upper-limit" || cfg.measure == "lower-limit" ||
      cfg.measure == "family-index") {
    const auto dir = family_direction(tree, cfg, spec);
    if (cfg.measure == "family-index") {
      return family_index(IndexFamilyBacking{limit_family(dir, level_map(cfg.h_scale))}, {},
                          "family-index");
    }
    return limit_ratio_index(dir, level_map(cfg.h_scale));
  }
  throw InputError("'" + cfg.measure + "' is not an acceptability index");
}

std::optional<RiskFamily> family_of(const ScenarioTree& tree, const RunConfig& cfg) {
  if (cfg.measure != "upper-limit" && cfg.measure != "lower-limit" &&
      cfg.measure != "family-index") {
    return std::nullopt;
  }
  return risk_family_from_sets(limit_family(family_direction(tree, cfg, set_spec(cfg)),
                                            level_map(cfg.h_scale)),
                               cfg.measure + "-family");
}

RiskMeasure make_risk_measure(const ScenarioTree& tree, const RunConfig& cfg) {
  if (cfg.measure == "dcrm") {
    const auto seq = load_sequence(tree, set_spec(cfg));
    return dcrm_from_sets([seq](const ScenarioTree&) { return seq; }, "dcrm");
  }
  if (is_index_measure(cfg.measure) && cfg.dual_level) {
    return dcrm_from_index(make_index(tree, cfg), *cfg.dual_level);
  }
  throw InputError("'" + cfg.measure + "' is not a risk measure (use --dual-level X for the dual "
                   "of an index)");
}

/// A tree file, or a counterexample fixture (its embedded tree and process).
io::TreeDocument load_tree_input(const std::string& path) {
  const auto doc = io::load_json(path);
  try {
    if (doc.is_object() && doc.contains("witness") && doc.contains("tree")) {
      return io::parse_tree_document(doc["tree"]);
    }
    return io::parse_tree_document(doc);
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

struct CheckInput {
  std::vector<ScenarioTree> trees;
  std::vector<AdaptedProcess> seed_processes;  // from the tree file, tried first
};

CheckInput check_trees(const RunConfig& cfg) {
  CheckInput in;
  auto& trees = in.trees;
  if (!cfg.tree_path.empty()) {
    auto doc = load_tree_input(cfg.tree_path);
    for (auto& [name, d] : doc.processes) in.seed_processes.push_back(std::move(d));
    trees.push_back(std::move(doc.tree));
    return in;
  }
  if (cfg.trees == 0) throw InputError("--trees must be positive");
  TreeShape shape;
  shape.min_depth = 1;
  shape.max_depth = 3;
  shape.max_branching = 3;
  shape.max_leaves = 27;
  for (std::size_t i = 0; i < cfg.trees; ++i) {
    auto rng = seeded_rng(cfg.seed, 1'000'000 + i);
    trees.push_back(random_tree(rng, shape));
  }
  return in;
}

// ---------------------------------------------------------------------------
// Output

json value_json(double v) { return v + 0.0; }  // folds -0 into 0
json value_json(const Level& l) { return io::level_to_json(l); }

std::string scalar_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

void emit(const RunConfig& cfg, const json& report, const std::vector<std::string>& lines,
          std::ostream& out) {
  if (cfg.format == "json") {
    out << report.dump(2) << '\n';
  } else {
    for (const auto& l : lines) out << l << '\n';
  }
}

json property_json(std::size_t tree, const PropertyResult& r) {
  return {{"tree", tree},
          {"check", r.name},
          {"passed", r.passed},
          {"checked", r.checked},
          {"skipped", r.skipped},
          {"witness", r.witness}};
}

std::string property_line(const json& j) {
  std::string s = "tree " + j["tree"].dump() + " " + j["check"].get<std::string>() + " " +
                  (j["passed"].get<bool>() ? "pass" : "FAIL") + " checked=" + j["checked"].dump() +
                  " skipped=" + j["skipped"].dump();
  if (!j["witness"].get<std::string>().empty()) s += "\n  witness: " + j["witness"].get<std::string>();
  return s;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  if (cfg.tree_path.empty()) throw InputError("eval needs --tree");
  if (cfg.process.empty()) throw InputError("eval needs --process");
  if (cfg.measure.empty()) throw InputError("eval needs --measure");
  const auto doc = load_tree_input(cfg.tree_path);
  const auto it = doc.processes.find(cfg.process);
  if (it == doc.processes.end()) throw InputError("process '" + cfg.process + "' not in the tree file");
  const auto& tree = doc.tree;
  const auto& d = it->second;

  json values = json::array();
  std::vector<std::string> lines;
  const auto record = [&](int t, NodeId id, const json& v) {
    values.push_back({{"t", t}, {"atom", tree.node(id).label}, {"value", v}});
  };
  const auto times = parse_times(tree, cfg.times);
  const bool risk = cfg.measure == "dcrm" || cfg.dual_level.has_value();
  if (!risk && !is_index_measure(cfg.measure)) {
    throw InputError("unknown measure '" + cfg.measure + "'");
  }
  for (int t : times) {
    std::vector<NodeId> atoms;
    for (auto id : tree.nodes_at(t)) atoms.push_back(id);
    std::sort(atoms.begin(), atoms.end(),
              [&](NodeId a, NodeId b) { return tree.node(a).label < tree.node(b).label; });
    if (risk) {
      const auto rm = make_risk_measure(tree, cfg);
      const auto vals = rm.by_atom(tree, t, d);
      for (auto id : atoms) record(t, id, value_json(vals[tree.slot(id)]));
    } else {
      const auto index = make_index(tree, cfg);
      const auto vals = index.by_atom(tree, t, d);
      for (auto id : atoms) record(t, id, value_json(vals[tree.slot(id)]));
    }
  }
  for (const auto& v : values) {
    lines.push_back("t=" + v["t"].dump() + " atom=" + v["atom"].get<std::string>() +
                    " value=" + scalar_text(v["value"]));
  }
  json report = {{"command", "eval"}, {"measure", cfg.measure}, {"process", cfg.process},
                 {"values", values}};
  if (cfg.dual_level) report["dual_level"] = *cfg.dual_level;
  emit(cfg, report, lines, out);
  return kPass;
}

json consistency_json(std::size_t tree_index, const std::string& name, const ScenarioTree& tree,
                      const ConsistencyReport& r) {
  json j = {{"tree", tree_index}, {"check", name}, {"passed", r.passed},
            {"checked", r.evaluations}, {"skipped", 0}, {"witness", ""}};
  if (r.violation) {
    const auto& v = *r.violation;
    j["witness"] = v.condition + " at t=" + std::to_string(v.t) + ", atom " + v.atom + ": " +
                   json(v.lower).dump() + " <= " + json(v.value).dump() + " <= " +
                   json(v.upper).dump();
    (void)tree;
  }
  return j;
}

int cmd_check(const RunConfig& cfg, std::ostream& out) {
  std::string target = cfg.measure;
  std::vector<std::string> positional = cfg.positional;
  if (target.empty()) {
    if (positional.empty()) throw InputError("check needs a target (dcrm, dglr, ..., sets)");
    target = positional.front();
    positional.erase(positional.begin());
  }
  RunConfig c = cfg;
  c.measure = target;
  c.positional = positional;

  const auto input = check_trees(c);
  const auto& trees = input.trees;
  json results = json::array();
  json roundtrips = json::array();
  std::vector<std::string> lines;
  bool passed = true;

  const auto add_report = [&](std::size_t i, const PropertyReport& rep) {
    for (const auto& r : rep.results) {
      auto j = property_json(i, r);
      passed = passed && r.passed;
      lines.push_back(property_line(j));
      results.push_back(std::move(j));
    }
  };

  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto& tree = trees[i];
    if (target == "sets") {
      if (!c.strong && !c.dynamic && !c.weak) {
        throw InputError("check sets needs --strong-consistency, --dynamic-consistency or "
                         "--weak-consistency");
      }
      const double tol = c.tol.value_or(1e-9);
      const auto spec = set_spec(c);
      std::vector<std::pair<std::string, ConsistencyReport>> reps;
      if (c.strong) {
        reps.emplace_back("strong-consistency",
                          check_strong_consistency(tree, load_single_set(tree, spec), c.trials,
                                                   c.seed, tol));
      }
      if (c.weak) {
        reps.emplace_back("weak-consistency", check_weak_consistency(tree, load_single_set(tree, spec),
                                                                     c.trials, c.seed, tol));
      }
      if (c.dynamic) {
        reps.emplace_back("dynamic-consistency",
                          check_dynamic_consistency(tree, load_sequence(tree, spec), c.trials,
                                                    c.seed, tol));
      }
      for (const auto& [name, r] : reps) {
        auto j = consistency_json(i, name, tree, r);
        passed = passed && r.passed;
        lines.push_back(property_line(j));
        results.push_back(std::move(j));
      }
      continue;
    }

    const bool index_target = is_index_measure(target) && !c.dual_level;
    const std::string axioms = c.axioms.empty() ? (index_target ? "D" : "A") : c.axioms;
    if (axioms != "A" && axioms != "D") throw InputError("--axioms must be A or D");
    if ((axioms == "D") != index_target) {
      throw InputError("--axioms " + axioms + " does not apply to '" + target + "'");
    }
    const bool run_axioms = !c.variants && !c.roundtrip ? true : !c.axioms.empty();
    if (index_target) {
      const auto index = make_index(tree, c);
      IndexCheckOptions opt;
      opt.trials = c.trials;
      opt.seed = c.seed;
      opt.tolerance = c.tol.value_or(1e-6);
      opt.seed_processes = input.seed_processes;
      if (run_axioms) add_report(i, check_axioms_D(tree, index, opt));
      if (c.variants) add_report(i, check_D_variants(tree, index, opt));
      if (c.roundtrip) {
        const auto grid = parse_grid(c.x_grid);
        std::vector<AdaptedProcess> corpus;
        for (std::size_t k = 0; k < c.corpus; ++k) {
          auto rng = seeded_rng(c.seed, 2'000'000 + k);
          corpus.push_back(random_process(tree, rng));
        }
        const double tol = c.tol.value_or(2e-5);
        const auto family = family_of(tree, c);
        const auto rt = family ? roundtrip_from_family(tree, *family, grid, corpus, tol)
                               : roundtrip_from_index(tree, index, grid, corpus, tol);
        const bool informational = target == "draroc";
        if (!informational) passed = passed && rt.pass;
        json j = {{"tree", i},
                  {"direction", family ? "from_family" : "from_index"},
                  {"max_discrepancy", rt.max_discrepancy},
                  {"tolerance", rt.tolerance},
                  {"passed", rt.pass},
                  {"informational", informational},
                  {"continuity_ok", rt.continuity_ok},
                  {"continuity_probe", rt.continuity_probe},
                  {"monotone", rt.monotone},
                  {"entries", rt.table.size()},
                  {"note", rt.note}};
        lines.push_back("tree " + std::to_string(i) + " roundtrip " + j["direction"].get<std::string>() +
                        " " + (rt.pass ? "pass" : (informational ? "differs (informational)" : "FAIL")) +
                        " max_discrepancy=" + j["max_discrepancy"].dump() +
                        " tolerance=" + j["tolerance"].dump() +
                        " continuity_ok=" + j["continuity_ok"].dump() +
                        " monotone=" + j["monotone"].dump());
        roundtrips.push_back(std::move(j));
      }
    } else {
      const auto rm = make_risk_measure(tree, c);
      CheckOptions opt;
      opt.trials = c.trials;
      opt.seed = c.seed;
      opt.tolerance = c.tol.value_or(1e-7);
      opt.seed_processes = input.seed_processes;
      if (c.roundtrip) throw InputError("--roundtrip applies to acceptability indices");
      if (run_axioms) add_report(i, check_axioms_A(tree, rm, opt));
      if (c.variants) add_report(i, check_A7_variants(tree, rm, opt));
    }
  }
  json report = {{"command", "check"}, {"target", target},   {"seed", c.seed},
                 {"trials", c.trials},  {"trees", trees.size()}, {"results", results},
                 {"passed", passed}};
  if (!roundtrips.empty()) report["roundtrip"] = roundtrips;
  lines.push_back(passed ? "PASS" : "FAIL");
  emit(c, report, lines, out);
  return passed ? kPass : kCheckFailed;
}

int cmd_find(const RunConfig& cfg, std::ostream& out) {
  const std::string target = cfg.measure.empty() ? "draroc" : cfg.measure;
  if (!is_index_measure(target)) throw InputError("'" + target + "' is not an acceptability index");
  RunConfig c = cfg;
  c.measure = target;
  // dRAROC's set is parsed per candidate tree, so only inline specs are allowed.
  const auto spec = set_spec(c);
  if (spec.is_file()) throw InputError("find-counterexample takes inline set specs only");
  CounterexampleSearch search;
  search.seed = c.seed;
  search.workers = std::max(1u, c.workers);

  // Inline singleton/exclude_one sets use each tree's reference measure, so
  // that index is rebuilt per candidate; every other index is built once.
  AcceptabilityIndex index = AcceptabilityIndex::from_atoms(
      target, [c](const ScenarioTree& tree, int t, const AdaptedProcess& d, NodeId atom) {
        return make_index(tree, c).at_atom(tree, t, d, atom);
      });
  if (target == "dglr" || spec.empty() || spec.text.rfind("full_support", 0) == 0 ||
      spec.text.rfind("cap_", 0) == 0) {
    const auto probe = ScenarioTree::regular_uniform(std::vector<std::size_t>{2});
    index = make_index(probe, c);
  }
  const auto result = find_d7_counterexample(index, search, c.budget);
  json report = {{"command", "find-counterexample"}, {"index", target},    {"seed", c.seed},
                 {"budget", c.budget},                 {"examined", result.examined},
                 {"found", result.found()}};
  std::vector<std::string> lines;
  if (!result.found()) {
    lines.push_back("no witness for " + target + " within " + std::to_string(c.budget) +
                    " candidates");
    emit(c, report, lines, out);
    return kSearchExhausted;
  }
  const auto& fx = *result.fixture;
  json set_json;
  if (target == "draroc") {
    set_json = io::measure_set_to_json(
        fx.tree, spec.empty() ? MeasureSet{sets::FullSupport{}} : load_single_set(fx.tree, spec));
  }
  const auto fixture = io::fixture_to_json(fx, set_json);
  {
    std::ofstream f(c.out_path);
    if (!f) throw InputError("cannot write " + c.out_path);
    f << fixture.dump(2) << '\n';
  }
  report["fixture"] = c.out_path;
  report["witness"] = fixture["witness"];
  std::string child_levels;
  for (const auto& ch : fixture["witness"]["children"]) {
    child_levels += " " + ch["node"].get<std::string>() + ":" + scalar_text(ch["level"]);
  }
  lines.push_back("witness at candidate " + std::to_string(fx.candidate) + ": t=" +
                  std::to_string(fx.t) + " atom=" + fx.tree.node(fx.atom).label +
                  " D_t=" + json(fx.payment).dump() + " level=" +
                  scalar_text(io::level_to_json(fx.level)) + " children" + child_levels);
  lines.push_back("fixture written to " + c.out_path);
  emit(c, report, lines, out);
  return kPass;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic coherent risk measures and acceptability indices on scenario trees"};
  app.require_subcommand(1);
  RunConfig cfg;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "Seed for all randomness")->capture_default_str();
    sub->add_option("--format", cfg.format, "Output format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    sub->add_option("--set", cfg.set_spec, "Measure set: KIND[:a=..] or a JSON file");
    sub->add_option("--h-scale", cfg.h_scale, "Limit ratios use h(x) = scale * x")
        ->capture_default_str();
  };
  const auto measure_check = CLI::IsMember(
      {"dcrm", "dglr", "draroc", "upper-limit", "lower-limit", "family-index"});

  auto* eval = app.add_subcommand("eval", "Evaluate a measure on a process");
  common(eval);
  eval->add_option("--tree", cfg.tree_path, "Tree JSON file")->required();
  eval->add_option("--process", cfg.process, "Process name in the tree file")->required();
  eval->add_option("--time", cfg.times, "Times, comma separated (default: all)");
  eval->add_option("--measure", cfg.measure, "Measure to evaluate")->required()->check(measure_check);
  eval->add_option("--dual-level", cfg.dual_level, "Evaluate rho^x dual to the index at this x");

  auto* check = app.add_subcommand("check", "Run axiom, variant, consistency or duality checks");
  common(check);
  check->add_option("target", cfg.positional,
                    "dcrm|dglr|draroc|upper-limit|lower-limit|family-index|sets, then set spec");
  check->add_option("--measure", cfg.measure, "Target (alternative to the positional)")
      ->check(measure_check);
  check->add_option("--tree", cfg.tree_path, "Tree JSON file (default: random trees)");
  check->add_option("--trees", cfg.trees, "Number of random trees")->capture_default_str();
  check->add_option("--trials", cfg.trials, "Randomized trials per tree")->capture_default_str();
  check->add_option("--tol", cfg.tol, "Tolerance override")->check(CLI::PositiveNumber);
  check->add_option("--axioms", cfg.axioms, "A or D")->check(CLI::IsMember({"A", "D"}));
  check->add_flag("--variants", cfg.variants, "Also check the equivalent/variant forms");
  check->add_flag("--roundtrip", cfg.roundtrip, "Duality round trip");
  check->add_option("--x-grid", cfg.x_grid, "geom:LO:HI:COUNT or comma list")->capture_default_str();
  check->add_option("--corpus", cfg.corpus, "Processes in the round-trip corpus")->capture_default_str();
  check->add_option("--dual-level", cfg.dual_level, "Check rho^x dual to the index at this x");
  check->add_flag("--strong-consistency", cfg.strong, "Strong consistency of a set");
  check->add_flag("--dynamic-consistency", cfg.dynamic, "Dynamic consistency of a sequence");
  check->add_flag("--weak-consistency", cfg.weak, "Weak consistency of a set");

  auto* find = app.add_subcommand("find-counterexample", "Search for a (D7) violation");
  common(find);
  find->add_option("--measure", cfg.measure, "Index to falsify (default draroc)")->check(measure_check);
  find->add_option("--budget", cfg.budget, "Candidates to try")->capture_default_str();
  find->add_option("--workers", cfg.workers, "Worker threads")->capture_default_str();
  find->add_option("--out", cfg.out_path, "Fixture output path")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInputError;
  }

  try {
    if (eval->parsed()) return cmd_eval(cfg, out);
    if (check->parsed()) return cmd_check(cfg, out);
    return cmd_find(cfg, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const OracleRefusal& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  }
}

}  // namespace dynrisk::cli
