#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dynrisk/duality.hpp"
#include "dynrisk/errors.hpp"
#include "dynrisk/generators.hpp"
#include "dynrisk/indices.hpp"
#include "dynrisk/measure_sets.hpp"
#include "dynrisk/oracle.hpp"
#include "dynrisk/risk_measures.hpp"
#include "test_support.hpp"

namespace {

using namespace dynrisk;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::vector<ScenarioTree> trees(std::size_t n, std::uint64_t seed, int max_depth,
                                std::size_t max_branching, std::size_t max_leaves) {
  TreeShape shape;
  shape.max_depth = max_depth;
  shape.max_branching = max_branching;
  shape.max_leaves = max_leaves;
  std::vector<ScenarioTree> out;
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = seeded_rng(seed, i);
    out.push_back(random_tree(rng, shape));
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

Outcome cash_equivalence() {
  const double cs[] = {-5.0, -1.0, 0.0, 0.3, 2.0};
  double worst = 0.0;
  std::size_t evaluations = 0;
  std::uint64_t stream = 0;
  for (const auto& tree : trees(50, 1, 4, 3, 81)) {
    auto rng = seeded_rng(2, stream++);
    const std::vector<MeasureSet> family{sets::FullSupport{}, sets::CapUpper{2.0},
                                         sets::CapLower{2.0}, sets::Singleton{random_probability(tree, rng)}};
    for (const auto& set : family) {
      const auto seq = MeasureSetSequence::constant(tree, set);
      for (int s = 0; s <= tree.horizon(); ++s) {
        for (double c : cs) {
          const auto d = AdaptedProcess::single_payment(tree, s, c);
          for (int t = 0; t <= s; ++t) {
            for (double v : eval_dcrm_from_sets(tree, seq, d, t)) {
              worst = std::max(worst, std::abs(v + c));
              ++evaluations;
            }
          }
        }
      }
    }
  }
  return {worst <= 1e-12, std::to_string(evaluations) + " atom values, max |rho + c| = " + fmt(worst)};
}

Outcome full_support_identity() {
  std::size_t mismatches = 0;
  std::uint64_t stream = 0;
  for (const auto& tree : trees(200, 3, 4, 3, 81)) {
    auto rng = seeded_rng(4, stream++);
    const auto x = random_terminal(tree, rng, -10.0, 10.0);
    const int t = static_cast<int>(stream % static_cast<std::uint64_t>(tree.horizon() + 1));
    const auto v = robust_conditional_expectation(tree, sets::FullSupport{}, x, t);
    for (auto id : tree.nodes_at(t)) {
      const auto atom = tree.atom(id);
      double m = x[*atom.begin()];
      for (auto leaf : atom) m = std::min(m, x[leaf]);
      if (v[tree.slot(id)] != m) ++mismatches;
    }
  }
  return {mismatches == 0, "200 instances, " + std::to_string(mismatches) + " inexact atoms"};
}

Outcome cap_sets_vs_oracle() {
  double worst = 0.0;
  double unit_worst = 0.0;
  std::size_t by_vertices = 0;
  std::size_t by_lp = 0;
  std::uint64_t stream = 0;
  oracle::OracleConfig forced{.route = oracle::Route::vertex_enumeration};
  for (const auto& tree : trees(200, 5, 4, 3, 20)) {
    auto rng = seeded_rng(6, stream++);
    const auto x = random_terminal(tree, rng);
    std::uniform_real_distribution<double> cap(1.0, 4.0);
    const double a = cap(rng);
    const MeasureSet set = stream % 2 == 0 ? MeasureSet{sets::CapUpper{a}} : MeasureSet{sets::CapLower{a}};
    for (int t = 0; t < tree.horizon(); ++t) {
      const auto fast = robust_conditional_expectation(tree, set, x, t);
      for (auto id : tree.nodes_at(t)) {
        double slow;
        try {
          slow = oracle::brute_inf_at(tree, set, x, id, forced);
          ++by_vertices;
        } catch (const OracleRefusal&) {
          slow = oracle::brute_inf_at(tree, set, x, id, {.route = oracle::Route::linear_program});
          ++by_lp;
        }
        worst = std::max(worst, std::abs(fast[tree.slot(id)] - slow));
      }
      const auto unit = robust_conditional_expectation(tree, sets::CapUpper{1.0}, x, t);
      const auto plain = conditional_expectation(tree, tree.reference_probability(), x, t);
      for (std::size_t k = 0; k < unit.size(); ++k) unit_worst = std::max(unit_worst, std::abs(unit[k] - plain[k]));
    }
  }
  return {worst <= 1e-9 && unit_worst <= 1e-12 && by_vertices >= 200,
          "200 instances, " + std::to_string(by_vertices) + " atoms by vertex enumeration, " +
              std::to_string(by_lp) + " by LP, max gap " + fmt(worst) + ", cap 1 gap " + fmt(unit_worst)};
}

Outcome density_bound() {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst = -INFINITY;
  std::uint64_t stream = 0;
  const auto corpus = trees(50, 7, 4, 3, 81);
  while (samples < 1000) {
    const auto& tree = corpus[stream % corpus.size()];
    const double a = (stream % 2 == 0) ? 1.5 : 3.0;
    auto rng = seeded_rng(8, stream++);
    const auto q = sample_member(tree, sets::CapUpper{a}, rng);
    ++samples;
    if (!is_member(tree, q, sets::CapUpper{a})) ++violations;
    const auto z = density_process(tree, q);
    for (NodeId id = 0; id < tree.node_count(); ++id) {
      const double excess = z[id] - std::pow(a, tree.node(id).time);
      worst = std::max(worst, excess);
      if (excess > 1e-12) ++violations;
    }
  }
  return {violations == 0, std::to_string(samples) + " members, max(z - a^t) = " + fmt(worst)};
}

Outcome consistency_suite() {
  std::vector<std::string> failed;
  std::size_t evaluations = 0;
  const auto record = [&](const ConsistencyReport& r, const std::string& what) {
    evaluations += r.evaluations;
    if (!r.passed) failed.push_back(what);
  };
  std::uint64_t seed = 0;
  for (const auto& tree : trees(5, 9, 3, 3, 27)) {
    auto rng = seeded_rng(10, seed);
    const std::vector<MeasureSet> standard{sets::Singleton{random_probability(tree, rng)}, sets::FullSupport{},
                                           sets::CapUpper{3.0}, sets::CapLower{3.0}};
    for (const auto& set : standard) {
      ++seed;
      record(check_strong_consistency(tree, set, 200, seed), "strong " + kind_name(set));
      record(check_dynamic_consistency(tree, MeasureSetSequence::constant(tree, set), 200, seed),
             "dynamic constant " + kind_name(set));
    }
    MeasureSetSequence excl;
    for (int t = 0; t <= tree.horizon(); ++t) excl.sets.push_back(sets::ExcludeOne{random_probability(tree, rng)});
    record(check_dynamic_consistency(tree, excl, 200, ++seed), "dynamic exclude_one");
  }
  const auto tree = testing::binary(2);
  StateVector left(4, 0.01), right(4, 0.01);
  left[0] = 0.97;
  right[3] = 0.97;
  const MeasureSetSequence alternating{{sets::Singleton{left}, sets::Singleton{right}, sets::Singleton{left}}};
  const bool caught = !check_dynamic_consistency(tree, alternating, 200, 0).passed;
  if (!caught) failed.push_back("alternating singletons not detected");
  std::string detail = "5 trees x 200 trials, " + std::to_string(evaluations) +
                       " atom comparisons, alternating sequence rejected";
  for (const auto& f : failed) detail += "; " + f;
  return {failed.empty(), detail};
}

Outcome dglr_axioms() {
  std::vector<std::string> failed;
  double min_effective = 1.0;
  std::uint64_t seed = 0;
  for (const auto& tree : trees(5, 11, 3, 3, 27)) {
    const auto axioms = check_axioms_D(tree, dglr_index(), 500, ++seed);
    const auto variants = check_D_variants(tree, dglr_index(), 500, seed);
    for (const auto* rep : {&axioms, &variants}) {
      for (const auto& r : rep->results) {
        if (!r.passed) failed.push_back(r.name + ": " + r.witness);
      }
    }
    min_effective = std::min(min_effective, axioms.at("D7").effective_ratio());
  }
  std::string detail = "5 trees x 500 trials, min D7 effective ratio " + fmt(min_effective);
  for (const auto& f : failed) detail += "; " + f;
  return {failed.empty() && min_effective >= 0.3, detail};
}

Outcome draroc_falsification() {
  CounterexampleSearch config;
  config.workers = std::max(1u, std::thread::hardware_concurrency());
  const auto hit = find_d7_counterexample(draroc_index(), config, 100000);
  const auto miss = find_d7_counterexample(dglr_index(), config, 100000);
  bool pattern = false;
  std::string detail;
  if (hit.found()) {
    const auto& fx = *hit.fixture;
    pattern = fx.payment > 0.0 && !fx.children.empty() && !fx.level.is_infinite();
    for (const auto& c : fx.children) pattern = pattern && fx.level < c.level;
    detail = "draroc witness at candidate " + std::to_string(fx.candidate) + " (t=" + std::to_string(fx.t) +
             ", D_t=" + fmt(fx.payment) + ", level " + fx.level.to_string() + " below every child)";
  } else {
    detail = "draroc: no witness in " + std::to_string(hit.examined) + " candidates";
  }
  detail += miss.found() ? "; dglr witness found" : "; dglr: none in " + std::to_string(miss.examined);
  return {hit.found() && pattern && !miss.found() && miss.examined == 100000, detail};
}

Outcome duality_roundtrip() {
  TreeShape shape;
  shape.min_depth = 2;
  shape.max_depth = 2;
  shape.max_branching = 2;
  auto rng = seeded_rng(12);
  const auto tree = random_tree(rng, shape);
  std::vector<AdaptedProcess> corpus;
  for (int i = 0; i < 50; ++i) corpus.push_back(random_process(tree, rng));
  const auto grid = geometric_grid(1e-3, 1e3, 32);
  const auto family = risk_family_from_sets(limit_family(LimitDirection::upper), "upper-cap");
  const auto a = roundtrip_from_family(tree, family, grid, corpus, 2e-5);
  const auto b = roundtrip_from_index(tree, dglr_index(), grid, corpus, 2e-5);
  return {a.pass && b.pass,
          "32-point grid x 50 processes, family max " + fmt(a.max_discrepancy) + ", dglr max " + fmt(b.max_discrepancy)};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
  const std::string cli = DYNRISK_CLI;
  const std::string base = "/tmp/dynrisk_acceptance_" + std::to_string(::getpid());
  const std::string cmds[] = {
      " check dglr --axioms D --variants --trials 50 --seed 3 --format json",
      " check upper-limit --roundtrip --trees 1 --corpus 5 --x-grid geom:1e-2:1e2:6 --seed 3 --format json",
      " find-counterexample --measure draroc --budget 500 --seed 0 --format json --out " + base + "_fx.json",
  };
  std::size_t identical = 0;
  for (const auto& c : cmds) {
    run_shell(cli + c + " > " + base + "_a.json 2>/dev/null");
    run_shell(cli + c + " > " + base + "_b.json 2>/dev/null");
    const auto a = slurp(base + "_a.json");
    if (!a.empty() && a == slurp(base + "_b.json")) ++identical;
  }
  const int script = run_shell(std::string(DYNRISK_EXIT_SCRIPT) + " " + cli + " " + DYNRISK_FIXTURES +
                               " > " + base + "_script.txt 2>&1");
  const auto log = slurp(base + "_script.txt");
  for (const char* suffix : {"_a.json", "_b.json", "_fx.json", "_script.txt"}) std::remove((base + suffix).c_str());
  std::string detail = std::to_string(identical) + "/3 commands byte-identical, exit-code script " +
                       (script == 0 ? "passed" : "failed");
  if (script != 0) detail += "\n" + log;
  return {identical == 3 && script == 0, detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "cash equivalence", 10, cash_equivalence},
      {2, "full-support identity", 5, full_support_identity},
      {3, "cap sets vs oracle", 60, cap_sets_vs_oracle},
      {4, "density bound", 30, density_bound},
      {5, "consistency suite", 60, consistency_suite},
      {6, "dglr axioms", 120, dglr_axioms},
      {7, "draroc falsification", 120, draroc_falsification},
      {8, "duality round trip", 300, duality_roundtrip},
      {9, "cli determinism", 600, cli_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s %d %-22s %7.2fs/%gs  %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                c.budget_seconds, out.detail.c_str(), in_time ? "" : " (over time budget)");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
