#include "dynrisk/scenario_tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "dynrisk/errors.hpp"

namespace dynrisk {

ValidationReport validate_tree(const TreeSpec& spec, double probability_tolerance) {
  ValidationReport report;
  auto fail = [&report](std::string msg) { report.failures.push_back(std::move(msg)); };

  if (spec.horizon < 1) fail("horizon must be >= 1, got " + std::to_string(spec.horizon));
  if (spec.nodes.empty()) {
    fail("tree has no nodes");
    return report;
  }

  std::unordered_map<std::string, const TreeSpec::RawNode*> by_id;
  for (const auto& n : spec.nodes) {
    if (!by_id.emplace(n.id, &n).second) fail("duplicate node id '" + n.id + "'");
  }

  std::vector<const TreeSpec::RawNode*> roots;
  for (const auto& n : spec.nodes) {
    if (n.time < 0 || n.time > spec.horizon) {
      fail("node '" + n.id + "' has time " + std::to_string(n.time) + " outside [0, " +
           std::to_string(spec.horizon) + "]");
    }
    if (!n.parent) {
      roots.push_back(&n);
      if (n.time != 0) fail("root '" + n.id + "' is not at time 0");
    } else {
      auto it = by_id.find(*n.parent);
      if (it == by_id.end()) {
        fail("orphan node '" + n.id + "': parent '" + *n.parent + "' does not exist");
      } else {
        const auto& siblings = it->second->children;
        if (std::find(siblings.begin(), siblings.end(), n.id) == siblings.end()) {
          fail("node '" + n.id + "' is not listed among the children of its parent '" +
               *n.parent + "'");
        }
        if (n.time != it->second->time + 1) {
          fail("time-level gap: node '" + n.id + "' at time " + std::to_string(n.time) +
               " has parent at time " + std::to_string(it->second->time));
        }
      }
    }
    for (const auto& c : n.children) {
      auto it = by_id.find(c);
      if (it == by_id.end()) {
        fail("node '" + n.id + "' lists unknown child '" + c + "'");
      } else if (it->second->parent != n.id) {
        fail("child '" + c + "' of '" + n.id + "' does not name it as parent");
      }
    }
    if (n.children.empty() && n.time < spec.horizon) {
      fail("leaf before horizon: node '" + n.id + "' at time " + std::to_string(n.time) +
           " has no children (horizon " + std::to_string(spec.horizon) + ")");
    }
    if (!n.children.empty() && n.time >= spec.horizon) {
      fail("node '" + n.id + "' at the horizon has children");
    }
  }
  if (roots.size() != 1) {
    fail("expected exactly one root, found " + std::to_string(roots.size()));
  }

  // Reachability (catches cycles and disconnected components).
  if (roots.size() == 1) {
    std::unordered_set<std::string> seen;
    std::deque<const TreeSpec::RawNode*> queue{roots.front()};
    seen.insert(roots.front()->id);
    while (!queue.empty()) {
      const auto* n = queue.front();
      queue.pop_front();
      for (const auto& c : n->children) {
        auto it = by_id.find(c);
        if (it != by_id.end() && seen.insert(c).second) queue.push_back(it->second);
      }
    }
    for (const auto& n : spec.nodes) {
      if (!seen.contains(n.id)) fail("orphan node '" + n.id + "' is unreachable from the root");
    }
  }

  double sum = 0.0;
  for (const auto& n : spec.nodes) {
    if (!n.children.empty()) continue;
    auto it = spec.reference_probability.find(n.id);
    if (it == spec.reference_probability.end()) {
      fail("leaf '" + n.id + "' has no reference probability");
      continue;
    }
    if (!(it->second > 0.0) || !std::isfinite(it->second)) {
      fail("non-positive probability for leaf '" + n.id + "'");
    }
    sum += it->second;
  }
  for (const auto& [id, p] : spec.reference_probability) {
    auto it = by_id.find(id);
    if (it == by_id.end() || !it->second->children.empty()) {
      fail("reference probability given for '" + id + "', which is not a leaf");
    }
  }
  if (std::abs(sum - 1.0) > probability_tolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "probabilities sum to " << sum << ", expected 1 (sum != 1)";
    fail(os.str());
  }
  return report;
}

ScenarioTree ScenarioTree::from_spec(const TreeSpec& spec) {
  auto report = validate_tree(spec);
  if (!report.ok()) {
    std::string msg = "invalid tree:";
    for (const auto& f : report.failures) msg += "\n  - " + f;
    throw InputError(msg);
  }
  std::unordered_map<std::string, const TreeSpec::RawNode*> by_id;
  const TreeSpec::RawNode* root = nullptr;
  for (const auto& n : spec.nodes) {
    by_id.emplace(n.id, &n);
    if (!n.parent) root = &n;
  }

  ScenarioTree tree;
  tree.horizon_ = spec.horizon;
  std::deque<const TreeSpec::RawNode*> queue{root};
  tree.nodes_.push_back(Node{root->id, 0, std::nullopt, {}, 0, 0});
  std::size_t head = 0;
  while (!queue.empty()) {
    const auto* raw = queue.front();
    queue.pop_front();
    for (const auto& c : raw->children) {
      const auto* child = by_id.at(c);
      NodeId id = tree.nodes_.size();
      tree.nodes_.push_back(Node{child->id, child->time, head, {}, 0, 0});
      tree.nodes_[head].children.push_back(id);
      queue.push_back(child);
    }
    ++head;
  }
  for (const auto& n : tree.nodes_) {
    if (n.children.empty()) tree.probabilities_.push_back(spec.reference_probability.at(n.label));
  }
  tree.finalize();
  return tree;
}

ScenarioTree ScenarioTree::from_child_counts(std::span<const std::size_t> child_counts,
                                             std::span<const double> leaf_probabilities) {
  ScenarioTree tree;
  tree.nodes_.push_back(Node{"n0", 0, std::nullopt, {}, 0, 0});
  for (std::size_t i = 0; i < child_counts.size(); ++i) {
    if (i >= tree.nodes_.size()) throw InputError("child counts describe a disconnected tree");
    if (child_counts[i] == 0) throw InputError("internal node with zero children");
    for (std::size_t k = 0; k < child_counts[i]; ++k) {
      NodeId id = tree.nodes_.size();
      tree.nodes_.push_back(
          Node{"n" + std::to_string(id), tree.nodes_[i].time + 1, i, {}, 0, 0});
      tree.nodes_[i].children.push_back(id);
    }
  }
  // Convert to a spec so that every invariant goes through one validator.
  TreeSpec spec;
  std::size_t leaf = 0;
  for (const auto& n : tree.nodes_) spec.horizon = std::max(spec.horizon, n.time);
  for (const auto& n : tree.nodes_) {
    TreeSpec::RawNode raw{n.label, n.time, std::nullopt, {}};
    if (n.parent) raw.parent = tree.nodes_[*n.parent].label;
    for (auto c : n.children) raw.children.push_back(tree.nodes_[c].label);
    if (n.children.empty()) {
      if (leaf >= leaf_probabilities.size()) throw InputError("too few leaf probabilities");
      spec.reference_probability[n.label] = leaf_probabilities[leaf++];
    }
    spec.nodes.push_back(std::move(raw));
  }
  if (leaf != leaf_probabilities.size()) throw InputError("too many leaf probabilities");
  return from_spec(spec);
}

ScenarioTree ScenarioTree::regular(std::span<const std::size_t> branching,
                                   std::span<const double> leaf_probabilities) {
  std::vector<std::size_t> counts;
  std::size_t width = 1;
  for (auto b : branching) {
    counts.insert(counts.end(), width, b);
    width *= b;
  }
  return from_child_counts(counts, leaf_probabilities);
}

ScenarioTree ScenarioTree::regular_uniform(std::span<const std::size_t> branching) {
  std::size_t leaves = 1;
  for (auto b : branching) leaves *= b;
  std::vector<double> p(leaves, 1.0 / static_cast<double>(leaves));
  return regular(branching, p);
}

void ScenarioTree::finalize() {
  level_begin_.assign(static_cast<std::size_t>(horizon_) + 2, nodes_.size());
  for (NodeId id = nodes_.size(); id-- > 0;) level_begin_[nodes_[id].time] = id;
  level_begin_[horizon_ + 1] = nodes_.size();
  first_leaf_ = level_begin_[horizon_];

  for (NodeId id = nodes_.size(); id-- > 0;) {
    auto& n = nodes_[id];
    by_label_.emplace(n.label, id);
    if (n.children.empty()) {
      n.leaf_begin = id - first_leaf_;
      n.leaf_end = n.leaf_begin + 1;
    } else {
      n.leaf_begin = nodes_[n.children.front()].leaf_begin;
      n.leaf_end = nodes_[n.children.back()].leaf_end;
    }
  }

  masses_.assign(nodes_.size(), 0.0);
  for (NodeId id = nodes_.size(); id-- > 0;) {
    const auto& n = nodes_[id];
    if (n.children.empty()) {
      masses_[id] = probabilities_[n.leaf_begin];
    } else {
      for (auto c : n.children) masses_[id] += masses_[c];
    }
  }

  const auto width = static_cast<std::size_t>(horizon_) + 1;
  paths_.assign(leaf_count() * width, 0);
  for (std::size_t leaf = 0; leaf < leaf_count(); ++leaf) {
    NodeId cur = leaf_node(leaf);
    while (true) {
      paths_[leaf * width + nodes_[cur].time] = cur;
      if (!nodes_[cur].parent) break;
      cur = *nodes_[cur].parent;
    }
  }
}

const Node& ScenarioTree::node(NodeId id) const {
  if (id >= nodes_.size()) throw InputError("unknown node id " + std::to_string(id));
  return nodes_[id];
}

void ScenarioTree::require_time(int t) const {
  if (t < 0 || t > horizon_) {
    throw InputError("time " + std::to_string(t) + " outside [0, " + std::to_string(horizon_) +
                     "]");
  }
}

std::ranges::iota_view<NodeId, NodeId> ScenarioTree::nodes_at(int t) const {
  require_time(t);
  return std::views::iota(level_begin_[t], level_begin_[t + 1]);
}

std::size_t ScenarioTree::level_size(int t) const {
  require_time(t);
  return level_begin_[t + 1] - level_begin_[t];
}

std::size_t ScenarioTree::slot(NodeId id) const { return id - level_begin_[node(id).time]; }

std::ranges::iota_view<std::size_t, std::size_t> ScenarioTree::atom(NodeId id) const {
  const auto& n = node(id);
  return std::views::iota(n.leaf_begin, n.leaf_end);
}

std::size_t ScenarioTree::leaf_index(NodeId id) const {
  if (!is_leaf(id) || id >= nodes_.size()) {
    throw InputError("node " + std::to_string(id) + " is not a leaf");
  }
  return id - first_leaf_;
}

NodeId ScenarioTree::ancestor(std::size_t leaf, int t) const {
  return paths_[leaf * (static_cast<std::size_t>(horizon_) + 1) + static_cast<std::size_t>(t)];
}

NodeId ScenarioTree::ancestor_of_node(NodeId id, int t) const {
  const auto& n = node(id);
  if (t > n.time) throw InputError("ancestor time after node time");
  return ancestor(n.leaf_begin, t);
}

std::optional<NodeId> ScenarioTree::find(std::string_view label) const {
  auto it = by_label_.find(std::string(label));
  if (it == by_label_.end()) return std::nullopt;
  return it->second;
}

NodeId ScenarioTree::require(std::string_view label) const {
  auto id = find(label);
  if (!id) throw InputError("unknown node id '" + std::string(label) + "'");
  return *id;
}

std::vector<std::size_t> ScenarioTree::atom_of(std::string_view label) const {
  std::vector<std::size_t> out;
  for (auto leaf : atom(require(label))) out.push_back(leaf);
  return out;
}

AdaptedProcess AdaptedProcess::zeros(const ScenarioTree& tree) {
  return AdaptedProcess(std::vector<double>(tree.node_count(), 0.0));
}

AdaptedProcess AdaptedProcess::single_payment(const ScenarioTree& tree, int s, double c) {
  auto d = zeros(tree);
  for (auto id : tree.nodes_at(s)) d[id] = c;
  return d;
}

AdaptedProcess AdaptedProcess::from_labels(const ScenarioTree& tree,
                                           const std::map<std::string, double>& values) {
  auto d = zeros(tree);
  std::vector<bool> seen(tree.node_count(), false);
  for (const auto& [label, v] : values) {
    auto id = tree.require(label);
    d[id] = v;
    seen[id] = true;
  }
  for (NodeId id = 0; id < tree.node_count(); ++id) {
    if (!seen[id]) {
      throw InputError("process has no value for node '" + tree.node(id).label + "'");
    }
  }
  return d;
}

AdaptedProcess AdaptedProcess::terminal(const ScenarioTree& tree, std::span<const double> x) {
  if (x.size() != tree.leaf_count()) throw InputError("terminal variable has wrong size");
  auto d = zeros(tree);
  for (std::size_t leaf = 0; leaf < x.size(); ++leaf) d[tree.leaf_node(leaf)] = x[leaf];
  return d;
}

AdaptedProcess AdaptedProcess::plus_payment(const ScenarioTree& tree, int t,
                                            std::span<const double> m, int s) const {
  tree.require_time(s);
  if (s < t) throw InputError("payment time precedes measurability time");
  if (m.size() != tree.level_size(t)) throw InputError("m must have one value per time-t node");
  AdaptedProcess out = *this;
  for (auto id : tree.nodes_at(s)) out[id] += m[tree.slot(tree.ancestor_of_node(id, t))];
  return out;
}

AdaptedProcess AdaptedProcess::scaled(double lambda) const {
  AdaptedProcess out = *this;
  for (auto& v : out.values_) v *= lambda;
  return out;
}

AdaptedProcess AdaptedProcess::operator+(const AdaptedProcess& other) const {
  AdaptedProcess out = *this;
  for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] += other.values_[i];
  return out;
}

AdaptedProcess AdaptedProcess::operator-(const AdaptedProcess& other) const {
  AdaptedProcess out = *this;
  for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] -= other.values_[i];
  return out;
}

double conditional_expectation_at(const ScenarioTree& tree, std::span<const double> q,
                                  std::span<const double> x, NodeId node,
                                  NullAtomPolicy policy) {
  double mass = 0.0;
  double total = 0.0;
  for (auto leaf : tree.atom(node)) {
    mass += q[leaf];
    total += q[leaf] * x[leaf];
  }
  if (!(mass > 0.0)) {
    if (policy == NullAtomPolicy::closure) return 0.0;
    throw NumericalError("conditioning on null atom '" + tree.node(node).label + "'");
  }
  return total / mass;
}

SliceValues conditional_expectation(const ScenarioTree& tree, std::span<const double> q,
                                    std::span<const double> x, int t, NullAtomPolicy policy) {
  if (q.size() != tree.leaf_count() || x.size() != tree.leaf_count()) {
    throw InputError("measure and variable must have one entry per leaf");
  }
  SliceValues out;
  out.reserve(tree.level_size(t));
  for (auto id : tree.nodes_at(t)) out.push_back(conditional_expectation_at(tree, q, x, id, policy));
  return out;
}

StateVector cumulative_from(const ScenarioTree& tree, const AdaptedProcess& d, int t) {
  tree.require_time(t);
  if (d.size() != tree.node_count()) throw InputError("process size does not match tree");
  StateVector out(tree.leaf_count(), 0.0);
  for (std::size_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
    double sum = 0.0;
    for (int s = t; s <= tree.horizon(); ++s) sum += d[tree.ancestor(leaf, s)];
    out[leaf] = sum;
  }
  return out;
}

StateVector broadcast(const ScenarioTree& tree, int t, std::span<const double> slice) {
  if (slice.size() != tree.level_size(t)) throw InputError("slice size does not match level");
  StateVector out(tree.leaf_count(), 0.0);
  std::size_t k = 0;
  for (auto id : tree.nodes_at(t)) {
    for (auto leaf : tree.atom(id)) out[leaf] = slice[k];
    ++k;
  }
  return out;
}

}  // namespace dynrisk
