#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dynrisk {

/// Internal node index. Ids are contiguous and level-ordered: all time-t nodes
/// precede all time-(t+1) nodes, and within a level they follow the parents'
/// order. As a consequence every atom owns a contiguous range of leaves.
using NodeId = std::size_t;

/// A real value per leaf (state). Indexed by leaf position 0..leaf_count()-1,
/// not by NodeId. Used for terminal random variables and for probabilities.
using StateVector = std::vector<double>;

/// One value per node of a single time level, aligned with nodes_at(t).
using SliceValues = std::vector<double>;

struct Node {
  std::string label;
  int time = 0;
  std::optional<NodeId> parent;
  std::vector<NodeId> children;
  std::size_t leaf_begin = 0;  // atom = leaves [leaf_begin, leaf_end)
  std::size_t leaf_end = 0;
};

/// Raw, unvalidated tree description with string ids (the JSON shape).
struct TreeSpec {
  struct RawNode {
    std::string id;
    int time = 0;
    std::optional<std::string> parent;
    std::vector<std::string> children;
  };
  int horizon = 0;
  std::vector<RawNode> nodes;
  std::map<std::string, double> reference_probability;
};

struct ValidationReport {
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};

/// Checks every structural invariant of a tree description. Never throws.
ValidationReport validate_tree(const TreeSpec& spec, double probability_tolerance = 1e-9);

/// Finite filtered probability space as a rooted tree. Level t nodes are the
/// atoms generating F_t; leaves are the states. Immutable after construction.
class ScenarioTree {
 public:
  /// Validates and builds; throws InputError listing every failed invariant.
  static ScenarioTree from_spec(const TreeSpec& spec);

  /// Builds a tree from per-node child counts in level order (root first,
  /// internal nodes only) and leaf probabilities in level order. Labels are
  /// "n<id>".
  static ScenarioTree from_child_counts(std::span<const std::size_t> child_counts,
                                        std::span<const double> leaf_probabilities);

  /// Every internal node at time t has branching[t] children.
  static ScenarioTree regular(std::span<const std::size_t> branching,
                              std::span<const double> leaf_probabilities);
  static ScenarioTree regular_uniform(std::span<const std::size_t> branching);

  int horizon() const { return horizon_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const { return probabilities_.size(); }
  NodeId root() const { return 0; }

  const Node& node(NodeId id) const;
  std::ranges::iota_view<NodeId, NodeId> nodes_at(int t) const;
  std::size_t level_size(int t) const;
  /// Position of a time-t node within nodes_at(t).
  std::size_t slot(NodeId id) const;

  std::ranges::iota_view<std::size_t, std::size_t> atom(NodeId id) const;
  NodeId leaf_node(std::size_t leaf) const { return first_leaf_ + leaf; }
  std::size_t leaf_index(NodeId id) const;
  bool is_leaf(NodeId id) const { return id >= first_leaf_; }
  NodeId ancestor(std::size_t leaf, int t) const;
  NodeId ancestor_of_node(NodeId id, int t) const;

  std::span<const double> reference_probability() const { return probabilities_; }
  /// P(atom of id) under the reference measure.
  double mass(NodeId id) const { return masses_[id]; }

  std::optional<NodeId> find(std::string_view label) const;
  /// Throws InputError for unknown labels.
  NodeId require(std::string_view label) const;

  /// Same as atom() but addressed by label; throws InputError when unknown.
  std::vector<std::size_t> atom_of(std::string_view label) const;

  void require_time(int t) const;

 private:
  ScenarioTree() = default;
  void finalize();

  int horizon_ = 0;
  std::vector<Node> nodes_;
  std::vector<NodeId> level_begin_;  // size horizon_+2
  NodeId first_leaf_ = 0;
  std::vector<double> probabilities_;
  std::vector<double> masses_;
  std::vector<NodeId> paths_;  // leaf * (T+1) + t -> ancestor
  std::unordered_map<std::string, NodeId> by_label_;
};

/// A real value on every node: a process adapted to the tree filtration.
class AdaptedProcess {
 public:
  AdaptedProcess() = default;
  explicit AdaptedProcess(std::vector<double> values) : values_(std::move(values)) {}
  static AdaptedProcess zeros(const ScenarioTree& tree);
  /// c at every time-s node, 0 elsewhere.
  static AdaptedProcess single_payment(const ScenarioTree& tree, int s, double c);
  /// Values by node label; missing nodes are an InputError.
  static AdaptedProcess from_labels(const ScenarioTree& tree,
                                    const std::map<std::string, double>& values);
  /// Places a terminal variable on the leaves, zero elsewhere.
  static AdaptedProcess terminal(const ScenarioTree& tree, std::span<const double> x);

  double operator[](NodeId id) const { return values_[id]; }
  double& operator[](NodeId id) { return values_[id]; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }

  /// Adds m (an F_t-measurable variable given per time-t node) at every
  /// time-s node, s >= t. This is D + m 1_{s}.
  AdaptedProcess plus_payment(const ScenarioTree& tree, int t, std::span<const double> m,
                              int s) const;
  AdaptedProcess scaled(double lambda) const;
  AdaptedProcess operator+(const AdaptedProcess& other) const;
  AdaptedProcess operator-(const AdaptedProcess& other) const;

  friend bool operator==(const AdaptedProcess&, const AdaptedProcess&) = default;

 private:
  std::vector<double> values_;
};

enum class NullAtomPolicy {
  strict,   // conditioning on a Q-null atom throws NumericalError
  closure,  // the atom's value is defined as 0
};

/// E_Q[X | F_t] on each time-t atom. Q and X are leaf-indexed.
SliceValues conditional_expectation(const ScenarioTree& tree, std::span<const double> q,
                                    std::span<const double> x, int t,
                                    NullAtomPolicy policy = NullAtomPolicy::strict);

/// E_Q[X | atom of node] for a single node.
double conditional_expectation_at(const ScenarioTree& tree, std::span<const double> q,
                                  std::span<const double> x, NodeId node,
                                  NullAtomPolicy policy = NullAtomPolicy::strict);

/// Per leaf: sum of D along the path from the time-t ancestor down to the leaf.
StateVector cumulative_from(const ScenarioTree& tree, const AdaptedProcess& d, int t);

/// Spreads per-node time-t values onto the leaves of each atom.
StateVector broadcast(const ScenarioTree& tree, int t, std::span<const double> slice);

}  // namespace dynrisk
