#pragma once

#include <compare>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace spalift {

using Action = std::string;
using StateId = std::string;

struct ModelError : std::runtime_error {
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

/// One rated transition of a sequential process. Parallel entries with the
/// same (source, action, target) triple are allowed and kept separate.
struct LocalTransition {
  StateId source;
  Action action;
  double rate = 0.0;  // must be > 0
  StateId target;

  bool is_selfloop() const { return source == target; }
  friend bool operator==(const LocalTransition&, const LocalTransition&) = default;
};

/// A leaf of the composition tree: named state machine with rated actions.
struct SequentialProcess {
  std::string name;
  std::vector<StateId> states;  // ordered; first mention order by convention
  StateId initial;
  std::vector<LocalTransition> transitions;

  bool has_state(const StateId& s) const;
  /// Indices into `transitions` leaving `s`.
  std::vector<int> transitions_from(const StateId& s) const;
  /// True if some transition (s, a, s) exists syntactically.
  bool has_selfloop(const StateId& s, const Action& a) const;
  /// All action labels appearing on transitions.
  std::set<Action> actions() const;
};

/// Binary composition tree over sequential processes. Inner nodes carry a
/// synchronisation set; leaves reference processes in left-to-right order.
/// Instances are value types: copying a system copies the tree, and node ids
/// stay valid across copies. Construction validates the model; the mutating
/// calls (used when deriving a repaired system) re-validate what they touch.
class SpaSystem {
 public:
  struct Node {
    int parent = -1;
    int left = -1;
    int right = -1;
    int leaf = -1;  // index into processes(); -1 for inner nodes
    std::set<Action> sync;
    int depth = 0;
    int leaf_lo = 0;  // leaves under this node form the range [leaf_lo, leaf_hi)
    int leaf_hi = 0;

    bool is_leaf() const { return leaf >= 0; }
  };

  SpaSystem() = default;

  int root() const { return root_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int id) const { return nodes_.at(id); }
  int leaf_count() const { return static_cast<int>(procs_.size()); }
  const SequentialProcess& process(int leaf) const { return procs_.at(leaf); }
  const std::vector<SequentialProcess>& processes() const { return procs_; }
  /// Node id of the given leaf index.
  int leaf_node(int leaf) const { return leaf_nodes_.at(leaf); }
  int process_index(const std::string& name) const;  // -1 if absent

  /// Union of process action sets under `id`.
  std::set<Action> syntactic_actions(int id) const;

  /// Root of the smallest subtree containing both nodes. The arguments must
  /// be disjoint (neither an ancestor of the other); throws otherwise.
  int lowest_common_root(int a, int b) const;
  /// Smallest subtree containing all given leaves (at least one required).
  int spanning_node(const std::vector<int>& leaves) const;

  bool is_ancestor(int anc, int id) const;  // strict
  bool syncs_on(int id, const Action& a) const;

  std::vector<int> inner_nodes_below(int id) const;  // post-order, excluding id
  std::vector<int> leaves_under(int id) const;

  // --- mutation (validated) ---
  void add_sync_action(int id, const Action& a);
  void add_local_transition(int leaf, const LocalTransition& t);
  void set_local_rate(int leaf, int tindex, double rate);

  /// Structural equality: same tree shape, sync sets, process names,
  /// initial states, state sets and transition lists (rates exact).
  bool structurally_equal(const SpaSystem& other) const;

 private:
  friend class SystemBuilder;
  std::vector<Node> nodes_;
  std::vector<SequentialProcess> procs_;  // in-order leaf sequence
  std::vector<int> leaf_nodes_;
  int root_ = -1;
};

/// Assembles a SpaSystem bottom-up. finish() orders leaves left-to-right,
/// fills parent/depth/range info and validates the whole model.
class SystemBuilder {
 public:
  int leaf(SequentialProcess p);
  int compose(int left, int right, std::set<Action> sync);
  SpaSystem finish(int root);

 private:
  struct Raw {
    int left = -1, right = -1;
    int proc = -1;
    std::set<Action> sync;
  };
  std::vector<Raw> raw_;
  std::vector<SequentialProcess> procs_;
};

/// Throws ModelError if the model breaks an invariant (empty state set,
/// unknown endpoint state, non-positive rate, duplicate process name,
/// initial state not declared).
void validate(const SpaSystem& sys);

}  // namespace spalift
