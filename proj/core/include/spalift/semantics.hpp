#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spalift/model.hpp"

namespace spalift {

/// Tuple of local states, one per leaf in tree order.
using GlobalState = std::vector<StateId>;

struct BudgetError : std::runtime_error {
  explicit BudgetError(std::size_t limit)
      : std::runtime_error("state budget exceeded (" + std::to_string(limit) + ")"),
        limit(limit) {}
  std::size_t limit;
};

/// One local transition taking part in a global step.
struct Contribution {
  int leaf = -1;
  int tindex = -1;  // index into process(leaf).transitions
  friend auto operator<=>(const Contribution&, const Contribution&) = default;
};

/// One way a global transition can arise: a set of synchronised local
/// transitions, rate = product of their rates.
struct Derivation {
  std::vector<Contribution> parts;  // sorted by leaf
  double rate = 0.0;
  friend bool operator==(const Derivation&, const Derivation&) = default;
};

struct TransitionKey {
  GlobalState source;
  Action action;
  GlobalState target;
  friend auto operator<=>(const TransitionKey&, const TransitionKey&) = default;
};

/// Amalgamated global transition: rate is the sum over all derivations with
/// the same (source, action, target); the derivations are retained.
struct FlatTransition {
  GlobalState source;
  Action action;
  GlobalState target;
  double rate = 0.0;
  std::vector<Derivation> derivations;

  bool is_global_selfloop() const { return source == target; }
  TransitionKey key() const { return {source, action, target}; }
};

struct FlatTS {
  GlobalState initial;
  std::vector<GlobalState> states;       // breadth-first discovery order
  std::vector<FlatTransition> transitions;

  int state_index(const GlobalState& s) const;  // -1 if unknown
  const FlatTransition* find(const TransitionKey& k) const;
  const FlatTransition& at(const TransitionKey& k) const;  // throws if absent

  void rebuild_index();

 private:
  std::map<GlobalState, int> state_index_;
  std::map<TransitionKey, int> transition_index_;
};

struct FlattenOptions {
  std::size_t max_states = 10'000'000;
};

/// A pre-amalgamation step of the subtree rooted at some node: the action,
/// the contributing local transitions and the product rate.
struct Move {
  Action action;
  double rate = 1.0;
  std::vector<Contribution> parts;
};

/// All steps the subtree rooted at `node` can take when the whole system is
/// in state `s` (components outside the subtree are ignored).
std::vector<Move> enabled_moves(const SpaSystem& sys, int node, const GlobalState& s);

GlobalState initial_state(const SpaSystem& sys);
GlobalState apply_move(const GlobalState& s, const SpaSystem& sys, const Move& m);

/// Breadth-first reachable flat transition system of the whole tree.
/// Deterministic: states are explored in discovery order and the successors
/// of each state are sorted by (action, target). Throws BudgetError when more
/// than opts.max_states states are discovered.
FlatTS flatten(const SpaSystem& sys, const FlattenOptions& opts = {});

/// Flat TS of the subtree rooted at `node`, leaves outside it pinned to their
/// initial states. Used for behavioural action sets and feasibility checks.
FlatTS flatten_subtree(const SpaSystem& sys, int node, const FlattenOptions& opts = {});

/// Action labels occurring on reachable transitions of the subsystem rooted
/// at `node` run in isolation.
std::set<Action> performable_actions(const SpaSystem& sys, int node,
                                     const FlattenOptions& opts = {});

/// Derivations of the transition with the given key; throws if unknown.
const std::vector<Derivation>& derivations_of(const FlatTS& flat, const TransitionKey& k);

std::string format_state(const GlobalState& s);
std::string format_key(const TransitionKey& k);

}  // namespace spalift
