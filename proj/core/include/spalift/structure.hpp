#pragma once

#include "spalift/model.hpp"
#include "spalift/semantics.hpp"

namespace spalift {

/// How a disjoint node X relates to the a-activity of leaf `mover`:
/// `cannot` — no shared a-synchronisation at all; `must` — every step of the
/// mover on a forces participation of X's subtree; `may` — participation is
/// possible but not forced.
enum class Neighborhood { cannot, may, must };

Neighborhood classify(const SpaSystem& sys, int mover_leaf, const Action& a, int node);

/// Maximal subtrees within which all a-synchronisation is confined: every
/// inner node whose sync set contains `a` with no such node above it, plus
/// every leaf with no a-synchronisation anywhere on its path to the root.
/// Returned in ascending node order.
std::vector<int> action_scopes(const SpaSystem& sys, const Action& a);

/// Leaves whose local state changes between source and target.
std::vector<int> moving_set(const FlatTransition& t);
/// Complement of the moving set.
std::vector<int> stable_set(const FlatTransition& t);

/// Stable leaves that necessarily take part in the transition (they are
/// must-classified for some mover, so their selfloop always synchronises).
std::vector<int> must_stable_set(const SpaSystem& sys, const FlatTransition& t);

/// Movers plus every stable process that can contribute a selfloop to some
/// derivation of t: must-classified stable neighbours, and may-classified
/// ones whose selfloop can actually reach the synchronisation point at t's
/// source state. Throws ModelError for global selfloops.
std::vector<int> participating_set(const SpaSystem& sys, const FlatTS& flat,
                                   const FlatTransition& t);

struct InvolvedSet {
  std::vector<int> involved;    // least set containing PS closed under may-neighborhood
  std::vector<int> syntactic;   // members whose process mentions the action at all
  int scope_root = -1;          // smallest subtree containing `involved`
};

InvolvedSet involved_set(const SpaSystem& sys, const FlatTS& flat, const FlatTransition& t);

/// Convenience bundle for one transition.
struct TransitionSets {
  std::vector<int> movers;
  std::vector<int> stable;
  std::vector<int> must_stable;
  std::vector<int> participating;
  InvolvedSet involved;
};

TransitionSets analyze_transition(const SpaSystem& sys, const FlatTS& flat,
                                  const FlatTransition& t);

}  // namespace spalift
