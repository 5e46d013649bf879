#pragma once

#include "spalift/semantics.hpp"
#include "spalift/structure.hpp"

namespace spalift {

/// A set of leaves contributing parallel selfloops; kept sorted.
using Combo = std::vector<int>;
/// Canonical set of combinations: sorted, duplicate-free. The distinction
/// between "no combination works" ({}) and "the empty combination works"
/// ({{}}) is meaningful: an empty product contributes factor 1.
using CombinationSet = std::vector<Combo>;

CombinationSet canonicalize(CombinationSet combos);
/// All pairwise unions of `a` and `b`. Empty input on either side yields {}.
CombinationSet cross_union(const CombinationSet& a, const CombinationSet& b);

/// Structural selfloop-carrier combinations of the subtree at `node` for
/// action `a`: which leaf sets must jointly selfloop for the subtree to emit
/// an a-step made of selfloops only, judged by sync structure alone.
CombinationSet comb(const SpaSystem& sys, int node, const Action& a);

/// Relevant selfloop combinations of transition t within the subtree rooted
/// at `node` (normally the scope root): each combination is one choice of
/// optional selfloop participants, so the derivations of t correspond
/// one-to-one to the returned combinations. Members of the must-stable set
/// and the movers are omitted (they appear in every derivation).
CombinationSet rslc(const SpaSystem& sys, const FlatTS& flat, const FlatTransition& t,
                    int node);

}  // namespace spalift
