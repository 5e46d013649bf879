#include "spalift/structure.hpp"

#include <algorithm>

namespace spalift {

namespace {

bool contains_leaf(const SpaSystem& sys, int node, int leaf) {
  const auto& n = sys.node(node);
  return n.leaf_lo <= leaf && leaf < n.leaf_hi;
}

// Some derivation of a step of the subtree at `node` that leaves the subtree
// where it is (all contributing locals are selfloops) and carries action `a`,
// evaluated at the subtree's projection of `s`.
bool has_selfloop_derivation(const SpaSystem& sys, int node, const Action& a,
                             const GlobalState& s) {
  for (const Move& m : enabled_moves(sys, node, s)) {
    if (m.action != a) continue;
    bool all_loops = true;
    for (const Contribution& c : m.parts) {
      const LocalTransition& lt = sys.process(c.leaf).transitions[c.tindex];
      if (!lt.is_selfloop()) {
        all_loops = false;
        break;
      }
    }
    if (all_loops) return true;
  }
  return false;
}

}  // namespace

Neighborhood classify(const SpaSystem& sys, int mover_leaf, const Action& a, int node) {
  int mover_node = sys.leaf_node(mover_leaf);
  int r = sys.lowest_common_root(mover_node, node);
  if (!sys.syncs_on(r, a)) return Neighborhood::cannot;
  // Nodes strictly between r and `node` on node's side.
  for (int p = sys.node(node).parent; p != r; p = sys.node(p).parent)
    if (!sys.syncs_on(p, a)) return Neighborhood::may;
  return Neighborhood::must;
}

std::vector<int> action_scopes(const SpaSystem& sys, const Action& a) {
  std::vector<int> out;
  for (int id = 0; id < sys.node_count(); ++id) {
    const auto& n = sys.node(id);
    bool above = false;
    for (int p = n.parent; p != -1; p = sys.node(p).parent)
      if (sys.syncs_on(p, a)) {
        above = true;
        break;
      }
    if (above) continue;
    if (n.is_leaf() ? true : sys.syncs_on(id, a)) out.push_back(id);
  }
  return out;
}

std::vector<int> moving_set(const FlatTransition& t) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(t.source.size()); ++i)
    if (t.source[i] != t.target[i]) out.push_back(i);
  return out;
}

std::vector<int> stable_set(const FlatTransition& t) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(t.source.size()); ++i)
    if (t.source[i] == t.target[i]) out.push_back(i);
  return out;
}

std::vector<int> must_stable_set(const SpaSystem& sys, const FlatTransition& t) {
  std::vector<int> movers = moving_set(t);
  std::vector<int> out;
  for (int i : stable_set(t)) {
    for (int m : movers) {
      if (classify(sys, m, t.action, sys.leaf_node(i)) == Neighborhood::must) {
        out.push_back(i);
        break;
      }
    }
  }
  return out;
}

std::vector<int> participating_set(const SpaSystem& sys, const FlatTS& flat,
                                   const FlatTransition& t) {
  (void)flat;
  if (t.is_global_selfloop())
    throw ModelError("participating_set is undefined for global selfloops");
  const Action& a = t.action;
  std::vector<int> movers = moving_set(t);
  std::vector<int> out = movers;
  for (int i : stable_set(t)) {
    bool any_cannot = false, any_may = false, is_must = false;
    for (int m : movers) {
      switch (classify(sys, m, a, sys.leaf_node(i))) {
        case Neighborhood::cannot: any_cannot = true; break;
        case Neighborhood::may: any_may = true; break;
        case Neighborhood::must: is_must = true; break;
      }
    }
    if (is_must) {
      out.push_back(i);
      continue;
    }
    if (!any_may || any_cannot) continue;
    // May-classified candidate: needs a syntactic selfloop at its current
    // state, and the selfloop must be able to climb to the mover's
    // synchronisation point — at every a-node on the way up, the sibling
    // subtree must itself offer an a-selfloop derivation at t's source.
    if (!sys.process(i).has_selfloop(t.source[i], a)) continue;
    int walk_root = -1;  // deepest common root with any mover
    for (int m : movers) {
      int r = sys.lowest_common_root(sys.leaf_node(i), sys.leaf_node(m));
      if (walk_root == -1 || sys.node(r).depth > sys.node(walk_root).depth)
        walk_root = r;
    }
    bool ok = true;
    for (int p = sys.node(sys.leaf_node(i)).parent; p != walk_root;
         p = sys.node(p).parent) {
      if (!sys.syncs_on(p, a)) continue;
      const auto& n = sys.node(p);
      int sibling = contains_leaf(sys, n.left, i) ? n.right : n.left;
      if (!has_selfloop_derivation(sys, sibling, a, t.source)) {
        ok = false;
        break;
      }
    }
    if (ok) out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

InvolvedSet involved_set(const SpaSystem& sys, const FlatTS& flat,
                         const FlatTransition& t) {
  InvolvedSet out;
  std::vector<int> ps = participating_set(sys, flat, t);
  std::vector<bool> in(sys.leaf_count(), false);
  for (int i : ps) in[i] = true;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int cand = 0; cand < sys.leaf_count(); ++cand) {
      if (in[cand]) continue;
      for (int i = 0; i < sys.leaf_count(); ++i) {
        if (!in[i]) continue;
        if (classify(sys, i, t.action, sys.leaf_node(cand)) == Neighborhood::may) {
          in[cand] = true;
          changed = true;
          break;
        }
      }
    }
  }
  for (int i = 0; i < sys.leaf_count(); ++i)
    if (in[i]) out.involved.push_back(i);
  for (int i : out.involved) {
    auto acts = sys.process(i).actions();
    if (acts.count(t.action)) out.syntactic.push_back(i);
  }
  out.scope_root = sys.spanning_node(out.involved);
  return out;
}

TransitionSets analyze_transition(const SpaSystem& sys, const FlatTS& flat,
                                  const FlatTransition& t) {
  TransitionSets s;
  s.movers = moving_set(t);
  s.stable = stable_set(t);
  s.must_stable = must_stable_set(sys, t);
  s.participating = participating_set(sys, flat, t);
  s.involved = involved_set(sys, flat, t);
  return s;
}

}  // namespace spalift
