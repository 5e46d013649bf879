#include "spalift/combinatorics.hpp"

#include <algorithm>

namespace spalift {

CombinationSet canonicalize(CombinationSet combos) {
  for (Combo& c : combos) std::sort(c.begin(), c.end());
  std::sort(combos.begin(), combos.end());
  combos.erase(std::unique(combos.begin(), combos.end()), combos.end());
  return combos;
}

CombinationSet cross_union(const CombinationSet& a, const CombinationSet& b) {
  CombinationSet out;
  for (const Combo& x : a) {
    for (const Combo& y : b) {
      Combo u = x;
      u.insert(u.end(), y.begin(), y.end());
      out.push_back(std::move(u));
    }
  }
  return canonicalize(std::move(out));
}

CombinationSet comb(const SpaSystem& sys, int node, const Action& a) {
  const auto& n = sys.node(node);
  if (n.is_leaf()) return {{n.leaf}};
  CombinationSet left = comb(sys, n.left, a);
  CombinationSet right = comb(sys, n.right, a);
  if (n.sync.count(a)) return cross_union(left, right);
  CombinationSet out = left;
  out.insert(out.end(), right.begin(), right.end());
  return canonicalize(std::move(out));
}

namespace {

struct RslcContext {
  const SpaSystem& sys;
  const Action& action;
  std::vector<char> mover;     // by leaf
  std::vector<char> must;      // by leaf: must-stable
  std::vector<char> optional;  // by leaf: participating, stable, not must-stable
};

// Combination sets for "the subtree at `node` takes part in the step".
// {} means the subtree cannot take part at all (kills enclosing sync
// products); {{}} means it takes part with no optional selfloops.
CombinationSet rslc_rec(const RslcContext& ctx, int node) {
  const auto& n = ctx.sys.node(node);
  if (n.is_leaf()) {
    int l = n.leaf;
    if (ctx.mover[l] || ctx.must[l]) return {{}};
    if (ctx.optional[l]) return {{l}};
    return {};
  }
  bool left_movers = false, right_movers = false;
  for (int l = ctx.sys.node(n.left).leaf_lo; l < ctx.sys.node(n.left).leaf_hi; ++l)
    left_movers |= ctx.mover[l] != 0;
  for (int l = ctx.sys.node(n.right).leaf_lo; l < ctx.sys.node(n.right).leaf_hi; ++l)
    right_movers |= ctx.mover[l] != 0;
  if (n.sync.count(ctx.action))
    return cross_union(rslc_rec(ctx, n.left), rslc_rec(ctx, n.right));
  // Interleaving node: with movers below, only their side acts; a transition
  // cannot have movers on both sides of a non-synchronising node.
  if (left_movers && right_movers) return {};
  if (left_movers) return rslc_rec(ctx, n.left);
  if (right_movers) return rslc_rec(ctx, n.right);
  CombinationSet out = rslc_rec(ctx, n.left);
  CombinationSet right = rslc_rec(ctx, n.right);
  out.insert(out.end(), right.begin(), right.end());
  return canonicalize(std::move(out));
}

}  // namespace

CombinationSet rslc(const SpaSystem& sys, const FlatTS& flat, const FlatTransition& t,
                    int node) {
  RslcContext ctx{sys, t.action, {}, {}, {}};
  ctx.mover.assign(sys.leaf_count(), 0);
  ctx.must.assign(sys.leaf_count(), 0);
  ctx.optional.assign(sys.leaf_count(), 0);
  for (int m : moving_set(t)) ctx.mover[m] = 1;
  for (int m : must_stable_set(sys, t)) ctx.must[m] = 1;
  for (int p : participating_set(sys, flat, t))
    if (!ctx.mover[p] && !ctx.must[p]) ctx.optional[p] = 1;
  return canonicalize(rslc_rec(ctx, node));
}

}  // namespace spalift
