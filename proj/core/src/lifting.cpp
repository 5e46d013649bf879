#include "spalift/lifting.hpp"

#include <algorithm>
#include <set>

#include "spalift/structure.hpp"

namespace spalift {

namespace {

std::vector<std::string> leaf_names(const SpaSystem& sys, int node) {
  std::vector<std::string> out;
  for (int l : sys.leaves_under(node)) out.push_back(sys.process(l).name);
  return out;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += " ";
    out += n;
  }
  return out;
}

bool subtree_enables(const SpaSystem& sys, int node, const Action& c,
                     const GlobalState& s) {
  for (const Move& m : enabled_moves(sys, node, s))
    if (m.action == c) return true;
  return false;
}

bool move_is_selfloop(const SpaSystem& sys, const Move& m) {
  for (const Contribution& c : m.parts)
    if (!sys.process(c.leaf).transitions[c.tindex].is_selfloop()) return false;
  return true;
}

bool projection_matches(const GlobalState& s, int lo, int hi, const GlobalState& z) {
  for (int i = lo; i < hi; ++i)
    if (s[i] != z[i - lo]) return false;
  return true;
}

// Can a new c-selfloop of `leaf` at `state` synthesise a transition that the
// original flat TS does not have? The selfloop (possibly combined with other
// selfloops on the way up) meets potential partners at every enclosing node
// that synchronises on c; a non-selfloop partner move is harmless only if the
// global transition it induces already exists. `scratch` contains the flip of
// `X` and all selfloops accepted so far.
bool selfloop_safe(const SpaSystem& scratch, const FlatTS& flat, int X, const Action& c,
                   int leaf, const StateId& state) {
  std::set<std::pair<int, GlobalState>> visited;
  std::vector<std::pair<int, GlobalState>> work;
  work.push_back({scratch.leaf_node(leaf), GlobalState{state}});
  while (!work.empty()) {
    auto [z_node, z] = work.back();
    work.pop_back();
    if (!visited.insert({z_node, z}).second) continue;
    const auto& zn = scratch.node(z_node);
    int y = zn.parent;
    while (y != -1 && !scratch.syncs_on(y, c)) y = scratch.node(y).parent;
    if (y == -1) {
      // No synchronisation point above: the combined selfloop escapes to the
      // top and shows up as a global selfloop, which must not be new either.
      for (const GlobalState& s : flat.states) {
        if (!projection_matches(s, zn.leaf_lo, zn.leaf_hi, z)) continue;
        if (!flat.find(TransitionKey{s, c, s})) return false;
      }
      continue;
    }
    const auto& yn = scratch.node(y);
    bool z_on_left = scratch.node(yn.left).leaf_lo <= zn.leaf_lo &&
                     zn.leaf_hi <= scratch.node(yn.left).leaf_hi;
    int sibling = z_on_left ? yn.right : yn.left;
    for (const GlobalState& s : flat.states) {
      if (!projection_matches(s, zn.leaf_lo, zn.leaf_hi, z)) continue;
      for (const Move& m : enabled_moves(scratch, sibling, s)) {
        if (m.action != c) continue;
        if (move_is_selfloop(scratch, m)) {
          // Combined selfloop: re-check one synchronisation level up.
          GlobalState zy(s.begin() + yn.leaf_lo, s.begin() + yn.leaf_hi);
          work.push_back({y, std::move(zy)});
        } else if (y != X) {
          // At X itself the partner fired alone before the flip and passes
          // the same gates above, so it cannot become new. Elsewhere the
          // selfloop unblocks the partner: fine only if the result is an
          // existing transition.
          GlobalState target = apply_move(s, scratch, m);
          if (!flat.find(TransitionKey{s, c, target})) return false;
        }
      }
    }
  }
  return true;
}

bool states_and_relation_preserved(const FlatTS& before, const FlatTS& after) {
  if (before.states.size() != after.states.size()) return false;
  std::set<GlobalState> sb(before.states.begin(), before.states.end());
  std::set<GlobalState> sa(after.states.begin(), after.states.end());
  if (sb != sa) return false;
  std::set<TransitionKey> kb, ka;
  for (const FlatTransition& t : before.transitions) kb.insert(t.key());
  for (const FlatTransition& t : after.transitions) ka.insert(t.key());
  return kb == ka;
}

}  // namespace

bool trysync(SpaSystem& sys, const FlatTS& flat, int X, const Action& c,
             const std::vector<TransitionKey>& t_c, const LiftOptions& opts,
             TrysyncLog* log) {
  const auto& xn = sys.node(X);
  if (xn.is_leaf() || sys.syncs_on(X, c)) return false;
  // The children must never both offer c in a reachable state, otherwise the
  // flip would fuse steps that used to interleave.
  for (const GlobalState& s : flat.states)
    if (subtree_enables(sys, xn.left, c, s) && subtree_enables(sys, xn.right, c, s))
      return false;

  // Transitions the flip affects: some participant lives under X.
  std::vector<const FlatTransition*> relevant;
  std::vector<std::vector<int>> relevant_ps;
  for (const TransitionKey& k : t_c) {
    const FlatTransition& t = flat.at(k);
    if (t.action != c || t.is_global_selfloop()) continue;
    std::vector<int> ps = participating_set(sys, flat, t);
    bool touches = std::any_of(ps.begin(), ps.end(), [&](int p) {
      return xn.leaf_lo <= p && p < xn.leaf_hi;
    });
    if (!touches) continue;
    relevant.push_back(&t);
    relevant_ps.push_back(std::move(ps));
  }

  CombinationSet combos = cross_union(comb(sys, xn.left, c), comb(sys, xn.right, c));
  SpaSystem scratch = sys;
  scratch.add_sync_action(X, c);
  std::vector<std::pair<int, StateId>> pool;  // accepted selfloop additions
  bool any_feasible = false;
  for (const Combo& combo : combos) {
    std::vector<std::pair<int, StateId>> needed;
    for (std::size_t i = 0; i < relevant.size(); ++i) {
      const FlatTransition& t = *relevant[i];
      const std::vector<int>& ps = relevant_ps[i];
      for (int p : combo) {
        if (std::binary_search(ps.begin(), ps.end(), p)) continue;
        needed.push_back({p, t.source[p]});
      }
    }
    std::sort(needed.begin(), needed.end());
    needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
    SpaSystem attempt = scratch;
    bool ok = true;
    std::vector<std::pair<int, StateId>> added_here;
    for (const auto& [l, st] : needed) {
      if (attempt.process(l).has_selfloop(st, c)) continue;
      attempt.add_local_transition(l, LocalTransition{st, c, 1.0, st});
      added_here.push_back({l, st});
      if (!selfloop_safe(attempt, flat, X, c, l, st)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    any_feasible = true;
    scratch = std::move(attempt);
    pool.insert(pool.end(), added_here.begin(), added_here.end());
  }
  if (!any_feasible) return false;

  SpaSystem backup = sys;
  sys.add_sync_action(X, c);
  for (const auto& [l, st] : pool)
    if (!sys.process(l).has_selfloop(st, c))
      sys.add_local_transition(l, LocalTransition{st, c, 1.0, st});

  // Belt and braces: the flip plus selfloops must leave the state space and
  // the transition relation untouched.
  FlatTS after = flatten(sys, opts.flatten);
  if (!states_and_relation_preserved(flat, after)) {
    sys = std::move(backup);
    if (log) log->commit_check_rejected = true;
    return false;
  }
  if (log)
    for (const auto& [l, st] : pool)
      log->selfloops.push_back(SelfloopEdit{sys.process(l).name, st, c, 1.0});
  return true;
}

namespace {

class LiftEngine {
 public:
  LiftEngine(const SpaSystem& sys, const FlatTS& flat, const LiftOptions& opts)
      : W_(sys), flat_(flat), opts_(opts) {}

  LiftResult run(const ModificationMap& tmod) {
    for (const auto& [k, f] : tmod.entries()) {
      const FlatTransition* t = flat_.find(k);
      if (!t) throw ModelError("modified transition not in the flat TS: " + format_key(k));
      if (t->is_global_selfloop())
        throw ModelError("global selfloop cannot be lifted: " + format_key(k));
      if (!(f > 0.0)) throw ModelError("non-positive factor for " + format_key(k));
      pending_[k] = f;
    }
    bool ok = true;
    while (ok && !pending_.empty()) ok = run_batch(pending_.begin()->first);
    report_.success = ok;
    report_.verify = verify_repair(flat_, tmod, W_, opts_.verify_tolerance, opts_.flatten);
    if (report_.success && !report_.verify.pass) report_.success = false;
    return LiftResult{report_.success, std::move(W_), std::move(report_)};
  }

 private:
  double factor_of(const TransitionKey& k) const {
    auto it = pending_.find(k);
    return it == pending_.end() ? 1.0 : it->second;
  }

  std::vector<TransitionKey> all_keys(const Action& c) const {
    std::vector<TransitionKey> out;
    for (const FlatTransition& t : flat_.transitions)
      if (t.action == c && !t.is_global_selfloop()) out.push_back(t.key());
    return out;
  }

  bool solve_batch(const std::vector<TransitionKey>& tc, int scope_root,
                   BatchReport& br, const char* phase) {
    EquationSystem es;
    for (const TransitionKey& k : tc) {
      const FlatTransition& t = flat_.at(k);
      TransitionSets sets;
      sets.movers = moving_set(t);
      sets.stable = stable_set(t);
      sets.must_stable = must_stable_set(W_, t);
      sets.participating = participating_set(W_, flat_, t);
      CombinationSet combos = rslc(W_, flat_, t, scope_root);
      es.add_equation(build_equation(W_, t, sets, combos, factor_of(k), es));
    }
    SolveOutcome so = solve(es, opts_.solver);
    br.equations = static_cast<int>(es.equations().size());
    br.variables = static_cast<int>(es.variables().size());
    br.solver = so.method;
    br.max_residual = so.max_residual;
    br.notes.push_back(std::string("phase ") + phase + ": " +
                       std::to_string(es.equations().size()) + " equations, " +
                       std::to_string(es.variables().size()) + " variables, " +
                       (so.success ? "solved"
                                   : so.exact_infeasible ? "certified inconsistent"
                                                         : "no solution found"));
    if (!so.success) return false;
    for (std::size_t i = 0; i < es.variables().size(); ++i) {
      const RateVariable& v = es.variables()[i];
      double cur = slot_rate(W_, v);
      double want = so.values[i];
      if (want == cur) continue;
      double scale = want / cur;
      const SequentialProcess& p = W_.process(v.leaf);
      for (int ti = 0; ti < static_cast<int>(p.transitions.size()); ++ti) {
        const LocalTransition& lt = p.transitions[ti];
        if (lt.source == v.source && lt.action == v.action && lt.target == v.target)
          W_.set_local_rate(v.leaf, ti, lt.rate * scale);
      }
    }
    return true;
  }

  bool part_a(const FlatTransition& that, int leaf, BatchReport& br) {
    std::vector<TransitionKey> tset;
    for (const FlatTransition& t : flat_.transitions) {
      if (t.action != that.action || t.is_global_selfloop()) continue;
      if (t.source[leaf] == that.source[leaf] && t.target[leaf] == that.target[leaf])
        tset.push_back(t.key());
    }
    double f = factor_of(tset.front());
    for (const TransitionKey& k : tset) {
      if (factor_of(k) != f) {
        br.phase_a = "no common factor";
        return false;
      }
    }
    if (f != 1.0) {
      const SequentialProcess& p = W_.process(leaf);
      for (int ti = 0; ti < static_cast<int>(p.transitions.size()); ++ti) {
        const LocalTransition& lt = p.transitions[ti];
        if (lt.source == that.source[leaf] && lt.action == that.action &&
            lt.target == that.target[leaf])
          W_.set_local_rate(leaf, ti, lt.rate * f);
      }
    }
    br.phase_a = "success";
    br.part = "A";
    for (const TransitionKey& k : tset)
      br.handled += static_cast<int>(pending_.erase(k));
    return true;
  }

  void sweep_trysync(int scope_root, const Action& c,
                     const std::vector<TransitionKey>& tc, BatchReport& br) {
    for (int x : W_.inner_nodes_below(scope_root)) {  // post-order: bottom-up
      if (W_.syncs_on(x, c)) continue;
      TrysyncLog log;
      if (trysync(W_, flat_, x, c, tc, opts_, &log)) {
        br.sync_edits.push_back(SyncEdit{leaf_names(W_, x), c});
        br.selfloops.insert(br.selfloops.end(), log.selfloops.begin(),
                            log.selfloops.end());
      } else if (log.commit_check_rejected) {
        br.notes.push_back("preservation check rejected synchronising (" +
                           join_names(leaf_names(W_, x)) + ") on " + c);
      }
    }
  }

  bool run_batch(const TransitionKey& key) {
    const FlatTransition& that = flat_.at(key);
    const Action c = that.action;
    BatchReport br;
    br.transition = format_key(key);
    br.action = c;
    InvolvedSet is0 = involved_set(W_, flat_, that);
    for (int i : is0.involved) br.involved.push_back(W_.process(i).name);

    bool found = false;
    int curr_root = -1;
    std::vector<TransitionKey> tc;

    if (is0.involved.size() == 1) {
      found = part_a(that, is0.involved.front(), br);
      if (!found) curr_root = W_.leaf_node(is0.involved.front());
    } else {
      br.phase_a = "not applicable";
      curr_root = is0.scope_root;
      for (const FlatTransition& t : flat_.transitions) {
        if (t.action != c || t.is_global_selfloop()) continue;
        if (involved_set(W_, flat_, t).involved == is0.involved) tc.push_back(t.key());
      }
      found = solve_batch(tc, is0.scope_root, br, "B");
      br.phase_b = found ? "success" : "infeasible";
      if (found) {
        br.part = "B";
      } else {
        std::vector<int> ps_hat = participating_set(W_, flat_, that);
        if (ps_hat != is0.involved) {
          sweep_trysync(is0.scope_root, c, tc, br);
          found = solve_batch(tc, is0.scope_root, br, "C");
          br.phase_c = found ? "success" : "infeasible";
          if (found) br.part = "C";
        } else {
          br.phase_c = "skipped: participating set already equals involved set";
        }
      }
    }

    if (!found) {
      std::vector<TransitionKey> all_c = all_keys(c);
      while (!found && curr_root != W_.root()) {
        curr_root = W_.node(curr_root).parent;
        TrysyncLog log;
        if (!trysync(W_, flat_, curr_root, c, all_c, opts_, &log)) {
          br.notes.push_back("cannot synchronise (" +
                             join_names(leaf_names(W_, curr_root)) + ") on " + c);
          continue;
        }
        br.sync_edits.push_back(SyncEdit{leaf_names(W_, curr_root), c});
        br.selfloops.insert(br.selfloops.end(), log.selfloops.begin(),
                            log.selfloops.end());
        // Rebuild the batch over the widened scope.
        const auto& cn = W_.node(curr_root);
        tc.clear();
        for (const TransitionKey& k : all_c) {
          const FlatTransition& t = flat_.at(k);
          std::vector<int> ps = participating_set(W_, flat_, t);
          bool touches = std::any_of(ps.begin(), ps.end(), [&](int p) {
            return cn.leaf_lo <= p && p < cn.leaf_hi;
          });
          if (touches) tc.push_back(k);
        }
        found = solve_batch(tc, curr_root, br, "D");
        if (!found) {
          std::vector<int> ps_hat = participating_set(W_, flat_, that);
          if (ps_hat != W_.leaves_under(curr_root)) {
            sweep_trysync(curr_root, c, tc, br);
            found = solve_batch(tc, curr_root, br, "D");
          }
        }
        if (found) {
          br.part = "D";
          br.phase_d = "success at (" + join_names(leaf_names(W_, curr_root)) + ")";
        }
      }
      if (!found) br.phase_d = "exhausted: no enclosing scope admits a solution";
    }

    if (found && br.part != "A")
      for (const TransitionKey& k : tc)
        br.handled += static_cast<int>(pending_.erase(k));
    // Final rates of the inserted selfloops.
    for (SelfloopEdit& sl : br.selfloops) {
      int leaf = W_.process_index(sl.process);
      if (leaf >= 0)
        sl.rate = slot_rate(W_, RateVariable{leaf, sl.state, sl.action, sl.state});
    }
    report_.batches.push_back(br);
    return found;
  }

  SpaSystem W_;
  const FlatTS& flat_;
  LiftOptions opts_;
  std::map<TransitionKey, double> pending_;
  LiftReport report_;
};

}  // namespace

LiftResult rate_lift(const SpaSystem& sys, const FlatTS& flat, const ModificationMap& tmod,
                     const LiftOptions& opts) {
  LiftEngine engine(sys, flat, opts);
  return engine.run(tmod);
}

VerifyReport verify_repair(const FlatTS& original, const ModificationMap& tmod,
                           const SpaSystem& repaired, double rel_tolerance,
                           const FlattenOptions& fopts) {
  VerifyReport rep;
  FlatTS after;
  try {
    after = flatten(repaired, fopts);
  } catch (const BudgetError& e) {
    rep.issues.push_back(std::string("repaired system: ") + e.what());
    return rep;
  }
  auto push_issue = [&](const std::string& msg) {
    if (rep.issues.size() < 20)
      rep.issues.push_back(msg);
    else if (rep.issues.size() == 20)
      rep.issues.push_back("(more issues suppressed)");
  };
  std::set<GlobalState> sb(original.states.begin(), original.states.end());
  std::set<GlobalState> sa(after.states.begin(), after.states.end());
  bool states_ok = sb == sa;
  if (!states_ok) {
    for (const GlobalState& s : sb)
      if (!sa.count(s)) push_issue("state lost: " + format_state(s));
    for (const GlobalState& s : sa)
      if (!sb.count(s)) push_issue("state gained: " + format_state(s));
  }
  std::set<TransitionKey> kb, ka;
  std::map<TransitionKey, double> want, got;
  for (const FlatTransition& t : original.transitions) {
    kb.insert(t.key());
    if (!t.is_global_selfloop()) want[t.key()] = t.rate * tmod.factor(t.key());
  }
  for (const FlatTransition& t : after.transitions) {
    ka.insert(t.key());
    if (!t.is_global_selfloop()) got[t.key()] = t.rate;
  }
  for (const TransitionKey& k : kb)
    if (!ka.count(k)) push_issue("transition lost: " + format_key(k));
  for (const TransitionKey& k : ka)
    if (!kb.count(k)) push_issue("spurious transition: " + format_key(k));
  for (const auto& [k, w] : want) {
    auto it = got.find(k);
    if (it == got.end()) continue;  // already reported as lost
    double err = std::abs(it->second - w) / w;
    rep.max_rel_error = std::max(rep.max_rel_error, err);
    if (err > rel_tolerance)
      push_issue("rate mismatch at " + format_key(k) + ": expected " +
                 std::to_string(w) + ", got " + std::to_string(it->second));
  }
  rep.pass = states_ok && rep.issues.empty() && rep.max_rel_error <= rel_tolerance;
  return rep;
}

}  // namespace spalift
