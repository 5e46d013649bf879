#include "spalift/semantics.hpp"

#include <algorithm>
#include <deque>

namespace spalift {

int FlatTS::state_index(const GlobalState& s) const {
  auto it = state_index_.find(s);
  return it == state_index_.end() ? -1 : it->second;
}

const FlatTransition* FlatTS::find(const TransitionKey& k) const {
  auto it = transition_index_.find(k);
  return it == transition_index_.end() ? nullptr : &transitions[it->second];
}

const FlatTransition& FlatTS::at(const TransitionKey& k) const {
  const FlatTransition* t = find(k);
  if (!t) throw ModelError("unknown transition " + format_key(k));
  return *t;
}

void FlatTS::rebuild_index() {
  state_index_.clear();
  transition_index_.clear();
  for (int i = 0; i < static_cast<int>(states.size()); ++i) state_index_[states[i]] = i;
  for (int i = 0; i < static_cast<int>(transitions.size()); ++i)
    transition_index_[transitions[i].key()] = i;
}

std::vector<Move> enabled_moves(const SpaSystem& sys, int node, const GlobalState& s) {
  const SpaSystem::Node& n = sys.node(node);
  if (n.is_leaf()) {
    std::vector<Move> out;
    const SequentialProcess& p = sys.process(n.leaf);
    const StateId& cur = s.at(n.leaf);
    for (int i = 0; i < static_cast<int>(p.transitions.size()); ++i) {
      const LocalTransition& t = p.transitions[i];
      if (t.source != cur) continue;
      out.push_back(Move{t.action, t.rate, {Contribution{n.leaf, i}}});
    }
    return out;
  }
  std::vector<Move> left = enabled_moves(sys, n.left, s);
  std::vector<Move> right = enabled_moves(sys, n.right, s);
  std::vector<Move> out;
  for (const Move& m : left)
    if (!n.sync.count(m.action)) out.push_back(m);
  for (const Move& m : right)
    if (!n.sync.count(m.action)) out.push_back(m);
  for (const Action& a : n.sync) {
    for (const Move& l : left) {
      if (l.action != a) continue;
      for (const Move& r : right) {
        if (r.action != a) continue;
        Move m{a, l.rate * r.rate, l.parts};
        m.parts.insert(m.parts.end(), r.parts.begin(), r.parts.end());
        out.push_back(m);
      }
    }
  }
  return out;
}

GlobalState initial_state(const SpaSystem& sys) {
  GlobalState s;
  s.reserve(sys.leaf_count());
  for (int i = 0; i < sys.leaf_count(); ++i) s.push_back(sys.process(i).initial);
  return s;
}

GlobalState apply_move(const GlobalState& s, const SpaSystem& sys, const Move& m) {
  GlobalState t = s;
  for (const Contribution& c : m.parts)
    t[c.leaf] = sys.process(c.leaf).transitions[c.tindex].target;
  return t;
}

static FlatTS flatten_impl(const SpaSystem& sys, int node, const FlattenOptions& opts) {
  FlatTS flat;
  flat.initial = initial_state(sys);
  std::map<GlobalState, int> seen;
  std::deque<int> queue;
  seen[flat.initial] = 0;
  flat.states.push_back(flat.initial);
  queue.push_back(0);
  while (!queue.empty()) {
    int si = queue.front();
    queue.pop_front();
    GlobalState s = flat.states[si];
    // Group simultaneous derivations of one (action, target) pair.
    std::map<std::pair<Action, GlobalState>, std::vector<Derivation>> grouped;
    for (const Move& m : enabled_moves(sys, node, s)) {
      Derivation d{m.parts, m.rate};
      std::sort(d.parts.begin(), d.parts.end());
      grouped[{m.action, apply_move(s, sys, m)}].push_back(std::move(d));
    }
    for (auto& [key, derivs] : grouped) {
      const auto& [action, target] = key;
      if (!seen.count(target)) {
        if (flat.states.size() >= opts.max_states) throw BudgetError(opts.max_states);
        seen[target] = static_cast<int>(flat.states.size());
        flat.states.push_back(target);
        queue.push_back(seen[target]);
      }
      std::sort(derivs.begin(), derivs.end(),
                [](const Derivation& a, const Derivation& b) { return a.parts < b.parts; });
      FlatTransition ft;
      ft.source = s;
      ft.action = action;
      ft.target = target;
      for (const Derivation& d : derivs) ft.rate += d.rate;
      ft.derivations = std::move(derivs);
      flat.transitions.push_back(std::move(ft));
    }
  }
  flat.rebuild_index();
  return flat;
}

FlatTS flatten(const SpaSystem& sys, const FlattenOptions& opts) {
  return flatten_impl(sys, sys.root(), opts);
}

FlatTS flatten_subtree(const SpaSystem& sys, int node, const FlattenOptions& opts) {
  return flatten_impl(sys, node, opts);
}

std::set<Action> performable_actions(const SpaSystem& sys, int node,
                                     const FlattenOptions& opts) {
  FlatTS flat = flatten_subtree(sys, node, opts);
  std::set<Action> out;
  for (const FlatTransition& t : flat.transitions) out.insert(t.action);
  return out;
}

const std::vector<Derivation>& derivations_of(const FlatTS& flat, const TransitionKey& k) {
  return flat.at(k).derivations;
}

std::string format_state(const GlobalState& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += s[i];
  }
  out += ")";
  return out;
}

std::string format_key(const TransitionKey& k) {
  return format_state(k.source) + " -" + k.action + "-> " + format_state(k.target);
}

}  // namespace spalift
