#include "spalift/model.hpp"

#include <algorithm>
#include <functional>
#include <unordered_set>

namespace spalift {

bool SequentialProcess::has_state(const StateId& s) const {
  return std::find(states.begin(), states.end(), s) != states.end();
}

std::vector<int> SequentialProcess::transitions_from(const StateId& s) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(transitions.size()); ++i)
    if (transitions[i].source == s) out.push_back(i);
  return out;
}

bool SequentialProcess::has_selfloop(const StateId& s, const Action& a) const {
  for (const auto& t : transitions)
    if (t.source == s && t.target == s && t.action == a) return true;
  return false;
}

std::set<Action> SequentialProcess::actions() const {
  std::set<Action> out;
  for (const auto& t : transitions) out.insert(t.action);
  return out;
}

int SpaSystem::process_index(const std::string& name) const {
  for (int i = 0; i < leaf_count(); ++i)
    if (procs_[i].name == name) return i;
  return -1;
}

std::set<Action> SpaSystem::syntactic_actions(int id) const {
  std::set<Action> out;
  const Node& n = node(id);
  for (int l = n.leaf_lo; l < n.leaf_hi; ++l) {
    auto acts = procs_[l].actions();
    out.insert(acts.begin(), acts.end());
  }
  return out;
}

bool SpaSystem::is_ancestor(int anc, int id) const {
  for (int p = node(id).parent; p != -1; p = node(p).parent)
    if (p == anc) return true;
  return false;
}

int SpaSystem::lowest_common_root(int a, int b) const {
  if (a == b || is_ancestor(a, b) || is_ancestor(b, a))
    throw ModelError("lowest_common_root requires disjoint subtrees");
  int x = a, y = b;
  while (node(x).depth > node(y).depth) x = node(x).parent;
  while (node(y).depth > node(x).depth) y = node(y).parent;
  while (x != y) {
    x = node(x).parent;
    y = node(y).parent;
  }
  return x;
}

int SpaSystem::spanning_node(const std::vector<int>& leaves) const {
  if (leaves.empty()) throw ModelError("spanning_node of empty leaf set");
  int lo = leaves[0], hi = leaves[0];
  for (int l : leaves) {
    lo = std::min(lo, l);
    hi = std::max(hi, l);
  }
  int n = leaf_node(lo);
  while (!(node(n).leaf_lo <= lo && hi < node(n).leaf_hi)) n = node(n).parent;
  return n;
}

bool SpaSystem::syncs_on(int id, const Action& a) const {
  const Node& n = node(id);
  return !n.is_leaf() && n.sync.count(a) > 0;
}

std::vector<int> SpaSystem::inner_nodes_below(int id) const {
  std::vector<int> out;
  std::function<void(int)> rec = [&](int cur) {
    const Node& n = node(cur);
    if (n.is_leaf()) return;
    rec(n.left);
    rec(n.right);
    if (cur != id) out.push_back(cur);
  };
  rec(id);
  return out;
}

std::vector<int> SpaSystem::leaves_under(int id) const {
  std::vector<int> out;
  for (int l = node(id).leaf_lo; l < node(id).leaf_hi; ++l) out.push_back(l);
  return out;
}

void SpaSystem::add_sync_action(int id, const Action& a) {
  Node& n = nodes_.at(id);
  if (n.is_leaf()) throw ModelError("cannot add sync action to a leaf");
  n.sync.insert(a);
}

void SpaSystem::add_local_transition(int leaf, const LocalTransition& t) {
  SequentialProcess& p = procs_.at(leaf);
  if (!p.has_state(t.source) || !p.has_state(t.target))
    throw ModelError("transition endpoint not a state of process " + p.name);
  if (!(t.rate > 0.0)) throw ModelError("non-positive rate in process " + p.name);
  p.transitions.push_back(t);
}

void SpaSystem::set_local_rate(int leaf, int tindex, double rate) {
  if (!(rate > 0.0)) throw ModelError("non-positive rate");
  procs_.at(leaf).transitions.at(tindex).rate = rate;
}

bool SpaSystem::structurally_equal(const SpaSystem& other) const {
  if (nodes_.size() != other.nodes_.size() || procs_.size() != other.procs_.size())
    return false;
  std::function<bool(int, int)> rec = [&](int a, int b) {
    const Node& na = node(a);
    const Node& nb = other.node(b);
    if (na.is_leaf() != nb.is_leaf()) return false;
    if (na.is_leaf()) {
      const auto& pa = procs_[na.leaf];
      const auto& pb = other.procs_[nb.leaf];
      std::set<StateId> sa(pa.states.begin(), pa.states.end());
      std::set<StateId> sb(pb.states.begin(), pb.states.end());
      return pa.name == pb.name && pa.initial == pb.initial && sa == sb &&
             pa.transitions == pb.transitions;
    }
    if (na.sync != nb.sync) return false;
    return rec(na.left, nb.left) && rec(na.right, nb.right);
  };
  return rec(root_, other.root_);
}

int SystemBuilder::leaf(SequentialProcess p) {
  procs_.push_back(std::move(p));
  raw_.push_back(Raw{-1, -1, static_cast<int>(procs_.size()) - 1, {}});
  return static_cast<int>(raw_.size()) - 1;
}

int SystemBuilder::compose(int left, int right, std::set<Action> sync) {
  raw_.push_back(Raw{left, right, -1, std::move(sync)});
  return static_cast<int>(raw_.size()) - 1;
}

SpaSystem SystemBuilder::finish(int root) {
  SpaSystem sys;
  sys.nodes_.resize(raw_.size());
  // In-order walk assigns leaf positions; children/parent/depth fixed up here.
  std::function<void(int, int, int)> rec = [&](int id, int parent, int depth) {
    const Raw& r = raw_.at(id);
    SpaSystem::Node& n = sys.nodes_[id];
    n.parent = parent;
    n.depth = depth;
    if (r.proc >= 0) {
      n.leaf = static_cast<int>(sys.procs_.size());
      sys.procs_.push_back(procs_[r.proc]);
      sys.leaf_nodes_.push_back(id);
      n.leaf_lo = n.leaf;
      n.leaf_hi = n.leaf + 1;
      return;
    }
    n.left = r.left;
    n.right = r.right;
    n.sync = r.sync;
    rec(r.left, id, depth + 1);
    rec(r.right, id, depth + 1);
    n.leaf_lo = sys.nodes_[r.left].leaf_lo;
    n.leaf_hi = sys.nodes_[r.right].leaf_hi;
  };
  rec(root, -1, 0);
  sys.root_ = root;
  validate(sys);
  return sys;
}

void validate(const SpaSystem& sys) {
  if (sys.root() < 0) throw ModelError("empty system");
  std::unordered_set<std::string> names;
  for (int i = 0; i < sys.leaf_count(); ++i) {
    const SequentialProcess& p = sys.process(i);
    if (p.name.empty()) throw ModelError("process without a name");
    if (!names.insert(p.name).second)
      throw ModelError("duplicate process name " + p.name);
    if (p.states.empty()) throw ModelError("process " + p.name + " has no states");
    std::unordered_set<std::string> st(p.states.begin(), p.states.end());
    if (st.size() != p.states.size())
      throw ModelError("duplicate state id in process " + p.name);
    if (!st.count(p.initial))
      throw ModelError("initial state of " + p.name + " is undeclared");
    for (const auto& t : p.transitions) {
      if (!st.count(t.source) || !st.count(t.target))
        throw ModelError("undeclared state in a transition of " + p.name);
      if (t.action.empty()) throw ModelError("empty action label in " + p.name);
      if (!(t.rate > 0.0))
        throw ModelError("non-positive rate in process " + p.name);
    }
  }
}

}  // namespace spalift
