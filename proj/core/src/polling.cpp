#include "spalift/polling.hpp"

#include <chrono>
#include <random>

namespace spalift {

SpaSystem make_polling_system(int n) {
  if (n < 2) throw ModelError("polling system needs at least 2 stations");
  const double service = 1.0;
  const double polling = 200.0;
  const double arrival = service / n;

  SystemBuilder b;
  SequentialProcess server;
  server.name = "Server";
  for (int i = 1; i <= n; ++i) {
    server.states.push_back("p" + std::to_string(i));
    server.states.push_back("b" + std::to_string(i));
  }
  server.initial = "p1";
  for (int i = 1; i <= n; ++i) {
    std::string pi = "p" + std::to_string(i);
    std::string bi = "b" + std::to_string(i);
    std::string pnext = "p" + std::to_string(i % n + 1);
    std::string si = std::to_string(i);
    server.transitions.push_back({pi, "loop" + si + "a", polling, bi});
    server.transitions.push_back({pi, "loop" + si + "b", polling, pnext});
    server.transitions.push_back({bi, "serve" + si, service, pnext});
  }
  int server_leaf = b.leaf(std::move(server));

  std::set<Action> shared;
  std::vector<int> stations;
  for (int i = 1; i <= n; ++i) {
    std::string si = std::to_string(i);
    SequentialProcess st;
    st.name = "Station" + si;
    st.states = {"e", "f"};
    st.initial = "e";
    st.transitions.push_back({"e", "arrive" + si, arrival, "f"});
    st.transitions.push_back({"f", "loop" + si + "a", 1.0, "f"});
    st.transitions.push_back({"e", "loop" + si + "b", 1.0, "e"});
    st.transitions.push_back({"f", "serve" + si, 1.0, "e"});
    stations.push_back(b.leaf(std::move(st)));
    shared.insert("loop" + si + "a");
    shared.insert("loop" + si + "b");
    shared.insert("serve" + si);
  }
  int chain = stations.back();
  for (int i = n - 2; i >= 0; --i) chain = b.compose(stations[i], chain, {});
  return b.finish(b.compose(server_leaf, chain, shared));
}

ModificationMap make_polling_factors(const SpaSystem& sys, const FlatTS& flat,
                                     std::uint64_t seed) {
  const int n = sys.leaf_count() - 1;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  double v_server = u(rng);
  double v_st1 = u(rng);
  std::vector<double> v_e(n + 1), v_f(n + 1);
  for (int k = 2; k <= n; ++k) {
    v_e[k] = u(rng);
    v_f[k] = u(rng);
  }
  ModificationMap map;
  for (const FlatTransition& t : flat.transitions) {
    if (t.action != "loop1a" || t.is_global_selfloop()) continue;
    double product = v_server * v_st1;
    for (int k = 2; k <= n; ++k)
      product *= (t.source[k] == "f") ? v_f[k] : v_e[k];
    map.set(t.key(), product / t.rate);
  }
  return map;
}

PollingStats polling_stats(int n, const FlattenOptions& opts) {
  PollingStats stats;
  stats.n = n;
  SpaSystem sys = make_polling_system(n);
  auto t0 = std::chrono::steady_clock::now();
  FlatTS flat = flatten(sys, opts);
  auto t1 = std::chrono::steady_clock::now();
  stats.flatten_seconds = std::chrono::duration<double>(t1 - t0).count();
  stats.states = flat.states.size();
  stats.transitions = flat.transitions.size();
  for (const FlatTransition& t : flat.transitions)
    if (t.action == "loop1a") ++stats.loop1a_transitions;
  return stats;
}

}  // namespace spalift
