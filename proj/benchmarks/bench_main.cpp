#include <benchmark/benchmark.h>

#include <algorithm>

#include "spalift/lifting.hpp"
#include "spalift/polling.hpp"
#include "support/builders.hpp"

using namespace spalift;

static void BM_FlattenPolling(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  SpaSystem sys = make_polling_system(n);
  std::size_t states = 0, transitions = 0;
  for (auto _ : state) {
    FlatTS flat = flatten(sys);
    states = flat.states.size();
    transitions = flat.transitions.size();
    benchmark::DoNotOptimize(flat);
  }
  state.counters["states"] = static_cast<double>(states);
  state.counters["transitions"] = static_cast<double>(transitions);
}
BENCHMARK(BM_FlattenPolling)->DenseRange(2, 9)->Unit(benchmark::kMillisecond);

static void BM_AnalyzeTransition(benchmark::State& state) {
  SpaSystem sys = testsys::selfloop_combo_demo(true);
  FlatTS flat = flatten(sys);
  const FlatTransition& t = flat.transitions.front();
  for (auto _ : state) {
    TransitionSets sets = analyze_transition(sys, flat, t);
    benchmark::DoNotOptimize(sets);
  }
}
BENCHMARK(BM_AnalyzeTransition);

static void BM_SelfloopCombinations(benchmark::State& state) {
  SpaSystem sys = testsys::selfloop_combo_demo(true);
  FlatTS flat = flatten(sys);
  const FlatTransition& t = flat.transitions.front();
  int root = involved_set(sys, flat, t).scope_root;
  for (auto _ : state) {
    CombinationSet combos = rslc(sys, flat, t, root);
    benchmark::DoNotOptimize(combos);
  }
}
BENCHMARK(BM_SelfloopCombinations);

static void BM_SolvePlanted(benchmark::State& state) {
  // A dense consistent multilinear system of the size the polling lift hits.
  int nvars = static_cast<int>(state.range(0));
  EquationSystem system;
  std::vector<double> planted;
  for (int v = 0; v < nvars; ++v) {
    planted.push_back(0.5 + 0.25 * v);
    system.intern({0, "s" + std::to_string(v), "a", "t" + std::to_string(v)},
                  1.0);
  }
  for (int e = 0; e < 2 * nvars; ++e) {
    Equation eq;
    Term term;
    term.vars = {e % nvars, (e * 7 + 1) % nvars};
    std::sort(term.vars.begin(), term.vars.end());
    eq.terms.push_back(term);
    eq.rhs = planted[term.vars[0]] * planted[term.vars[1]];
    Term second;
    second.vars = {(e + 3) % nvars};
    eq.terms.push_back(second);
    eq.rhs += planted[second.vars[0]];
    system.add_equation(std::move(eq));
  }
  for (auto _ : state) {
    SolveOutcome out = solve(system);
    benchmark::DoNotOptimize(out);
  }
}
BENCHMARK(BM_SolvePlanted)->Arg(4)->Arg(8)->Arg(12);

static void BM_LiftPolling(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  SpaSystem sys = make_polling_system(n);
  FlatTS flat = flatten(sys);
  ModificationMap tmod = make_polling_factors(sys, flat, 1);
  for (auto _ : state) {
    LiftResult res = rate_lift(sys, flat, tmod);
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_LiftPolling)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
