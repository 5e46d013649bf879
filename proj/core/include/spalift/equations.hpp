#pragma once

#include <cstdint>
#include <map>

#include "spalift/combinatorics.hpp"

namespace spalift {

/// Unknown rate of one local transition slot (all parallel local transitions
/// with this triple share the slot; solving scales them proportionally).
struct RateVariable {
  int leaf = -1;
  StateId source;
  Action action;
  StateId target;
  friend auto operator<=>(const RateVariable&, const RateVariable&) = default;
};

/// Product of variables (indices into the owning system's variable list;
/// repeats denote powers).
struct Term {
  std::vector<int> vars;  // sorted
  friend bool operator==(const Term&, const Term&) = default;
};

/// Sum of variable products equated to a positive constant.
struct Equation {
  std::vector<Term> terms;
  double rhs = 0.0;
};

class EquationSystem {
 public:
  /// Returns the variable's index, creating it with the given initial value
  /// (the current rate of the slot; 1 for slots that do not exist yet).
  int intern(const RateVariable& v, double initial);
  int find(const RateVariable& v) const;  // -1 if absent

  void add_equation(Equation eq) { equations_.push_back(std::move(eq)); }

  const std::vector<RateVariable>& variables() const { return vars_; }
  const std::vector<double>& initial_values() const { return initial_; }
  const std::vector<Equation>& equations() const { return equations_; }
  bool single_term_only() const;

 private:
  std::vector<RateVariable> vars_;
  std::vector<double> initial_;
  std::map<RateVariable, int> index_;
  std::vector<Equation> equations_;
};

struct SolverConfig {
  double tolerance = 1e-9;   // max relative residual accepted
  int restarts = 64;         // perturbed reruns of the iterative path
  std::uint64_t seed = 0x5eedf00d;
  int max_iterations = 400;
  bool force_iterative = false;  // testing aid: skip the closed-form path
};

struct SolveOutcome {
  bool success = false;
  /// True when the closed-form path proved the system has no solution at all
  /// (single-term systems reduce to linear equations in log space, where the
  /// least-squares optimum certifies inconsistency).
  bool exact_infeasible = false;
  std::vector<double> values;  // per variable; positive
  double max_residual = 0.0;   // relative, at `values`
  int restarts_used = 0;
  std::string method;  // "log-linear" or "damped-newton"
};

/// Solves for positive rates. Variables are parameterised multiplicatively
/// around their initial values, so an already-satisfying initial assignment
/// is returned bit-exact and solutions stay close to the original rates.
/// Deterministic for fixed input and config.
SolveOutcome solve(const EquationSystem& system, const SolverConfig& config = {});

struct ResidualReport {
  std::vector<double> residuals;  // relative, per equation
  double max_residual = 0.0;
  bool pass = false;
};

/// Independent re-evaluation of a candidate assignment (separate arithmetic
/// path from the solver's internals).
ResidualReport verify_solution(const EquationSystem& system,
                               const std::vector<double>& values,
                               double tolerance = 1e-9);

/// Builds the balance equation of transition `t`: one term per relevant
/// selfloop combination, each term the product of mover slots, must-stable
/// selfloop slots and the combination's selfloop slots; right-hand side is
/// rate(t) * factor.
Equation build_equation(const SpaSystem& sys, const FlatTransition& t,
                        const TransitionSets& sets, const CombinationSet& combos,
                        double factor, EquationSystem& out);

/// Total current rate of a slot in `sys`; `fallback` if the slot is absent.
double slot_rate(const SpaSystem& sys, const RateVariable& v, double fallback = 1.0);

}  // namespace spalift
