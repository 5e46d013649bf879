#include "spalift/equations.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace spalift {

int EquationSystem::intern(const RateVariable& v, double initial) {
  auto it = index_.find(v);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(vars_.size());
  vars_.push_back(v);
  initial_.push_back(initial);
  index_[v] = id;
  return id;
}

int EquationSystem::find(const RateVariable& v) const {
  auto it = index_.find(v);
  return it == index_.end() ? -1 : it->second;
}

bool EquationSystem::single_term_only() const {
  for (const Equation& e : equations_)
    if (e.terms.size() != 1) return false;
  return true;
}

namespace {

// Values from multiplicative deviations: x_i = init_i * exp(d_i).
std::vector<double> materialize(const EquationSystem& sys, const Eigen::VectorXd& d) {
  const auto& init = sys.initial_values();
  std::vector<double> x(init.size());
  for (std::size_t i = 0; i < init.size(); ++i)
    x[i] = d[static_cast<int>(i)] == 0.0 ? init[i] : init[i] * std::exp(d[static_cast<int>(i)]);
  return x;
}

double relative_residual(const Equation& eq, const std::vector<double>& x) {
  double lhs = 0.0;
  for (const Term& t : eq.terms) {
    double p = 1.0;
    for (int v : t.vars) p *= x[v];
    lhs += p;
  }
  return std::abs(lhs - eq.rhs) / eq.rhs;
}

double max_relative_residual(const EquationSystem& sys, const std::vector<double>& x) {
  double worst = 0.0;
  for (const Equation& eq : sys.equations())
    worst = std::max(worst, relative_residual(eq, x));
  return worst;
}

SolveOutcome solve_log_linear(const EquationSystem& sys, const SolverConfig& cfg) {
  const int m = static_cast<int>(sys.equations().size());
  const int n = static_cast<int>(sys.variables().size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd b(m);
  const auto& init = sys.initial_values();
  for (int j = 0; j < m; ++j) {
    const Equation& eq = sys.equations()[j];
    double logs = 0.0;
    for (int v : eq.terms[0].vars) {
      A(j, v) += 1.0;
      logs += std::log(init[v]);
    }
    b[j] = std::log(eq.rhs) - logs;  // solve A d = b for the deviations
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd d = svd.solve(b);  // least squares, minimum norm
  for (int i = 0; i < n; ++i)
    if (std::abs(d[i]) < 1e-12) d[i] = 0.0;
  SolveOutcome out;
  out.method = "log-linear";
  out.values = materialize(sys, d);
  out.max_residual = max_relative_residual(sys, out.values);
  out.success = out.max_residual <= cfg.tolerance;
  // The least-squares optimum is global for a linear system: a residual here
  // certifies that no assignment satisfies the equations.
  out.exact_infeasible = !out.success;
  return out;
}

struct TermCache {
  std::vector<std::vector<int>> vars;  // per equation, per term: sorted vars
  std::vector<std::vector<double>> coef;
  std::vector<double> rhs;
};

// Relative-residual vector F and Jacobian dF/dd at deviation d.
void eval(const TermCache& tc, const Eigen::VectorXd& d, Eigen::VectorXd& F,
          Eigen::MatrixXd* J) {
  const int m = static_cast<int>(tc.rhs.size());
  if (J) J->setZero();
  for (int j = 0, k = 0; j < m; ++j) {
    double lhs = 0.0;
    int nterms = static_cast<int>(tc.coef[j].size());
    for (int t = 0; t < nterms; ++t, ++k) {
      double u = 0.0;
      for (int v : tc.vars[k]) u += d[v];
      double val = tc.coef[j][t] * std::exp(u);
      lhs += val;
      if (J)
        for (int v : tc.vars[k]) (*J)(j, v) += val / tc.rhs[j];
    }
    F[j] = (lhs - tc.rhs[j]) / tc.rhs[j];
  }
}

SolveOutcome solve_iterative(const EquationSystem& sys, const SolverConfig& cfg) {
  const int m = static_cast<int>(sys.equations().size());
  const int n = static_cast<int>(sys.variables().size());
  const auto& init = sys.initial_values();
  TermCache tc;
  tc.rhs.reserve(m);
  for (const Equation& eq : sys.equations()) {
    tc.rhs.push_back(eq.rhs);
    std::vector<double> coefs;
    for (const Term& t : eq.terms) {
      double c = 1.0;
      for (int v : t.vars) c *= init[v];
      coefs.push_back(c);
      tc.vars.push_back(t.vars);
    }
    tc.coef.push_back(std::move(coefs));
  }

  SolveOutcome best;
  best.method = "damped-newton";
  best.max_residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd F(m);
  Eigen::MatrixXd J(m, n);
  for (int restart = 0; restart <= cfg.restarts; ++restart) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    if (restart > 0) {
      std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(restart));
      std::uniform_real_distribution<double> u(-2.0, 2.0);
      for (int i = 0; i < n; ++i) d[i] = u(rng);
    }
    double mu = 1e-3;
    eval(tc, d, F, &J);
    double fnorm = F.lpNorm<Eigen::Infinity>();
    for (int iter = 0; iter < cfg.max_iterations && fnorm > cfg.tolerance; ++iter) {
      Eigen::MatrixXd H = J.transpose() * J;
      Eigen::VectorXd g = J.transpose() * F;
      H.diagonal().array() += mu;
      Eigen::VectorXd step = H.ldlt().solve(-g);
      Eigen::VectorXd d2 = d + step;
      Eigen::VectorXd F2(m);
      eval(tc, d2, F2, nullptr);
      double f2 = F2.lpNorm<Eigen::Infinity>();
      if (f2 < fnorm) {
        d = d2;
        mu = std::max(mu * 0.3, 1e-12);
        eval(tc, d, F, &J);
        fnorm = F.lpNorm<Eigen::Infinity>();
      } else {
        mu *= 4.0;
        if (mu > 1e12) break;
      }
    }
    if (fnorm < best.max_residual) {
      for (int i = 0; i < n; ++i)
        if (std::abs(d[i]) < 1e-12) d[i] = 0.0;
      best.values = materialize(sys, d);
      best.max_residual = fnorm;
      best.restarts_used = restart;
    }
    if (best.max_residual <= cfg.tolerance) break;  // first success wins
  }
  best.max_residual = max_relative_residual(sys, best.values);
  best.success = best.max_residual <= cfg.tolerance;
  return best;
}

}  // namespace

SolveOutcome solve(const EquationSystem& system, const SolverConfig& config) {
  for (const Equation& eq : system.equations()) {
    if (!(eq.rhs > 0.0)) throw ModelError("equation with non-positive right-hand side");
    if (eq.terms.empty()) throw ModelError("equation without terms");
  }
  if (system.equations().empty()) {
    SolveOutcome out;
    out.success = true;
    out.method = "empty";
    out.values = system.initial_values();
    return out;
  }
  if (system.single_term_only() && !config.force_iterative)
    return solve_log_linear(system, config);
  return solve_iterative(system, config);
}

ResidualReport verify_solution(const EquationSystem& system,
                               const std::vector<double>& values, double tolerance) {
  ResidualReport rep;
  for (const Equation& eq : system.equations()) {
    long double lhs = 0.0L;
    for (const Term& t : eq.terms) {
      long double p = 1.0L;
      for (int v : t.vars) p *= static_cast<long double>(values.at(v));
      lhs += p;
    }
    long double rel = std::abs(static_cast<double>((lhs - eq.rhs) / eq.rhs));
    rep.residuals.push_back(static_cast<double>(rel));
    rep.max_residual = std::max(rep.max_residual, static_cast<double>(rel));
  }
  rep.pass = rep.max_residual <= tolerance;
  return rep;
}

double slot_rate(const SpaSystem& sys, const RateVariable& v, double fallback) {
  double total = 0.0;
  bool found = false;
  for (const LocalTransition& t : sys.process(v.leaf).transitions) {
    if (t.source == v.source && t.action == v.action && t.target == v.target) {
      total += t.rate;
      found = true;
    }
  }
  return found ? total : fallback;
}

Equation build_equation(const SpaSystem& sys, const FlatTransition& t,
                        const TransitionSets& sets, const CombinationSet& combos,
                        double factor, EquationSystem& out) {
  if (combos.empty())
    throw ModelError("transition admits no selfloop combination: " + format_key(t.key()));
  Equation eq;
  eq.rhs = t.rate * factor;
  std::vector<int> base;
  for (int m : sets.movers) {
    RateVariable v{m, t.source[m], t.action, t.target[m]};
    base.push_back(out.intern(v, slot_rate(sys, v)));
  }
  for (int s : sets.must_stable) {
    RateVariable v{s, t.source[s], t.action, t.source[s]};
    base.push_back(out.intern(v, slot_rate(sys, v)));
  }
  for (const Combo& c : combos) {
    Term term;
    term.vars = base;
    for (int s : c) {
      RateVariable v{s, t.source[s], t.action, t.source[s]};
      term.vars.push_back(out.intern(v, slot_rate(sys, v)));
    }
    std::sort(term.vars.begin(), term.vars.end());
    eq.terms.push_back(std::move(term));
  }
  return eq;
}

}  // namespace spalift
