#pragma once

#include "spalift/equations.hpp"
#include "spalift/parser.hpp"

namespace spalift {

struct SelfloopEdit {
  std::string process;
  StateId state;
  Action action;
  double rate = 1.0;  // placeholder until the batch's equations are solved
};

struct SyncEdit {
  std::vector<std::string> node_leaves;  // processes under the edited node
  Action action;
};

struct TrysyncLog {
  std::vector<SelfloopEdit> selfloops;
  bool commit_check_rejected = false;  // final preservation check rolled back
};

struct LiftOptions {
  SolverConfig solver;
  FlattenOptions flatten;
  double verify_tolerance = 1e-6;
};

/// Attempts to add `c` to the sync set of the interleaving node `X` without
/// changing the reachable states or the (source, action, target) relation.
/// Checks that the children never both enable c at a reachable state, then
/// vets each candidate selfloop-carrier combination: every selfloop the flip
/// requires is added only if it cannot synchronise into a transition absent
/// from `flat` (checked upward across enclosing sync nodes). On success the
/// node is flipped and all missing selfloops of the feasible combinations are
/// inserted with placeholder rate 1; on failure `sys` is left untouched.
/// `t_c` restricts which flat transitions the flip must keep alive.
bool trysync(SpaSystem& sys, const FlatTS& flat, int X, const Action& c,
             const std::vector<TransitionKey>& t_c, const LiftOptions& opts = {},
             TrysyncLog* log = nullptr);

struct BatchReport {
  std::string transition;  // the selected modified transition
  Action action;
  std::vector<std::string> involved;
  std::string part = "failed";  // "A", "B", "C", "D" or "failed"
  std::string phase_a = "not attempted";
  std::string phase_b = "not attempted";
  std::string phase_c = "not attempted";
  std::string phase_d = "not attempted";
  std::vector<SyncEdit> sync_edits;
  std::vector<SelfloopEdit> selfloops;
  int equations = 0;
  int variables = 0;
  std::string solver;
  double max_residual = 0.0;
  int handled = 0;  // modification entries settled by this batch
  std::vector<std::string> notes;
};

struct VerifyReport {
  bool pass = false;
  double max_rel_error = 0.0;
  std::vector<std::string> issues;
};

struct LiftReport {
  bool success = false;
  std::vector<BatchReport> batches;
  VerifyReport verify;
};

struct LiftResult {
  bool success = false;
  SpaSystem system;  // repaired system, or the last working state on failure
  LiftReport report;
};

/// Lifts the requested flat-rate modifications into the components: picks the
/// smallest unhandled modified transition, tries a purely local rate change,
/// then an equation system over the enclosing scope, then structural edits
/// (synchronising interleaving nodes and adding controlling selfloops), then
/// widens the scope upward. Succeeds when every modification is realised;
/// the result always passes verify_repair on success.
LiftResult rate_lift(const SpaSystem& sys, const FlatTS& flat, const ModificationMap& tmod,
                     const LiftOptions& opts = {});

/// Flattens `repaired` and compares against the expectation: identical state
/// set, identical (source, action, target) relation, and every non-selfloop
/// rate equal to original * factor within the relative tolerance. Rates of
/// global selfloops are not compared (they do not affect the underlying
/// CTMC and pick up contributions from inserted control selfloops).
VerifyReport verify_repair(const FlatTS& original, const ModificationMap& tmod,
                           const SpaSystem& repaired, double rel_tolerance = 1e-6,
                           const FlattenOptions& fopts = {});

/// Report serialisation ("schema": 1).
std::string report_to_json(const LiftReport& report);

}  // namespace spalift
