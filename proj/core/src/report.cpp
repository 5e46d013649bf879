#include <json.hpp>

#include "spalift/lifting.hpp"

namespace spalift {

std::string report_to_json(const LiftReport& report) {
  nlohmann::json j;
  j["schema"] = 1;
  j["success"] = report.success;
  j["batches"] = nlohmann::json::array();
  for (const BatchReport& b : report.batches) {
    nlohmann::json jb;
    jb["transition"] = b.transition;
    jb["action"] = b.action;
    jb["involved"] = b.involved;
    jb["part"] = b.part;
    jb["phases"] = {{"A", b.phase_a}, {"B", b.phase_b}, {"C", b.phase_c}, {"D", b.phase_d}};
    jb["sync_edits"] = nlohmann::json::array();
    for (const SyncEdit& e : b.sync_edits)
      jb["sync_edits"].push_back({{"node", e.node_leaves}, {"action", e.action}});
    jb["selfloops"] = nlohmann::json::array();
    for (const SelfloopEdit& e : b.selfloops)
      jb["selfloops"].push_back({{"process", e.process},
                                 {"state", e.state},
                                 {"action", e.action},
                                 {"rate", e.rate}});
    jb["equations"] = b.equations;
    jb["variables"] = b.variables;
    jb["solver"] = b.solver;
    jb["max_residual"] = b.max_residual;
    jb["handled"] = b.handled;
    jb["notes"] = b.notes;
    j["batches"].push_back(std::move(jb));
  }
  j["verify"] = {{"pass", report.verify.pass},
                 {"max_rel_error", report.verify.max_rel_error},
                 {"issues", report.verify.issues}};
  return j.dump(2) + "\n";
}

}  // namespace spalift
