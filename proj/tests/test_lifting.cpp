#include <doctest.h>

#include <algorithm>

#include "spalift/lifting.hpp"
#include "spalift/polling.hpp"
#include "support/builders.hpp"

using namespace spalift;

namespace {

TransitionKey key3(const char* s0, const char* s1, const char* s2, const char* a,
                   const char* t0, const char* t1, const char* t2) {
  return TransitionKey{{s0, s1, s2}, a, {t0, t1, t2}};
}

TransitionKey key2(const char* s0, const char* s1, const char* a, const char* t0,
                   const char* t1) {
  return TransitionKey{{s0, s1}, a, {t0, t1}};
}

std::vector<TransitionKey> keys_of(const FlatTS& flat, const Action& a) {
  std::vector<TransitionKey> out;
  for (const FlatTransition& t : flat.transitions)
    if (t.action == a) out.push_back(t.key());
  return out;
}

bool any_note(const BatchReport& br, const std::string& needle) {
  return std::any_of(br.notes.begin(), br.notes.end(), [&](const std::string& n) {
    return n.find(needle) != std::string::npos;
  });
}

}  // namespace

TEST_CASE("trysync refuses leaves and already-synchronising nodes") {
  auto sys = testsys::hidden_context_demo();
  auto flat = flatten(sys);
  auto copy = sys;
  CHECK_FALSE(trysync(sys, flat, sys.leaf_node(0), "c", keys_of(flat, "c")));
  CHECK_FALSE(trysync(sys, flat, sys.root(), "c", keys_of(flat, "c")));
  CHECK(sys.structurally_equal(copy));
}

TEST_CASE("trysync refuses to fuse independently enabled steps") {
  auto sys = testsys::selfloop_combo_demo(true);
  auto flat = flatten(sys);
  auto copy = sys;
  int rs = sys.lowest_common_root(sys.leaf_node(2), sys.leaf_node(3));
  int tu = sys.lowest_common_root(sys.leaf_node(4), sys.leaf_node(5));
  // R and S (likewise T and U) both enable c in every reachable state, so
  // synchronising would fuse their interleaved selfloops.
  CHECK_FALSE(trysync(sys, flat, rs, "c", keys_of(flat, "c")));
  CHECK_FALSE(trysync(sys, flat, tu, "c", keys_of(flat, "c")));
  CHECK(sys.structurally_equal(copy));
}

TEST_CASE("trysync adds steering selfloops and preserves the flat system") {
  auto sys = testsys::hidden_context_demo();
  auto flat = flatten(sys);
  int ab = sys.lowest_common_root(sys.leaf_node(0), sys.leaf_node(1));
  TrysyncLog log;
  REQUIRE(trysync(sys, flat, ab, "c", keys_of(flat, "c"), {}, &log));
  CHECK(sys.syncs_on(ab, "c"));
  CHECK(sys.process(1).has_selfloop("b0", "c"));
  CHECK(sys.process(1).has_selfloop("b1", "c"));
  REQUIRE(log.selfloops.size() == 2);
  CHECK(log.selfloops[0].process == "B");
  CHECK(log.selfloops[0].rate == 1.0);
  CHECK_FALSE(log.commit_check_rejected);
  // Placeholder rate 1 keeps every flat rate intact.
  CHECK(verify_repair(flat, ModificationMap{}, sys).pass);
}

TEST_CASE("trysync rolls back when required transitions would be lost") {
  auto sys = testsys::partial_cover_demo();
  auto flat = flatten(sys);
  int ab = sys.lowest_common_root(sys.leaf_node(0), sys.leaf_node(1));
  auto copy = sys;

  // Only the b0-context transition is protected; the flip then covers B with
  // a selfloop at b0 alone and silently starves the b1-context one. The final
  // whole-relation check must notice and roll back.
  TrysyncLog log;
  CHECK_FALSE(trysync(sys, flat, ab, "c",
                      {key3("a0", "b0", "m0", "c", "a0", "b0", "m1")}, {}, &log));
  CHECK(log.commit_check_rejected);
  CHECK(sys.structurally_equal(copy));

  // Protecting both contexts makes the same flip feasible.
  TrysyncLog log2;
  CHECK(trysync(sys, flat, ab, "c", keys_of(flat, "c"), {}, &log2));
  CHECK(log2.selfloops.size() == 2);
  CHECK(verify_repair(flat, ModificationMap{}, sys).pass);
}

TEST_CASE("trysync rolls back when global selfloops would starve") {
  auto sys = testsys::selfloop_starve_demo();
  auto flat = flatten(sys);
  auto copy = sys;
  int ab = sys.lowest_common_root(sys.leaf_node(0), sys.leaf_node(1));
  // All c-activity is global selfloops, which trysync does not plan for; the
  // bare flip would kill them all, so the preservation net rejects it.
  TrysyncLog log;
  CHECK_FALSE(trysync(sys, flat, ab, "c", keys_of(flat, "c"), {}, &log));
  CHECK(log.commit_check_rejected);
  CHECK(sys.structurally_equal(copy));
}

TEST_CASE("common factor on one local slot is a purely local change") {
  auto sys = testsys::local_slot_demo();
  auto flat = flatten(sys);
  ModificationMap tmod;
  tmod.set(key2("a0", "b0", "d", "a1", "b0"), 1.5);
  tmod.set(key2("a0", "b1", "d", "a1", "b1"), 1.5);

  auto res = rate_lift(sys, flat, tmod);
  REQUIRE(res.success);
  REQUIRE(res.report.batches.size() == 1);
  const auto& br = res.report.batches[0];
  CHECK(br.part == "A");
  CHECK(br.phase_a == "success");
  CHECK(br.phase_b == "not attempted");
  CHECK(br.handled == 2);
  CHECK(br.sync_edits.empty());
  CHECK(br.selfloops.empty());
  CHECK(br.equations == 0);

  CHECK(res.system.process(0).transitions[0].rate == 3.0);  // 2 * 1.5
  CHECK(res.system.process(0).transitions[1].rate == 5.0);  // other slot untouched
  CHECK(res.report.verify.pass);
}

TEST_CASE("mixed factors on one slot fail honestly when no repair exists") {
  auto sys = testsys::local_slot_demo();
  auto flat = flatten(sys);
  ModificationMap tmod;
  tmod.set(key2("a0", "b0", "d", "a1", "b0"), 2.0);  // b1 context keeps factor 1

  auto res = rate_lift(sys, flat, tmod);
  CHECK_FALSE(res.success);
  REQUIRE(res.report.batches.size() == 1);
  const auto& br = res.report.batches[0];
  CHECK(br.part == "failed");
  CHECK(br.phase_a == "no common factor");
  CHECK(br.phase_d.find("exhausted") == 0);
  // The widening did flip the root, but the b0-selfloop would have to scale
  // this slot's two transitions by 2 and 1 at once.
  CHECK(any_note(br, "certified inconsistent"));
  CHECK_FALSE(res.report.verify.pass);
}

TEST_CASE("per-context factors on a single mover slot widen the scope") {
  auto sys = testsys::context_split_demo();
  auto flat = flatten(sys);
  ModificationMap tmod;
  tmod.set(key2("a0", "b0", "d", "a0", "b1"), 2.0);
  tmod.set(key2("a1", "b0", "d", "a1", "b1"), 3.0);

  auto res = rate_lift(sys, flat, tmod);
  REQUIRE(res.success);
  REQUIRE(res.report.batches.size() == 1);
  const auto& br = res.report.batches[0];
  CHECK(br.part == "D");
  CHECK(br.phase_a == "no common factor");
  CHECK(br.phase_d.find("success at (A B)") == 0);
  REQUIRE(br.sync_edits.size() == 1);
  CHECK(br.sync_edits[0].node_leaves == std::vector<std::string>{"A", "B"});
  CHECK(br.sync_edits[0].action == "d");
  CHECK(br.equations == 2);
  CHECK(br.variables == 3);
  CHECK(br.solver == "log-linear");
  CHECK(br.handled == 2);

  // The repaired tree synchronises d at the root and steers via A-selfloops.
  CHECK(res.system.syncs_on(res.system.root(), "d"));
  REQUIRE(br.selfloops.size() == 2);
  double x = slot_rate(res.system, RateVariable{1, "b0", "d", "b1"});
  double y0 = slot_rate(res.system, RateVariable{0, "a0", "d", "a0"});
  double y1 = slot_rate(res.system, RateVariable{0, "a1", "d", "a1"});
  CHECK(x * y0 == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(x * y1 == doctest::Approx(6.0).epsilon(1e-9));
  // The report carries the solved selfloop rates.
  for (const SelfloopEdit& sl : br.selfloops) {
    CAPTURE(sl.state);
    CHECK(sl.rate == (sl.state == "a0" ? y0 : y1));
  }
  CHECK(res.report.verify.pass);
}

TEST_CASE("scoped equations settle all transitions of one batch") {
  auto sys = testsys::scope_demo();
  auto flat = flatten(sys);
  // Scale P1's u0->u1 step by 3 in both P5-contexts (the scope's equations
  // cannot tell the contexts apart, so a lone context would be unliftable).
  ModificationMap tmod;
  for (const FlatTransition& t : flat.transitions)
    if (t.action == "a" && t.source[0] == "u0" && t.target[0] == "u1")
      tmod.set(t.key(), 3.0);
  REQUIRE(tmod.entries().size() == 2);

  auto res = rate_lift(sys, flat, tmod);
  REQUIRE(res.success);
  REQUIRE(res.report.batches.size() == 1);
  const auto& br = res.report.batches[0];
  CHECK(br.part == "B");
  CHECK(br.phase_a == "not applicable");
  CHECK(br.phase_b == "success");
  CHECK(br.involved == std::vector<std::string>{"P1", "P2"});
  // The whole P1–P2 scope is batched: u1->u0 transitions come along with
  // factor 1.
  CHECK(br.equations == 4);
  CHECK(br.variables == 3);
  CHECK(br.handled == 2);
  CHECK(res.report.verify.pass);

  // The other a-scope (P4, P5) keeps its rates bit for bit.
  CHECK(res.system.process(3).transitions == sys.process(3).transitions);
  CHECK(res.system.process(4).transitions == sys.process(4).transitions);
}

TEST_CASE("forced participants enter the equations directly") {
  auto sys = testsys::indirect_involvement_demo();
  auto flat = flatten(sys);
  ModificationMap tmod;
  tmod.set(flat.transitions[0].key(), 2.5);

  auto res = rate_lift(sys, flat, tmod);
  REQUIRE(res.success);
  const auto& br = res.report.batches[0];
  CHECK(br.part == "B");
  CHECK(br.equations == 1);
  CHECK(br.variables == 3);  // two mover slots plus P4's forced selfloop
  CHECK(res.report.verify.pass);
  CHECK(res.report.verify.max_rel_error <= 1e-9);
}

TEST_CASE("hidden context splits after synchronising and adding selfloops") {
  auto sys = testsys::hidden_context_demo();
  auto flat = flatten(sys);
  ModificationMap tmod;
  tmod.set(key3("a0", "b0", "m0", "c", "a0", "b0", "m1"), 2.0);
  tmod.set(key3("a0", "b1", "m0", "c", "a0", "b1", "m1"), 3.0);
  tmod.set(key3("a0", "b0", "m1", "c", "a0", "b0", "m0"), 3.0);
  tmod.set(key3("a0", "b1", "m1", "c", "a0", "b1", "m0"), 4.5);

  auto res = rate_lift(sys, flat, tmod);
  REQUIRE(res.success);
  REQUIRE(res.report.batches.size() == 1);
  const auto& br = res.report.batches[0];
  CHECK(br.part == "C");
  CHECK(br.phase_a == "not applicable");
  CHECK(br.phase_b == "infeasible");
  CHECK(br.phase_c == "success");
  REQUIRE(br.sync_edits.size() == 1);
  CHECK(br.sync_edits[0].node_leaves == std::vector<std::string>{"A", "B"});
  CHECK(br.selfloops.size() == 2);
  CHECK(br.equations == 4);
  CHECK(br.variables == 5);
  CHECK(br.solver == "log-linear");
  CHECK(br.handled == 4);
  CHECK(res.report.verify.pass);
  CHECK(res.report.verify.max_rel_error <= 1e-9);

  // B picked up c-selfloops; its e-toggle is untouched.
  CHECK(res.system.process(1).has_selfloop("b0", "c"));
  CHECK(res.system.process(1).has_selfloop("b1", "c"));
  CHECK(slot_rate(res.system, RateVariable{1, "b0", "e", "b1"}) == 1.0);
}

TEST_CASE("selfloop-combination scopes repair through the mover pair") {
  auto sys = testsys::selfloop_combo_demo_toggle();
  auto flat = flatten(sys);
  GlobalState q0src{"p0", "q0", "r0", "s0", "t0", "u0"};
  GlobalState q0tgt{"p1", "q0", "r0", "s0", "t0", "u0"};
  GlobalState q1src{"p0", "q1", "r0", "s0", "t0", "u0"};
  GlobalState q1tgt{"p1", "q1", "r0", "s0", "t0", "u0"};
  ModificationMap tmod;
  tmod.set(TransitionKey{q0src, "c", q0tgt}, 2.0);
  tmod.set(TransitionKey{q1src, "c", q1tgt}, 3.0);

  auto res = rate_lift(sys, flat, tmod);
  REQUIRE(res.success);
  REQUIRE(res.report.batches.size() == 1);
  const auto& br = res.report.batches[0];
  CHECK(br.part == "C");
  CHECK(br.phase_b == "infeasible");
  CHECK(br.phase_c == "success");
  // Only the P–Q pair can synchronise; the two selfloop pairs R–S and T–U
  // are rejected by the fusion gate.
  REQUIRE(br.sync_edits.size() == 1);
  CHECK(br.sync_edits[0].node_leaves == std::vector<std::string>{"P", "Q"});
  CHECK(br.selfloops.size() == 2);  // Q at q0 and q1
  CHECK(br.equations == 2);
  CHECK(br.variables == 7);
  CHECK(br.solver == "damped-newton");
  CHECK(res.report.verify.pass);
  CHECK(res.report.verify.max_rel_error <= 1e-6);
}

TEST_CASE("polling repair synchronises the station chain") {
  auto sys = make_polling_system(3);
  auto flat = flatten(sys);
  auto tmod = make_polling_factors(sys, flat, 1);
  REQUIRE(tmod.entries().size() == 4);  // one factor per poll-station-1 step

  auto res = rate_lift(sys, flat, tmod);
  REQUIRE(res.success);
  REQUIRE(res.report.batches.size() == 1);
  const auto& br = res.report.batches[0];
  CHECK(br.part == "C");
  CHECK(br.phase_b == "infeasible");
  CHECK(br.phase_c == "success");
  CHECK(br.equations == 4);
  CHECK(br.variables == 6);
  CHECK(br.solver == "log-linear");
  CHECK(br.handled == 4);

  REQUIRE(br.sync_edits.size() == 2);
  CHECK(br.sync_edits[0].node_leaves == std::vector<std::string>{"Station2", "Station3"});
  CHECK(br.sync_edits[1].node_leaves ==
        std::vector<std::string>{"Station1", "Station2", "Station3"});

  std::vector<std::pair<std::string, StateId>> loops;
  for (const SelfloopEdit& sl : br.selfloops) loops.push_back({sl.process, sl.state});
  std::sort(loops.begin(), loops.end());
  CHECK(loops == std::vector<std::pair<std::string, StateId>>{
                     {"Station2", "e"}, {"Station2", "f"}, {"Station3", "e"}, {"Station3", "f"}});

  CHECK(res.report.verify.pass);
  CHECK(res.report.verify.max_rel_error <= 1e-9);
}

TEST_CASE("factor one everywhere is the identity repair") {
  auto sys = testsys::hidden_context_demo();
  auto flat = flatten(sys);
  ModificationMap tmod;
  for (const FlatTransition& t : flat.transitions)
    if (t.action == "c") tmod.set(t.key(), 1.0);

  auto res = rate_lift(sys, flat, tmod);
  REQUIRE(res.success);
  CHECK(res.report.batches[0].part == "B");
  CHECK(res.system.structurally_equal(sys));  // bit-exact, nothing touched
  CHECK(res.report.verify.max_rel_error == 0.0);

  auto poll = make_polling_system(2);
  auto pflat = flatten(poll);
  ModificationMap ptmod;
  for (const FlatTransition& t : pflat.transitions)
    if (t.action == "loop1a") ptmod.set(t.key(), 1.0);
  auto pres = rate_lift(poll, pflat, ptmod);
  REQUIRE(pres.success);
  CHECK(pres.system.structurally_equal(poll));
}

TEST_CASE("an empty modification map succeeds without batches") {
  auto sys = testsys::amalgamation_demo();
  auto flat = flatten(sys);
  auto res = rate_lift(sys, flat, ModificationMap{});
  CHECK(res.success);
  CHECK(res.report.batches.empty());
  CHECK(res.report.verify.pass);
  CHECK(res.system.structurally_equal(sys));
}

TEST_CASE("lift rejects malformed modification requests") {
  auto sys = testsys::selfloop_starve_demo();
  auto flat = flatten(sys);

  ModificationMap unknown;
  unknown.set(key3("zz", "b0", "m0", "c", "zz", "b0", "m0"), 2.0);
  CHECK_THROWS_AS(rate_lift(sys, flat, unknown), ModelError);

  ModificationMap selfloop;
  selfloop.set(key3("a0", "b0", "m0", "c", "a0", "b0", "m0"), 2.0);
  CHECK_THROWS_AS(rate_lift(sys, flat, selfloop), ModelError);

  auto sys2 = testsys::local_slot_demo();
  auto flat2 = flatten(sys2);
  ModificationMap nonpos;
  nonpos.set(key2("a0", "b0", "d", "a1", "b0"), 0.0);
  CHECK_THROWS_AS(rate_lift(sys2, flat2, nonpos), ModelError);
}

TEST_CASE("verification flags wrong rates and structural drift") {
  auto sys = testsys::hidden_context_demo();
  auto flat = flatten(sys);

  ModificationMap tmod;
  tmod.set(key3("a0", "b0", "m0", "c", "a0", "b0", "m1"), 2.0);
  auto rep = verify_repair(flat, tmod, sys);  // nothing was repaired
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_rel_error == doctest::Approx(0.5));
  REQUIRE_FALSE(rep.issues.empty());
  CHECK(rep.issues[0].find("rate mismatch") != std::string::npos);

  // A structurally different system: M's step turned into a selfloop.
  SystemBuilder b;
  int a = b.leaf(testsys::proc("A", {"a0"}, {{"a0", "c", 1.0, "a0"}}));
  int bb = b.leaf(testsys::proc(
      "B", {"b0", "b1"}, {{"b0", "e", 1.0, "b1"}, {"b1", "e", 1.0, "b0"}}));
  int m = b.leaf(testsys::proc("M", {"m0", "m1"}, {{"m0", "c", 1.0, "m0"}}));
  auto drifted = b.finish(b.compose(b.compose(a, bb, {}), m, {"c"}));
  auto rep2 = verify_repair(flat, ModificationMap{}, drifted);
  CHECK_FALSE(rep2.pass);
  bool lost = false;
  for (const auto& issue : rep2.issues) lost |= issue.find("lost") != std::string::npos;
  CHECK(lost);

  // Budget exhaustion while re-flattening is reported, not thrown.
  FlattenOptions tiny;
  tiny.max_states = 1;
  auto rep3 = verify_repair(flat, ModificationMap{}, sys, 1e-6, tiny);
  CHECK_FALSE(rep3.pass);
  REQUIRE_FALSE(rep3.issues.empty());
  CHECK(rep3.issues[0].find("state budget") != std::string::npos);
}

TEST_CASE("batch reports serialise to the stable JSON schema") {
  auto sys = testsys::context_split_demo();
  auto flat = flatten(sys);
  ModificationMap tmod;
  tmod.set(key2("a0", "b0", "d", "a0", "b1"), 2.0);
  tmod.set(key2("a1", "b0", "d", "a1", "b1"), 3.0);
  auto res = rate_lift(sys, flat, tmod);
  REQUIRE(res.success);

  std::string json = report_to_json(res.report);
  for (const char* needle :
       {"\"schema\": 1", "\"success\": true", "\"batches\"", "\"part\": \"D\"",
        "\"phases\"", "\"sync_edits\"", "\"selfloops\"", "\"verify\"",
        "\"max_rel_error\"", "\"handled\": 2"})
    CHECK_MESSAGE(json.find(needle) != std::string::npos, needle);
}
