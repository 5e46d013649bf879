#include <doctest.h>

#include "spalift/parser.hpp"
#include "spalift/semantics.hpp"
#include "support/builders.hpp"

using namespace spalift;

namespace {

const char* kToggleModel = R"(
// two toggles synchronised on go
process Left {
  initial l0 ;
  l0 -( go , 2 )-> l1 ;
  l1 -( back , 1.5 )-> l0 ;
}
process Right {
  initial r0 ;
  r0 -( go , 3 )-> r1 ;
  r1 -( go , 4 )-> r0 ;
}
system : ( Left ||{ go } Right ) ;
)";

}  // namespace

TEST_CASE("parses processes, transitions and the composition line") {
  auto sys = parse_system(kToggleModel);
  REQUIRE(sys.leaf_count() == 2);
  CHECK(sys.process(0).name == "Left");
  CHECK(sys.process(0).initial == "l0");
  CHECK(sys.process(0).states == std::vector<StateId>{"l0", "l1"});
  REQUIRE(sys.process(1).transitions.size() == 2);
  CHECK(sys.process(1).transitions[1].rate == 4.0);
  CHECK(sys.node(sys.root()).sync == std::set<Action>{"go"});
}

TEST_CASE("round-trips through serialize_system") {
  for (const SpaSystem& sys :
       {parse_system(kToggleModel), testsys::selfloop_combo_demo(),
        testsys::participation_demo(), testsys::indirect_involvement_demo()}) {
    auto text = serialize_system(sys);
    auto again = parse_system(text);
    CHECK(again.structurally_equal(sys));
    CHECK(serialize_system(again) == text);  // fixpoint after one round
  }
}

TEST_CASE("n-ary chains nest to the right, one sync set per operator") {
  auto sys = parse_system(R"(
    process A { initial s ; s -( x , 1 )-> s ; }
    process B { initial s ; s -( y , 1 )-> s ; }
    process C { initial s ; s -( z , 1 )-> s ; }
    system : ( A ||{ x } B ||{ y , z } C ) ;
  )");
  REQUIRE(sys.leaf_count() == 3);
  const auto& root = sys.node(sys.root());
  CHECK(root.sync == std::set<Action>{"x"});
  CHECK(sys.node(root.left).is_leaf());
  const auto& right = sys.node(root.right);
  CHECK(right.sync == std::set<Action>{"y", "z"});
  CHECK(sys.node(right.left).leaf == 1);
  CHECK(sys.node(right.right).leaf == 2);
}

TEST_CASE("empty sync set and numeric state ids") {
  auto sys = parse_system(R"(
    process A { initial 1 ; 1 -( a , 0.5 )-> 2 ; }
    process B { initial 3 ; }
    system : ( A ||{ } B ) ;
  )");
  CHECK(sys.node(sys.root()).sync.empty());
  CHECK(sys.process(0).states == std::vector<StateId>{"1", "2"});
  CHECK(sys.process(1).states == std::vector<StateId>{"3"});
}

TEST_CASE("single-process system line") {
  auto sys = parse_system(R"(
    process Lone { initial s0 ; s0 -( tick , 1 )-> s0 ; }
    system : Lone ;
  )");
  CHECK(sys.leaf_count() == 1);
  CHECK(sys.node(sys.root()).is_leaf());
}

TEST_CASE("parse errors carry positions and reasons") {
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_system(text);
      FAIL_CHECK("no error for: " << needle);
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
      CHECK(e.line >= 1);
      CHECK(e.column >= 1);
    }
  };
  expect_error("process A { initial s ; }\nsystem : ( A ||{ x } B ) ;", "undefined process");
  expect_error("process A { initial s ; }\nprocess A { initial t ; }\nsystem : A ;",
               "duplicate process");
  expect_error("process A { initial s ; }\nsystem : ( A ||{ x } A ) ;", "used twice");
  expect_error("process A { initial s ; s -( a , 0 )-> s ; }\nsystem : A ;",
               "non-positive rate");
  expect_error("process A { initial s ; s -( a , -1 )-> s ; }\nsystem : A ;",
               "non-positive rate");
  expect_error("process A { initial s ; }\nsystem : A ; trailing", "trailing");
  expect_error("process A { initial s ; }", "system");
}

TEST_CASE("factor files are validated against the flat TS") {
  auto sys = testsys::amalgamation_demo();
  auto flat = flatten(sys);
  REQUIRE(flat.transitions.size() == 1);
  auto key = flat.transitions[0].key();

  auto tmod = parse_factors(format_key(key) + " : 2.5\n", flat);
  CHECK(tmod.factor(key) == 2.5);
  CHECK(tmod.contains(key));
  CHECK(tmod.factor(TransitionKey{{"x"}, "a", {"y"}}) == 1.0);  // absent => 1

  CHECK_THROWS_AS(parse_factors("(s1,s2,s3) -zz-> (s1p,s2,s3) : 2\n", flat), ParseError);
  CHECK_THROWS_AS(parse_factors(format_key(key) + " : 0\n", flat), ParseError);
  CHECK_THROWS_AS(parse_factors(format_key(key) + " : -3\n", flat), ParseError);
  CHECK_THROWS_AS(
      parse_factors(format_key(key) + " : 2\n" + format_key(key) + " : 3\n", flat),
      ParseError);

  // Comments and blank lines are fine.
  auto ok = parse_factors("// factor file\n\n" + format_key(key) + " : 2\n", flat);
  CHECK(ok.factor(key) == 2.0);
}

TEST_CASE("global selfloops cannot be modification targets") {
  SystemBuilder b;
  int p = b.leaf(testsys::proc("P", {"s"}, {{"s", "a", 1.0, "s"}}));
  int q = b.leaf(testsys::proc("Q", {"t"}, {}));
  auto sys = b.finish(b.compose(p, q, {}));
  auto flat = flatten(sys);
  REQUIRE(flat.transitions.size() == 1);
  CHECK(flat.transitions[0].is_global_selfloop());
  CHECK_THROWS_AS(parse_factors(format_key(flat.transitions[0].key()) + " : 2\n", flat),
                  ParseError);
}

TEST_CASE("transition keys parse back from their printed form") {
  TransitionKey k{{"s1", "s2"}, "act", {"t1", "t2"}};
  CHECK(parse_transition_key(format_key(k)) == k);
  CHECK_THROWS_AS(parse_transition_key("nonsense"), ParseError);
  CHECK_THROWS_AS(parse_transition_key("(a,b) -x-> "), ParseError);
}
