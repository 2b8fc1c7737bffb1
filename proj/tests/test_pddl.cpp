#include <gtest/gtest.h>

#include <functional>
#include <string>

#include "goalrec/dataset.hpp"
#include "goalrec/pddl.hpp"

using namespace goalrec;

namespace {

std::string domain(const std::string& actions, const std::string& extra = "") {
  return "(define (domain d) (:requirements :strips :typing) (:types thing)"
         " (:predicates (p ?x - thing) (q ?x - thing) (r))" +
         extra + actions + ")";
}

const std::string kMove =
    "(:action go :parameters (?x - thing) :precondition (p ?x) :effect (and (q ?x) (not (p ?x))))";

std::string problem(const std::string& init, const std::string& goal) {
  return "(define (problem pr) (:domain d) (:objects a b - thing) (:init " + init + ") (:goal " + goal + "))";
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Sexpr, CommentsAndCase) {
  const auto e = pddl::read_sexpr("; header\n(Define (Foo BAR) ; trailing\n (baz))");
  ASSERT_TRUE(e.is_list);
  ASSERT_EQ(e.items.size(), 3u);
  EXPECT_EQ(e.items[0].atom, "define");
  EXPECT_EQ(e.items[1].items[1].atom, "bar");
}

TEST(Sexpr, UnbalancedReportsLine) {
  EXPECT_THROW(pddl::read_sexpr("(a (b)"), ParseError);
  try {
    pddl::read_sexpr("(a)\n\n)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(Pddl, GroundsSimpleDomain) {
  const auto p = parse_pddl(domain(kMove), problem("(p a) (p b)", "(and (q a))"));
  EXPECT_EQ(p.actions.size(), 2u);
  EXPECT_EQ(p.actions[*p.find_action("(go a)")].signature(), "(go a)");
  EXPECT_EQ(plan_cost(p), 1.0);
}

TEST(Pddl, SingleAtomGoal) {
  const auto p = parse_pddl(domain(kMove), problem("(p a)", "(q a)"));
  EXPECT_EQ(p.goal.size(), 1u);
}

TEST(Pddl, NegativePreconditionIsUnsupported) {
  const auto msg = message_of([] {
    parse_pddl(domain("(:action go :parameters (?x - thing) :precondition (not (p ?x)) :effect (q ?x))"),
               problem("(p a)", "(q a)"));
  });
  EXPECT_NE(msg.find("unsupported construct"), std::string::npos) << msg;
  EXPECT_NE(msg.find("negative precondition"), std::string::npos) << msg;
}

TEST(Pddl, OtherUnsupportedConstructs) {
  for (const char* pre : {"(or (p ?x) (q ?x))", "(forall (?y - thing) (p ?y))", "(= ?x ?x)"}) {
    const auto msg = message_of([&] {
      parse_pddl(domain(std::string("(:action go :parameters (?x - thing) :precondition ") + pre +
                        " :effect (q ?x))"),
                 problem("(p a)", "(q a)"));
    });
    EXPECT_NE(msg.find("unsupported construct"), std::string::npos) << pre << ": " << msg;
  }
  const auto msg = message_of([] {
    parse_pddl(domain(kMove, "(:functions (cost))"), problem("(p a)", "(q a)"));
  });
  EXPECT_NE(msg.find("unsupported construct"), std::string::npos) << msg;
  const auto cond = message_of([] {
    parse_pddl(domain("(:action go :parameters (?x - thing) :precondition (p ?x) :effect (when (r) (q ?x)))"),
               problem("(p a)", "(q a)"));
  });
  EXPECT_NE(cond.find("unsupported construct"), std::string::npos) << cond;
}

TEST(Pddl, EmptyGoalIsError) {
  EXPECT_THROW(parse_pddl(domain(kMove), problem("(p a)", "(and)")), ParseError);
  EXPECT_THROW(parse_pddl(domain(kMove), "(define (problem pr) (:domain d) (:objects a - thing) (:init (p a)))"),
               ParseError);
}

TEST(Pddl, UndefinedPredicateInAction) {
  const auto msg = message_of([] {
    parse_pddl(domain("(:action go :parameters (?x - thing) :precondition (s ?x) :effect (q ?x))"),
               problem("(p a)", "(q a)"));
  });
  EXPECT_NE(msg.find("undefined predicate"), std::string::npos) << msg;
}

TEST(Pddl, ArityMismatch) {
  EXPECT_THROW(parse_pddl(domain("(:action go :parameters (?x - thing) :precondition (p ?x ?x) :effect (q ?x))"),
                          problem("(p a)", "(q a)")),
               ParseError);
  EXPECT_THROW(parse_pddl(domain(kMove), problem("(p a b)", "(q a)")), ParseError);
}

TEST(Pddl, UndefinedObjectInProblem) {
  const auto msg = message_of([] { parse_pddl(domain(kMove), problem("(p a)", "(q zzz)")); });
  EXPECT_NE(msg.find("undefined object"), std::string::npos) << msg;
}

TEST(Pddl, UndefinedVariableInAction) {
  EXPECT_THROW(parse_pddl(domain("(:action go :parameters (?x - thing) :precondition (p ?y) :effect (q ?x))"),
                          problem("(p a)", "(q a)")),
               ParseError);
}

TEST(Pddl, DeleteOfAddedFluentIsDropped) {
  const auto p = parse_pddl(
      domain("(:action flip :parameters (?x - thing) :precondition (p ?x) :effect (and (q ?x) (not (q ?x))))"),
      problem("(p a)", "(q a)"));
  for (const auto& a : p.actions) EXPECT_TRUE(a.del.empty());
  EXPECT_EQ(plan_cost(p), 1.0);
}

TEST(Pddl, TypeHierarchyRestrictsGrounding) {
  const auto td = load_task_domain(std::string(GOALREC_DATA_DIR) + "/tasks/logistics2");
  const auto& p = *td.strips;
  // drive-truck only takes trucks; the airplane is a vehicle but not a truck.
  EXPECT_TRUE(p.find_action("(load-truck p1 t1 l1)").has_value());
  EXPECT_FALSE(p.find_action("(load-truck p1 plane l1)").has_value());
  for (const auto& a : p.actions)
    if (a.name == "fly-airplane") {
      EXPECT_EQ(a.args[0], "plane");
    }
}

TEST(ActionRef, NormalizesWhitespaceAndCase) {
  const auto p = parse_pddl(domain(kMove), problem("(p a) (p b)", "(q a)"));
  const auto id = *p.find_action("(go b)");
  EXPECT_EQ(parse_action_ref(p, "(go b)"), id);
  EXPECT_EQ(parse_action_ref(p, "  ( GO   B )\r"), id);
}

TEST(ActionRef, Errors) {
  const auto p = parse_pddl(domain(kMove), problem("(p a) (p b)", "(q a)"));
  EXPECT_THROW(parse_action_ref(p, "(go c)"), ParseError);
  EXPECT_THROW(parse_action_ref(p, "(go a"), ParseError);
  EXPECT_THROW(parse_action_ref(p, "()"), ParseError);
  EXPECT_THROW(parse_action_ref(p, "go b"), ParseError);
}

TEST(LoadPddl, MissingFileNamesPath) {
  try {
    load_pddl("/nonexistent/domain.pddl", "/nonexistent/problem.pddl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/domain.pddl"), std::string::npos);
  }
}
