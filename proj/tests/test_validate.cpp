#include "doctest.h"

#include "sosc/avsos.hpp"
#include "sosc/dsl.hpp"
#include "sosc/validate.hpp"

using namespace sosc;

namespace {

Diagnostics check(const std::string& text) { return validateStructure(parseModel(text)); }

std::size_t only(const Diagnostics& d, std::string_view rule) {
  CHECK(d.size() == countRule(d, rule));
  return countRule(d, rule);
}

const char* kLeafs = R"(
contract A {
  protocol {
    initial state S;
    trans S -> S on go;
  }
}
contract B {
  protocol {
    initial state S;
    trans S -> S on go;
  }
}
)";

}  // namespace

TEST_CASE("empty input") {
  ModelDocument d = parseModel("");
  CHECK(d.contracts.empty());
  CHECK(validateStructure(d).empty());
}

TEST_CASE("the catalogue is clean") {
  CHECK(validateStructure(avsos::catalogDocument()).empty());
}

TEST_CASE("unresolved connector endpoint") {
  auto d = check(std::string(kLeafs) + R"(
sos S {
  instance a : A;
  instance b : B;
  connect a.p -- c.q : {go};
}
)");
  CHECK(only(d, "UNRESOLVED_ENDPOINT") == 1);
  CHECK(d[0].severity == Severity::Error);
}

TEST_CASE("instance rules") {
  CHECK(only(check(std::string(kLeafs) + "sos S { instance a : Nope; }"), "UNRESOLVED_CONTRACT") == 1);
  CHECK(only(check(std::string(kLeafs) + "sos S { instance a : A * 0; }"), "BAD_MULTIPLICITY") == 1);
  CHECK(only(check(std::string(kLeafs) + "sos S { instance a : A(1); }"), "PARAM_ARITY") == 1);
  CHECK(only(check(std::string(kLeafs) + "sos S { instance a : A; instance a : B; }"), "DUPLICATE_ID") >= 1);
}

TEST_CASE("protocol rules") {
  CHECK(only(check("contract C { protocol { state S; } }"), "INITIAL_STATE_COUNT") == 1);
  CHECK(only(check("contract C { protocol { initial state S; initial state T; } }"), "INITIAL_STATE_COUNT") == 1);
  CHECK(only(check("contract C { protocol { initial state S; trans S -> T on go; } }"), "UNRESOLVED_STATE") == 1);
  CHECK(only(check("contract C { protocol { initial state S; state S; } }"), "DUPLICATE_STATE") >= 1);
  CHECK(only(check("contract C { protocol { initial state S; trans S -> S internal spin; } }"),
             "INTERNAL_WITHOUT_GUARD") == 1);
  // a guard or the error stereotype makes the internal transition acceptable
  CHECK(check("contract C { protocol { var b: bool = true; initial state S; trans S -> S internal spin [b]; } }")
            .empty());
  CHECK(check("contract C { protocol { initial state S; trans S -> S internal spin [error]; } }").empty());
  CHECK(only(check("contract C { protocol { initial state S; trans S -> S on go / zz := 1; } }"),
             "UNRESOLVED_ASSIGN_TARGET") == 1);
  CHECK(only(check("contract C { protocol { initial state S; trans S -> S on go / nope(); } }"),
             "UNRESOLVED_OPERATION") == 1);
  CHECK(only(check("contract C { op f(x: int[0..3]); protocol { initial state S; trans S -> S on go / f(); } }"),
             "PARAM_ARITY") == 1);
  CHECK(only(check("contract C { protocol { var b: bool = false; initial state S; trans S -> S on go [b + 1]; } }"),
             "TYPE_ERROR") >= 1);
  CHECK(only(check("contract C { protocol { initial state S; trans S -> S on go [q > 0]; } }"),
             "UNRESOLVED_IDENTIFIER") == 1);
  CHECK(countRule(check(R"(contract C {
  protocol {
    initial state A { initial state A1; }
    state B;
    trans A1 -> B on go;
  }
})"),
                  "CROSS_REGION_TRANSITION") == 1);
}

TEST_CASE("dependability rules") {
  CHECK(only(check(R"(dependability {
  fault F level=SOS persistence=TRANSIENT name="f" description="";
  failure X level=CS persistence=TRANSIENT name="x" description="";
  causes F -> X;
})"),
             "CAUSAL_CHAIN_VIOLATION") == 1);

  CHECK(only(check(R"(dependability {
  fault F level=SOS persistence=TRANSIENT name="f" description="";
  causes Ghost -> F;
})"),
             "UNRESOLVED_EDGE_TARGET") == 1);

  CHECK(only(check("contract X { mitigates UnknownFault; protocol { initial state S; } }"),
             "DANGLING_DYSFUNCTION_REF") == 1);
  CHECK(only(check("contract X { failure_modes Nothing; protocol { initial state S; } }"),
             "DANGLING_DYSFUNCTION_REF") == 1);
}

TEST_CASE("diagnostics carry spans into the formatted line") {
  std::string text = "contract C {\n  protocol {\n    initial state S;\n    trans S -> T on go;\n  }\n}\n";
  ModelDocument doc = parseModel(text, "m.sosc");
  Diagnostics d = validateStructure(doc);
  REQUIRE(d.size() == 1);
  attachSpans(d, doc);
  std::string line = format(d[0], "m.sosc");
  CHECK(line.starts_with("m.sosc:4:"));
  CHECK(line.find("error[UNRESOLVED_STATE]") != std::string::npos);
}
