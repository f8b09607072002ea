#include "doctest.h"

#include <fstream>
#include <sstream>

#include "gen.hpp"
#include "sosc/avsos.hpp"
#include "sosc/dsl.hpp"

using namespace sosc;

namespace {

std::string fixture() {
  std::ifstream in(std::string(SOSC_SOURCE_DIR) + "/models/avsos.sosc", std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Position of the first diagnostic of a failed parse, or {0,0}.
std::pair<int, int> errorAt(const std::string& text) {
  try {
    parseModel(text, "m.sosc");
  } catch (const ParseFailure& e) {
    REQUIRE(!e.errors().empty());
    REQUIRE(e.errors()[0].span);
    return {e.errors()[0].span->startLine, e.errors()[0].span->startCol};
  }
  return {0, 0};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& l : v) s += l + "\n";
  return s;
}

}  // namespace

TEST_CASE("parse a small contract") {
  const char* text = R"(# a comment
contract Counter(limit: int[1..5]) {
  var n: int[0..5] = 0;
  op bump() pre n < limit post n' == n + 1;
  invariant n <= limit;
  protocol {
    initial state Idle;
    state Busy;
    trans Idle -> Busy on go(k) [k > 0] / n := n + 1, bump();
    trans Busy -> Idle internal done [n == limit] [error];
  }
}
)";
  ModelDocument doc = parseModel(text);
  REQUIRE(doc.contracts.size() == 1);
  const Contract& c = doc.contracts[0];
  CHECK(c.name == "Counter");
  REQUIRE(c.params.size() == 1);
  CHECK(c.params[0].type == Type::integer(1, 5));
  REQUIRE(c.operations.size() == 1);
  CHECK(toString(c.operations[0].post) == "n' == n + 1");
  REQUIRE(c.protocol.transitions.size() == 2);
  const Transition& t = c.protocol.transitions[0];
  CHECK(t.trigger.label == "go");
  CHECK(t.trigger.binder == std::optional<std::string>("k"));
  REQUIRE(t.actions.size() == 2);
  CHECK((t.actions[1].kind == Action::Kind::Invoke));
  CHECK((c.protocol.transitions[1].stereotype == Stereotype::Error));
  CHECK((c.protocol.transitions[1].trigger.kind == TriggerKind::Internal));
}

TEST_CASE("serializer output is canonical") {
  ModelDocument doc = parseModel("contract A { protocol {} }");
  CHECK(serializeModel(doc) == "contract A {\n  protocol {}\n}\n");
  CHECK(serializeModel(ModelDocument{}) == "\n");
  CHECK(parseModel("\n").contracts.empty());
}

TEST_CASE("fixture round trip") {
  const std::string text = fixture();
  CHECK(serializeModel(parseModel(text)) == text);
}

TEST_CASE("parse . serialize fixpoint on 500 generated documents") {
  gen::Rng rng(20261016);
  for (int i = 0; i < 500; ++i) {
    ModelDocument doc = gen::anyDocument(rng);
    std::string text = serializeModel(doc);
    ModelDocument back;
    try {
      back = parseModel(text, "gen.sosc");
    } catch (const ParseFailure& e) {
      FAIL("document " << i << " failed to parse: " << format(e.errors()[0]) << "\n" << text);
    }
    INFO("document " << i << "\n" << text);
    CHECK(back == doc);
    CHECK(serializeModel(back) == text);
  }
}

TEST_CASE("syntax errors point at the offending token") {
  CHECK(errorAt("contract A {\n  var x: int[0..3] = ;\n}\n") == std::pair{2, 22});
  CHECK(errorAt("contract A {\n  protocol {\n    trans A -> ;\n  }\n}\n") == std::pair{3, 16});
  CHECK(errorAt("contract A {\n  var s: int[4..1];\n}\n").first == 2);
  CHECK(errorAt("contract A {\n  @\n}\n") == std::pair{2, 3});
  CHECK(errorAt("dependability {\n  fault F level=CS persistence=transient name=\"open;\n}\n").first == 2);
  CHECK(errorAt("contract A {").first == 1);
  // a statement terminator is optional right before '}'
  CHECK(errorAt("contract A {\n  protocol {\n    initial state S\n  }\n}\n") == std::pair{0, 0});
}

TEST_CASE("error locality over a mutation corpus") {
  // Each mutation breaks one line of the fixture; the first diagnostic must
  // land on that line or, when the damage only shows at the next token, on
  // the next non-empty line.
  const auto base = lines(fixture());
  int mutations = 0;
  for (std::size_t l = 0; l < base.size(); ++l) {
    const std::string& line = base[l];
    std::size_t next = l + 1;
    while (next < base.size() && base[next].find_first_not_of(' ') == std::string::npos) ++next;
    auto expectNear = [&](const std::vector<std::string>& mutated, const char* what) {
      auto [row, col] = errorAt(join(mutated));
      INFO(what << " on line " << l + 1 << ": " << line);
      CHECK(row != 0);
      CHECK((row == static_cast<int>(l) + 1 || row == static_cast<int>(next) + 1));
      ++mutations;
    };
    auto semi = line.rfind(';');
    bool closes = next < base.size() && base[next].find_first_not_of(' ') != std::string::npos &&
                  base[next][base[next].find_first_not_of(' ')] == '}';
    if (semi != std::string::npos && line.find('"') == std::string::npos && !closes) {
      auto m = base;
      m[l].erase(semi, 1);
      expectNear(m, "dropped ';'");
    }
    auto first = line.find_first_not_of(' ');
    if (first != std::string::npos) {
      auto m = base;
      m[l].insert(first, "@");
      auto [row, col] = errorAt(join(m));
      CHECK(row == static_cast<int>(l) + 1);
      CHECK(col == static_cast<int>(first) + 1);
      ++mutations;
    }
    if (auto arrow = line.find("->"); arrow != std::string::npos) {
      auto m = base;
      m[l].replace(arrow, 2, "<-");
      expectNear(m, "reversed arrow");
    }
    if (auto open = line.find('('); open != std::string::npos && line.find(')') != std::string::npos) {
      auto m = base;
      m[l].erase(line.rfind(')'), 1);
      expectNear(m, "unbalanced parenthesis");
    }
  }
  CHECK(mutations > 200);
}

TEST_CASE("expressions round trip through text") {
  gen::Rng rng(7);
  gen::Vocab v{{"a", "b"}, {"p", "q"}};
  for (int i = 0; i < 300; ++i) {
    Expr e = i % 2 ? gen::boolExpr(rng, v, 4) : gen::intExpr(rng, v, 4);
    std::string s = toString(e);
    INFO(s);
    CHECK(parseExpression(s) == e);
  }
  CHECK(toString(parseExpression("a + b * 2")) == "a + b * 2");
  CHECK(toString(parseExpression("(a + b) * 2")) == "(a + b) * 2");
  CHECK(toString(parseExpression("a - (b - 1)")) == "a - (b - 1)");
  CHECK(toString(parseExpression("p => q => p")) == "p => q => p");
  CHECK_THROWS_AS(parseExpression("a +"), ParseFailure);
}

TEST_CASE("types parse") {
  CHECK(parseType("int[-2..3]") == Type::integer(-2, 3));
  CHECK(parseType("enum {red, green}") == Type::enumeration({"red", "green"}));
  CHECK(parseType("Payload") == Type::opaque("Payload"));
  CHECK(parseType("bool") == Type::boolean());
  CHECK_THROWS_AS(parseType("int[3..1]"), ParseFailure);
}
