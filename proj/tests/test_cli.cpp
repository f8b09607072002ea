#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sosc");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = sosc::cliMain(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Scratch directory per test case.
struct Scratch {
  fs::path dir;
  Scratch() {
    static int n = 0;
    dir = fs::temp_directory_path() / ("sosc_cli_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

const std::string kFixture = std::string(SOSC_SOURCE_DIR) + "/models/avsos.sosc";

}  // namespace

TEST_CASE("validate") {
  CHECK(cli({"validate", kFixture}).code == 0);

  Scratch tmp;
  std::string text = slurp(kFixture);
  auto pos = text.find("  mitigates UnreliableMessageTransmission;\n");
  REQUIRE(pos != std::string::npos);
  std::ofstream(tmp / "bad.sosc") << text.substr(0, pos) + text.substr(pos + 43);
  auto r = cli({"validate", tmp / "bad.sosc"});
  CHECK(r.code == 1);
  CHECK(r.out.find("error[MITIGATES_TAG_MISMATCH]") != std::string::npos);

  std::ofstream(tmp / "syntax.sosc") << "contract X {\n  var x : ;\n}\n";
  r = cli({"validate", tmp / "syntax.sosc"});
  CHECK(r.code == 2);
  CHECK(r.err.find("syntax.sosc:2:") != std::string::npos);

  CHECK(cli({"validate", tmp / "missing.sosc"}).code == 2);
}

TEST_CASE("explore: divergence without wrappers writes a counterexample") {
  Scratch tmp;
  auto r = cli({"explore", "builtin:avsos", "--devices", "2", "--budget", "1", "--property", "agreement",
                "--max-steps", "40", "--out", tmp / "report.json"});
  CHECK(r.code == 1);
  auto report = nlohmann::json::parse(slurp(tmp / "report.json"));
  CHECK(report["result"] == "FAIL");
  CHECK(report["counterexample"].is_array());
  CHECK(fs::exists(tmp / "report.counterexample.jsonl"));
}

TEST_CASE("explore: masking passes") {
  for (const char* prop : {"agreement", "give-up-bound", "no-duplicate-decision"}) {
    auto r = cli({"explore", "builtin:avsos", "--devices", "2", "--fault-tolerant", "--budget", "2", "--per-seq",
                  "1", "--property", prop, "--max-steps", "60"});
    CHECK(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["result"] == "PASS");
  }
  auto r = cli({"explore", "builtin:avsos", "--devices", "3", "--budget", "0", "--expect-leader", "3"});
  CHECK(r.code == 0);
}

TEST_CASE("explore rejects unknown properties and non-AV models") {
  CHECK(cli({"explore", "builtin:avsos", "--property", "liveness"}).code == 2);
  CHECK(cli({"explore", "builtin:tl-faulty"}).code == 2);
}

TEST_CASE("conform") {
  auto ok = cli({"conform", "--impl", "builtin:tl-nominal", "--contract", "builtin:tl-faulty", "--depth", "6"});
  CHECK(ok.code == 0);
  CHECK(nlohmann::json::parse(ok.out)["verdict"] == "CONFORMS");

  auto bad = cli({"conform", "--impl", "builtin:tl-faulty", "--contract", "builtin:tl-nominal", "--depth", "6"});
  CHECK(bad.code == 1);
  auto j = nlohmann::json::parse(bad.out);
  CHECK(j["verdict"] == "VIOLATES");
  CHECK(j["witness"] == nlohmann::json::array({"LE_SendMsgs", "timeout"}));

  auto file = cli({"conform", "--impl", kFixture + "#Transport_Layer", "--contract",
                   kFixture + "#Faulty_Transport_Layer"});
  CHECK(file.code == 0);

  CHECK(cli({"conform", "--impl", "builtin:tl-nominal", "--contract", "builtin:tl-faulty", "--rename",
             "LE_SendMsgs=nowhere"})
            .code == 2);
  CHECK(cli({"conform", "--impl", "builtin:nope", "--contract", "builtin:tl-faulty"}).code == 2);
}

TEST_CASE("simulate is deterministic") {
  Scratch tmp;
  std::vector<std::vector<std::string>> invocations = {
      {"simulate", "builtin:avsos", "--devices", "3"},
      {"simulate", "builtin:avsos", "--devices", "3", "--fault-tolerant", "--drop-prob", "0.3", "--seed", "9"},
      {"simulate", "builtin:avsos", "--devices", "2", "--drop-at", "tl:1"},
      {"simulate", "builtin:tl-faulty", "--drop-prob", "0.5", "--seed", "3", "--max-steps", "30"},
      {"simulate", kFixture + "#AV_SoS_FaultTolerant", "--seed", "2", "--drop-prob", "0.2"},
  };
  int k = 0;
  for (auto args : invocations) {
    auto a = args, b = args;
    a.insert(a.end(), {"--out", tmp / ("a" + std::to_string(k) + ".jsonl")});
    b.insert(b.end(), {"--out", tmp / ("b" + std::to_string(k) + ".jsonl")});
    CHECK(cli(a).code == 0);
    CHECK(cli(b).code == 0);
    std::string x = slurp(tmp / ("a" + std::to_string(k) + ".jsonl"));
    CHECK(!x.empty());
    CHECK(x == slurp(tmp / ("b" + std::to_string(k) + ".jsonl")));
    ++k;
  }
}

TEST_CASE("report --loss") {
  auto r = cli({"report", "--loss", "--drop-prob", "0.3", "--retries", "1", "--messages", "2000", "--seed", "1"});
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["messagesSent"] == 2000);
  CHECK(j["predictedLossRate"].get<double>() == doctest::Approx(0.09));
  CHECK(cli({"report", "--loss", "--drop-prob", "1.5"}).code == 2);
  CHECK(cli({"report", "--drop-prob", "0.5"}).code == 2);
}

TEST_CASE("usage errors exit 2") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"simulate"}).code == 2);
  CHECK(cli({"simulate", "builtin:avsos", "--devices", "0"}).code == 2);
  CHECK(cli({"simulate", "builtin:avsos", "--timeout", "election_timeout=0"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}
