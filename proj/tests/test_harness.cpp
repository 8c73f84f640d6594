#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "indexlab/harness.hpp"

using namespace indexlab;
namespace fs = std::filesystem;

namespace {

fs::path scratchDir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("indexlab_harness_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void writeText(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

ErrorKind kindOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

ScenarioConfig quick(const std::string& name, long k) {
  return parseScenario(Json{{"name", name}, {"kind", "cobordism"}, {"params", {{"k", k}}}});
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("defaults are filled per kind") {
    ScenarioConfig c = parseScenario(Json{{"name", "line"}, {"kind", "lineIndexEqualsSF"}});
    CHECK(c.geometry["halfLength"] == 20.0);
    CHECK(c.geometry["points"] == 400);
    CHECK(c.lambdaGrid == std::vector<double>{1, 2, 4});
    CHECK(c.tolerances.at("chirality") == 0.9);
    CHECK(c.signature.p == 1);
    CHECK(c.signature.q == 1);
    ScenarioConfig t = parseScenario(Json{{"name", "ee"}, {"kind", "toeplitzEvenEven"}});
    CHECK(t.geometry["fockModes"] == 96);
    CHECK(t.signature.p == 0);
  }

  TEST_CASE("validation names the offending field") {
    auto bad = [](Json j) {
      try {
        parseScenario(j);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ValidationError);
        return std::string(e.what());
      }
      FAIL("accepted");
      return std::string();
    };
    CHECK(bad(Json{{"name", "x"}, {"kind", "cobordism"}, {"colour", 1}}).find("colour") != std::string::npos);
    CHECK(bad(Json{{"name", "x"}, {"kind", "nope"}}).find("kind") != std::string::npos);
    CHECK(bad(Json{{"kind", "cobordism"}}).find("name") != std::string::npos);
    CHECK(bad(Json{{"name", "x"}, {"kind", "cobordism"}, {"params", {{"k", "two"}}}}).find("params.k") !=
          std::string::npos);
    CHECK(bad(Json{{"name", "x"}, {"kind", "lineIndexEqualsSF"}, {"lambdaGrid", {2, 1}}}).find("lambdaGrid") !=
          std::string::npos);
    CHECK(bad(Json{{"name", "x"}, {"kind", "lineIndexEqualsSF"}, {"geometry", {{"type", "torus"}}}})
              .find("geometry.type") != std::string::npos);
    CHECK(bad(Json{{"name", "x"}, {"kind", "cobordism"}, {"tolerances", {{"slack", 1}}}}).find("tolerances.slack") !=
          std::string::npos);
  }

  TEST_CASE("includes merge and report parse positions") {
    fs::path d = scratchDir("include");
    writeText(d / "base.json", R"({"kind": "cobordism", "params": {"k": 2, "loop": "scalar"}})");
    writeText(d / "child.json", R"({"include": "base.json", "name": "child", "params": {"k": -1}})");
    ScenarioConfig c = loadScenario((d / "child.json").string());
    CHECK(c.kind == "cobordism");
    CHECK(c.params["k"] == -1);
    CHECK(c.params["loop"] == "scalar");

    writeText(d / "broken.json", "{\n  \"name\": \"b\",\n  \"kind\" \"cobordism\"\n}");
    try {
      loadScenario((d / "broken.json").string());
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ParseError);
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }

    writeText(d / "a.json", R"({"include": "b.json", "name": "a"})");
    writeText(d / "b.json", R"({"include": "a.json", "kind": "cobordism"})");
    try {
      loadScenario((d / "a.json").string());
      FAIL("accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ParseError);
      CHECK(std::string(e.what()).find("circular") != std::string::npos);
    }
    CHECK(kindOf([&] { loadScenario((d / "missing.json").string()); }) == ErrorKind::IoError);
  }

  TEST_CASE("tanh line scenario agrees on every side") {
    RunRecord r = runScenario(parseScenario(Json{{"name", "tanh"}, {"kind", "lineIndexEqualsSF"}, {"expected", 1}}));
    CHECK(r.status == RunStatus::pass);
    REQUIRE(r.verdict);
    CHECK(*r.verdict == 1);
    for (const char* side : {"index", "sf", "relind", "suspension"}) {
      REQUIRE(r.sides.count(side));
      CHECK(r.sides.at(side) == 1);
    }
    CHECK(r.diagnostics.gapRatio >= 10);
    CHECK(r.diagnostics.zeroCluster.size() == r.diagnostics.chirality.size());
  }

  TEST_CASE("invertible potential gives zero with an empty cluster") {
    RunRecord r = runScenario(parseScenario(
        Json{{"name", "flat"}, {"kind", "lineIndexEqualsSF"}, {"potential", {{"type", "constant"}}}}));
    CHECK(r.status == RunStatus::pass);
    CHECK(*r.verdict == 0);
    CHECK(r.diagnostics.zeroCluster.empty());
    CHECK(recordToJson(r)["diagnostics"]["gapRatio"].is_null());
  }

  TEST_CASE("unreachable tolerances give INCONCLUSIVE, not a number") {
    RunRecord strict = runScenario(parseScenario(
        Json{{"name", "strict"}, {"kind", "lineIndexEqualsSF"}, {"tolerances", {{"gapRatio", 1e15}}}}));
    CHECK_FALSE(strict.verdict);
    CHECK(strict.status == RunStatus::inconclusive);
    CHECK(recordToJson(strict)["verdict"] == "INCONCLUSIVE");
  }

  TEST_CASE("expected and negative-control verdicts") {
    ScenarioConfig good = quick("one", 1);
    good.expected = 1;
    CHECK(runScenario(good).status == RunStatus::pass);
    ScenarioConfig wrong = quick("wrong", 1);
    wrong.expected = 2;
    CHECK(runScenario(wrong).status == RunStatus::disagree);
    ScenarioConfig control = quick("control", 1);
    control.expectedNot = 0;
    CHECK(runScenario(control).status == RunStatus::pass);
    ScenarioConfig trivial = quick("trivial", 0);
    trivial.expectedNot = 0;
    RunRecord tr = runScenario(trivial);
    CHECK(tr.status == RunStatus::disagree);
    CHECK(exitStatus({tr}) == 1);
  }

  TEST_CASE("broken Clifford symmetry is reported as inconclusive") {
    RunRecord exact = runScenario(parseScenario(Json{{"name", "c"}, {"kind", "clifford"}}));
    CHECK(*exact.verdict == 0);
    RunRecord broken =
        runScenario(parseScenario(Json{{"name", "c"}, {"kind", "clifford"}, {"params", {{"breaking", 0.3}}}}));
    CHECK_FALSE(broken.verdict);
    CHECK(exitStatus({exact, broken}) == 2);
  }

  TEST_CASE("emitters: empty arrays, one CSV row per cluster mode") {
    CHECK(recordsToJson({}) == "[]");
    fs::path d = scratchDir("emit");
    RunRecord r = runScenario(parseScenario(Json{{"name", "tanh/one"}, {"kind", "lineIndexEqualsSF"}}));
    std::vector<std::string> files = emitCsv({r}, d.string());
    REQUIRE(files.size() == 1);
    std::ifstream in(files[0]);
    std::string line;
    int rows = -1;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == static_cast<int>(r.diagnostics.zeroCluster.size()));
    const std::string json = emitJson({r}, d.string());
    std::ifstream jin(json);
    Json back = Json::parse(jin);
    REQUIRE(back.size() == 1);
    RunRecord rr = recordFromJson(back[0]);
    CHECK(rr.verdict == r.verdict);
    CHECK(rr.sides == r.sides);
    CHECK(rr.configHash == r.configHash);
  }

  TEST_CASE("regression compare") {
    fs::path d = scratchDir("compare");
    fs::create_directories(d / "suite");
    writeText(d / "suite" / "one.json", R"({"name": "one", "kind": "cobordism", "params": {"k": 1}})");
    writeText(d / "suite" / "two.json", R"({"name": "two", "kind": "cobordism", "params": {"loop": "pair"}})");
    std::vector<RunRecord> recs = runScenarios({loadScenario((d / "suite" / "one.json").string())}, 1);
    writeText(d / "base.json", recordsToJson(recs));

    CompareReport rep = regressionCompare((d / "suite").string(), (d / "base.json").string());
    CHECK(rep.status == 0);
    CHECK(rep.mismatches.empty());
    REQUIRE(rep.notes.size() == 1);
    CHECK(rep.notes[0].find("two") != std::string::npos);

    Json altered = Json::parse(recordsToJson(recs));
    altered[0]["verdict"] = 2;
    altered[0]["sides"]["sf"] = 2;
    CompareReport bad = compareRecords(recs, altered);
    CHECK(bad.status == 1);
    CHECK(bad.mismatches.size() == 2);

    CHECK(kindOf([&] { regressionCompare((d / "suite").string(), (d / "nothing.json").string()); }) ==
          ErrorKind::BaselineMissing);
  }

  TEST_CASE("config hash tracks the validated config") {
    ScenarioConfig a = parseScenario(Json{{"name", "h"}, {"kind", "cobordism"}});
    ScenarioConfig b = parseScenario(Json{{"kind", "cobordism"}, {"name", "h"}, {"params", {{"k", 1}}}});
    ScenarioConfig c = parseScenario(Json{{"name", "h"}, {"kind", "cobordism"}, {"params", {{"k", 2}}}});
    CHECK(configHash(a.canonical) == configHash(b.canonical));
    CHECK(configHash(a.canonical) != configHash(c.canonical));
    CHECK(configHash(a.canonical).size() == 16);
  }

  TEST_CASE("property: runs are deterministic and independent of the worker count") {
    std::vector<ScenarioConfig> cfgs;
    for (long k = -3; k <= 3; ++k) cfgs.push_back(quick("k" + std::to_string(k + 3), k));
    cfgs.push_back(parseScenario(Json{{"name", "odd"}, {"kind", "oddPairing"}, {"params", {{"windings", {2, -1}}}}}));
    const std::string serial = recordsToJson(runScenarios(cfgs, 1), false);
    CHECK(serial == recordsToJson(runScenarios(cfgs, 1), false));
    CHECK(serial == recordsToJson(runScenarios(cfgs, 4), false));
    std::vector<RunRecord> recs = runScenarios(cfgs, 3);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (recs[i].scenario == "odd") continue;
      CHECK(*recs[i].verdict == std::stol(recs[i].scenario.substr(1)) - 3);
    }
  }

  TEST_CASE("sweeps rewrite one key per copy") {
    ScenarioConfig base = quick("sweep", 1);
    std::vector<ScenarioConfig> s = sweepConfigs(base, "params.k", {"-1", "0", "2"});
    REQUIRE(s.size() == 3);
    CHECK(s[0].params["k"] == -1);
    CHECK(s[2].name == "sweep@params.k=2");
    CHECK(runScenario(s[2]).verdict == 2);
    CHECK(kindOf([&] { sweepConfigs(base, "params.nope", {"1"}); }) == ErrorKind::ValidationError);
  }

  TEST_CASE("property: random potential paths have the endpoint index") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      OperatorPath p = randomPotentialPath(seed, 2, 20.0);
      FlowOptions fo;
      CHECK(spectralFlow(p, fo).value == endpointIndex(p));
      for (double x : {-20.0, 20.0}) {
        RVector ev = eigh(p.at(x)).values;
        for (Eigen::Index i = 0; i < ev.size(); ++i) {
          CHECK(std::abs(ev(i)) >= 0.5 - 1e-6);
          CHECK(std::abs(ev(i)) <= 1.5 + 1e-6);
        }
      }
    }
  }

  TEST_CASE("scenario corpus parses") {
    const std::vector<std::string> files = listScenarioFiles(std::string(INDEXLAB_SCENARIO_DIR) + "/corpus");
    CHECK(files.size() >= 9);
    std::set<std::string> kinds;
    for (const auto& f : files) kinds.insert(loadScenario(f).kind);
    CHECK(kinds.size() == kScenarioKinds.size());
  }
}
