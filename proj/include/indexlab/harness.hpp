#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "indexlab/grading.hpp"
#include "indexlab/projflow.hpp"

namespace indexlab {

using Json = nlohmann::json;

struct ScenarioConfig {
  std::string name;
  std::string kind;
  Signature signature{1, 1};
  Json geometry;    // {"type": line|cylinder|circle|torus|landau, ...}
  Json potential;   // kind-dependent, may be empty
  Json params;      // kind-dependent
  std::vector<double> lambdaGrid;
  std::map<std::string, double> tolerances;
  std::optional<long> expected;
  std::string expectedSource;
  std::optional<long> expectedNot;  // negative control: verdict must differ
  Json canonical;                   // validated config with defaults, hashed
};

extern const std::vector<std::string> kScenarioKinds;

// Validates a parsed tree and fills defaults; throws ValidationError naming
// the offending field.
ScenarioConfig parseScenario(const Json& tree);
// Reads a scenario file, resolving "include" (a path relative to the file)
// by merging the included tree under the including one. Throws ParseError
// with line and column, or on a circular include.
ScenarioConfig loadScenario(const std::string& path);
// Scenario files (*.json) of a directory, sorted by file name.
std::vector<std::string> listScenarioFiles(const std::string& dir);

std::string configHash(const Json& canonical);

enum class RunStatus { pass, disagree, inconclusive };

struct RunDiagnostics {
  double gapRatio = kInf;  // written as null
  std::vector<double> zeroCluster;
  std::vector<double> chirality;
  std::vector<double> localization;
  double timingMs = 0.0;
};

struct RunRecord {
  std::string scenario;
  std::optional<long> verdict;  // empty: INCONCLUSIVE
  std::map<std::string, long> sides;
  RunDiagnostics diagnostics;
  std::string configHash;
  std::string version;
  RunStatus status = RunStatus::inconclusive;
  std::string note;
};

// Never throws for module errors; they are captured into the record.
RunRecord runScenario(const ScenarioConfig& cfg);
// Runs with a bounded worker pool; records come back in name order.
std::vector<RunRecord> runScenarios(const std::vector<ScenarioConfig>& cfgs, int jobs);
// INDEX_LAB_JOBS when set and positive, else 1.
int defaultJobs();

Json recordToJson(const RunRecord& r, bool withTiming = true);
RunRecord recordFromJson(const Json& j);
std::string recordsToJson(const std::vector<RunRecord>& records, bool withTiming = true);
// One CSV per record, rows index,eigenvalue,chirality,localization over the
// zero cluster. Returns the paths written; throws IoError.
std::vector<std::string> emitCsv(const std::vector<RunRecord>& records, const std::string& outDir);
// Writes records.json into outDir; throws IoError.
std::string emitJson(const std::vector<RunRecord>& records, const std::string& outDir);

// 0 all pass, 1 any disagreement, 2 inconclusive only.
int exitStatus(const std::vector<RunRecord>& records);

struct CompareReport {
  int status = 0;
  std::vector<std::string> mismatches;
  std::vector<std::string> notes;
  std::vector<RunRecord> records;
};
// Runs every scenario of suiteDir and compares verdicts and sides exactly with
// the baseline record array. Throws BaselineMissing.
CompareReport regressionCompare(const std::string& suiteDir, const std::string& baselinePath, int jobs = 1);
CompareReport compareRecords(const std::vector<RunRecord>& records, const Json& baseline);

// Copies of `base` with the dotted key (e.g. "params.k", "lambdaGrid") set to
// each value; names get "@key=value".
std::vector<ScenarioConfig> sweepConfigs(const ScenarioConfig& base, const std::string& key,
                                         const std::vector<std::string>& values);

// Hermitian path on [-halfLength, halfLength]: a random endpoint pair with
// spectra in +-[0.5, 1.5] joined by a tanh envelope of width 2.
OperatorPath randomPotentialPath(std::uint64_t seed, int fiberDim, double halfLength);
// Index expected from the endpoints: positive eigenvalues at +L minus those at -L.
long endpointIndex(const OperatorPath& path);

}  // namespace indexlab
