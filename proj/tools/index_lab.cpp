// index-lab: run, verify, list and sweep index scenarios.
//
// Exit codes: 0 all pass, 1 a disagreement, 2 inconclusive only, 3 config or
// input error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "indexlab/harness.hpp"

using namespace indexlab;
namespace fs = std::filesystem;

namespace {

constexpr int kConfigError = 3;

std::vector<ScenarioConfig> loadAll(const std::vector<std::string>& inputs) {
  std::vector<std::string> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& f : listScenarioFiles(in)) files.push_back(f);
    } else {
      files.push_back(in);
    }
  }
  std::vector<ScenarioConfig> cfgs;
  std::set<std::string> names;
  for (const auto& f : files) {
    cfgs.push_back(loadScenario(f));
    if (!names.insert(cfgs.back().name).second)
      throw Error(ErrorKind::ValidationError, "name: duplicate scenario name '" + cfgs.back().name + "'");
  }
  return cfgs;
}

void summarize(const std::vector<RunRecord>& records) {
  for (const auto& r : records) {
    std::cerr << r.scenario << ": " << (r.verdict ? std::to_string(*r.verdict) : "INCONCLUSIVE");
    switch (r.status) {
      case RunStatus::pass: std::cerr << " [pass]"; break;
      case RunStatus::disagree: std::cerr << " [DISAGREE]"; break;
      case RunStatus::inconclusive: std::cerr << " [inconclusive]"; break;
    }
    if (!r.note.empty()) std::cerr << "  " << r.note;
    std::cerr << "\n";
  }
}

int emit(const std::vector<RunRecord>& records, const std::string& outDir, const std::string& format) {
  if (outDir.empty()) {
    std::cout << recordsToJson(records) << "\n";
  } else if (format == "csv") {
    for (const auto& p : emitCsv(records, outDir)) std::cerr << "wrote " << p << "\n";
    std::cerr << "wrote " << emitJson(records, outDir) << "\n";
  } else {
    std::cerr << "wrote " << emitJson(records, outDir) << "\n";
  }
  summarize(records);
  return exitStatus(records);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"index-lab: numerical index experiments"};
  app.set_version_flag("--version", std::string(INDEXLAB_VERSION));
  app.require_subcommand(1);

  int jobs = defaultJobs();
  std::string outDir, format = "json";

  std::vector<std::string> runInputs;
  auto* run = app.add_subcommand("run", "run scenario files or directories");
  run->add_option("scenarios", runInputs, "scenario files or directories")->required();
  run->add_option("--jobs,-j", jobs, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--out,-o", outDir, "output directory (stdout when omitted)");
  run->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  std::string suite, baseline;
  bool writeBaseline = false;
  auto* verify = app.add_subcommand("verify", "run a suite and compare with a baseline");
  verify->add_option("suite", suite, "scenario directory")->required()->check(CLI::ExistingDirectory);
  verify->add_option("--baseline", baseline, "baseline record array")->required();
  verify->add_flag("--write-baseline", writeBaseline, "regenerate the baseline instead of comparing");
  verify->add_option("--jobs,-j", jobs, "worker threads")->check(CLI::PositiveNumber);

  std::string listDir;
  auto* list = app.add_subcommand("list", "list scenarios of a directory");
  list->add_option("dir", listDir, "scenario directory")->required()->check(CLI::ExistingDirectory);

  std::string sweepFile, param;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "run one scenario over values of a parameter");
  sweep->add_option("scenario", sweepFile, "scenario file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--param", param, "dotted key, e.g. params.k")->required();
  sweep->add_option("--values", values, "values (JSON literals)")->required()->delimiter(',');
  sweep->add_option("--jobs,-j", jobs, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out,-o", outDir, "output directory (stdout when omitted)");
  sweep->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*run) return emit(runScenarios(loadAll(runInputs), jobs), outDir, format);

    if (*verify) {
      if (writeBaseline) {
        std::vector<RunRecord> records = runScenarios(loadAll({suite}), jobs);
        std::ofstream out(baseline);
        if (!out) throw Error(ErrorKind::IoError, "cannot write " + baseline);
        out << recordsToJson(records, false) << "\n";
        summarize(records);
        return exitStatus(records);
      }
      CompareReport rep = regressionCompare(suite, baseline, jobs);
      summarize(rep.records);
      for (const auto& n : rep.notes) std::cerr << "note: " << n << "\n";
      for (const auto& m : rep.mismatches) std::cerr << "MISMATCH: " << m << "\n";
      if (rep.status != 0) return 1;
      const int s = exitStatus(rep.records);
      std::cerr << (s == 0 ? "verify: all scenarios match the baseline\n" : "verify: inconclusive scenarios\n");
      return s;
    }

    if (*list) {
      for (const auto& f : listScenarioFiles(listDir)) {
        ScenarioConfig c = loadScenario(f);
        std::cout << c.name << "\t" << c.kind << "\t[" << c.signature.p << "," << c.signature.q << "]\t"
                  << (c.expected ? std::to_string(*c.expected) : c.expectedNot ? "not " + std::to_string(*c.expectedNot) : "-")
                  << "\t" << fs::path(f).filename().string() << "\n";
      }
      return 0;
    }

    if (*sweep) return emit(runScenarios(sweepConfigs(loadScenario(sweepFile), param, values), jobs), outDir, format);
  } catch (const Error& e) {
    std::cerr << "index-lab: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "index-lab: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}
