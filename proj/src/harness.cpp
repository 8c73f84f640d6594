#include "indexlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "indexlab/callias.hpp"
#include "indexlab/pairlab.hpp"
#include "indexlab/product.hpp"
#include "indexlab/toeplitz.hpp"

namespace indexlab {

namespace fs = std::filesystem;

const std::vector<std::string> kScenarioKinds{"lineIndexEqualsSF", "calliasCylinder", "cobordism",
                                              "toeplitzEvenEven",  "toeplitzFamily",  "oddPairing",
                                              "evenPairing",       "vanishingGap",    "clifford"};

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::ValidationError, field + ": " + what);
}

// Fills defaults into `obj` and rejects keys outside `defaults`.
Json withDefaults(const Json& obj, const Json& defaults, const std::string& where) {
  if (!obj.is_null() && !obj.is_object()) invalid(where, "must be an object");
  Json out = defaults;
  if (obj.is_null()) return out;
  for (const auto& [key, value] : obj.items()) {
    if (!defaults.contains(key)) invalid(where + "." + key, "unknown key");
    const Json& d = defaults[key];
    if (d.is_number() && !value.is_number()) invalid(where + "." + key, "must be a number");
    if (d.is_boolean() && !value.is_boolean()) invalid(where + "." + key, "must be a boolean");
    if (d.is_string() && !value.is_string() && !value.is_number_integer()) invalid(where + "." + key, "must be a string");
    if (d.is_array() && !value.is_array()) invalid(where + "." + key, "must be an array");
    out[key] = value;
  }
  return out;
}

struct KindDefaults {
  std::string geometryType;
  Json geometry;
  Json potential;  // null: no potential allowed
  Json params;
  std::vector<double> lambdaGrid;
};

Json geometryDefaults(const std::string& type) {
  if (type == "line") return {{"type", "line"}, {"halfLength", 20.0}, {"points", 400}};
  if (type == "cylinder") return {{"type", "cylinder"}, {"halfLength", 12.0}, {"linePoints", 160}, {"circleModes", 12}};
  if (type == "circle") return {{"type", "circle"}, {"modes", 16}};
  if (type == "torus") return {{"type", "torus"}, {"modesPerAxis", 8}};
  if (type == "landau") return {{"type", "landau"}, {"fockModes", 96}};
  invalid("geometry.type", "unknown geometry '" + type + "'");
}

KindDefaults kindDefaults(const std::string& kind) {
  KindDefaults k;
  if (kind == "lineIndexEqualsSF") {
    k.geometryType = "line";
    k.potential = {{"type", "tanh"}, {"level", 1.0}, {"seed", 0}, {"fiberDim", 1}, {"exteriorBand", 3.0}};
    k.params = {{"suspensionPoints", 120}, {"wilson", 1.0}};
    k.lambdaGrid = {1, 2, 4};
  } else if (kind == "calliasCylinder") {
    k.geometryType = "cylinder";
    k.potential = {{"type", "hedgehog"}, {"k", 1}, {"level", 1.0}};
    k.params = {{"calibrationSign", "auto"}, {"wilson", 1.0}};
    k.lambdaGrid = {1, 2, 4, 8};
  } else if (kind == "cobordism") {
    k.geometryType = "circle";
    k.params = {{"loop", "scalar"}, {"k", 1}};
  } else if (kind == "toeplitzEvenEven") {
    k.geometryType = "landau";
    k.params = {{"k", 1}, {"topLevel", 2}};
  } else if (kind == "toeplitzFamily") {
    k.geometryType = "landau";
    k.params = {{"speed", 1}, {"constant", false}, {"topLevel", 1}, {"samples", 64}};
  } else if (kind == "oddPairing") {
    k.geometryType = "circle";
    k.params = {{"windings", Json::array({1})}, {"mixing", 0.0}};
  } else if (kind == "evenPairing") {
    k.geometryType = "torus";
    k.params = {{"field", "bott"}, {"mass", 1.0}, {"conjugate", false}, {"flatLines", 0}};
  } else if (kind == "vanishingGap" || kind == "clifford") {
    k.geometryType = "landau";
    k.params = {{"k", 1}, {"breaking", 0.0}};
  } else {
    invalid("kind", "unknown kind '" + kind + "'");
  }
  k.geometry = geometryDefaults(k.geometryType);
  if (kind == "toeplitzFamily") k.geometry["fockModes"] = 24;
  if (kind == "vanishingGap" || kind == "clifford") k.geometry["fockModes"] = 16;
  if (kind == "cobordism") k.geometry["modes"] = 12;
  return k;
}

const std::map<std::string, double> kToleranceDefaults{
    {"window", -1.0}, {"gapRatio", 10.0}, {"chirality", 0.9}, {"localized", 0.6}, {"delocalized", 0.4}};

std::pair<int, int> lineColumn(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json loadTree(const fs::path& path, std::vector<fs::path>& stack) {
  const fs::path canon = fs::weakly_canonical(path);
  const std::string text = readFile(path.string());
  if (std::find(stack.begin(), stack.end(), canon) != stack.end()) {
    std::string chain;
    for (const auto& p : stack) chain += p.filename().string() + " -> ";
    throw Error(ErrorKind::ParseError, "circular include: " + chain + canon.filename().string());
  }
  Json tree;
  try {
    tree = Json::parse(text);
  } catch (const Json::parse_error& e) {
    auto [line, col] = lineColumn(text, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                                           e.what());
  }
  if (!tree.is_object()) throw Error(ErrorKind::ParseError, path.string() + ":1:1: scenario must be a JSON object");
  if (!tree.contains("include")) return tree;
  if (!tree["include"].is_string()) invalid("include", "must be a relative path");
  const fs::path inc = path.parent_path() / tree["include"].get<std::string>();
  stack.push_back(canon);
  Json base;
  try {
    base = loadTree(inc, stack);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ParseError) throw;
    // Point at the include directive of this file.
    const std::size_t at = text.find("\"include\"");
    auto [line, col] = lineColumn(text, at == std::string::npos ? 0 : at);
    throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                           ": in include: " + e.what());
  }
  stack.pop_back();
  tree.erase("include");
  base.merge_patch(tree);
  return base;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// Execution helpers

struct Outcome {
  std::map<std::string, std::optional<long>> sides;
  IndexResult index;  // diagnostics source, may be empty
  bool haveIndex = false;
  std::string note;
};

ModeThresholds thresholdsOf(const ScenarioConfig& c) {
  ModeThresholds th;
  th.gapRatio = c.tolerances.at("gapRatio");
  th.chirality = c.tolerances.at("chirality");
  th.localized = c.tolerances.at("localized");
  th.delocalized = c.tolerances.at("delocalized");
  return th;
}

bool customThresholds(const ScenarioConfig& c) {
  for (const char* k : {"gapRatio", "chirality", "localized", "delocalized"})
    if (c.tolerances.at(k) != kToleranceDefaults.at(k)) return true;
  return false;
}

double windowOf(const ScenarioConfig& c, double fallback) {
  const double w = c.tolerances.at("window");
  return w > 0 ? w : fallback;
}

// lambdaSearch, then a re-extraction at the chosen lambda when thresholds differ.
IndexResult searchIndex(const ScenarioConfig& c, const std::function<ProductOperator(double)>& build,
                        const PotentialField& field, double window, std::string& note) {
  try {
    LambdaChoice choice = lambdaSearch(build, field, c.lambdaGrid, window);
    if (!customThresholds(c)) return choice.index;
    return indexByChirality(build(choice.lambda), window, thresholdsOf(c));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoAdmissibleLambda) throw;
    note = e.what();
    // Report the diagnostics of the largest lambda.
    IndexResult r = indexByChirality(build(c.lambdaGrid.back()), window, thresholdsOf(c));
    r.value.reset();
    return r;
  }
}

Outcome runLine(const ScenarioConfig& c) {
  Outcome o;
  LineSpec spec{c.geometry["halfLength"].get<double>(), c.geometry["points"].get<int>()};
  validateGeometry(spec);
  const Json& pot = c.potential;
  const std::string type = pot["type"];
  const int fd = pot["fiberDim"];
  PotentialSpec ps;
  ps.fiberDim = fd;
  ps.exteriorBand = pot["exteriorBand"];
  if (type == "tanh" || type == "constant") {
    if (fd != 1) invalid("potential.fiberDim", "scalar profiles have fiber dimension 1");
    ps.kind = ScalarProfile{type == "tanh" ? ScalarProfile::Shape::tanh : ScalarProfile::Shape::constant,
                            pot["level"].get<double>()};
  } else if (type == "random") {
    ps.kind = MatrixPathPotential{randomPotentialPath(pot["seed"].get<std::uint64_t>(), fd, spec.halfLength)};
  } else {
    invalid("potential.type", "line potentials are tanh, constant or random");
  }
  PotentialField field = samplePotential(ps, spec);
  const double wilson = c.params["wilson"];
  o.index = searchIndex(
      c, [&](double l) { return lineProduct(field, spec, l, wilson); }, field, windowOf(c, 0.1), o.note);
  o.haveIndex = true;
  o.sides["index"] = o.index.value;

  auto symbol = field.symbol;
  OperatorPath path = OperatorPath::fromGenerator(PathDomain::Interval, -spec.halfLength, spec.halfLength, 81,
                                                  [symbol](double x) { return HermitianOperator(symbol(x, 0.0)); });
  FlowOptions fo;
  o.sides["sf"] = spectralFlow(path, fo).value;
  const SpectralProjection pPlus = positiveSpectralProjection(path.at(spec.halfLength), 1e-6);
  const SpectralProjection pMinus = positiveSpectralProjection(path.at(-spec.halfLength), 1e-6);
  o.sides["relind"] = relind0(pPlus, pMinus);
  o.sides["suspension"] = suspensionIndexOracle(path, c.params["suspensionPoints"].get<int>());
  return o;
}

std::mutex calibrationMutex;
std::map<std::string, int> calibrationCache;

int calibrationFor(Signature sig, const CylinderSpec& geom) {
  const std::string key = std::to_string(sig.p) + std::to_string(sig.q) + ":" + std::to_string(geom.halfLength) + ":" +
                          std::to_string(geom.linePoints) + ":" + std::to_string(geom.circleModes);
  {
    std::lock_guard<std::mutex> lock(calibrationMutex);
    auto it = calibrationCache.find(key);
    if (it != calibrationCache.end()) return it->second;
  }
  const int s = calibrateSign(sig, geom);
  std::lock_guard<std::mutex> lock(calibrationMutex);
  calibrationCache[key] = s;
  return s;
}

Outcome runCylinder(const ScenarioConfig& c) {
  Outcome o;
  CylinderSpec geom{c.geometry["halfLength"].get<double>(), c.geometry["linePoints"].get<int>(),
                    c.geometry["circleModes"].get<int>()};
  validateGeometry(geom);
  const std::string type = c.potential["type"];
  CalliasScenario sc;
  if (type == "hedgehog") {
    sc = hedgehogScenario(c.potential["k"].get<int>(), c.signature, geom);
  } else if (type == "constant") {
    sc.geometry = geom;
    sc.signature = c.signature;
    sc.potential.fiberDim = c.signature.p == 0 ? 2 : 1;
    if (c.signature.p == 0) {
      // Invertible everywhere and odd for sigma3: level * sigma1.
      CollarPotential cp;
      const double level = c.potential["level"];
      CMatrix s1 = CMatrix::Zero(2, 2);
      s1(0, 1) = s1(1, 0) = level;
      cp.boundary = [s1](double) { return s1; };
      cp.angularDegree = 0;
      cp.reference = s1;
      sc.potential.kind = cp;
    } else {
      sc.potential.kind = ScalarProfile{ScalarProfile::Shape::constant, c.potential["level"].get<double>()};
    }
  } else {
    invalid("potential.type", "cylinder potentials are hedgehog or constant");
  }
  sc.lambdaGrid = c.lambdaGrid;
  sc.window = windowOf(c, 0.05);
  sc.wilson = c.params["wilson"];
  const Json& cal = c.params["calibrationSign"];
  if (cal.is_string()) {
    if (cal != "auto") invalid("params.calibrationSign", "must be 1, -1 or \"auto\"");
    sc.calibrationSign = c.signature.p == c.signature.q ? calibrationFor(c.signature, geom) : 1;
  } else {
    sc.calibrationSign = cal.get<int>();
    if (sc.calibrationSign != 1 && sc.calibrationSign != -1) invalid("params.calibrationSign", "must be 1 or -1");
  }
  CalliasReport r = calliasVerify(sc);
  if (customThresholds(c) && r.lambda > 0)
    r.lhs = indexByChirality(buildCylinderProduct(sc, r.lambda), sc.window, thresholdsOf(c));
  o.index = r.lhs;
  o.haveIndex = r.lhs.method != "trivial";
  o.note = r.note.empty() ? r.lhs.note : r.note;
  o.sides["lhs"] = r.lhs.value;
  o.sides["rhs"] = r.rhs;
  return o;
}

Outcome runCobordism(const ScenarioConfig& c) {
  Outcome o;
  const int modes = c.geometry["modes"];
  const int k = c.params["k"];
  const std::string loop = c.params["loop"];
  std::function<CMatrix(double)> u;
  int degree = std::max(std::abs(k), 1);
  if (loop == "scalar") {
    u = [k](double th) { return CMatrix::Constant(1, 1, std::polar(1.0, k * th)).eval(); };
  } else if (loop == "pair") {
    u = [k](double th) {
      CMatrix m = CMatrix::Zero(2, 2);
      m(0, 0) = std::polar(1.0, k * th);
      m(1, 1) = std::polar(1.0, -k * th);
      return m;
    };
  } else if (loop == "constant") {
    u = [](double) { return CMatrix::Constant(1, 1, cd(0, 1)).eval(); };
    degree = 1;
  } else {
    invalid("params.loop", "must be scalar, pair or constant");
  }
  CobordismResult r = cobordismCheck(u, degree, modes);
  o.sides["sf"] = r.spectralFlow;
  o.sides["winding"] = r.winding;
  return o;
}

Outcome runEvenEven(const ScenarioConfig& c) {
  Outcome o;
  EvenEvenReport r = evenEvenToeplitzIndex(c.geometry["fockModes"].get<int>(),
                                           TrigPolynomial::monomial(c.params["k"].get<int>()),
                                           c.params["topLevel"].get<int>());
  o.index = r.productIndex;
  o.haveIndex = true;
  o.sides["toeplitz"] = r.indexTplus - r.indexTminus;
  o.sides["kernelCount"] = r.kernelCountTplus - r.indexTminus;
  o.sides["product"] = r.productIndex.value;
  return o;
}

Outcome runFamily(const ScenarioConfig& c) {
  Outcome o;
  const int speed = c.params["speed"];
  const bool constant = c.params["constant"];
  auto family = [speed, constant](double t) { return hedgehogFamily(constant ? 0.25 : t, speed); };
  FamilyFlowReport r = toeplitzFamilyFlow(family, c.geometry["fockModes"].get<int>(), c.params["topLevel"].get<int>(),
                                          c.params["samples"].get<int>());
  o.sides["toeplitz"] = r.toeplitzFlow.value;
  o.sides["product"] = r.productFlow.value;
  return o;
}

Outcome runOddPairing(const ScenarioConfig& c) {
  Outcome o;
  std::vector<int> ks = c.params["windings"].get<std::vector<int>>();
  if (ks.empty()) invalid("params.windings", "must not be empty");
  const double mixing = c.params["mixing"];
  const int n = static_cast<int>(ks.size());
  // Constant unitary mixing e^{i mixing X} with a fixed Hermitian X.
  CMatrix x = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) x(i, j) = i == j ? cd(0.3 * (i + 1), 0) : cd(0.2, 0.1 * (j - i));
  EigenSystem es = eigh(HermitianOperator(CMatrix(0.5 * (x + x.adjoint()))));
  CVector ph(n);
  for (int i = 0; i < n; ++i) ph(i) = std::polar(1.0, mixing * es.values(i));
  const CMatrix v = es.vectors * ph.asDiagonal() * es.vectors.adjoint();
  UnitarySymbol u;
  u.fiberDim = n;
  for (int k : ks) u.degree = std::max(u.degree, std::abs(k));
  u.u = [ks, v](double th) {
    CMatrix d = CMatrix::Zero(ks.size(), ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i) d(i, i) = std::polar(1.0, ks[i] * th);
    return CMatrix(v * d * v.adjoint());
  };
  OddPairingReport r = oddPairingReport(u, hardyProjection(c.geometry["modes"].get<int>()));
  o.sides["sf"] = r.spectralFlow;
  o.sides["kernelCount"] = r.kernelCount;
  o.sides["winding"] = r.winding;
  return o;
}

Outcome runEvenPairing(const ScenarioConfig& c) {
  Outcome o;
  const std::string type = c.params["field"];
  const double mass = c.params["mass"];
  const bool conj = c.params["conjugate"];
  const int flat = c.params["flatLines"];
  if (flat < 0 || flat > 2) invalid("params.flatLines", "must be 0, 1 or 2");
  if (type != "bott" && type != "constant") invalid("params.field", "must be bott or constant");
  auto field = [=](double a, double b) {
    CMatrix base = CMatrix::Zero(2, 2);
    if (type == "bott") base = bottProjection(a, b, mass);
    else base(0, 0) = 1;
    if (conj) base = base.conjugate().eval();
    CMatrix p = CMatrix::Zero(2 + flat, 2 + flat);
    p.topLeftCorner(2, 2) = base;
    for (int i = 0; i < flat; ++i) p(2 + i, 2 + i) = 1;
    return p;
  };
  KProjectionField f = sampleProjectionField(field, c.geometry["modesPerAxis"].get<int>());
  try {
    EvenPairingReport r = evenPairingReport(f);
    o.index = r.index;
    o.haveIndex = true;
    o.sides["index"] = r.index.value;
    o.sides["chern"] = kEvenPairingSign * r.chern;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InconclusiveIndex && e.kind() != ErrorKind::ChernOracleMismatch) throw;
    o.note = e.what();
    o.sides["index"] = std::nullopt;
    o.sides["chern"] = kEvenPairingSign * latticeChern(f);
  }
  return o;
}

Outcome runVanishing(const ScenarioConfig& c, bool cliffordOnly) {
  Outcome o;
  if (c.signature.q != 1) invalid("signature", "q must be 1");
  if (cliffordOnly && c.signature.p != 0) invalid("signature", "Clifford scenarios are (0,1)");
  const int fock = c.geometry["fockModes"];
  const int k = c.params["k"];
  const double breaking = c.params["breaking"];
  LandauDirac ld = landauDirac(fock, 1);
  KernelProjection kp = kernelProjection(ld.full, 0.5);
  const Eigen::Index np = ld.plus.dim(), nm = ld.minus.dim();
  const TrigPolynomial f = TrigPolynomial::monomial(k);
  CMatrix fm = CMatrix::Zero(np + nm, np + nm);
  fm.topLeftCorner(np, np) = landauMultiplication(f, ld.plus, ld.plus);
  fm.bottomRightCorner(nm, nm) = landauMultiplication(f, ld.minus, ld.minus);
  const CMatrix re = 0.5 * (fm + fm.adjoint()), im = cd(0, -0.5) * (fm - fm.adjoint());
  VanishingCertificate cert;
  if (c.signature.p == 1) {
    cert = q1Vanishing(HermitianOperator(re), kp, c.signature, std::nullopt, 1);
  } else {
    CMatrix s1 = CMatrix::Zero(2, 2), s2 = CMatrix::Zero(2, 2), s3 = CMatrix::Zero(2, 2);
    s1 << 0, 1, 1, 0;
    s2 << 0, cd(0, -1), cd(0, 1), 0;
    s3 << 1, 0, 0, -1;
    const CMatrix id = CMatrix::Identity(np + nm, np + nm);
    HermitianOperator big(CMatrix(kron(re, s1) + kron(im, s2) + breaking * kron(id, s3)));
    cert = q1Vanishing(big, kp, c.signature, Grading(HermitianOperator(s3)), 2);
  }
  o.sides["index"] = cert.certified ? std::optional<long>(cert.index) : std::nullopt;
  if (!cert.certified) o.note = "symmetry certificate failed";
  return o;
}

}  // namespace

// ---------------------------------------------------------------------------

ScenarioConfig parseScenario(const Json& tree) {
  if (!tree.is_object()) invalid("scenario", "must be an object");
  static const std::set<std::string> allowed{"name",     "kind",     "description", "signature",      "geometry",
                                             "potential", "params",  "lambdaGrid",  "tolerances",     "expected",
                                             "expectedSource", "expectedNot"};
  for (const auto& [key, value] : tree.items())
    if (!allowed.count(key)) invalid(key, "unknown key");
  ScenarioConfig c;
  if (!tree.contains("name") || !tree["name"].is_string() || tree["name"].get<std::string>().empty())
    invalid("name", "required non-empty string");
  if (!tree.contains("kind") || !tree["kind"].is_string()) invalid("kind", "required string");
  c.name = tree["name"];
  c.kind = tree["kind"];
  KindDefaults d = kindDefaults(c.kind);

  if (tree.contains("signature")) {
    const Json& s = tree["signature"];
    if (s.is_array() && s.size() == 2 && s[0].is_number_integer() && s[1].is_number_integer()) {
      c.signature = makeSignature(s[0].get<int>(), s[1].get<int>());
    } else if (s.is_object()) {
      Json full = withDefaults(s, Json{{"p", 1}, {"q", 1}}, "signature");
      c.signature = makeSignature(full["p"].get<int>(), full["q"].get<int>());
    } else {
      invalid("signature", "must be [p, q] or {\"p\": .., \"q\": ..}");
    }
  }
  if (c.kind == "toeplitzFamily" && !tree.contains("signature")) c.signature = makeSignature(1, 0);
  if (c.kind == "toeplitzEvenEven" && !tree.contains("signature")) c.signature = makeSignature(0, 0);
  if ((c.kind == "vanishingGap" || c.kind == "clifford") && !tree.contains("signature"))
    c.signature = makeSignature(c.kind == "clifford" ? 0 : 1, 1);

  std::string gtype = d.geometryType;
  if (tree.contains("geometry") && tree["geometry"].contains("type")) {
    if (!tree["geometry"]["type"].is_string()) invalid("geometry.type", "must be a string");
    gtype = tree["geometry"]["type"];
    if (gtype != d.geometryType) invalid("geometry.type", c.kind + " runs on " + d.geometryType);
  }
  c.geometry = withDefaults(tree.value("geometry", Json()), d.geometry, "geometry");
  if (d.potential.is_null()) {
    if (tree.contains("potential")) invalid("potential", c.kind + " takes no potential");
    c.potential = Json::object();
  } else {
    c.potential = withDefaults(tree.value("potential", Json()), d.potential, "potential");
  }
  c.params = withDefaults(tree.value("params", Json()), d.params, "params");

  c.lambdaGrid = d.lambdaGrid;
  if (tree.contains("lambdaGrid")) {
    const Json& g = tree["lambdaGrid"];
    if (!g.is_array() || g.empty()) invalid("lambdaGrid", "must be a non-empty array of numbers");
    c.lambdaGrid.clear();
    for (const auto& v : g) {
      if (!v.is_number() || v.get<double>() <= 0) invalid("lambdaGrid", "entries must be positive numbers");
      c.lambdaGrid.push_back(v.get<double>());
    }
    if (!std::is_sorted(c.lambdaGrid.begin(), c.lambdaGrid.end())) invalid("lambdaGrid", "must be increasing");
  }

  c.tolerances = kToleranceDefaults;
  if (tree.contains("tolerances")) {
    const Json& t = tree["tolerances"];
    if (!t.is_object()) invalid("tolerances", "must be an object");
    for (const auto& [key, value] : t.items()) {
      if (!kToleranceDefaults.count(key)) invalid("tolerances." + key, "unknown key");
      if (!value.is_number()) invalid("tolerances." + key, "must be a number");
      c.tolerances[key] = value.get<double>();
    }
  }

  if (tree.contains("expected")) {
    if (!tree["expected"].is_number_integer()) invalid("expected", "must be an integer");
    c.expected = tree["expected"].get<long>();
  }
  if (tree.contains("expectedNot")) {
    if (!tree["expectedNot"].is_number_integer()) invalid("expectedNot", "must be an integer");
    c.expectedNot = tree["expectedNot"].get<long>();
  }
  if (tree.contains("expectedSource")) {
    if (!tree["expectedSource"].is_string()) invalid("expectedSource", "must be a string");
    c.expectedSource = tree["expectedSource"];
  }

  Json canon = Json::object();
  canon["name"] = c.name;
  canon["kind"] = c.kind;
  canon["signature"] = Json::array({c.signature.p, c.signature.q});
  canon["geometry"] = c.geometry;
  if (!c.potential.empty()) canon["potential"] = c.potential;
  canon["params"] = c.params;
  if (!c.lambdaGrid.empty()) canon["lambdaGrid"] = c.lambdaGrid;
  canon["tolerances"] = c.tolerances;
  if (c.expected) canon["expected"] = *c.expected;
  if (c.expectedNot) canon["expectedNot"] = *c.expectedNot;
  c.canonical = canon;
  return c;
}

ScenarioConfig loadScenario(const std::string& path) {
  std::vector<fs::path> stack;
  return parseScenario(loadTree(fs::path(path), stack));
}

std::vector<std::string> listScenarioFiles(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::IoError, dir + " is not a directory");
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  return files;
}

std::string configHash(const Json& canonical) {
  // 64-bit FNV-1a over the canonical dump (object keys are sorted).
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canonical.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return hex64(h);
}

RunRecord runScenario(const ScenarioConfig& cfg) {
  RunRecord rec;
  rec.scenario = cfg.name;
  rec.configHash = configHash(cfg.canonical);
  rec.version = INDEXLAB_VERSION;
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  bool failed = false;
  try {
    if (cfg.kind == "lineIndexEqualsSF") o = runLine(cfg);
    else if (cfg.kind == "calliasCylinder") o = runCylinder(cfg);
    else if (cfg.kind == "cobordism") o = runCobordism(cfg);
    else if (cfg.kind == "toeplitzEvenEven") o = runEvenEven(cfg);
    else if (cfg.kind == "toeplitzFamily") o = runFamily(cfg);
    else if (cfg.kind == "oddPairing") o = runOddPairing(cfg);
    else if (cfg.kind == "evenPairing") o = runEvenPairing(cfg);
    else if (cfg.kind == "vanishingGap") o = runVanishing(cfg, false);
    else if (cfg.kind == "clifford") o = runVanishing(cfg, true);
    else invalid("kind", "unknown kind '" + cfg.kind + "'");
  } catch (const Error& e) {
    failed = true;
    rec.note = e.what();
    // Disagreement between internal routes is a failure, anything else is inconclusive.
    rec.status = e.kind() == ErrorKind::MethodDisagreement ? RunStatus::disagree : RunStatus::inconclusive;
  } catch (const std::exception& e) {
    failed = true;
    rec.note = e.what();
    rec.status = RunStatus::inconclusive;
  }
  rec.diagnostics.timingMs =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (failed) return rec;

  if (o.haveIndex) {
    rec.diagnostics.gapRatio = o.index.gapRatio;
    rec.diagnostics.zeroCluster = o.index.zeroCluster;
    rec.diagnostics.chirality = o.index.chirality;
    rec.diagnostics.localization = o.index.localization;
  }
  rec.note = o.note;
  bool missing = false;
  std::set<long> values;
  for (const auto& [label, v] : o.sides) {
    if (!v) {
      missing = true;
      continue;
    }
    rec.sides[label] = *v;
    values.insert(*v);
  }
  if (values.size() > 1) {
    rec.status = RunStatus::disagree;
    if (rec.note.empty()) rec.note = "sides disagree";
  } else if (missing || values.empty()) {
    rec.status = RunStatus::inconclusive;
  } else {
    rec.verdict = *values.begin();
    rec.status = RunStatus::pass;
  }
  if (cfg.expected && rec.status == RunStatus::pass && *rec.verdict != *cfg.expected) {
    rec.status = RunStatus::disagree;
    rec.note = "verdict " + std::to_string(*rec.verdict) + " differs from expected " + std::to_string(*cfg.expected);
  }
  if (cfg.expectedNot && rec.status != RunStatus::disagree) {
    const bool equal = rec.verdict && *rec.verdict == *cfg.expectedNot;
    rec.status = equal ? RunStatus::disagree : RunStatus::pass;
    if (equal) rec.note = "negative control reproduced the excluded value";
  }
  return rec;
}

int defaultJobs() {
  if (const char* env = std::getenv("INDEX_LAB_JOBS")) {
    const int j = std::atoi(env);
    if (j > 0) return j;
  }
  return 1;
}

std::vector<RunRecord> runScenarios(const std::vector<ScenarioConfig>& cfgs, int jobs) {
  std::vector<RunRecord> out(cfgs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cfgs.size(); i = next++) out[i] = runScenario(cfgs[i]);
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(cfgs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  std::stable_sort(out.begin(), out.end(), [](const RunRecord& a, const RunRecord& b) { return a.scenario < b.scenario; });
  return out;
}

namespace {

Json numberOrNull(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

const char* statusName(RunStatus s) {
  switch (s) {
    case RunStatus::pass: return "pass";
    case RunStatus::disagree: return "disagree";
    case RunStatus::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

}  // namespace

Json recordToJson(const RunRecord& r, bool withTiming) {
  Json j;
  j["scenario"] = r.scenario;
  j["verdict"] = r.verdict ? Json(*r.verdict) : Json("INCONCLUSIVE");
  j["sides"] = Json::object();
  for (const auto& [k, v] : r.sides) j["sides"][k] = v;
  Json d;
  d["gapRatio"] = numberOrNull(r.diagnostics.gapRatio);
  Json zc = Json::array();
  for (double v : r.diagnostics.zeroCluster) zc.push_back(numberOrNull(v));
  d["zeroCluster"] = zc;
  d["chirality"] = r.diagnostics.chirality;
  d["localization"] = r.diagnostics.localization;
  d["timingMs"] = withTiming ? r.diagnostics.timingMs : 0.0;
  j["diagnostics"] = d;
  j["configHash"] = r.configHash;
  j["version"] = r.version;
  j["status"] = statusName(r.status);
  j["note"] = r.note;
  return j;
}

RunRecord recordFromJson(const Json& j) {
  RunRecord r;
  try {
    r.scenario = j.at("scenario").get<std::string>();
    const Json& v = j.at("verdict");
    if (v.is_number_integer()) r.verdict = v.get<long>();
    else if (v != "INCONCLUSIVE") throw Error(ErrorKind::ValidationError, "verdict must be an integer or INCONCLUSIVE");
    for (const auto& [k, s] : j.at("sides").items()) r.sides[k] = s.get<long>();
    const Json& d = j.at("diagnostics");
    r.diagnostics.gapRatio = d.at("gapRatio").is_null() ? kInf : d.at("gapRatio").get<double>();
    for (const auto& z : d.at("zeroCluster")) r.diagnostics.zeroCluster.push_back(z.is_null() ? kInf : z.get<double>());
    r.diagnostics.chirality = d.at("chirality").get<std::vector<double>>();
    r.diagnostics.localization = d.at("localization").get<std::vector<double>>();
    r.diagnostics.timingMs = d.at("timingMs").get<double>();
    r.configHash = j.at("configHash").get<std::string>();
    r.version = j.at("version").get<std::string>();
    const std::string st = j.value("status", "inconclusive");
    r.status = st == "pass" ? RunStatus::pass : st == "disagree" ? RunStatus::disagree : RunStatus::inconclusive;
    r.note = j.value("note", "");
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ValidationError, std::string("run record: ") + e.what());
  }
  return r;
}

std::string recordsToJson(const std::vector<RunRecord>& records, bool withTiming) {
  Json arr = Json::array();
  for (const auto& r : records) arr.push_back(recordToJson(r, withTiming));
  return arr.dump(2);
}

std::string emitJson(const std::vector<RunRecord>& records, const std::string& outDir) {
  std::error_code ec;
  fs::create_directories(outDir, ec);
  const std::string path = (fs::path(outDir) / "records.json").string();
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out << recordsToJson(records) << "\n";
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
  return path;
}

std::vector<std::string> emitCsv(const std::vector<RunRecord>& records, const std::string& outDir) {
  std::error_code ec;
  fs::create_directories(outDir, ec);
  std::vector<std::string> paths;
  for (const auto& r : records) {
    std::string file = r.scenario;
    for (char& ch : file)
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_' && ch != '.') ch = '_';
    const std::string path = (fs::path(outDir) / (file + ".csv")).string();
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out << "index,eigenvalue,chirality,localization\n";
    const auto& d = r.diagnostics;
    for (std::size_t i = 0; i < d.zeroCluster.size(); ++i) {
      out << i << "," << d.zeroCluster[i] << "," << (i < d.chirality.size() ? d.chirality[i] : 0.0) << ","
          << (i < d.localization.size() ? d.localization[i] : 0.0) << "\n";
    }
    if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
    paths.push_back(path);
  }
  return paths;
}

int exitStatus(const std::vector<RunRecord>& records) {
  bool inconclusive = false;
  for (const auto& r : records) {
    if (r.status == RunStatus::disagree) return 1;
    if (r.status == RunStatus::inconclusive) inconclusive = true;
  }
  return inconclusive ? 2 : 0;
}

CompareReport compareRecords(const std::vector<RunRecord>& records, const Json& baseline) {
  if (!baseline.is_array()) throw Error(ErrorKind::ValidationError, "baseline must be an array of run records");
  std::map<std::string, RunRecord> base;
  for (const auto& j : baseline) {
    RunRecord r = recordFromJson(j);
    base[r.scenario] = r;
  }
  CompareReport rep;
  rep.records = records;
  auto show = [](const std::optional<long>& v) { return v ? std::to_string(*v) : std::string("INCONCLUSIVE"); };
  for (const auto& r : records) {
    auto it = base.find(r.scenario);
    if (it == base.end()) {
      rep.notes.push_back(r.scenario + ": not in baseline (additive)");
      if (r.status == RunStatus::disagree) rep.mismatches.push_back(r.scenario + ": " + r.note);
      continue;
    }
    const RunRecord& b = it->second;
    if (r.verdict != b.verdict)
      rep.mismatches.push_back(r.scenario + ": verdict " + show(r.verdict) + " (baseline " + show(b.verdict) + ")");
    for (const auto& [label, v] : b.sides) {
      auto s = r.sides.find(label);
      if (s == r.sides.end()) rep.mismatches.push_back(r.scenario + ": side " + label + " missing");
      else if (s->second != v)
        rep.mismatches.push_back(r.scenario + ": side " + label + " = " + std::to_string(s->second) + " (baseline " +
                                 std::to_string(v) + ")");
    }
    for (const auto& [label, v] : r.sides)
      if (!b.sides.count(label)) rep.mismatches.push_back(r.scenario + ": side " + label + " not in baseline");
    if (r.status == RunStatus::disagree && b.status != RunStatus::disagree)
      rep.mismatches.push_back(r.scenario + ": " + r.note);
  }
  for (const auto& [name, b] : base) {
    const bool present =
        std::any_of(records.begin(), records.end(), [&](const RunRecord& r) { return r.scenario == name; });
    if (!present) rep.notes.push_back(name + ": in baseline but not in the suite");
  }
  rep.status = rep.mismatches.empty() ? 0 : 1;
  return rep;
}

CompareReport regressionCompare(const std::string& suiteDir, const std::string& baselinePath, int jobs) {
  if (!fs::exists(baselinePath)) throw Error(ErrorKind::BaselineMissing, baselinePath + " does not exist");
  Json baseline;
  const std::string text = readFile(baselinePath);
  try {
    baseline = Json::parse(text);
  } catch (const Json::parse_error& e) {
    auto [line, col] = lineColumn(text, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorKind::ParseError, baselinePath + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
                                           e.what());
  }
  std::vector<ScenarioConfig> cfgs;
  std::set<std::string> names;
  for (const auto& f : listScenarioFiles(suiteDir)) {
    cfgs.push_back(loadScenario(f));
    if (!names.insert(cfgs.back().name).second) invalid("name", "duplicate scenario name '" + cfgs.back().name + "'");
  }
  return compareRecords(runScenarios(cfgs, jobs), baseline);
}

std::vector<ScenarioConfig> sweepConfigs(const ScenarioConfig& base, const std::string& key,
                                         const std::vector<std::string>& values) {
  std::vector<ScenarioConfig> out;
  for (const auto& value : values) {
    Json tree = base.canonical;
    Json parsed;
    try {
      parsed = Json::parse(value);
    } catch (const Json::parse_error&) {
      parsed = value;  // bare strings such as bott
    }
    Json* node = &tree;
    std::stringstream ss(key);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) invalid("sweep", "empty parameter key");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      if (!node->contains(parts[i])) invalid("sweep." + key, "no such section");
      node = &(*node)[parts[i]];
    }
    if (!node->contains(parts.back())) invalid("sweep." + key, "no such key");
    (*node)[parts.back()] = parsed;
    tree["name"] = base.name + "@" + key + "=" + value;
    if (base.expected) tree.erase("expected");
    out.push_back(parseScenario(tree));
  }
  return out;
}

OperatorPath randomPotentialPath(std::uint64_t seed, int fiberDim, double halfLength) {
  if (fiberDim < 1) throw Error(ErrorKind::InvalidArgument, "fiber dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  std::bernoulli_distribution coin(0.5);
  auto endpoint = [&] {
    CMatrix a(fiberDim, fiberDim);
    for (int i = 0; i < fiberDim; ++i)
      for (int j = 0; j < fiberDim; ++j) a(i, j) = cd(g(rng), g(rng));
    Eigen::HouseholderQR<CMatrix> qr(a);
    CMatrix q = qr.householderQ() * CMatrix::Identity(fiberDim, fiberDim);
    RVector ev(fiberDim);
    for (int i = 0; i < fiberDim; ++i) ev(i) = (coin(rng) ? 1.0 : -1.0) * mag(rng);
    return CMatrix(q * ev.cast<cd>().asDiagonal() * q.adjoint());
  };
  const CMatrix left = endpoint(), right = endpoint();
  return OperatorPath::fromGenerator(PathDomain::Interval, -halfLength, halfLength, 81, [left, right](double x) {
    const double tau = 0.5 * (1 + std::tanh(x / 2));
    return HermitianOperator(CMatrix((1 - tau) * left + tau * right));
  });
}

long endpointIndex(const OperatorPath& path) {
  auto positives = [](const HermitianOperator& h) {
    RVector ev = eigh(h).values;
    return static_cast<long>((ev.array() > 0).count());
  };
  return positives(path.at(path.t1())) - positives(path.at(path.t0()));
}

}  // namespace indexlab
