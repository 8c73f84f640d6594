#pragma once

#include <functional>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "indexlab/grading.hpp"
#include "indexlab/projflow.hpp"

namespace indexlab {

// Layout convention for every builder: spinor components outermost, then
// the radial/line grid, then circle modes, then the potential fiber.

struct CircleSpec {
  int modes = 8;
};
struct LineSpec {
  double halfLength = 20.0;
  int points = 400;
};
struct CylinderSpec {
  double halfLength = 12.0;
  int linePoints = 160;
  int circleModes = 12;
};
struct TorusSpec {
  int modesPerAxis = 8;
};
struct LandauSpec {
  int fockModes = 96;
};
using GeometrySpec = std::variant<CircleSpec, LineSpec, CylinderSpec, TorusSpec, LandauSpec>;
void validateGeometry(const GeometrySpec& g);

constexpr Eigen::Index kDefaultDimensionCap = 20000;

// Fourier modes -m..m.
std::vector<int> circleModeNumbers(int modes);
HermitianOperator circleDirac(int modes);

struct GradedCircle {
  HermitianOperator dirac;  // sigma1 (x) diag(n)
  Grading grading;          // sigma3 (x) 1
};
GradedCircle gradedCircleDirac(int modes);

struct LineOperator {
  CMatrix derivative;  // real antisymmetric central difference
  std::vector<double> grid;
  double step = 0.0;
};
LineOperator lineOperator(const LineSpec& spec);
SpMat lineDerivativeSparse(const LineSpec& spec);
std::vector<double> lineGrid(const LineSpec& spec);
// (r / 2h) (2 - shift - shift^-1) with zero padding; positive semidefinite,
// equal to r/h * (1 - cos kh) on plane waves.
SpMat wilsonTerm(const LineSpec& spec, double r);

struct CylinderDirac {
  HermitianOperator dirac;         // on spinor(2) (x) line (x) circle
  std::optional<Grading> grading;  // present for q = 0
  int spinorDim = 2;
};
// q = 0: [[0, d_r + D_N], [-d_r + D_N, 0]];  q = 1: -i d_r (x) Gamma_N + D_N with
// the graded circle operator (the spinor factor is then the C^2 of Gamma_N).
CylinderDirac cylinderDirac(const CylinderSpec& spec, int q, Eigen::Index dimCap = kDefaultDimensionCap);
LineSpec cylinderLine(const CylinderSpec& spec);

struct TorusDirac {
  CMatrix dPlus;          // diagonal, symbol i(k1 + i k2)
  HermitianOperator full;  // [[0, D+^*], [D+, 0]]
  Grading grading;         // diag(1, -1) on the spinor factor
  std::vector<std::pair<int, int>> momenta;  // (k1, k2) per mode, row-major
};
TorusDirac torusDiracPlus(int modesPerAxis);
// Unitary map from Fourier coefficients to position samples on the
// (2K+1)^2 grid x_j = 2 pi j / (2K+1).
CMatrix torusFourierMatrix(int modesPerAxis);

// f(theta) = sum_k c_k e^{ik theta}.
struct TrigPolynomial {
  std::map<int, cd> coeffs;
  cd operator()(double theta) const;
  int degree() const;
  TrigPolynomial conjugate() const;
  static TrigPolynomial monomial(int k, cd c = 1.0);
};

// Matrix of multiplication by f in the orthonormal lowest-Landau-level basis
// z^m e^{-|z|^2/2} / sqrt(pi m!), m = 0..fockModes-1, by radial quadrature.
CMatrix landauSymbolMatrix(const TrigPolynomial& f, int fockModes);

// Landau-level states |l, m> with l = 0..levels-1 and m = 0..fockModes-1,
// index l * fockModes + m. Angular momentum m - l.
struct LandauBasis {
  int levels = 1;
  int fockModes = 8;
  Eigen::Index dim() const { return static_cast<Eigen::Index>(levels) * fockModes; }
  Eigen::Index index(int l, int m) const { return static_cast<Eigen::Index>(l) * fockModes + m; }
};
// <l', m'| f |l, m> between two truncated bases, by radial quadrature.
CMatrix landauMultiplication(const TrigPolynomial& f, const LandauBasis& out, const LandauBasis& in);

// Landau Dirac operator: D+ = sqrt(2) a from levels 0..L to levels 0..L-1,
// full D = [[0, D-], [D+, 0]] on (L+1 levels) (+) (L levels).
struct LandauDirac {
  LandauBasis plus, minus;
  CMatrix dPlus;
  HermitianOperator full;
  Grading grading;
};
LandauDirac landauDirac(int fockModes, int topLevel);

// Smoothstep collar: 1 left of transitionStart, 0 right of transitionEnd.
struct CutoffRho {
  double transitionStart = -1.0;
  double transitionEnd = 0.0;
  double operator()(double r) const;
};
CutoffRho cutoffRho(double transitionStart, double transitionEnd);

struct HedgehogPotential {
  int k = 1;
  std::optional<CMatrix> cap;  // interior value, sigma3 when absent
};
struct ScalarProfile {
  enum class Shape { tanh, constant };
  Shape shape = Shape::tanh;
  double level = 1.0;
};
struct MatrixPathPotential {
  OperatorPath path;  // parameter is the line coordinate, clamped to its interval
};
struct CollarPotential {
  std::function<CMatrix(double theta)> boundary;
  int angularDegree = 1;
  CMatrix reference;
};
struct PotentialSpec {
  std::variant<HedgehogPotential, ScalarProfile, MatrixPathPotential, CollarPotential> kind;
  int fiberDim = 1;
  // Sites with |x| >= exteriorBand (line) or r <= -exteriorBand, r >= exteriorBand
  // (cylinder) must carry an invertible potential.
  double exteriorBand = 3.0;
  CutoffRho rho{-6.0, -2.0};
};

// Potential sampled on a geometry.
struct PotentialField {
  int fiberDim = 1;
  std::vector<double> positions;  // line or radial sites
  int angularSamples = 0;         // 0 on the line
  std::function<CMatrix(double, double)> symbol;  // S(x) or S(r, theta) as a fiber matrix
  HermitianOperator assembled;    // on grid (x) circle modes (x) fiber
  double exteriorMargin = 0.0;    // min smallest |eigenvalue| over exterior sites
  double differenceQuotient = 0.0;  // max |S(x_{k+1}) - S(x_k)| / h
  std::vector<char> exterior;     // per grid site
};
PotentialField samplePotential(const PotentialSpec& spec, const GeometrySpec& geom);

// Assembles a theta-dependent fiber symbol into circle Fourier modes by
// an exact discrete transform (degree must be below the sample count / 2).
CMatrix fourierAssemble(const std::function<CMatrix(double)>& symbol, int fiberDim, int modes, int angularDegree);

// Lifts an operator on G (x) F to spinor (x) G (x) F.
HermitianOperator liftToSpinor(const HermitianOperator& op, int spinorDim);

// 1 on interior basis vectors, 0 elsewhere. Line interior: inner 80% of the
// grid. Cylinder adds |n| <= 0.75 modes.
RVector lineInteriorMask(const LineSpec& spec, int spinorDim, int fiberDim);
RVector cylinderInteriorMask(const CylinderSpec& spec, int spinorDim, int fiberDim);

}  // namespace indexlab
