#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "indexlab/geometry.hpp"
#include "indexlab/product.hpp"

namespace indexlab {

struct CalliasScenario {
  CylinderSpec geometry;
  PotentialSpec potential;
  Signature signature{1, 1};
  CMatrix reference;               // T on the fiber; empty picks -1 (p = 1) or sigma1 (p = 0)
  std::optional<CMatrix> gammaS;   // fiber grading for p = 0, sigma3 when absent
  std::vector<double> lambdaGrid{1, 2, 4, 8};
  double window = 0.05;
  double wilson = 1.0;
  int calibrationSign = 1;         // global lhs/rhs sign, fixed by a k = 1 run
};

// The fiber reference T actually used by a scenario.
CMatrix scenarioReference(const CalliasScenario& sc);

// Product operator on spinor (x) line (x) circle modes (x) fiber.
ProductOperator buildCylinderProduct(const CalliasScenario& sc, double lambda);

struct BoundaryData {
  int fiberDim = 1;
  int circleModes = 1;
  int angularDegree = 0;
  std::function<CMatrix(double)> sN;   // S(0, theta)
  std::vector<double> thetas;          // loop samples
  HermitianOperator dN;                // circle operator (graded for q = 1)
  std::optional<Grading> gammaN;
  std::optional<Grading> gammaS;
  // Present when S_N = [[0, U*], [U, 0]] in the fiber grading.
  std::function<CMatrix(double)> uN;
};

BoundaryData restrictToHypersurface(const CalliasScenario& sc);

// p = 0: relind1 of the loops P+(S_N) and P+(T). p = 1: the fiberwise relind0,
// checked constant over the loop.
long boundaryRelativeClass(const BoundaryData& bd, const CMatrix& reference, int p);

struct PairingResult {
  long value = 0;
  std::string method;
  long crossCheck = 0;  // second route (p = 1 only)
};
// p = 0: SF0(D_N, U_N^* D_N U_N). p = 1: index of P+(F_N) D_N P+(F_N) by
// chirality counting on the compression, cross-checked by kernel/cokernel
// counting of its positive block. Throws MethodDisagreement when they differ.
PairingResult boundaryPairing(const BoundaryData& bd, int p);

struct CalliasReport {
  IndexResult lhs;
  std::optional<long> rhs;
  long relativeClass = 0;
  bool agree = false;
  double lambda = 0.0;
  FredholmEstimate estimate;
  std::string note;
};
CalliasReport calliasVerify(const CalliasScenario& sc);

// Both scenarios share boundary data; true iff the extracted indices agree.
bool cylinderReductionCheck(const CalliasScenario& a, const CalliasScenario& b);

struct CobordismResult {
  long spectralFlow = 0;
  long winding = 0;
};
// SF0(D_N, u^* D_N u) for a unitary fiber loop given by a trigonometric
// polynomial of the stated degree.
CobordismResult cobordismCheck(const std::function<CMatrix(double)>& u, int angularDegree, int circleModes = 12);

// Spectral flow of t -> (1-t) D_N + t u^* D_N u, D_N = diag(n + 1/2) on
// |n| <= circleModes, with u^* D_N u evaluated exactly on the truncation.
long conjugationFlow(const std::function<CMatrix(double)>& u, int fiberDim, int angularDegree, int circleModes);

// Global lhs/rhs sign from the k = 1 hedgehog scenario: -1 when lhs = -rhs != 0,
// +1 otherwise (including the degenerate lhs = rhs = 0 case).
int calibrateSign(Signature sig, CylinderSpec geom = {});

// Hedgehog scenario with a collar to the reference, as used by the regression corpus.
CalliasScenario hedgehogScenario(int k, Signature sig, CylinderSpec geom = {});

}  // namespace indexlab
