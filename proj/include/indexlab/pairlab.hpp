#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "indexlab/geometry.hpp"
#include "indexlab/grading.hpp"
#include "indexlab/product.hpp"

namespace indexlab {

// Unitary matrix loop given as a trigonometric polynomial of known degree.
struct UnitarySymbol {
  int fiberDim = 1;
  int degree = 0;
  std::function<CMatrix(double)> u;
  // Throws InvalidArgument if some sample is off unitarity by more than 1e-8.
  void validate(int samples = 64) const;
};
UnitarySymbol scalarWinding(int k);

// Position-sampled projection field on the (2K+1)^2 torus grid, row-major
// in (x1, x2) with x_j = 2 pi j / (2K+1).
struct KProjectionField {
  int modesPerAxis = 8;
  int fiberDim = 1;
  int rank = 0;
  std::vector<CMatrix> samples;
};
// Samples p; throws InvalidArgument if a sample is not a Hermitian idempotent
// to 1e-8 or the rank varies.
KProjectionField sampleProjectionField(const std::function<CMatrix(double, double)>& p, int modesPerAxis);

// Lower band of sin x1 s1 + sin x2 s2 + (m + cos x1 + cos x2) s3.
CMatrix bottProjection(double x1, double x2, double mass = 1.0);

// Fourier modes n >= 0 among -modes..modes.
SpectralProjection hardyProjection(int modes);

struct OddPairingReport {
  long value = 0;         // -Index(P u P + 1 - P)
  long spectralFlow = 0;  // primary route
  long kernelCount = 0;   // filtered finite-section count
  long winding = 0;       // winding of det u
};
// Throws MethodDisagreement when the routes or the winding differ.
OddPairingReport oddPairingReport(const UnitarySymbol& u, const SpectralProjection& hardy);
long oddPairing(const UnitarySymbol& u, const SpectralProjection& hardy);

// Fourier multiplication matrix of u on modes -m..m (x) C^fiber.
CMatrix circleMultiplication(const UnitarySymbol& u, int modes);

// Lattice Chern number of a projection field by plaquette products of
// frame overlaps.
long latticeChern(const KProjectionField& p);

struct EvenPairingReport {
  IndexResult index;  // of p- D+ p+ by chirality counting
  long chern = 0;     // lattice oracle
};
// Sign relating Index(p- D+ p+) to the lattice Chern number, fixed by the
// Bott projection at mass 1.
constexpr int kEvenPairingSign = -1;
// Throws InconclusiveIndex or ChernOracleMismatch.
EvenPairingReport evenPairingReport(const KProjectionField& p);
long evenPairing(const KProjectionField& p);

// e^{i pi (T + 1)}; throws NormExceeded when ||T|| > 1 + 1e-8.
CMatrix expClass(const HermitianOperator& t);

}  // namespace indexlab
