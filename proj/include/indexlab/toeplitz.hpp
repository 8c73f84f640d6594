#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "indexlab/geometry.hpp"
#include "indexlab/grading.hpp"
#include "indexlab/product.hpp"

namespace indexlab {

struct KernelProjection {
  SpectralProjection projection;
  double gap = 0.0;
  int kernelDim = 0;
};
// Eigenvectors with |eigenvalue| <= 1e-8 ||D||; throws GapViolated when any
// other eigenvalue lies below minGap.
KernelProjection kernelProjection(const HermitianOperator& d, double minGap);

struct ToeplitzOperator {
  CMatrix matrix;  // in the kernel basis
  Signature signature;
  CMatrix basis;   // kernel basis, chirality + columns first for q = 0
  int plusDim = 0;
  CMatrix tPlus, tMinus;  // (0,0): chirality blocks of the compressed symbol
};
// (0,0): P F P with F = [[0, f*], [f, 0]] in the fiber grading; tPlus and
// tMinus are the compressions of f to the two chirality parts of ker D.
// (1,0): P Gamma_D F P. Throws SignatureTrivial for q = 1.
ToeplitzOperator toeplitzCompress(const HermitianOperator& f, const KernelProjection& kp, Signature sig,
                                  const std::optional<Grading>& gammaD, int fiberDim = 1);

struct DecayProfile {
  std::vector<double> singularValues;  // descending
  double tailRatio = 0.0;              // sigma_{dim/4} / sigma_1
  bool decaying = false;               // tailRatio < 1e-2
};
DecayProfile commutatorDecayProfile(const KernelProjection& kp, const HermitianOperator& f);

// q = 1 compressions: (1,1) is a self-adjoint square matrix, (0,1) carries
// the fiber grading as an exact Clifford symmetry. Both have index 0.
struct VanishingCertificate {
  Signature signature;
  CliffordReport clifford;
  double hermiticityDefect = 0.0;
  long index = 0;
  bool certified = false;
};
VanishingCertificate q1Vanishing(const HermitianOperator& f, const KernelProjection& kp, Signature sig,
                                 const std::optional<Grading>& gammaS, int fiberDim);

// Matrix-valued trigonometric polynomial in the angle.
struct MatrixSymbol {
  int dim = 1;
  std::map<int, CMatrix> coeffs;
  CMatrix operator()(double theta) const;
  int degree() const;
};
// Multiplication by a matrix symbol on Landau states (x) C^dim, fiber innermost.
CMatrix landauMatrixMultiplication(const MatrixSymbol& f, const LandauBasis& out, const LandauBasis& in);

// Index of the compression of a unitary circle symbol: -SF0(diag(n + 1/2) -> u* diag(n + 1/2) u).
long toeplitzIndexBySpectralFlow(const std::function<CMatrix(double)>& u, int fiberDim, int angularDegree,
                                 int circleModes = 16);
// Kernel minus cokernel of a finite section, counting only modes with weight
// >= 0.6 on the mask; empty when a mode falls between 0.4 and 0.6.
std::optional<long> localizedKernelIndex(const CMatrix& t, const RVector& mask, double tol);

struct EvenEvenReport {
  long indexTplus = 0;
  long indexTminus = 0;
  long kernelCountTplus = 0;  // cross-check of indexTplus
  IndexResult productIndex;
  bool agree = false;
};
// Landau plane with fockModes retained in each level and levels 0..topLevel.
EvenEvenReport evenEvenToeplitzIndex(int fockModes, const TrigPolynomial& f, int topLevel = 2);

struct FamilyFlowReport {
  FlowResult toeplitzFlow;
  FlowResult productFlow;
  bool agree = false;
};
FamilyFlowReport toeplitzFamilyFlow(const std::function<MatrixSymbol(double)>& family, int fockModes, int topLevel = 1,
                                    int samples = 64);

// F_t(theta) = sin(2 pi t) s1 + sin(theta) s2 + (1 + cos(2 pi t) + cos(theta)) s3, run `speed` times.
MatrixSymbol hedgehogFamily(double t, int speed = 1);

// Interior of the Landau truncation: Fock index below 0.6 fockModes.
RVector landauInteriorMask(const LandauBasis& b, int fiberDim);

}  // namespace indexlab
