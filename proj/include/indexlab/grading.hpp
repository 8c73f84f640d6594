#pragma once

#include <vector>

#include "indexlab/numlin.hpp"

namespace indexlab {

struct Signature {
  int p = 1;
  int q = 1;
  int degree() const { return (p + q) % 2; }
  bool graded() const { return degree() == 0; }
  bool operator==(const Signature&) const = default;
};
Signature makeSignature(int p, int q);

// Self-adjoint unitary. Stored as a full operator so that non-diagonal
// involutions are first class.
class Grading {
 public:
  Grading() = default;
  explicit Grading(const HermitianOperator& involution);
  static Grading diagonal(const std::vector<int>& signs);
  // A (x) B in the row-major Kronecker convention used by every builder.
  static Grading tensor(const Grading& a, const Grading& b);

  const HermitianOperator& involution() const { return inv_; }
  Eigen::Index dim() const { return inv_.dim(); }
  int plusRank() const { return plusRank_; }

 private:
  HermitianOperator inv_;
  int plusRank_ = 0;
};

struct SpectralProjection {
  HermitianOperator matrix;
  int rank = 0;
  double idempotencyDefect = 0.0;
  CMatrix basis;  // orthonormal columns spanning the range
  double gap = kInf;
};

// Validates P^2 = P, P = P^dagger and integrality of the trace.
SpectralProjection makeProjection(const CMatrix& p);
SpectralProjection projectionFromBasis(const CMatrix& basis);

SpectralProjection positiveSpectralProjection(const HermitianOperator& h, double minGap);

// Operator norm of Gamma H + H Gamma (exact for moderate sizes, an upper
// bound through absolute row sums for large sparse operators).
double checkOddness(const HermitianOperator& h, const Grading& gamma);
double anticommutatorNorm(const HermitianOperator& a, const HermitianOperator& b);

enum class SymmetryVerdict { exactSymmetry, approximateSymmetry, none };
const char* symmetryVerdictName(SymmetryVerdict v);

struct CliffordReport {
  double anticommutatorNorm = 0.0;
  SymmetryVerdict verdict = SymmetryVerdict::none;
};
CliffordReport cliffordDefectCheck(const HermitianOperator& h, const Grading& gamma);

// Kronecker product helpers shared by the builders.
CMatrix kron(const CMatrix& a, const CMatrix& b);
SpMat kron(const SpMat& a, const SpMat& b);
SpMat toSparse(const CMatrix& m);

}  // namespace indexlab
