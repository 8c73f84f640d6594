#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "indexlab/errors.hpp"

namespace indexlab {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<cd, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<cd, int>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Builds a matrix from row-major entries; rejects NaN/Inf and wrong lengths.
CMatrix makeMatrix(std::size_t rows, std::size_t cols, const std::vector<cd>& rowMajor);
void requireFinite(const CMatrix& m, const char* what);
double maxAbs(const CMatrix& m);
double opNorm(const CMatrix& m);

// Self-adjoint matrix, stored densely or sparsely. The stored matrix is the
// exact Hermitian part of the input once the defect check has passed.
class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(const CMatrix& m);
  explicit HermitianOperator(const SpMat& m);

  Eigen::Index dim() const { return n_; }
  bool isSparse() const { return sparse_; }
  double hermiticityDefect() const { return defect_; }
  // Upper bound on the operator norm (max absolute row sum).
  double normBound() const { return norm_; }

  const CMatrix& dense() const;
  const SpMat& sparse() const;
  CMatrix toDense() const;
  SpMat toSparse() const;
  CVector apply(const CVector& v) const;
  CMatrix apply(const CMatrix& v) const;

 private:
  Eigen::Index n_ = 0;
  bool sparse_ = false;
  CMatrix dense_;
  SpMat sp_;
  double defect_ = 0.0;
  double norm_ = 0.0;
};

struct EigenSystem {
  RVector values;   // ascending
  CMatrix vectors;  // columns
};

// Dense Hermitian eigendecomposition. Cyclic Jacobi up to n = 64,
// tridiagonalisation + implicit QR above. Eigenvectors get the phase
// convention: first component with modulus > 1e-8 is real positive.
EigenSystem eigh(const HermitianOperator& h);
EigenSystem jacobiEigh(const CMatrix& h);
EigenSystem tridiagonalEigh(const CMatrix& h);
void fixPhases(CMatrix& vectors);

struct SvdTriple {
  CMatrix u;
  RVector singularValues;  // descending
  CMatrix v;
};
SvdTriple svdTriple(const CMatrix& m);

struct KernelResult {
  CMatrix basis;
  Eigen::Index dim = 0;
  double gapRatio = kInf;
};
// Right singular subspace below tol. Throws IllConditionedSplit when the
// gap ratio is below 10 unless `allowIllConditioned` is set.
KernelResult numericalKernel(const CMatrix& m, double tol, bool allowIllConditioned = false);

// Winding number of a sampled closed loop of nonzero complex numbers.
// The closing increment (last sample back to the first) is included.
long phaseWinding(const std::vector<cd>& loop);

// Eigenpairs closest to `shift` by shift-invert subspace iteration on a
// sparse LU factorisation.
EigenSystem nearestEigenpairs(const SpMat& h, int count, double shift);

// Connected components of the sparsity graph; each component is a sorted
// list of indices.
std::vector<std::vector<int>> sparsityComponents(const SpMat& h);

struct WindowSpectrum {
  RVector values;      // eigenvalues with |lambda| < window, ascending
  CMatrix vectors;     // corresponding eigenvectors
  double nextOutside = kInf;  // smallest |lambda| >= window
};

// All eigenpairs with |lambda| < window plus the distance to the rest of the
// spectrum. Dense operators up to `denseLimit` go through eigh; otherwise the
// sparsity graph is split into components and each is handled separately.
WindowSpectrum windowSpectrum(const HermitianOperator& h, double window, int denseLimit = 1200);

}  // namespace indexlab
