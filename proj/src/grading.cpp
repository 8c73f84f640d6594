#include "indexlab/grading.hpp"

#include <cmath>

namespace indexlab {

Signature makeSignature(int p, int q) {
  if ((p != 0 && p != 1) || (q != 0 && q != 1))
    throw Error(ErrorKind::InvalidArgument, "signature entries must be 0 or 1");
  return Signature{p, q};
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

SpMat kron(const SpMat& a, const SpMat& b) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros()) * static_cast<std::size_t>(b.nonZeros()));
  for (int ka = 0; ka < a.outerSize(); ++ka)
    for (SpMat::InnerIterator ia(a, ka); ia; ++ia)
      for (int kb = 0; kb < b.outerSize(); ++kb)
        for (SpMat::InnerIterator ib(b, kb); ib; ++ib)
          t.emplace_back(static_cast<int>(ia.row() * b.rows() + ib.row()),
                         static_cast<int>(ia.col() * b.cols() + ib.col()), ia.value() * ib.value());
  SpMat out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SpMat toSparse(const CMatrix& m) {
  SpMat s = m.sparseView();
  return s;
}

// ---------------------------------------------------------------------------

Grading::Grading(const HermitianOperator& involution) : inv_(involution) {
  const Eigen::Index n = inv_.dim();
  double sqDefect = 0.0;
  cd trace = 0.0;
  if (inv_.isSparse()) {
    SpMat sq = inv_.sparse() * inv_.sparse();
    SpMat id(n, n);
    id.setIdentity();
    SpMat d = sq - id;
    for (int k = 0; k < d.outerSize(); ++k)
      for (SpMat::InnerIterator it(d, k); it; ++it) sqDefect = std::max(sqDefect, std::abs(it.value()));
    for (Eigen::Index i = 0; i < n; ++i) trace += inv_.sparse().coeff(i, i);
  } else {
    sqDefect = maxAbs(inv_.dense() * inv_.dense() - CMatrix::Identity(n, n));
    trace = inv_.dense().trace();
  }
  if (sqDefect > 1e-10) throw Error(ErrorKind::InvalidArgument, "grading does not square to the identity");
  const double plus = 0.5 * (static_cast<double>(n) + trace.real());
  if (std::abs(plus - std::round(plus)) > 1e-8)
    throw Error(ErrorKind::InvalidArgument, "grading eigenvalues are not +-1");
  plusRank_ = static_cast<int>(std::lround(plus));
}

Grading Grading::diagonal(const std::vector<int>& signs) {
  const int n = static_cast<int>(signs.size());
  SpMat s(n, n);
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i) {
    if (signs[i] != 1 && signs[i] != -1) throw Error(ErrorKind::InvalidArgument, "diagonal grading entries must be +-1");
    t.emplace_back(i, i, cd(signs[i]));
  }
  s.setFromTriplets(t.begin(), t.end());
  if (n <= 64) return Grading(HermitianOperator(CMatrix(s)));
  return Grading(HermitianOperator(s));
}

Grading Grading::tensor(const Grading& a, const Grading& b) {
  SpMat k = kron(a.involution().toSparse(), b.involution().toSparse());
  if (k.rows() <= 64) return Grading(HermitianOperator(CMatrix(k)));
  return Grading(HermitianOperator(k));
}

// ---------------------------------------------------------------------------

SpectralProjection makeProjection(const CMatrix& p) {
  HermitianOperator h(p);
  const CMatrix& m = h.dense();
  SpectralProjection sp;
  sp.idempotencyDefect = opNorm(m * m - m);
  if (sp.idempotencyDefect > 1e-8) throw Error(ErrorKind::InvalidArgument, "matrix is not idempotent");
  const double tr = m.trace().real();
  if (std::abs(tr - std::round(tr)) > 1e-6) throw Error(ErrorKind::InvalidArgument, "projection trace not integral");
  sp.rank = static_cast<int>(std::lround(tr));
  EigenSystem es = eigh(h);
  sp.basis = es.vectors.rightCols(sp.rank);
  sp.matrix = h;
  return sp;
}

SpectralProjection projectionFromBasis(const CMatrix& basis) {
  CMatrix q = basis;
  if (basis.cols() > 0) {
    Eigen::HouseholderQR<CMatrix> qr(basis);
    q = qr.householderQ() * CMatrix::Identity(basis.rows(), basis.cols());
  }
  SpectralProjection sp;
  CMatrix p = q * q.adjoint();
  sp.matrix = HermitianOperator(p);
  sp.rank = static_cast<int>(basis.cols());
  sp.basis = q;
  sp.idempotencyDefect = maxAbs(p * p - p);
  return sp;
}

SpectralProjection positiveSpectralProjection(const HermitianOperator& h, double minGap) {
  EigenSystem es = eigh(h);
  const Eigen::Index n = es.values.size();
  double gap = kInf;
  Eigen::Index firstPositive = n;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = es.values(i);
    gap = std::min(gap, std::abs(lam));
    if (std::abs(lam) < minGap)
      throw Error(ErrorKind::SpectrumTouchesZero, "eigenvalue " + std::to_string(lam) + " inside the forbidden band");
    if (lam > 0 && firstPositive == n) firstPositive = i;
  }
  SpectralProjection sp = projectionFromBasis(es.vectors.rightCols(n - firstPositive));
  sp.gap = gap;
  return sp;
}

// ---------------------------------------------------------------------------

double anticommutatorNorm(const HermitianOperator& a, const HermitianOperator& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::DimensionMismatch, "anticommutator of operators of different size");
  if (!a.isSparse() && !b.isSparse() && a.dim() <= 800) {
    return opNorm(a.dense() * b.dense() + b.dense() * a.dense());
  }
  SpMat sa = a.toSparse(), sb = b.toSparse();
  SpMat ac = sa * sb + sb * sa;
  RVector rows = RVector::Zero(ac.rows());
  for (int k = 0; k < ac.outerSize(); ++k)
    for (SpMat::InnerIterator it(ac, k); it; ++it) rows(it.row()) += std::abs(it.value());
  return rows.size() == 0 ? 0.0 : rows.maxCoeff();
}

double checkOddness(const HermitianOperator& h, const Grading& gamma) {
  return anticommutatorNorm(h, gamma.involution());
}

const char* symmetryVerdictName(SymmetryVerdict v) {
  switch (v) {
    case SymmetryVerdict::exactSymmetry: return "exactSymmetry";
    case SymmetryVerdict::approximateSymmetry: return "approximateSymmetry";
    case SymmetryVerdict::none: return "none";
  }
  return "none";
}

CliffordReport cliffordDefectCheck(const HermitianOperator& h, const Grading& gamma) {
  CliffordReport r;
  r.anticommutatorNorm = checkOddness(h, gamma);
  const double hn = (!h.isSparse() && h.dim() <= 800) ? opNorm(h.dense()) : h.normBound();
  if (r.anticommutatorNorm <= 1e-8) r.verdict = SymmetryVerdict::exactSymmetry;
  else if (r.anticommutatorNorm <= 0.1 * hn) r.verdict = SymmetryVerdict::approximateSymmetry;
  else r.verdict = SymmetryVerdict::none;
  return r;
}

}  // namespace indexlab
