#include "indexlab/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace indexlab {

const char* errorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonHermitianInput: return "NonHermitianInput";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::IllConditionedSplit: return "IllConditionedSplit";
    case ErrorKind::UndersampledLoop: return "UndersampledLoop";
    case ErrorKind::SpectrumTouchesZero: return "SpectrumTouchesZero";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotOdd: return "NotOdd";
    case ErrorKind::RefinementExhausted: return "RefinementExhausted";
    case ErrorKind::InconclusiveIndex: return "InconclusiveIndex";
    case ErrorKind::DimensionOverflow: return "DimensionOverflow";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::NotInvertibleOutsideCompact: return "NotInvertibleOutsideCompact";
    case ErrorKind::GradingHypothesisViolated: return "GradingHypothesisViolated";
    case ErrorKind::EmptyExterior: return "EmptyExterior";
    case ErrorKind::NoAdmissibleLambda: return "NoAdmissibleLambda";
    case ErrorKind::GradingAbsent: return "GradingAbsent";
    case ErrorKind::HypersurfaceNotInGrid: return "HypersurfaceNotInGrid";
    case ErrorKind::MethodDisagreement: return "MethodDisagreement";
    case ErrorKind::GapViolated: return "GapViolated";
    case ErrorKind::SignatureTrivial: return "SignatureTrivial";
    case ErrorKind::NormExceeded: return "NormExceeded";
    case ErrorKind::ChernOracleMismatch: return "ChernOracleMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::BaselineMissing: return "BaselineMissing";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

CMatrix makeMatrix(std::size_t rows, std::size_t cols, const std::vector<cd>& rowMajor) {
  if (rowMajor.size() != rows * cols) {
    throw Error(ErrorKind::DimensionMismatch, "entry count does not match rows*cols");
  }
  CMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rowMajor[i * cols + j];
  requireFinite(m, "makeMatrix");
  return m;
}

void requireFinite(const CMatrix& m, const char* what) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag()))
        throw Error(ErrorKind::InvalidArgument, std::string(what) + ": non-finite entry");
}

double maxAbs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double opNorm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

// ---------------------------------------------------------------------------
// HermitianOperator

HermitianOperator::HermitianOperator(const CMatrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "Hermitian operator must be square");
  requireFinite(m, "HermitianOperator");
  n_ = m.rows();
  defect_ = maxAbs(m - m.adjoint());
  double scale = maxAbs(m);
  if (defect_ > 1e-10 * (1.0 + scale)) {
    throw Error(ErrorKind::NonHermitianInput, "hermiticity defect " + std::to_string(defect_));
  }
  dense_ = 0.5 * (m + m.adjoint());
  norm_ = n_ == 0 ? 0.0 : dense_.cwiseAbs().rowwise().sum().maxCoeff();
}

HermitianOperator::HermitianOperator(const SpMat& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "Hermitian operator must be square");
  n_ = m.rows();
  sparse_ = true;
  SpMat adj = m.adjoint();
  SpMat diff = m - adj;
  double scale = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      if (!std::isfinite(it.value().real()) || !std::isfinite(it.value().imag()))
        throw Error(ErrorKind::InvalidArgument, "HermitianOperator: non-finite entry");
      scale = std::max(scale, std::abs(it.value()));
    }
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SpMat::InnerIterator it(diff, k); it; ++it) defect_ = std::max(defect_, std::abs(it.value()));
  if (defect_ > 1e-10 * (1.0 + scale)) {
    throw Error(ErrorKind::NonHermitianInput, "hermiticity defect " + std::to_string(defect_));
  }
  sp_ = 0.5 * (m + adj);
  sp_.prune(cd(0.0), 0.0);
  sp_.makeCompressed();
  RVector rows = RVector::Zero(n_);
  for (int k = 0; k < sp_.outerSize(); ++k)
    for (SpMat::InnerIterator it(sp_, k); it; ++it) rows(it.row()) += std::abs(it.value());
  norm_ = n_ == 0 ? 0.0 : rows.maxCoeff();
}

const CMatrix& HermitianOperator::dense() const {
  if (sparse_) throw Error(ErrorKind::InvalidArgument, "operator is stored sparsely; use toDense()");
  return dense_;
}

const SpMat& HermitianOperator::sparse() const {
  if (!sparse_) throw Error(ErrorKind::InvalidArgument, "operator is stored densely; use toSparse()");
  return sp_;
}

CMatrix HermitianOperator::toDense() const { return sparse_ ? CMatrix(sp_) : dense_; }

SpMat HermitianOperator::toSparse() const {
  if (sparse_) return sp_;
  SpMat s = dense_.sparseView();
  return s;
}

CVector HermitianOperator::apply(const CVector& v) const { return sparse_ ? CVector(sp_ * v) : CVector(dense_ * v); }
CMatrix HermitianOperator::apply(const CMatrix& v) const { return sparse_ ? CMatrix(sp_ * v) : CMatrix(dense_ * v); }

// ---------------------------------------------------------------------------
// Dense eigensolvers

void fixPhases(CMatrix& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      double a = std::abs(vectors(i, j));
      if (a > 1e-8) {
        vectors.col(j) *= std::conj(vectors(i, j)) / a;
        vectors(i, j) = cd(std::abs(vectors(i, j)), 0.0);
        break;
      }
    }
  }
}

static EigenSystem sortedSystem(const RVector& values, const CMatrix& vectors) {
  std::vector<Eigen::Index> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values(a) < values(b); });
  EigenSystem es;
  es.values.resize(values.size());
  es.vectors.resize(vectors.rows(), vectors.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    es.values(k) = values(order[k]);
    es.vectors.col(k) = vectors.col(order[k]);
  }
  fixPhases(es.vectors);
  return es;
}

EigenSystem jacobiEigh(const CMatrix& h) {
  const Eigen::Index n = h.rows();
  CMatrix a = 0.5 * (h + h.adjoint());
  CMatrix v = CMatrix::Identity(n, n);
  const double fro = a.norm();
  const int maxSweeps = 80;
  bool converged = (n <= 1);
  for (int sweep = 0; sweep < maxSweeps && !converged; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (std::sqrt(off) <= 1e-15 * std::max(fro, 1e-300)) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const cd apq = a(p, q);
        const double b = std::abs(apq);
        if (b <= 1e-300) continue;
        const cd e = std::conj(apq) / b;  // e^{-i phi}
        const double zeta = (a(q, q).real() - a(p, p).real()) / (2.0 * b);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(zeta * zeta + 1.0));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const cd akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * c - akq * s * e;
          a(k, q) = akp * s + akq * c * e;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const cd apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * std::conj(e) * aqk;
          a(q, k) = s * apk + c * std::conj(e) * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const cd vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * c - vkq * s * e;
          v(k, q) = vkp * s + vkq * c * e;
        }
        a(p, q) = a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
      }
    }
  }
  if (!converged) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (std::sqrt(off) > 1e-13 * std::max(fro, 1e-300))
      throw Error(ErrorKind::ConvergenceFailure, "Jacobi sweeps exhausted");
  }
  return sortedSystem(a.diagonal().real(), v);
}

EigenSystem tridiagonalEigh(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (h + h.adjoint()));
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::ConvergenceFailure, "tridiagonal QR did not converge");
  return sortedSystem(solver.eigenvalues(), solver.eigenvectors());
}

EigenSystem eigh(const HermitianOperator& h) {
  CMatrix m = h.toDense();
  if (m.rows() <= 64) return jacobiEigh(m);
  return tridiagonalEigh(m);
}

// ---------------------------------------------------------------------------
// SVD and kernels

SvdTriple svdTriple(const CMatrix& m) {
  requireFinite(m, "svdTriple");
  SvdTriple out;
  if (m.rows() == 0 || m.cols() == 0) {
    out.u = CMatrix::Identity(m.rows(), m.rows());
    out.v = CMatrix::Identity(m.cols(), m.cols());
    return out;
  }
  Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.info() == Eigen::Success && svd.matrixU().allFinite() && svd.matrixV().allFinite()) {
    out.u = svd.matrixU();
    out.v = svd.matrixV();
    out.singularValues = svd.singularValues();
    return out;
  }
  // BDCSVD can return NaN vectors when exact zero singular values deflate.
  Eigen::JacobiSVD<CMatrix> jac(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (jac.info() != Eigen::Success) throw Error(ErrorKind::ConvergenceFailure, "SVD did not converge");
  out.u = jac.matrixU();
  out.v = jac.matrixV();
  out.singularValues = jac.singularValues();
  return out;
}

KernelResult numericalKernel(const CMatrix& m, double tol, bool allowIllConditioned) {
  if (!(tol > 0)) throw Error(ErrorKind::InvalidArgument, "kernel tolerance must be positive");
  SvdTriple s = svdTriple(m);
  const Eigen::Index k = s.singularValues.size();
  Eigen::Index rank = 0;
  while (rank < k && s.singularValues(rank) >= tol) ++rank;
  KernelResult r;
  r.dim = m.cols() - rank;
  r.basis = s.v.rightCols(r.dim);
  if (r.dim == 0) {
    r.gapRatio = kInf;
  } else {
    const double below = rank < k ? s.singularValues(rank) : 0.0;
    const double above = rank > 0 ? s.singularValues(rank - 1) : kInf;
    r.gapRatio = below == 0.0 ? kInf : above / below;
  }
  if (r.gapRatio < 10.0 && !allowIllConditioned) {
    throw Error(ErrorKind::IllConditionedSplit, "kernel gap ratio " + std::to_string(r.gapRatio));
  }
  return r;
}

long phaseWinding(const std::vector<cd>& loop) {
  if (loop.empty()) return 0;
  const double pi = std::acos(-1.0);
  double total = 0.0;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const cd a = loop[i], b = loop[(i + 1) % n];
    if (std::abs(a) == 0.0 || std::abs(b) == 0.0) throw Error(ErrorKind::UndersampledLoop, "loop passes through zero");
    const double d = std::arg(b / a);
    if (std::abs(d) >= pi / 2) throw Error(ErrorKind::UndersampledLoop, "argument increment exceeds pi/2");
    total += d;
  }
  return std::lround(total / (2 * pi));
}

// ---------------------------------------------------------------------------
// Sparse shift-invert

static CMatrix orthonormalColumns(const CMatrix& x) {
  Eigen::HouseholderQR<CMatrix> qr(x);
  return qr.householderQ() * CMatrix::Identity(x.rows(), x.cols());
}

EigenSystem nearestEigenpairs(const SpMat& h, int count, double shift) {
  const int n = static_cast<int>(h.rows());
  count = std::min(count, n);
  if (count <= 0) return {};
  double normB = 0.0;
  {
    RVector rows = RVector::Zero(n);
    for (int k = 0; k < h.outerSize(); ++k)
      for (SpMat::InnerIterator it(h, k); it; ++it) rows(it.row()) += std::abs(it.value());
    normB = rows.maxCoeff();
  }
  SpMat ident(n, n);
  ident.setIdentity();
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  double sigma = shift;
  bool ok = false;
  for (int attempt = 0; attempt < 4 && !ok; ++attempt) {
    SpMat a = h - cd(sigma) * ident;
    a.makeCompressed();
    lu.analyzePattern(a);
    lu.factorize(a);
    ok = lu.info() == Eigen::Success;
    if (!ok) sigma += 1e-9 * std::max(normB, 1.0) * (attempt + 1);
  }
  if (!ok) throw Error(ErrorKind::ConvergenceFailure, "shift-invert factorisation failed");

  const int p = std::min(n, count + std::max(8, count));
  std::mt19937_64 rng(0x1dea5eedULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  CMatrix x(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = cd(gauss(rng), gauss(rng));
  CMatrix q = orthonormalColumns(x);
  const double tol = 1e-11 * std::max(normB, 1e-300);
  for (int it = 0; it < 400; ++it) {
    CMatrix y = lu.solve(q);
    q = orthonormalColumns(y);
    CMatrix hq = h * q;
    CMatrix small = q.adjoint() * hq;
    EigenSystem ritz = jacobiEigh(0.5 * (small + small.adjoint()));
    std::vector<int> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(ritz.values(a) - sigma) < std::abs(ritz.values(b) - sigma);
    });
    CMatrix w(p, p);
    RVector theta(p);
    for (int k = 0; k < p; ++k) {
      w.col(k) = ritz.vectors.col(order[k]);
      theta(k) = ritz.values(order[k]);
    }
    q = q * w;
    CMatrix hv = hq * w;
    bool done = true;
    for (int k = 0; k < count && done; ++k) {
      if ((hv.col(k) - theta(k) * q.col(k)).norm() > tol) done = false;
    }
    if (done) {
      return sortedSystem(theta.head(count), q.leftCols(count));
    }
  }
  throw Error(ErrorKind::ConvergenceFailure, "subspace iteration did not converge");
}

std::vector<std::vector<int>> sparsityComponents(const SpMat& h) {
  const int n = static_cast<int>(h.rows());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (int k = 0; k < h.outerSize(); ++k)
    for (SpMat::InnerIterator it(h, k); it; ++it) {
      if (it.value() == cd(0.0)) continue;
      int a = find(static_cast<int>(it.row())), b = find(static_cast<int>(it.col()));
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  std::vector<std::vector<int>> groups;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[slot[r]].push_back(i);
  }
  return groups;
}

namespace {

struct Pairs {
  std::vector<double> values;
  std::vector<CVector> vectors;
  double nextOutside = kInf;
};

// Number of eigenvalues in [-w, w) from the signs of the LDL^* pivots of
// H - w and H + w.
int negativePivots(const SpMat& h, double shift) {
  SpMat id(h.rows(), h.cols());
  id.setIdentity();
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt;
  // An exact zero pivot is moved off by a relative nudge of the shift.
  for (int attempt = 0; attempt < 4; ++attempt) {
    ldlt.compute(h - cd(shift * (1 + 1e-9 * attempt)) * id);
    if (ldlt.info() == Eigen::Success) break;
  }
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::ConvergenceFailure, "LDL factorisation failed");
  int neg = 0;
  const auto d = ldlt.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d(i).real() < 0) ++neg;
  return neg;
}

int inertiaCount(const SpMat& h, double w) { return negativePivots(h, w) - negativePivots(h, -w); }

void collectDense(const EigenSystem& es, double window, const std::vector<int>* embed, Eigen::Index n, Pairs& out) {
  for (Eigen::Index k = 0; k < es.values.size(); ++k) {
    const double lam = es.values(k);
    if (std::abs(lam) < window) {
      CVector v = CVector::Zero(n);
      if (embed) {
        for (std::size_t i = 0; i < embed->size(); ++i) v((*embed)[i]) = es.vectors(i, k);
      } else {
        v = es.vectors.col(k);
      }
      out.values.push_back(lam);
      out.vectors.push_back(v);
    } else {
      out.nextOutside = std::min(out.nextOutside, std::abs(lam));
    }
  }
}

}  // namespace

WindowSpectrum windowSpectrum(const HermitianOperator& h, double window, int denseLimit) {
  const Eigen::Index n = h.dim();
  Pairs pairs;
  if (!h.isSparse() || n <= denseLimit) {
    collectDense(eigh(h), window, nullptr, n, pairs);
  } else {
    const SpMat& s = h.sparse();
    auto comps = sparsityComponents(s);
    const double shift = 1e-9 * std::max(h.normBound(), 1.0) * 0.6180339887498949;
    for (const auto& comp : comps) {
      const int m = static_cast<int>(comp.size());
      std::vector<Triplet> trips;
      std::vector<int> local(n, -1);
      for (int i = 0; i < m; ++i) local[comp[i]] = i;
      for (int c : comp)
        for (SpMat::InnerIterator it(s, c); it; ++it) trips.emplace_back(local[it.row()], local[c], it.value());
      SpMat sub(m, m);
      sub.setFromTriplets(trips.begin(), trips.end());
      if (m <= std::min(denseLimit, 600)) {
        collectDense(eigh(HermitianOperator(CMatrix(sub))), window, &comp, n, pairs);
        continue;
      }
      // Sylvester inertia fixes how many eigenvalues lie in the window and
      // brackets the first one outside it.
      const int inside = inertiaCount(sub, window);
      if (inside > 0) {
        EigenSystem es;
        try {
          es = nearestEigenpairs(sub, inside, shift);
        } catch (const Error&) {
          if (m > 4000) throw;
          es = tridiagonalEigh(CMatrix(sub));
        }
        Pairs local;
        collectDense(es, window, &comp, n, local);
        if (static_cast<int>(local.values.size()) != inside)
          throw Error(ErrorKind::ConvergenceFailure, "window eigenpairs disagree with the inertia count");
        pairs.values.insert(pairs.values.end(), local.values.begin(), local.values.end());
        pairs.vectors.insert(pairs.vectors.end(), local.vectors.begin(), local.vectors.end());
      }
      double lo = window, hi = window;
      for (int j = 0; j < 12; ++j) {
        hi = 2 * lo;
        if (inertiaCount(sub, hi) > inside) break;
        lo = hi;
      }
      double next = lo;  // lower bound, kept if refinement fails
      if (inertiaCount(sub, hi) > inside) {
        for (int j = 0; j < 4; ++j) {
          const double mid = 0.5 * (lo + hi);
          (inertiaCount(sub, mid) > inside ? hi : lo) = mid;
        }
        // The first eigenvalue outside sits in +-[lo, hi]; resolve it by
        // shift-invert around both centres.
        const double mid = 0.5 * (lo + hi);
        double best = kInf;
        try {
          for (double c : {mid, -mid}) {
            EigenSystem near = nearestEigenpairs(sub, std::min(4, m), c);
            for (Eigen::Index k = 0; k < near.values.size(); ++k) {
              const double a = std::abs(near.values(k));
              if (a >= window) best = std::min(best, a);
            }
          }
        } catch (const Error&) {
          best = kInf;
        }
        if (best >= lo - 1e-12 && best <= hi + 1e-12) next = best;
      }
      pairs.nextOutside = std::min(pairs.nextOutside, next);
    }
  }
  std::vector<std::size_t> order(pairs.values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pairs.values[a] < pairs.values[b]; });
  WindowSpectrum ws;
  ws.values.resize(order.size());
  ws.vectors.resize(n, order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    ws.values(k) = pairs.values[order[k]];
    ws.vectors.col(k) = pairs.vectors[order[k]];
  }
  ws.nextOutside = pairs.nextOutside;
  return ws;
}

}  // namespace indexlab
