#include "indexlab/projflow.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace indexlab {

int relind0(const SpectralProjection& p, const SpectralProjection& q) {
  if (p.matrix.dim() != q.matrix.dim()) throw Error(ErrorKind::DimensionMismatch, "relind0 of projections of different size");
  // Q restricted to Ran P, as a map into Ran Q.
  CMatrix b = q.basis.adjoint() * p.basis;
  int kerDim = 0, cokerDim = 0;
  if (b.cols() > 0) kerDim = static_cast<int>(numericalKernel(b, 1e-8, true).dim);
  if (b.rows() > 0) cokerDim = static_cast<int>(numericalKernel(CMatrix(b.adjoint()), 1e-8, true).dim);
  const int index = kerDim - cokerDim;
  if (index != p.rank - q.rank)
    throw Error(ErrorKind::IllConditionedSplit, "compressed index disagrees with the rank difference");
  return index;
}

namespace {

bool isDiagonal(const HermitianOperator& h) {
  SpMat s = h.toSparse();
  for (int k = 0; k < s.outerSize(); ++k)
    for (SpMat::InnerIterator it(s, k); it; ++it)
      if (it.row() != it.col() && it.value() != cd(0.0)) return false;
  return true;
}

// Orthonormal bases of the +1 and -1 eigenspaces of the grading.
std::pair<CMatrix, CMatrix> gradingBases(const Grading& gamma) {
  const Eigen::Index n = gamma.dim();
  CMatrix plus(n, gamma.plusRank()), minus(n, n - gamma.plusRank());
  if (isDiagonal(gamma.involution())) {
    SpMat s = gamma.involution().toSparse();
    Eigen::Index a = 0, b = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      CVector e = CVector::Unit(n, i);
      if (s.coeff(i, i).real() > 0) plus.col(a++) = e;
      else minus.col(b++) = e;
    }
  } else {
    EigenSystem es = eigh(gamma.involution());
    minus = es.vectors.leftCols(n - gamma.plusRank());
    plus = es.vectors.rightCols(gamma.plusRank());
  }
  return {plus, minus};
}

}  // namespace

CMatrix projectionToUnitaryBlock(const SpectralProjection& p, const Grading& gamma) {
  const Eigen::Index n = p.matrix.dim();
  if (gamma.dim() != n) throw Error(ErrorKind::DimensionMismatch, "grading and projection differ in size");
  CMatrix f = 2.0 * p.matrix.toDense() - CMatrix::Identity(n, n);
  if (checkOddness(HermitianOperator(f), gamma) > 1e-8) throw Error(ErrorKind::NotOdd, "2P-1 is not odd");
  auto [plus, minus] = gradingBases(gamma);
  CMatrix u = minus.adjoint() * f * plus;
  if (u.rows() != u.cols() || maxAbs(u * u.adjoint() - CMatrix::Identity(u.rows(), u.rows())) > 1e-8)
    throw Error(ErrorKind::NotOdd, "off-diagonal block of 2P-1 is not unitary");
  return u;
}

ProjectionLoop makeProjectionLoop(std::vector<SpectralProjection> samples, const Grading& grading) {
  if (samples.empty()) throw Error(ErrorKind::InvalidArgument, "empty projection loop");
  const int rank = samples.front().rank;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].rank != rank) throw Error(ErrorKind::InvalidArgument, "projection loop rank is not constant");
    CMatrix f = 2.0 * samples[k].matrix.toDense() - CMatrix::Identity(grading.dim(), grading.dim());
    if (checkOddness(HermitianOperator(f), grading) > 1e-8) throw Error(ErrorKind::NotOdd, "loop sample is not odd");
    const auto& next = samples[(k + 1) % samples.size()];
    if (opNorm(next.matrix.toDense() - samples[k].matrix.toDense()) >= 1.0)
      throw Error(ErrorKind::UndersampledLoop, "consecutive projections jump by norm >= 1");
  }
  return ProjectionLoop{std::move(samples), grading};
}

long relind1(const ProjectionLoop& p, const ProjectionLoop& q) {
  if (p.samples.size() != q.samples.size()) throw Error(ErrorKind::DimensionMismatch, "loops sampled differently");
  if (p.grading.dim() != q.grading.dim() ||
      maxAbs(p.grading.involution().toDense() - q.grading.involution().toDense()) > 1e-12)
    throw Error(ErrorKind::InvalidArgument, "loops carry different gradings");
  std::vector<cd> dets;
  for (std::size_t k = 0; k < p.samples.size(); ++k) {
    CMatrix up = projectionToUnitaryBlock(p.samples[k], p.grading);
    CMatrix uq = projectionToUnitaryBlock(q.samples[k], q.grading);
    if (up.rows() != uq.rows()) throw Error(ErrorKind::DimensionMismatch, "unitary blocks differ in size");
    dets.push_back((up * uq.adjoint()).determinant());
  }
  return phaseWinding(dets);
}

// ---------------------------------------------------------------------------
// Operator paths

OperatorPath OperatorPath::fromGenerator(PathDomain domain, double t0, double t1, int samples, Generator gen,
                                         std::optional<Grading> grading) {
  if (!(t1 > t0) || samples < 2) throw Error(ErrorKind::InvalidArgument, "path needs t1 > t0 and >= 2 samples");
  OperatorPath p;
  p.domain_ = domain;
  for (int k = 0; k < samples; ++k) p.ts_.push_back(t0 + (t1 - t0) * k / (samples - 1));
  p.gen_ = std::move(gen);
  p.grading_ = std::move(grading);
  if (domain == PathDomain::Circle) {
    HermitianOperator a = p.gen_(t0), b = p.gen_(t1);
    if (a.dim() != b.dim() || maxAbs(CMatrix(a.toDense() - b.toDense())) > 1e-10)
      throw Error(ErrorKind::InvalidArgument, "circle path does not close");
  }
  return p;
}

OperatorPath OperatorPath::fromSamples(PathDomain domain, std::vector<double> ts, std::vector<HermitianOperator> samples,
                                       std::optional<Grading> grading) {
  if (ts.size() != samples.size() || ts.size() < 2) throw Error(ErrorKind::InvalidArgument, "bad path samples");
  for (std::size_t k = 1; k < ts.size(); ++k) {
    if (!(ts[k] > ts[k - 1])) throw Error(ErrorKind::InvalidArgument, "path parameters must increase strictly");
    if (samples[k].dim() != samples[0].dim()) throw Error(ErrorKind::DimensionMismatch, "path samples differ in size");
  }
  if (grading) {
    for (const auto& s : samples)
      if (checkOddness(s, *grading) > 1e-8) throw Error(ErrorKind::NotOdd, "path sample is not odd for its grading");
  }
  if (domain == PathDomain::Circle &&
      maxAbs(CMatrix(samples.front().toDense() - samples.back().toDense())) > 1e-10)
    throw Error(ErrorKind::InvalidArgument, "circle path does not close");
  auto shared = std::make_shared<std::vector<HermitianOperator>>(std::move(samples));
  auto params = std::make_shared<std::vector<double>>(ts);
  OperatorPath p;
  p.domain_ = domain;
  p.ts_ = std::move(ts);
  p.grading_ = std::move(grading);
  p.gen_ = [shared, params](double t) {
    const auto& xs = *params;
    if (t <= xs.front()) return (*shared).front();
    if (t >= xs.back()) return (*shared).back();
    std::size_t k = std::upper_bound(xs.begin(), xs.end(), t) - xs.begin();
    const double s = (t - xs[k - 1]) / (xs[k] - xs[k - 1]);
    if (s == 0.0) return (*shared)[k - 1];
    const auto& a = (*shared)[k - 1];
    const auto& b = (*shared)[k];
    if (a.isSparse() || b.isSparse()) return HermitianOperator(SpMat((1 - s) * a.toSparse() + s * b.toSparse()));
    return HermitianOperator(CMatrix((1 - s) * a.dense() + s * b.dense()));
  };
  return p;
}

HermitianOperator OperatorPath::at(double t) const { return gen_(t); }

OperatorPath OperatorPath::reversed() const {
  OperatorPath r = *this;
  const double a = t0(), b = t1();
  auto g = gen_;
  r.gen_ = [g, a, b](double t) { return g(a + b - t); };
  r.ts_.clear();
  for (auto it = ts_.rbegin(); it != ts_.rend(); ++it) r.ts_.push_back(a + b - *it);
  return r;
}

OperatorPath OperatorPath::concatenate(const OperatorPath& a, const OperatorPath& b) {
  OperatorPath c;
  c.domain_ = PathDomain::Interval;
  c.grading_ = a.grading_;
  const double split = a.t1();
  const double shift = split - b.t0();
  c.ts_ = a.ts_;
  for (std::size_t k = 1; k < b.ts_.size(); ++k) c.ts_.push_back(b.ts_[k] + shift);
  auto ga = a.gen_, gb = b.gen_;
  c.gen_ = [ga, gb, split, shift](double t) { return t <= split ? ga(t) : gb(t - shift); };
  return c;
}

// ---------------------------------------------------------------------------
// Spectral flow

namespace {

struct Snapshot {
  RVector values;
  CMatrix vectors;
  long negatives = -1;  // total count of negative eigenvalues when known
};

Snapshot snapshot(const HermitianOperator& h, double band, int denseLimit) {
  Snapshot s;
  if (!h.isSparse() || h.dim() <= denseLimit) {
    EigenSystem es = eigh(h);
    std::vector<Eigen::Index> keep;
    long neg = 0;
    for (Eigen::Index i = 0; i < es.values.size(); ++i) {
      if (es.values(i) < 0) ++neg;
      if (std::abs(es.values(i)) < band) keep.push_back(i);
    }
    s.negatives = neg;
    s.values.resize(keep.size());
    s.vectors.resize(h.dim(), keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
      s.values(k) = es.values(keep[k]);
      s.vectors.col(k) = es.vectors.col(keep[k]);
    }
  } else {
    WindowSpectrum ws = windowSpectrum(h, band, denseLimit);
    s.values = ws.values;
    s.vectors = ws.vectors;
  }
  return s;
}

struct StepOutcome {
  bool ok = true;
  long raw = 0;
  long counted = 0;
  long filtered = 0;
  std::vector<double> where;
};

StepOutcome analyseStep(const Snapshot& a, const Snapshot& b, double window, const FlowOptions& opt, double ta,
                        double tb) {
  StepOutcome out;
  const Eigen::Index na = a.values.size(), nb = b.values.size();
  CMatrix ov = a.vectors.adjoint() * b.vectors;
  Eigen::MatrixXd w = ov.cwiseAbs2();
  std::vector<int> matchA(na, -1), matchB(nb, -1);
  // Greedy assignment by largest overlap.
  std::vector<std::tuple<double, int, int>> cand;
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < nb; ++j)
      if (w(i, j) > 1e-3) cand.emplace_back(w(i, j), static_cast<int>(i), static_cast<int>(j));
  std::sort(cand.begin(), cand.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    if (std::get<1>(x) != std::get<1>(y)) return std::get<1>(x) < std::get<1>(y);
    return std::get<2>(x) < std::get<2>(y);
  });
  for (const auto& [val, i, j] : cand) {
    if (matchA[i] < 0 && matchB[j] < 0) {
      matchA[i] = j;
      matchB[j] = i;
    }
  }
  const double scale = std::max(window, 1e-300);
  auto clusterWeight = [&](int i, int j) {
    double s = 0.0;
    for (Eigen::Index jj = 0; jj < nb; ++jj)
      if (std::abs(b.values(jj) - b.values(j)) <= 1e-9 * scale) s += w(i, jj);
    return s;
  };
  for (Eigen::Index i = 0; i < na; ++i) {
    if (std::abs(a.values(i)) >= window) continue;
    if (matchA[i] < 0 || clusterWeight(static_cast<int>(i), matchA[i]) < 0.5) {
      out.ok = false;
      return out;
    }
  }
  for (Eigen::Index j = 0; j < nb; ++j) {
    if (std::abs(b.values(j)) >= window) continue;
    if (matchB[j] < 0) {
      out.ok = false;
      return out;
    }
  }
  for (Eigen::Index i = 0; i < na; ++i) {
    const int j = matchA[i];
    if (j < 0) continue;
    const bool negA = a.values(i) < 0, negB = b.values(j) < 0;
    if (negA == negB) continue;
    if (std::abs(a.values(i)) >= window && std::abs(b.values(j)) >= window) {
      out.ok = false;  // moved across zero by more than the window in one step
      return out;
    }
    const long dir = negA ? 1 : -1;
    out.raw += dir;
    bool counted = true;
    if (opt.localization) {
      const double loc = 0.5 * (opt.localization(a.vectors.col(i)) + opt.localization(b.vectors.col(j)));
      counted = loc >= opt.localizationThreshold;
    }
    if (counted) {
      out.counted += dir;
      out.where.push_back(0.5 * (ta + tb));
    } else {
      out.filtered += dir;
    }
  }
  if (a.negatives >= 0 && b.negatives >= 0 && a.negatives - b.negatives != out.raw) out.ok = false;
  return out;
}

double medianAbs(const RVector& v) {
  std::vector<double> a;
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(std::abs(v(i)));
  if (a.empty()) return 0.0;
  std::sort(a.begin(), a.end());
  return a[a.size() / 2];
}

}  // namespace

FlowResult spectralFlow(const OperatorPath& path, const FlowOptions& opt) {
  const auto& ts = path.parameters();
  FlowResult res;
  double window = opt.window;
  HermitianOperator h0 = path.at(ts.front()), h1 = path.at(ts.back());
  if (window <= 0) {
    if (h0.isSparse() && h0.dim() > opt.denseLimit)
      throw Error(ErrorKind::InvalidArgument, "large sparse paths need an explicit crossing window");
    EigenSystem e0 = eigh(h0), e1 = eigh(h1);
    RVector both(e0.values.size() + e1.values.size());
    both << e0.values, e1.values;
    window = 0.25 * medianAbs(both);
  }
  res.window = window;
  const double band = 2.0 * window;
  if (path.domain() == PathDomain::Interval) {
    for (const HermitianOperator* h : {&h0, &h1}) {
      Snapshot s = snapshot(*h, band, opt.denseLimit);
      for (Eigen::Index i = 0; i < s.values.size(); ++i)
        if (std::abs(s.values(i)) < window / 10)
          throw Error(ErrorKind::SpectrumTouchesZero, "path endpoint is not invertible at the window scale");
    }
  }

  std::vector<std::pair<double, Snapshot>> snaps;
  for (double t : ts) snaps.emplace_back(t, snapshot(path.at(t), band, opt.denseLimit));

  std::function<StepOutcome(double, const Snapshot&, double, const Snapshot&, int)> step =
      [&](double ta, const Snapshot& sa, double tb, const Snapshot& sb, int depth) -> StepOutcome {
    StepOutcome o = analyseStep(sa, sb, window, opt, ta, tb);
    if (o.ok) return o;
    if (depth >= opt.maxRefine)
      throw Error(ErrorKind::RefinementExhausted, "cannot pair eigenvalues between t=" + std::to_string(ta) +
                                                      " and t=" + std::to_string(tb));
    ++res.refinements;
    const double tm = 0.5 * (ta + tb);
    Snapshot sm = snapshot(path.at(tm), band, opt.denseLimit);
    StepOutcome left = step(ta, sa, tm, sm, depth + 1);
    StepOutcome right = step(tm, sm, tb, sb, depth + 1);
    left.raw += right.raw;
    left.counted += right.counted;
    left.filtered += right.filtered;
    left.where.insert(left.where.end(), right.where.begin(), right.where.end());
    return left;
  };

  for (std::size_t k = 0; k + 1 < snaps.size(); ++k) {
    StepOutcome o = step(snaps[k].first, snaps[k].second, snaps[k + 1].first, snaps[k + 1].second, 0);
    res.value += o.counted;
    res.rawCrossings += o.raw;
    res.filteredOut += o.filtered;
    res.crossingParameters.insert(res.crossingParameters.end(), o.where.begin(), o.where.end());
  }

  if (path.domain() == PathDomain::Interval && !opt.localization && snaps.front().second.negatives >= 0 &&
      snaps.back().second.negatives >= 0) {
    // Finite-dimensional endpoint check: flow equals the rank change of P+.
    const long rankChange = snaps.front().second.negatives - snaps.back().second.negatives;
    if (h0.dim() <= 200) {
      SpectralProjection p1 = positiveSpectralProjection(h1, window / 10);
      SpectralProjection p0 = positiveSpectralProjection(h0, window / 10);
      if (relind0(p1, p0) != res.value)
        throw Error(ErrorKind::RefinementExhausted, "crossing count disagrees with relind0 of endpoint projections");
    } else if (rankChange != res.value) {
      throw Error(ErrorKind::RefinementExhausted, "crossing count disagrees with endpoint rank change");
    }
  }
  return res;
}

long spectralFlow0(const OperatorPath& path, double window, int maxRefine) {
  FlowOptions opt;
  opt.window = window;
  opt.maxRefine = maxRefine;
  return spectralFlow(path, opt).value;
}

// ---------------------------------------------------------------------------
// Suspension oracle

long suspensionIndexOracle(const OperatorPath& path, int gridPoints) {
  if (path.domain() != PathDomain::Interval) throw Error(ErrorKind::InvalidArgument, "suspension needs an interval path");
  if (gridPoints < 16) throw Error(ErrorKind::InvalidArgument, "suspension grid needs >= 16 points");
  constexpr double kHalf = 40.0, kPathHalf = 10.0;
  const double t0 = path.t0(), t1 = path.t1();
  HermitianOperator h0 = path.at(t0), h1 = path.at(t1);
  const Eigen::Index n = h0.dim();
  double gap = kInf;
  for (const HermitianOperator* h : {&h0, &h1}) {
    EigenSystem es = eigh(*h);
    gap = std::min(gap, es.values.cwiseAbs().minCoeff());
  }
  if (gap < 1e-8) throw Error(ErrorKind::SpectrumTouchesZero, "suspension endpoints are not invertible");

  const int g = gridPoints;
  const double step = 2 * kHalf / (g - 1);
  const Eigen::Index dim = n * g;
  CMatrix a = CMatrix::Zero(dim, dim);
  for (int j = 0; j < g; ++j) {
    const double s = -kHalf + step * j;
    const double u = std::clamp((s + kPathHalf) / (2 * kPathHalf), 0.0, 1.0);
    CMatrix hj = path.at(t0 + (t1 - t0) * u).toDense();
    a.block(j * n, j * n, n, n) = hj - CMatrix::Identity(n, n) / step;
    if (j + 1 < g) a.block(j * n, (j + 1) * n, n, n) = CMatrix::Identity(n, n) / step;
  }
  SvdTriple svd = svdTriple(a);
  const double tol = 1e-4 * gap;
  double largestBelow = 0.0, smallestAbove = kInf;
  std::vector<Eigen::Index> small;
  for (Eigen::Index i = 0; i < svd.singularValues.size(); ++i) {
    const double sv = svd.singularValues(i);
    if (sv >= tol) smallestAbove = std::min(smallestAbove, sv);
    else {
      largestBelow = std::max(largestBelow, sv);
      small.push_back(i);
    }
  }
  // Within the near-kernel (right vectors) and near-cokernel (left vectors),
  // diagonalise the interior mask to separate bulk modes from edge modes.
  auto countInterior = [&](const CMatrix& basis) {
    const Eigen::Index k = static_cast<Eigen::Index>(small.size());
    CMatrix sub(dim, k);
    for (Eigen::Index c = 0; c < k; ++c) sub.col(c) = basis.col(small[c]);
    CMatrix masked = sub;
    for (int j = 0; j < g; ++j)
      if (std::abs(-kHalf + step * j) > 0.8 * kHalf) masked.middleRows(j * n, n).setZero();
    CMatrix w = sub.adjoint() * masked;
    RVector loc = eigh(HermitianOperator(CMatrix(0.5 * (w + w.adjoint())))).values;
    long c = 0;
    for (Eigen::Index i = 0; i < loc.size(); ++i) {
      if (loc(i) >= 0.6) ++c;
      else if (loc(i) > 0.4)
        throw Error(ErrorKind::InconclusiveIndex, "suspension zero mode neither interior nor edge localised");
    }
    return c;
  };
  long index = 0;
  if (!small.empty()) index = countInterior(svd.v) - countInterior(svd.u);
  if (largestBelow > 0 && smallestAbove / largestBelow < 10)
    throw Error(ErrorKind::InconclusiveIndex, "no spectral gap around the suspension kernel");
  return index;
}

}  // namespace indexlab
