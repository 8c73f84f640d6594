#include "indexlab/product.hpp"

#include <algorithm>
#include <cmath>

namespace indexlab {

namespace {

SpMat identitySparse(Eigen::Index n) {
  SpMat id(n, n);
  id.setIdentity();
  return id;
}

double sparseMaxAbs(const SpMat& m) {
  double v = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

HermitianOperator packed(const SpMat& m) {
  if (m.rows() <= 1200) return HermitianOperator(CMatrix(m));
  return HermitianOperator(m);
}

Grading packedGrading(const SpMat& m) { return Grading(packed(m)); }

}  // namespace

std::optional<long> localizedNullity(const CMatrix& t, const CMatrix& weight, double tol, const ModeThresholds& th) {
  if (t.rows() != t.cols() || weight.rows() != t.rows())
    throw Error(ErrorKind::DimensionMismatch, "null-space count needs a square matrix and a matching weight");
  SvdTriple s = svdTriple(t);
  std::vector<Eigen::Index> null;
  for (Eigen::Index i = 0; i < s.singularValues.size(); ++i)
    if (s.singularValues(i) < tol) null.push_back(i);
  long count = 0;
  for (int side : {1, -1}) {
    const CMatrix& vecs = side > 0 ? s.v : s.u;
    CMatrix basis(t.rows(), null.size());
    for (std::size_t j = 0; j < null.size(); ++j) basis.col(j) = vecs.col(null[j]);
    if (basis.cols() == 0) continue;
    CMatrix w = basis.adjoint() * weight * basis;
    RVector loc = eigh(HermitianOperator(CMatrix(0.5 * (w + w.adjoint())))).values;
    for (Eigen::Index j = 0; j < loc.size(); ++j) {
      if (loc(j) >= th.localized) count += side;
      else if (loc(j) > th.delocalized) return std::nullopt;
    }
  }
  return count;
}

double maskWeight(const CVector& v, const RVector& mask) {
  const double total = v.squaredNorm();
  if (total == 0.0) return 0.0;
  if (mask.size() == 0) return 1.0;
  return (v.cwiseAbs2().cwiseProduct(mask)).sum() / total;
}

ProductOperator buildProductOperator(const ProductInputs& in) {
  const Eigen::Index nV = in.d.dim(), nF = in.fiberDim;
  if (in.s.dim() != nV * nF) throw Error(ErrorKind::DimensionMismatch, "potential does not act on V (x) F");
  if (!(in.lambda > 0)) throw Error(ErrorKind::InvalidArgument, "lambda must be positive");
  if (in.regulator && in.regulator->dim() != nV * nF)
    throw Error(ErrorKind::DimensionMismatch, "regulator does not act on V (x) F");
  if (in.interiorMask.size() != 0 && in.interiorMask.size() != nV * nF)
    throw Error(ErrorKind::DimensionMismatch, "interior mask size");
  const Signature sig = in.signature;

  SpMat d = kron(in.d.toSparse(), identitySparse(nF));
  SpMat s = SpMat(in.s.toSparse() * cd(in.lambda));
  if (in.regulator) s += in.regulator->toSparse();

  SpMat gammaS;
  if (sig.p == 0) {
    if (!in.gammaS || in.gammaS->dim() != nF)
      throw Error(ErrorKind::GradingHypothesisViolated, "p = 0 needs a grading on the potential fiber");
    gammaS = kron(identitySparse(nV), in.gammaS->involution().toSparse());
    if (sparseMaxAbs(SpMat(gammaS * s + s * gammaS)) > 1e-8)
      throw Error(ErrorKind::GradingHypothesisViolated, "potential does not anticommute with Gamma_S");
  }
  if (sig.q == 0) {
    if (!in.gammaD || in.gammaD->dim() != nV)
      throw Error(ErrorKind::GradingHypothesisViolated, "q = 0 needs a grading on the Dirac space");
    if (checkOddness(in.d, *in.gammaD) > 1e-8)
      throw Error(ErrorKind::GradingHypothesisViolated, "D does not anticommute with Gamma_D");
    SpMat gd = kron(in.gammaD->involution().toSparse(), identitySparse(nF));
    if (sparseMaxAbs(SpMat(gd * s - s * gd)) > 1e-8)
      throw Error(ErrorKind::GradingHypothesisViolated, "potential does not commute with Gamma_D");
  }

  ProductOperator out;
  out.signature = sig;
  out.lambda = in.lambda;
  out.provenance = in.provenance;
  RVector mask = in.interiorMask.size() ? in.interiorMask : RVector(RVector::Ones(nV * nF));
  const Eigen::Index n = nV * nF;

  if (sig.p == 1 && sig.q == 1) {
    SpMat upper = d + SpMat(s * cd(0, 1));
    SpMat lower = d - SpMat(s * cd(0, 1));
    std::vector<Triplet> t;
    for (int k = 0; k < upper.outerSize(); ++k)
      for (SpMat::InnerIterator it(upper, k); it; ++it) t.emplace_back(it.row(), it.col() + n, it.value());
    for (int k = 0; k < lower.outerSize(); ++k)
      for (SpMat::InnerIterator it(lower, k); it; ++it) t.emplace_back(it.row() + n, it.col(), it.value());
    SpMat h(2 * n, 2 * n);
    h.setFromTriplets(t.begin(), t.end());
    out.matrix = packed(h);
    std::vector<Triplet> g;
    for (Eigen::Index i = 0; i < 2 * n; ++i) g.emplace_back(i, i, cd(i < n ? 1.0 : -1.0));
    SpMat gm(2 * n, 2 * n);
    gm.setFromTriplets(g.begin(), g.end());
    out.grading = packedGrading(gm);
    out.interiorMask.resize(2 * n);
    out.interiorMask << mask, mask;
  } else if (sig.p == 1 && sig.q == 0) {
    SpMat gd = kron(in.gammaD->involution().toSparse(), identitySparse(nF));
    out.matrix = packed(SpMat(d + gd * s));
    out.interiorMask = mask;
  } else {
    // p = 0: Koszul sign on D.
    SpMat h = SpMat(d * gammaS) + s;
    out.matrix = packed(h);
    if (sig.q == 0) out.grading = packedGrading(kron(in.gammaD->involution().toSparse(), in.gammaS->involution().toSparse()));
    out.interiorMask = mask;
  }
  if (out.grading && checkOddness(out.matrix, *out.grading) > 1e-8)
    throw Error(ErrorKind::GradingHypothesisViolated, "assembled operator is not odd for its grading");
  return out;
}

// ---------------------------------------------------------------------------

FredholmEstimate fredholmEstimate(const PotentialField& field, double lambda) {
  FredholmEstimate est;
  const std::size_t n = field.positions.size();
  bool any = false;
  est.cHat = kInf;
  const int thetaSamples = field.angularSamples > 0 ? field.angularSamples : 1;
  auto resolventNorm = [](const CMatrix& a, const CMatrix& s) {
    CMatrix r = (s + cd(0, 1) * CMatrix::Identity(s.rows(), s.rows())).inverse();
    return opNorm(CMatrix(a * r));
  };
  for (std::size_t j = 0; j < n; ++j) {
    if (!field.exterior[j]) continue;
    any = true;
    const double x = field.positions[j];
    const std::size_t jl = j > 0 ? j - 1 : j, jr = j + 1 < n ? j + 1 : j;
    const double dx = field.positions[jr] - field.positions[jl];
    for (int a = 0; a < thetaSamples; ++a) {
      const double th = 2 * M_PI * a / thetaSamples;
      CMatrix s = lambda * field.symbol(x, th);
      est.cHat = std::min(est.cHat, eigh(HermitianOperator(s)).values.cwiseAbs().minCoeff());
      CMatrix dr = lambda * (field.symbol(field.positions[jr], th) - field.symbol(field.positions[jl], th)) / dx;
      double bound = resolventNorm(dr, s);
      if (field.angularSamples > 0) {
        const double dth = 2 * M_PI / thetaSamples;
        CMatrix dt = lambda * (field.symbol(x, th + dth) - field.symbol(x, th - dth)) / (2 * dth);
        bound += resolventNorm(dt, s);
      }
      est.deltaHat = std::max(est.deltaHat, bound);
    }
  }
  if (!any) throw Error(ErrorKind::EmptyExterior, "no sites are declared exterior");
  est.satisfied = est.deltaHat < est.cHat * est.cHat / (est.cHat + 1);
  return est;
}

// ---------------------------------------------------------------------------

IndexResult chiralIndex(const HermitianOperator& h, const Grading& gamma, const RVector& interiorMask, double window,
                        const ModeThresholds& th) {
  if (gamma.dim() != h.dim()) throw Error(ErrorKind::DimensionMismatch, "grading and operator differ in size");
  if (!(window > 0)) throw Error(ErrorKind::InvalidArgument, "window must be positive");
  IndexResult res;
  WindowSpectrum ws = windowSpectrum(h, window);
  const Eigen::Index k = ws.values.size();
  double largest = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    res.zeroCluster.push_back(ws.values(i));
    largest = std::max(largest, std::abs(ws.values(i)));
  }
  res.gapRatio = largest > 0 ? ws.nextOutside / largest : kInf;
  if (k == 0) {
    res.value = 0;
    return res;
  }
  if (res.gapRatio < th.gapRatio) {
    res.note = "zero cluster not separated from the rest of the spectrum";
    return res;
  }
  const CMatrix& v = ws.vectors;
  CMatrix gv = gamma.involution().apply(v);
  CMatrix c = v.adjoint() * gv;
  EigenSystem cs = eigh(HermitianOperator(CMatrix(0.5 * (c + c.adjoint()))));
  CMatrix w = v * cs.vectors;
  long value = 0;
  bool inconclusive = false;
  for (int sign : {-1, 1}) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index i = 0; i < k; ++i)
      if ((cs.values(i) >= 0) == (sign > 0)) cols.push_back(i);
    if (cols.empty()) continue;
    CMatrix g(w.rows(), cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) g.col(i) = w.col(cols[i]);
    CMatrix masked = interiorMask.size() ? CMatrix(interiorMask.cast<cd>().asDiagonal() * g) : g;
    CMatrix m = g.adjoint() * masked;
    EigenSystem ls = eigh(HermitianOperator(CMatrix(0.5 * (m + m.adjoint()))));
    CMatrix modes = g * ls.vectors;
    for (Eigen::Index i = 0; i < modes.cols(); ++i) {
      const CVector mode = modes.col(i);
      const double chir = mode.dot(gamma.involution().apply(mode)).real() / mode.squaredNorm();
      const double loc = maskWeight(mode, interiorMask);
      res.chirality.push_back(chir);
      res.localization.push_back(loc);
      if (loc <= th.delocalized) continue;
      if (loc >= th.localized && std::abs(chir) >= th.chirality) value += chir > 0 ? 1 : -1;
      else inconclusive = true;
    }
  }
  if (inconclusive) {
    res.note = "near-zero mode failed the chirality or localisation thresholds";
    return res;
  }
  res.value = value;
  return res;
}

IndexResult indexByChirality(const ProductOperator& op, double window, const ModeThresholds& th) {
  if (!op.grading) throw Error(ErrorKind::GradingAbsent, "ungraded signature has no chirality index");
  return chiralIndex(op.matrix, *op.grading, op.interiorMask, window, th);
}

LambdaChoice lambdaSearch(const std::function<ProductOperator(double)>& build, const PotentialField& field,
                          const std::vector<double>& lambdaGrid, double window) {
  for (std::size_t i = 0; i < lambdaGrid.size(); ++i) {
    if (!(lambdaGrid[i] > 0) || (i > 0 && !(lambdaGrid[i] > lambdaGrid[i - 1])))
      throw Error(ErrorKind::InvalidArgument, "lambda grid must be positive and increasing");
  }
  // Uniformly invertible: the estimate already holds with every site exterior.
  PotentialField everywhere = field;
  std::fill(everywhere.exterior.begin(), everywhere.exterior.end(), 1);
  for (double lambda : lambdaGrid) {
    FredholmEstimate est = fredholmEstimate(field, lambda);
    if (!est.satisfied) continue;
    ProductOperator op = build(lambda);
    IndexResult idx;
    if (op.grading) {
      idx = indexByChirality(op, window);
      if (!idx.conclusive()) continue;
    } else {
      WindowSpectrum ws = windowSpectrum(op.matrix, window);
      double largest = 0.0;
      for (Eigen::Index j = 0; j < ws.values.size(); ++j) {
        idx.zeroCluster.push_back(ws.values(j));
        largest = std::max(largest, std::abs(ws.values(j)));
      }
      idx.gapRatio = largest > 0 ? ws.nextOutside / largest : kInf;
      if (idx.gapRatio < 10) continue;
      idx.method = "spectrum";
    }
    // An invertible potential must not leave interior zero modes. Modes at the
    // grid ends are allowed: with a negative potential the Wilson term puts the
    // lattice in a phase with end states.
    if (fredholmEstimate(everywhere, lambda).satisfied) {
      bool interior = idx.localization.empty() && !idx.zeroCluster.empty();
      for (double loc : idx.localization) interior = interior || loc > ModeThresholds{}.delocalized;
      if (interior) continue;
    }
    return LambdaChoice{lambda, est, idx};
  }
  throw Error(ErrorKind::NoAdmissibleLambda, "no lambda on the grid satisfies the estimate and the gap test");
}

FlowResult familyIndexOverCircle(const std::function<ProductOperator(double)>& family, const FamilyOptions& options) {
  ProductOperator first = family(0.0);
  if (first.grading) throw Error(ErrorKind::InvalidArgument, "family flow is defined for ungraded signatures");
  RVector mask = first.interiorMask;
  OperatorPath path = OperatorPath::fromGenerator(PathDomain::Circle, 0.0, 1.0, options.samples,
                                                  [family](double t) { return family(t).matrix; });
  FlowOptions fo;
  fo.window = options.window;
  fo.maxRefine = options.maxRefine;
  if (options.filterByLocalization) fo.localization = [mask](const CVector& v) { return maskWeight(v, mask); };
  return spectralFlow(path, fo);
}

ProductOperator lineProduct(const PotentialField& field, const LineSpec& spec, double lambda, double wilson) {
  const int fd = field.fiberDim;
  SpMat idF(fd, fd);
  idF.setIdentity();
  ProductInputs in;
  in.d = HermitianOperator(SpMat(cd(0, -1) * lineDerivativeSparse(spec)));
  in.s = field.assembled;
  in.fiberDim = fd;
  in.signature = makeSignature(1, 1);
  in.lambda = lambda;
  if (wilson > 0) in.regulator = HermitianOperator(SpMat(kron(wilsonTerm(spec, wilson), idF)));
  in.interiorMask = lineInteriorMask(spec, 1, fd);
  in.provenance = "line";
  return buildProductOperator(in);
}

}  // namespace indexlab
