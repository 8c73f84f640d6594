#include "indexlab/toeplitz.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "indexlab/callias.hpp"

namespace indexlab {

namespace {

CMatrix pauliMatrix(int k) {
  CMatrix m = CMatrix::Zero(2, 2);
  if (k == 1) m << 0, 1, 1, 0;
  if (k == 2) m << 0, cd(0, -1), cd(0, 1), 0;
  if (k == 3) m << 1, 0, 0, -1;
  return m;
}

CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

CMatrix columns(const CMatrix& m, const std::vector<Eigen::Index>& idx) {
  CMatrix out(m.rows(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(i) = m.col(idx[i]);
  return out;
}

// Splits an orthonormal basis into the +1 and -1 eigenspaces of a grading
// that preserves its span.
std::pair<CMatrix, CMatrix> chiralSplit(const CMatrix& basis, const HermitianOperator& gamma) {
  CMatrix c = basis.adjoint() * gamma.apply(basis);
  EigenSystem es = eigh(HermitianOperator(CMatrix(0.5 * (c + c.adjoint()))));
  std::vector<Eigen::Index> plus, minus;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    if (std::abs(std::abs(es.values(i)) - 1.0) > 1e-8)
      throw Error(ErrorKind::NotOdd, "kernel is not invariant under the grading");
    (es.values(i) > 0 ? plus : minus).push_back(i);
  }
  CMatrix rotated = basis * es.vectors;
  return {columns(rotated, plus), columns(rotated, minus)};
}

}  // namespace

KernelProjection kernelProjection(const HermitianOperator& d, double minGap) {
  EigenSystem es = eigh(HermitianOperator(d.toDense()));
  const double norm = es.values.size() ? es.values.cwiseAbs().maxCoeff() : 0.0;
  const double tol = 1e-8 * std::max(norm, 1e-300);
  std::vector<Eigen::Index> kernel;
  double gap = kInf;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    if (std::abs(es.values(i)) <= tol) kernel.push_back(i);
    else gap = std::min(gap, std::abs(es.values(i)));
  }
  if (gap < minGap)
    throw Error(ErrorKind::GapViolated, "eigenvalue " + std::to_string(gap) + " between the kernel and minGap");
  KernelProjection kp;
  kp.projection = projectionFromBasis(columns(es.vectors, kernel));
  kp.projection.gap = gap;
  kp.gap = gap;
  kp.kernelDim = static_cast<int>(kernel.size());
  return kp;
}

ToeplitzOperator toeplitzCompress(const HermitianOperator& f, const KernelProjection& kp, Signature sig,
                                  const std::optional<Grading>& gammaD, int fiberDim) {
  if (sig.q == 1) throw Error(ErrorKind::SignatureTrivial, "compressions with q = 1 carry the trivial class");
  const Eigen::Index v = kp.projection.matrix.dim();
  if (f.dim() != v * fiberDim) throw Error(ErrorKind::DimensionMismatch, "symbol does not act on V (x) F");
  if (!gammaD || gammaD->dim() != v) throw Error(ErrorKind::GradingAbsent, "q = 0 compression needs Gamma_D");
  ToeplitzOperator t;
  t.signature = sig;
  auto [plus, minus] = chiralSplit(kp.projection.basis, gammaD->involution());
  CMatrix basis(v, plus.cols() + minus.cols());
  basis << plus, minus;
  t.basis = basis;
  t.plusDim = static_cast<int>(plus.cols());
  const CMatrix idF = identity(fiberDim);
  const CMatrix b = kron(basis, idF);
  const CMatrix fd = f.toDense();
  if (sig.p == 1) {
    t.matrix = b.adjoint() * kron(gammaD->involution().toDense(), idF) * fd * b;
    return t;
  }
  if (fiberDim % 2 != 0) throw Error(ErrorKind::DimensionMismatch, "(0,0) symbol needs an even fiber");
  t.matrix = b.adjoint() * fd * b;
  // Lower-left fiber block of F is f.
  const int half = fiberDim / 2;
  CMatrix rows = CMatrix::Zero(fiberDim, half), cols = CMatrix::Zero(fiberDim, half);
  rows.bottomRows(half) = identity(half);
  cols.topRows(half) = identity(half);
  auto block = [&](const CMatrix& x) {
    return CMatrix(kron(x, rows).adjoint() * fd * kron(x, cols));
  };
  t.tPlus = block(plus);
  t.tMinus = block(minus);
  return t;
}

DecayProfile commutatorDecayProfile(const KernelProjection& kp, const HermitianOperator& f) {
  const Eigen::Index v = kp.projection.matrix.dim();
  if (f.dim() % v != 0) throw Error(ErrorKind::DimensionMismatch, "symbol does not act on V (x) F");
  CMatrix p = kron(kp.projection.matrix.toDense(), identity(f.dim() / v));
  CMatrix fd = f.toDense();
  SvdTriple s = svdTriple(CMatrix(p * fd - fd * p));
  DecayProfile d;
  d.singularValues.assign(s.singularValues.data(), s.singularValues.data() + s.singularValues.size());
  const Eigen::Index k = std::min<Eigen::Index>(s.singularValues.size() - 1, s.singularValues.size() / 4);
  d.tailRatio = s.singularValues(0) > 0 ? s.singularValues(k) / s.singularValues(0) : 0.0;
  d.decaying = d.tailRatio < 1e-2;
  return d;
}

VanishingCertificate q1Vanishing(const HermitianOperator& f, const KernelProjection& kp, Signature sig,
                                 const std::optional<Grading>& gammaS, int fiberDim) {
  if (sig.q != 1) throw Error(ErrorKind::InvalidArgument, "vanishing certificate is for q = 1");
  VanishingCertificate c;
  c.signature = sig;
  const CMatrix b = kron(kp.projection.basis, identity(fiberDim));
  CMatrix comp = b.adjoint() * f.toDense() * b;
  c.hermiticityDefect = maxAbs(CMatrix(comp - comp.adjoint()));
  if (sig.p == 1) {
    // A self-adjoint square matrix has equal kernel and cokernel.
    c.certified = c.hermiticityDefect <= 1e-10;
    return c;
  }
  if (!gammaS || gammaS->dim() != fiberDim) throw Error(ErrorKind::GradingAbsent, "(0,1) needs the fiber grading");
  CMatrix g = kron(identity(kp.kernelDim), gammaS->involution().toDense());
  c.clifford = cliffordDefectCheck(HermitianOperator(comp), Grading(HermitianOperator(g)));
  c.certified = c.clifford.verdict == SymmetryVerdict::exactSymmetry;
  return c;
}

// ---------------------------------------------------------------------------

CMatrix MatrixSymbol::operator()(double theta) const {
  CMatrix out = CMatrix::Zero(dim, dim);
  for (const auto& [q, c] : coeffs) out += std::polar(1.0, q * theta) * c;
  return out;
}

int MatrixSymbol::degree() const {
  int d = 0;
  for (const auto& [q, c] : coeffs) d = std::max(d, std::abs(q));
  return d;
}

CMatrix landauMatrixMultiplication(const MatrixSymbol& f, const LandauBasis& out, const LandauBasis& in) {
  CMatrix m = CMatrix::Zero(out.dim() * f.dim, in.dim() * f.dim);
  for (const auto& [q, c] : f.coeffs) {
    if (c.rows() != f.dim || c.cols() != f.dim) throw Error(ErrorKind::DimensionMismatch, "symbol coefficient size");
    m += kron(landauMultiplication(TrigPolynomial::monomial(q), out, in), c);
  }
  return m;
}

RVector landauInteriorMask(const LandauBasis& b, int fiberDim) {
  RVector mask(b.dim() * fiberDim);
  for (int l = 0; l < b.levels; ++l)
    for (int m = 0; m < b.fockModes; ++m)
      for (int f = 0; f < fiberDim; ++f) mask(b.index(l, m) * fiberDim + f) = m < 0.6 * b.fockModes ? 1.0 : 0.0;
  return mask;
}

long toeplitzIndexBySpectralFlow(const std::function<CMatrix(double)>& u, int fiberDim, int angularDegree,
                                 int circleModes) {
  for (int j = 0; j < 64; ++j) {
    CMatrix uj = u(2 * M_PI * j / 64);
    if (maxAbs(CMatrix(uj.adjoint() * uj - identity(fiberDim))) > 1e-8)
      throw Error(ErrorKind::InvalidArgument, "symbol is not unitary");
  }
  return -conjugationFlow(u, fiberDim, angularDegree, circleModes);
}

std::optional<long> localizedKernelIndex(const CMatrix& t, const RVector& mask, double tol) {
  if (t.rows() != t.cols()) throw Error(ErrorKind::DimensionMismatch, "finite section must be square");
  return localizedNullity(t, CMatrix(mask.cast<cd>().asDiagonal()), tol);
}

EvenEvenReport evenEvenToeplitzIndex(int fockModes, const TrigPolynomial& f, int topLevel) {
  EvenEvenReport rep;
  LandauDirac ld = landauDirac(fockModes, topLevel);
  const Eigen::Index np = ld.plus.dim(), nm = ld.minus.dim();
  CMatrix fPlus = landauMultiplication(f, ld.plus, ld.plus);
  CMatrix fMinus = landauMultiplication(f, ld.minus, ld.minus);
  CMatrix fMul = CMatrix::Zero(np + nm, np + nm);
  fMul.topLeftCorner(np, np) = fPlus;
  fMul.bottomRightCorner(nm, nm) = fMinus;

  // Toeplitz side: compress F = [[0, f*], [f, 0]] to ker D.
  KernelProjection kp = kernelProjection(ld.full, 0.5);
  CMatrix lower = CMatrix::Zero(2, 2), upper = CMatrix::Zero(2, 2);
  lower(1, 0) = 1;
  upper(0, 1) = 1;
  HermitianOperator bigF(CMatrix(kron(fMul, lower) + kron(CMatrix(fMul.adjoint()), upper)));
  ToeplitzOperator t = toeplitzCompress(bigF, kp, makeSignature(0, 0), ld.grading, 2);

  auto symbol = [f](double th) { return CMatrix::Constant(1, 1, f(th)).eval(); };
  const long sf = toeplitzIndexBySpectralFlow(symbol, 1, std::max(f.degree(), 1));

  // Cross-check on a Fock-ordered basis with the top quarter discarded.
  auto fockOrdered = [&](const CMatrix& basis) {
    RVector occ(np + nm);
    for (int l = 0; l < ld.plus.levels; ++l)
      for (int m = 0; m < fockModes; ++m) occ(ld.plus.index(l, m)) = m;
    for (int l = 0; l < ld.minus.levels; ++l)
      for (int m = 0; m < fockModes; ++m) occ(np + ld.minus.index(l, m)) = m;
    CMatrix c = basis.adjoint() * occ.cast<cd>().asDiagonal() * basis;
    EigenSystem es = eigh(HermitianOperator(CMatrix(0.5 * (c + c.adjoint()))));
    return CMatrix(basis * es.vectors);
  };
  auto kernelCount = [&](const CMatrix& basis) -> long {
    if (basis.cols() == 0) return 0;
    CMatrix ordered = fockOrdered(basis);
    const Eigen::Index keep = (3 * ordered.cols()) / 4;
    CMatrix sec = ordered.leftCols(keep).adjoint() * fMul * ordered.leftCols(keep);
    RVector mask(keep);
    for (Eigen::Index i = 0; i < keep; ++i) mask(i) = i < 0.75 * keep ? 1.0 : 0.0;
    std::optional<long> r = localizedKernelIndex(sec, mask, 0.25);
    if (!r) throw Error(ErrorKind::InconclusiveIndex, "finite-section kernel is not localised");
    return *r;
  };
  const CMatrix plusBasis = t.basis.leftCols(t.plusDim);
  const CMatrix minusBasis = t.basis.rightCols(t.basis.cols() - t.plusDim);
  rep.kernelCountTplus = kernelCount(plusBasis);
  // The symbol route applies to each non-empty chirality part.
  rep.indexTplus = plusBasis.cols() ? sf : 0;
  rep.indexTminus = minusBasis.cols() ? sf : 0;
  if (rep.kernelCountTplus != rep.indexTplus)
    throw Error(ErrorKind::MethodDisagreement, "T_f+ index: spectral flow " + std::to_string(rep.indexTplus) +
                                                   " vs kernel count " + std::to_string(rep.kernelCountTplus));
  if (minusBasis.cols() && kernelCount(minusBasis) != rep.indexTminus)
    throw Error(ErrorKind::MethodDisagreement, "T_f- index disagrees with the kernel count");

  // Product side: B = [[f, D-], [D+, -f*]], doubled to a graded Hermitian operator.
  CMatrix b(np + nm, np + nm);
  b << fPlus, ld.dPlus.adjoint(), ld.dPlus, -CMatrix(fMinus.adjoint());
  const Eigen::Index n = np + nm;
  CMatrix h = CMatrix::Zero(2 * n, 2 * n);
  h.topRightCorner(n, n) = b.adjoint();
  h.bottomLeftCorner(n, n) = b;
  RVector maskPM(n);
  maskPM << landauInteriorMask(ld.plus, 1), landauInteriorMask(ld.minus, 1);
  RVector mask(2 * n);
  mask << maskPM, maskPM;
  std::vector<int> signs(2 * n, 1);
  std::fill(signs.begin() + n, signs.end(), -1);
  rep.productIndex = chiralIndex(HermitianOperator(h), Grading::diagonal(signs), mask, 0.1);
  rep.agree = rep.productIndex.conclusive() && *rep.productIndex.value == rep.indexTplus - rep.indexTminus;
  return rep;
}

// ---------------------------------------------------------------------------

MatrixSymbol hedgehogFamily(double t, int speed) {
  const double a = 2 * M_PI * speed * t;
  MatrixSymbol s;
  s.dim = 2;
  s.coeffs[0] = std::sin(a) * pauliMatrix(1) + (1 + std::cos(a)) * pauliMatrix(3);
  s.coeffs[1] = pauliMatrix(2) / cd(0, 2) + 0.5 * pauliMatrix(3);
  s.coeffs[-1] = -pauliMatrix(2) / cd(0, 2) + 0.5 * pauliMatrix(3);
  return s;
}

namespace {

// Scalar multiplication matrices per Fourier mode, computed once per basis pair.
struct MonomialCache {
  LandauBasis out, in;
  std::map<int, CMatrix> mats;
  CMatrix apply(const MatrixSymbol& f) {
    CMatrix m = CMatrix::Zero(out.dim() * f.dim, in.dim() * f.dim);
    for (const auto& [q, c] : f.coeffs) {
      auto it = mats.find(q);
      if (it == mats.end()) it = mats.emplace(q, landauMultiplication(TrigPolynomial::monomial(q), out, in)).first;
      m += kron(it->second, c);
    }
    return m;
  }
};

}  // namespace

FamilyFlowReport toeplitzFamilyFlow(const std::function<MatrixSymbol(double)>& family, int fockModes, int topLevel,
                                    int samples) {
  FamilyFlowReport rep;
  const int fd = family(0.0).dim;
  const LandauBasis lll{1, fockModes};
  const RVector lllMask = landauInteriorMask(lll, fd);
  auto lllCache = std::make_shared<MonomialCache>(MonomialCache{lll, lll, {}});
  OperatorPath tp = OperatorPath::fromGenerator(PathDomain::Circle, 0.0, 1.0, samples, [=](double t) {
    return HermitianOperator(lllCache->apply(family(t)));
  });
  FlowOptions fo;
  fo.localization = [lllMask](const CVector& v) { return maskWeight(v, lllMask); };
  rep.toeplitzFlow = spectralFlow(tp, fo);

  LandauDirac ld = landauDirac(fockModes, topLevel);
  const Eigen::Index np = ld.plus.dim() * fd, nm = ld.minus.dim() * fd;
  RVector mask(np + nm);
  mask << landauInteriorMask(ld.plus, fd), landauInteriorMask(ld.minus, fd);
  MonomialCache plusCache{ld.plus, ld.plus, {}}, minusCache{ld.minus, ld.minus, {}};
  auto product = [&](double t) {
    MatrixSymbol f = family(t);
    CMatrix s = CMatrix::Zero(np + nm, np + nm);
    s.topLeftCorner(np, np) = plusCache.apply(f);
    s.bottomRightCorner(nm, nm) = minusCache.apply(f);
    ProductInputs in;
    in.d = ld.full;
    in.s = HermitianOperator(s);
    in.fiberDim = fd;
    in.signature = makeSignature(1, 0);
    in.gammaD = ld.grading;
    in.interiorMask = mask;
    in.provenance = "landau";
    return buildProductOperator(in);
  };
  FamilyOptions opts;
  opts.samples = samples;
  rep.productFlow = familyIndexOverCircle(product, opts);
  rep.agree = rep.toeplitzFlow.value == rep.productFlow.value;
  return rep;
}

}  // namespace indexlab
