#include "indexlab/callias.hpp"

#include <algorithm>
#include <cmath>

namespace indexlab {

namespace {

CMatrix pauliMatrix(int k) {
  CMatrix m = CMatrix::Zero(2, 2);
  if (k == 1) m << 0, 1, 1, 0;
  if (k == 3) m << 1, 0, 0, -1;
  return m;
}

SpMat identitySparse(Eigen::Index n) {
  SpMat id(n, n);
  id.setIdentity();
  return id;
}

int potentialDegree(const PotentialSpec& p) {
  if (const auto* h = std::get_if<HedgehogPotential>(&p.kind)) return std::abs(h->k);
  if (const auto* c = std::get_if<CollarPotential>(&p.kind)) return c->angularDegree;
  return 0;
}

int loopSamples(int degree) { return std::max(8 * degree + 16, 32); }

CMatrix diagonalShifted(int modes, int fiberDim, double shift) {
  const int n = 2 * modes + 1;
  CMatrix d = CMatrix::Zero(n * fiberDim, n * fiberDim);
  for (int a = 0; a < n; ++a)
    for (int f = 0; f < fiberDim; ++f) d(a * fiberDim + f, a * fiberDim + f) = (a - modes) + shift;
  return d;
}

// Weight of |n| <= 0.75 M on modes (x) fiber.
RVector modeMask(int modes, int fiberDim) {
  const int n = 2 * modes + 1;
  RVector m(n * fiberDim);
  for (int a = 0; a < n; ++a)
    for (int f = 0; f < fiberDim; ++f) m(a * fiberDim + f) = std::abs(a - modes) <= 0.75 * modes ? 1.0 : 0.0;
  return m;
}

}  // namespace

CMatrix scenarioReference(const CalliasScenario& sc) {
  if (sc.reference.size() > 0) return sc.reference;
  const int fd = sc.potential.fiberDim;
  if (sc.signature.p == 1) return CMatrix(-CMatrix::Identity(fd, fd));
  if (fd != 2) throw Error(ErrorKind::InvalidArgument, "default p = 0 reference needs fiber dimension 2");
  return pauliMatrix(1);
}

ProductOperator buildCylinderProduct(const CalliasScenario& sc, double lambda) {
  const int fd = sc.potential.fiberDim;
  CylinderDirac cyl = cylinderDirac(sc.geometry, sc.signature.q);
  PotentialField field = samplePotential(sc.potential, sc.geometry);
  const Eigen::Index modes = 2 * sc.geometry.circleModes + 1;

  ProductInputs in;
  in.d = cyl.dirac;
  in.fiberDim = fd;
  in.s = liftToSpinor(field.assembled, cyl.spinorDim);
  in.signature = sc.signature;
  in.lambda = lambda;
  if (sc.signature.p == 0) in.gammaS = Grading(HermitianOperator(sc.gammaS.value_or(pauliMatrix(3))));
  if (sc.signature.q == 0) in.gammaD = cyl.grading;
  if (sc.wilson > 0) {
    // Doubler mass along T when S is graded, along the identity otherwise.
    CMatrix fiber = sc.signature.p == 0 ? scenarioReference(sc) : CMatrix(CMatrix::Identity(fd, fd));
    SpMat w = wilsonTerm(cylinderLine(sc.geometry), sc.wilson);
    in.regulator = HermitianOperator(
        SpMat(kron(identitySparse(cyl.spinorDim), kron(w, kron(identitySparse(modes), toSparse(fiber))))));
  }
  in.interiorMask = cylinderInteriorMask(sc.geometry, cyl.spinorDim, fd);
  in.provenance = "cylinder";
  return buildProductOperator(in);
}

BoundaryData restrictToHypersurface(const CalliasScenario& sc) {
  if (!(sc.geometry.halfLength > 0))
    throw Error(ErrorKind::HypersurfaceNotInGrid, "r = 0 is not inside the radial interval");
  PotentialField field = samplePotential(sc.potential, sc.geometry);
  BoundaryData bd;
  bd.fiberDim = sc.potential.fiberDim;
  bd.circleModes = sc.geometry.circleModes;
  bd.angularDegree = potentialDegree(sc.potential);
  auto symbol = field.symbol;
  bd.sN = [symbol](double th) { return symbol(0.0, th); };
  const int samples = loopSamples(bd.angularDegree);
  for (int j = 0; j < samples; ++j) bd.thetas.push_back(2 * M_PI * j / samples);
  if (sc.signature.q == 1) {
    GradedCircle gc = gradedCircleDirac(sc.geometry.circleModes);
    bd.dN = gc.dirac;
    bd.gammaN = gc.grading;
  } else {
    bd.dN = circleDirac(sc.geometry.circleModes);
  }
  if (sc.signature.p == 0) bd.gammaS = Grading(HermitianOperator(sc.gammaS.value_or(pauliMatrix(3))));

  // Off-diagonal form in a diagonal fiber grading.
  const int fd = bd.fiberDim;
  if (fd % 2 == 0) {
    CMatrix g = sc.gammaS.value_or(pauliMatrix(3));
    CMatrix expected = CMatrix::Zero(fd, fd);
    expected.topLeftCorner(fd / 2, fd / 2).setIdentity();
    expected.bottomRightCorner(fd / 2, fd / 2) = -CMatrix::Identity(fd / 2, fd / 2);
    bool offDiagonal = g.rows() == fd && maxAbs(g - expected) < 1e-14;
    for (double th : bd.thetas) {
      if (!offDiagonal) break;
      CMatrix s = bd.sN(th);
      if (maxAbs(s.topLeftCorner(fd / 2, fd / 2)) > 1e-10 || maxAbs(s.bottomRightCorner(fd / 2, fd / 2)) > 1e-10)
        offDiagonal = false;
    }
    if (offDiagonal) {
      auto sN = bd.sN;
      bd.uN = [sN, fd](double th) { return CMatrix(sN(th).bottomLeftCorner(fd / 2, fd / 2)); };
    }
  }
  return bd;
}

long boundaryRelativeClass(const BoundaryData& bd, const CMatrix& reference, int p) {
  if (reference.rows() != bd.fiberDim) throw Error(ErrorKind::DimensionMismatch, "reference fiber size");
  SpectralProjection pt = positiveSpectralProjection(HermitianOperator(reference), 1e-3);
  if (p == 1) {
    std::optional<int> value;
    for (double th : bd.thetas) {
      const int r = relind0(positiveSpectralProjection(HermitianOperator(bd.sN(th)), 1e-6), pt);
      if (value && *value != r) throw Error(ErrorKind::InvalidArgument, "fiberwise relative index is not constant");
      value = r;
    }
    return value.value_or(0);
  }
  if (p != 0) throw Error(ErrorKind::InvalidArgument, "p must be 0 or 1");
  if (!bd.gammaS) throw Error(ErrorKind::GradingAbsent, "p = 0 relative class needs the fiber grading");
  std::vector<SpectralProjection> ps, qs;
  for (double th : bd.thetas) {
    ps.push_back(positiveSpectralProjection(HermitianOperator(bd.sN(th)), 1e-6));
    qs.push_back(pt);
  }
  return relind1(makeProjectionLoop(ps, *bd.gammaS), makeProjectionLoop(qs, *bd.gammaS));
}

long conjugationFlow(const std::function<CMatrix(double)>& u, int fiberDim, int angularDegree, int circleModes) {
  const int big = circleModes + angularDegree;
  CMatrix ub = fourierAssemble(u, fiberDim, big, angularDegree);
  CMatrix conj = ub.adjoint() * diagonalShifted(big, fiberDim, 0.5) * ub;
  const Eigen::Index off = static_cast<Eigen::Index>(angularDegree) * fiberDim;
  const Eigen::Index n = static_cast<Eigen::Index>(2 * circleModes + 1) * fiberDim;
  CMatrix end = conj.block(off, off, n, n);
  CMatrix start = diagonalShifted(circleModes, fiberDim, 0.5);
  OperatorPath path = OperatorPath::fromGenerator(PathDomain::Interval, 0.0, 1.0, 8 * angularDegree + 32,
                                                  [start, end](double t) {
                                                    return HermitianOperator(CMatrix((1 - t) * start + t * end));
                                                  });
  return spectralFlow0(path, 0.2, 12);
}

PairingResult boundaryPairing(const BoundaryData& bd, int p) {
  PairingResult res;
  if (p == 0) {
    if (!bd.uN) throw Error(ErrorKind::InvalidArgument, "p = 0 pairing needs the off-diagonal boundary unitary");
    res.value = conjugationFlow(bd.uN, bd.fiberDim / 2, bd.angularDegree, bd.circleModes);
    res.crossCheck = res.value;
    res.method = "spectralFlow";
    return res;
  }
  if (p != 1) throw Error(ErrorKind::InvalidArgument, "p must be 0 or 1");
  if (!bd.gammaN) throw Error(ErrorKind::GradingAbsent, "p = 1 pairing needs a graded boundary operator");
  const int fd = bd.fiberDim, m = bd.circleModes, nm = 2 * m + 1;
  const Eigen::Index block = static_cast<Eigen::Index>(nm) * fd;

  // Toeplitz compression of P+(S_N); exact when S_N squares to a constant.
  auto proj = [&](double th) { return positiveSpectralProjection(HermitianOperator(bd.sN(th)), 1e-6).matrix.toDense(); };
  CMatrix pt = fourierAssemble(proj, fd, m, std::max(bd.angularDegree, 1));
  EigenSystem pe = eigh(HermitianOperator(CMatrix(0.5 * (pt + pt.adjoint()))));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < pe.values.size(); ++i)
    if (pe.values(i) > 0.5) keep.push_back(i);
  CMatrix b1(block, keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) b1.col(i) = pe.vectors.col(keep[i]);

  // D_N = [[0, D-], [D+, 0]] in the grading's diagonal basis.
  CMatrix dn = bd.dN.toDense(), g = bd.gammaN->involution().toDense();
  CMatrix dplus = dn.block(nm, 0, nm, nm);
  if (maxAbs(g - kron(pauliMatrix(3), CMatrix(CMatrix::Identity(nm, nm)))) > 1e-12)
    throw Error(ErrorKind::InvalidArgument, "boundary grading must be sigma3 on the spinor factor");
  CMatrix dplusF = kron(dplus, CMatrix(CMatrix::Identity(fd, fd)));
  CMatrix tplus = b1.adjoint() * dplusF * b1;

  // Route 1: chirality counting on the odd operator P D P + kappa (1 - P).
  const double kappa = m + 1.0;
  CMatrix pfull = b1 * b1.adjoint();
  CMatrix comp = CMatrix::Identity(block, block) - pfull;
  CMatrix h = CMatrix::Zero(2 * block, 2 * block);
  h.block(block, 0, block, block) = pfull * dplusF * pfull + kappa * comp;
  h.block(0, block, block, block) = h.block(block, 0, block, block).adjoint();
  RVector mask1 = modeMask(m, fd);
  RVector mask(2 * block);
  mask << mask1, mask1;
  IndexResult chir = chiralIndex(HermitianOperator(h), Grading(HermitianOperator(kron(pauliMatrix(3),
                                                                                       CMatrix(CMatrix::Identity(block, block))))),
                                 mask, 0.25);
  if (!chir.conclusive()) throw Error(ErrorKind::InconclusiveIndex, "boundary compression: " + chir.note);
  // Route 2: kernel and cokernel of the positive block.
  std::optional<long> kc =
      localizedNullity(tplus, CMatrix(b1.adjoint() * mask1.cast<cd>().asDiagonal() * b1), 0.25);
  if (!kc) throw Error(ErrorKind::InconclusiveIndex, "boundary compression kernel not localised");
  res.value = *chir.value;
  res.crossCheck = *kc;
  res.method = "chirality+kernelCount";
  if (res.value != res.crossCheck)
    throw Error(ErrorKind::MethodDisagreement, "boundary compression: chirality " + std::to_string(res.value) +
                                                   " vs kernel count " + std::to_string(res.crossCheck));
  return res;
}

CalliasReport calliasVerify(const CalliasScenario& sc) {
  CalliasReport rep;
  const int p = sc.signature.p;
  if (sc.signature.p != sc.signature.q) {
    rep.lhs.value = 0;
    rep.lhs.method = "trivial";
    rep.rhs = 0;
    rep.agree = true;
    rep.note = "odd total degree: the class is trivial for scalar coefficients";
    return rep;
  }
  const CMatrix t = scenarioReference(sc);
  if (p == 0 && sc.gammaS.value_or(pauliMatrix(3)).rows() == t.rows() &&
      checkOddness(HermitianOperator(t), Grading(HermitianOperator(sc.gammaS.value_or(pauliMatrix(3))))) > 1e-8)
    throw Error(ErrorKind::GradingHypothesisViolated, "reference does not anticommute with the fiber grading");
  PotentialField field = samplePotential(sc.potential, sc.geometry);
  try {
    LambdaChoice c = lambdaSearch([&](double l) { return buildCylinderProduct(sc, l); }, field, sc.lambdaGrid, sc.window);
    rep.lhs = c.index;
    rep.lambda = c.lambda;
    rep.estimate = c.estimate;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoAdmissibleLambda) throw;
    rep.lhs.note = e.what();
  }
  BoundaryData bd = restrictToHypersurface(sc);
  rep.relativeClass = boundaryRelativeClass(bd, t, p);
  rep.rhs = sc.calibrationSign * boundaryPairing(bd, p).value;
  rep.agree = rep.lhs.conclusive() && rep.rhs && *rep.lhs.value == *rep.rhs;
  return rep;
}

bool cylinderReductionCheck(const CalliasScenario& a, const CalliasScenario& b) {
  auto index = [](const CalliasScenario& sc) -> std::optional<long> {
    PotentialField field = samplePotential(sc.potential, sc.geometry);
    try {
      return lambdaSearch([&](double l) { return buildCylinderProduct(sc, l); }, field, sc.lambdaGrid, sc.window)
          .index.value;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoAdmissibleLambda) throw;
      return std::nullopt;
    }
  };
  std::optional<long> ia = index(a), ib = index(b);
  return ia && ib && *ia == *ib;
}

CobordismResult cobordismCheck(const std::function<CMatrix(double)>& u, int angularDegree, int circleModes) {
  CobordismResult r;
  const int samples = loopSamples(angularDegree);
  std::vector<cd> dets;
  CMatrix u0 = u(0.0);
  for (int j = 0; j < samples; ++j) {
    CMatrix uj = u(2 * M_PI * j / samples);
    if (maxAbs(CMatrix(uj.adjoint() * uj - CMatrix::Identity(uj.rows(), uj.rows()))) > 1e-8)
      throw Error(ErrorKind::InvalidArgument, "boundary loop is not unitary");
    dets.push_back(uj.determinant());
  }
  r.winding = phaseWinding(dets);
  r.spectralFlow = conjugationFlow(u, static_cast<int>(u0.rows()), angularDegree, circleModes);
  return r;
}

int calibrateSign(Signature sig, CylinderSpec geom) {
  CalliasReport r = calliasVerify(hedgehogScenario(1, sig, geom));
  if (!r.lhs.conclusive() || !r.rhs) throw Error(ErrorKind::InconclusiveIndex, "calibration run: " + r.lhs.note);
  return (*r.lhs.value != 0 && *r.lhs.value == -*r.rhs) ? -1 : 1;
}

CalliasScenario hedgehogScenario(int k, Signature sig, CylinderSpec geom) {
  CalliasScenario sc;
  sc.geometry = geom;
  sc.signature = sig;
  sc.potential.fiberDim = 2;
  sc.potential.exteriorBand = 7.0;
  sc.potential.rho = CutoffRho{-6.0, -2.0};
  if (sig.p == 1) {
    sc.potential.kind = HedgehogPotential{k, std::nullopt};
  } else {
    CollarPotential cp;
    cp.boundary = [k](double th) {
      CMatrix f = CMatrix::Zero(2, 2);
      f(1, 0) = std::polar(1.0, k * th);
      f(0, 1) = std::polar(1.0, -k * th);
      return f;
    };
    cp.angularDegree = std::abs(k);
    cp.reference = pauliMatrix(1);
    sc.potential.kind = cp;
  }
  return sc;
}

}  // namespace indexlab
