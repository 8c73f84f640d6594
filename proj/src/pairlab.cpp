#include "indexlab/pairlab.hpp"

#include <algorithm>
#include <cmath>

#include "indexlab/callias.hpp"
#include "indexlab/toeplitz.hpp"

namespace indexlab {

void UnitarySymbol::validate(int samples) const {
  if (!u) throw Error(ErrorKind::InvalidArgument, "unitary symbol has no values");
  for (int j = 0; j < samples; ++j) {
    CMatrix v = u(2 * M_PI * j / samples);
    if (v.rows() != fiberDim || v.cols() != fiberDim)
      throw Error(ErrorKind::DimensionMismatch, "unitary symbol sample has the wrong size");
    if (maxAbs(CMatrix(v.adjoint() * v - CMatrix::Identity(fiberDim, fiberDim))) > 1e-8)
      throw Error(ErrorKind::InvalidArgument, "symbol is not unitary");
  }
}

UnitarySymbol scalarWinding(int k) {
  UnitarySymbol s;
  s.fiberDim = 1;
  s.degree = std::abs(k);
  s.u = [k](double th) { return CMatrix::Constant(1, 1, std::polar(1.0, k * th)).eval(); };
  return s;
}

KProjectionField sampleProjectionField(const std::function<CMatrix(double, double)>& p, int modesPerAxis) {
  if (modesPerAxis < 1) throw Error(ErrorKind::InvalidArgument, "torus needs at least one mode per axis");
  KProjectionField f;
  f.modesPerAxis = modesPerAxis;
  const int n = 2 * modesPerAxis + 1;
  for (int j1 = 0; j1 < n; ++j1)
    for (int j2 = 0; j2 < n; ++j2) {
      CMatrix v = p(2 * M_PI * j1 / n, 2 * M_PI * j2 / n);
      if (f.samples.empty()) f.fiberDim = static_cast<int>(v.rows());
      if (v.rows() != f.fiberDim || v.cols() != f.fiberDim)
        throw Error(ErrorKind::DimensionMismatch, "projection samples differ in size");
      if (maxAbs(CMatrix(v - v.adjoint())) > 1e-8 || maxAbs(CMatrix(v * v - v)) > 1e-8)
        throw Error(ErrorKind::InvalidArgument, "sample is not an orthogonal projection");
      const int r = static_cast<int>(std::lround(v.trace().real()));
      if (!f.samples.empty() && r != f.rank) throw Error(ErrorKind::InvalidArgument, "projection rank varies");
      f.rank = r;
      f.samples.push_back(std::move(v));
    }
  return f;
}

CMatrix bottProjection(double x1, double x2, double mass) {
  const double a = std::sin(x1), b = std::sin(x2), c = mass + std::cos(x1) + std::cos(x2);
  const double r = std::sqrt(a * a + b * b + c * c);
  if (r < 1e-12) throw Error(ErrorKind::InvalidArgument, "Bott family is gapless at this mass");
  CMatrix h(2, 2);
  h << c, cd(a, -b), cd(a, b), -c;
  return 0.5 * (CMatrix::Identity(2, 2) - h / r);
}

SpectralProjection hardyProjection(int modes) {
  if (modes < 1) throw Error(ErrorKind::InvalidArgument, "Hardy projection needs modes >= 1");
  CMatrix basis = CMatrix::Zero(2 * modes + 1, modes + 1);
  for (int i = 0; i <= modes; ++i) basis(modes + i, i) = 1.0;
  return projectionFromBasis(basis);
}

CMatrix circleMultiplication(const UnitarySymbol& u, int modes) {
  const int fd = u.fiberDim, deg = u.degree, samples = 4 * deg + 8;
  std::vector<CMatrix> coeff(2 * deg + 1, CMatrix::Zero(fd, fd));
  for (int j = 0; j < samples; ++j) {
    const double th = 2 * M_PI * j / samples;
    CMatrix v = u.u(th);
    for (int q = -deg; q <= deg; ++q) coeff[q + deg] += std::polar(1.0 / samples, -q * th) * v;
  }
  const int n = 2 * modes + 1;
  CMatrix m = CMatrix::Zero(n * fd, n * fd);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const int q = a - b;
      if (std::abs(q) <= deg) m.block(a * fd, b * fd, fd, fd) = coeff[q + deg];
    }
  return m;
}

OddPairingReport oddPairingReport(const UnitarySymbol& u, const SpectralProjection& hardy) {
  u.validate();
  const Eigen::Index n = hardy.matrix.dim();
  if (n % 2 == 0) throw Error(ErrorKind::DimensionMismatch, "Hardy projection must act on modes -m..m");
  const int modes = static_cast<int>((n - 1) / 2);
  const int fd = u.fiberDim;
  OddPairingReport rep;

  rep.spectralFlow = conjugationFlow(u.u, fd, std::max(u.degree, 1), modes);

  // Finite section of P u P + 1 - P with modes near the truncation edge discarded.
  const CMatrix p = kron(hardy.matrix.toDense(), CMatrix::Identity(fd, fd));
  const CMatrix id = CMatrix::Identity(n * fd, n * fd);
  const CMatrix sec = p * circleMultiplication(u, modes) * p + (id - p);
  RVector mask(n * fd);
  for (int a = 0; a < n; ++a)
    for (int f = 0; f < fd; ++f) mask(a * fd + f) = std::abs(a - modes) <= 0.75 * modes ? 1.0 : 0.0;
  std::optional<long> count = localizedKernelIndex(sec, mask, 0.25);
  if (!count) throw Error(ErrorKind::InconclusiveIndex, "finite-section kernel is not localised");
  rep.kernelCount = -*count;

  std::vector<cd> dets;
  const int samples = 8 * std::max(u.degree, 1) * fd + 16;
  for (int j = 0; j < samples; ++j) dets.push_back(u.u(2 * M_PI * j / samples).determinant());
  rep.winding = phaseWinding(dets);

  if (rep.spectralFlow != rep.kernelCount || rep.spectralFlow != rep.winding)
    throw Error(ErrorKind::MethodDisagreement, "odd pairing: spectral flow " + std::to_string(rep.spectralFlow) +
                                                   ", kernel count " + std::to_string(rep.kernelCount) +
                                                   ", winding " + std::to_string(rep.winding));
  rep.value = rep.spectralFlow;
  return rep;
}

long oddPairing(const UnitarySymbol& u, const SpectralProjection& hardy) { return oddPairingReport(u, hardy).value; }

long latticeChern(const KProjectionField& p) {
  const int n = 2 * p.modesPerAxis + 1;
  if (static_cast<int>(p.samples.size()) != n * n) throw Error(ErrorKind::DimensionMismatch, "field grid size");
  if (p.rank == 0) return 0;
  std::vector<CMatrix> frames;
  for (const CMatrix& s : p.samples) {
    EigenSystem es = eigh(HermitianOperator(s));
    frames.push_back(es.vectors.rightCols(p.rank));
  }
  auto at = [&](int a, int b) -> const CMatrix& { return frames[((a + n) % n) * n + (b + n) % n]; };
  auto link = [&](const CMatrix& x, const CMatrix& y) {
    const cd d = (x.adjoint() * y).determinant();
    if (std::abs(d) < 1e-10) throw Error(ErrorKind::InvalidArgument, "projection field is undersampled");
    return d / std::abs(d);
  };
  double total = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const cd w = link(at(a, b), at(a + 1, b)) * link(at(a + 1, b), at(a + 1, b + 1)) *
                   link(at(a + 1, b + 1), at(a, b + 1)) * link(at(a, b + 1), at(a, b));
      total += std::arg(w);
    }
  return std::lround(total / (2 * M_PI));
}

EvenPairingReport evenPairingReport(const KProjectionField& p) {
  const int k = p.modesPerAxis, n = 2 * k + 1, g = n * n, fd = p.fiberDim;
  if (static_cast<int>(p.samples.size()) != g) throw Error(ErrorKind::DimensionMismatch, "field grid size");
  EvenPairingReport rep;
  rep.chern = latticeChern(p);

  TorusDirac td = torusDiracPlus(k);
  const CMatrix idF = CMatrix::Identity(fd, fd);
  const CMatrix four = kron(torusFourierMatrix(k), idF);
  CMatrix pos = CMatrix::Zero(g * fd, g * fd);
  for (int j = 0; j < g; ++j) pos.block(j * fd, j * fd, fd, fd) = p.samples[j];
  const CMatrix ph = four.adjoint() * pos * four;
  const CMatrix dp = kron(td.dPlus, idF);
  const CMatrix id = CMatrix::Identity(g * fd, g * fd);
  // p D+ p on Ran p, the identity on its complement.
  const CMatrix a = ph * dp * ph + (id - ph);

  const Eigen::Index m = g * fd;
  CMatrix h = CMatrix::Zero(2 * m, 2 * m);
  h.topRightCorner(m, m) = a.adjoint();
  h.bottomLeftCorner(m, m) = a;
  std::vector<int> signs(2 * m, 1);
  std::fill(signs.begin() + m, signs.end(), -1);
  RVector mask(2 * m);
  for (int j = 0; j < g; ++j) {
    const auto [k1, k2] = td.momenta[j];
    const double w = std::max(std::abs(k1), std::abs(k2)) <= 0.75 * k ? 1.0 : 0.0;
    for (int f = 0; f < fd; ++f) mask(j * fd + f) = mask(m + j * fd + f) = w;
  }
  // The genuine mode is an exact zero; its partner at the momentum edge
  // drifts towards zero like 1/K, hence the narrow window.
  rep.index = chiralIndex(HermitianOperator(h), Grading::diagonal(signs), mask, 0.02);
  if (!rep.index.conclusive()) throw Error(ErrorKind::InconclusiveIndex, "even pairing: " + rep.index.note);
  if (*rep.index.value != kEvenPairingSign * rep.chern)
    throw Error(ErrorKind::ChernOracleMismatch, "index " + std::to_string(*rep.index.value) + " vs lattice Chern " +
                                                    std::to_string(rep.chern));
  return rep;
}

long evenPairing(const KProjectionField& p) { return *evenPairingReport(p).index.value; }

CMatrix expClass(const HermitianOperator& t) {
  EigenSystem es = eigh(HermitianOperator(t.toDense()));
  if (es.values.size() && es.values.cwiseAbs().maxCoeff() > 1 + 1e-8)
    throw Error(ErrorKind::NormExceeded, "||T|| exceeds 1");
  CVector phases(es.values.size());
  for (Eigen::Index i = 0; i < es.values.size(); ++i) phases(i) = std::polar(1.0, M_PI * (es.values(i) + 1));
  return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

}  // namespace indexlab
