#include "indexlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace indexlab {

namespace {

SpMat identitySparse(Eigen::Index n) {
  SpMat id(n, n);
  id.setIdentity();
  return id;
}

SpMat pauli(int which) {
  CMatrix m = CMatrix::Zero(2, 2);
  if (which == 1) m(0, 1) = m(1, 0) = 1;
  if (which == 2) {
    m(0, 1) = cd(0, -1);
    m(1, 0) = cd(0, 1);
  }
  if (which == 3) {
    m(0, 0) = 1;
    m(1, 1) = -1;
  }
  return toSparse(m);
}

SpMat diagonalModes(int modes) {
  const int n = 2 * modes + 1;
  SpMat d(n, n);
  std::vector<Triplet> t;
  for (int i = 0; i < n; ++i)
    if (i - modes != 0) t.emplace_back(i, i, cd(i - modes));
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

double smallestAbsEigenvalue(const CMatrix& m) {
  if (m.rows() == 0) return kInf;
  return eigh(HermitianOperator(m)).values.cwiseAbs().minCoeff();
}

}  // namespace

void validateGeometry(const GeometrySpec& g) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        auto need = [](bool ok, const char* what) {
          if (!ok) throw Error(ErrorKind::ValidationError, what);
        };
        if constexpr (std::is_same_v<T, CircleSpec>) need(s.modes >= 4, "circle modes must be >= 4");
        if constexpr (std::is_same_v<T, LineSpec>) {
          need(s.points >= 4, "line points must be >= 4");
          need(s.halfLength > 0, "line halfLength must be positive");
        }
        if constexpr (std::is_same_v<T, CylinderSpec>) {
          need(s.linePoints >= 4 && s.circleModes >= 4, "cylinder points and modes must be >= 4");
          need(s.halfLength > 0, "cylinder halfLength must be positive");
        }
        if constexpr (std::is_same_v<T, TorusSpec>) need(s.modesPerAxis >= 4, "torus modesPerAxis must be >= 4");
        if constexpr (std::is_same_v<T, LandauSpec>) need(s.fockModes >= 4, "fockModes must be >= 4");
      },
      g);
}

// ---------------------------------------------------------------------------
// Circle

std::vector<int> circleModeNumbers(int modes) {
  std::vector<int> n;
  for (int k = -modes; k <= modes; ++k) n.push_back(k);
  return n;
}

HermitianOperator circleDirac(int modes) {
  if (modes < 1) throw Error(ErrorKind::InvalidArgument, "circle needs at least one mode");
  return HermitianOperator(CMatrix(diagonalModes(modes)));
}

GradedCircle gradedCircleDirac(int modes) {
  if (modes < 1) throw Error(ErrorKind::InvalidArgument, "circle needs at least one mode");
  SpMat d = kron(pauli(1), diagonalModes(modes));
  SpMat g = kron(pauli(3), identitySparse(2 * modes + 1));
  return GradedCircle{HermitianOperator(CMatrix(d)), Grading(HermitianOperator(CMatrix(g)))};
}

// ---------------------------------------------------------------------------
// Line

std::vector<double> lineGrid(const LineSpec& spec) {
  std::vector<double> x(spec.points);
  const double h = 2 * spec.halfLength / (spec.points - 1);
  for (int j = 0; j < spec.points; ++j) x[j] = -spec.halfLength + h * j;
  return x;
}

SpMat lineDerivativeSparse(const LineSpec& spec) {
  if (spec.points < 16) throw Error(ErrorKind::InvalidArgument, "line operator needs >= 16 points");
  if (!(spec.halfLength > 0)) throw Error(ErrorKind::InvalidArgument, "halfLength must be positive");
  const double h = 2 * spec.halfLength / (spec.points - 1);
  std::vector<Triplet> t;
  for (int j = 0; j + 1 < spec.points; ++j) {
    t.emplace_back(j, j + 1, cd(0.5 / h));
    t.emplace_back(j + 1, j, cd(-0.5 / h));
  }
  SpMat d(spec.points, spec.points);
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

LineOperator lineOperator(const LineSpec& spec) {
  LineOperator op;
  op.derivative = CMatrix(lineDerivativeSparse(spec));
  op.grid = lineGrid(spec);
  op.step = 2 * spec.halfLength / (spec.points - 1);
  return op;
}

SpMat wilsonTerm(const LineSpec& spec, double r) {
  const double h = 2 * spec.halfLength / (spec.points - 1);
  const double c = r / (2 * h);
  std::vector<Triplet> t;
  for (int j = 0; j < spec.points; ++j) {
    t.emplace_back(j, j, cd(2 * c));
    if (j + 1 < spec.points) {
      t.emplace_back(j, j + 1, cd(-c));
      t.emplace_back(j + 1, j, cd(-c));
    }
  }
  SpMat w(spec.points, spec.points);
  w.setFromTriplets(t.begin(), t.end());
  return w;
}

// ---------------------------------------------------------------------------
// Cylinder

LineSpec cylinderLine(const CylinderSpec& spec) { return LineSpec{spec.halfLength, spec.linePoints}; }

CylinderDirac cylinderDirac(const CylinderSpec& spec, int q, Eigen::Index dimCap) {
  if (q != 0 && q != 1) throw Error(ErrorKind::InvalidArgument, "q must be 0 or 1");
  const Eigen::Index modes = 2 * spec.circleModes + 1;
  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(spec.linePoints) * modes;
  if (dim > dimCap)
    throw Error(ErrorKind::DimensionOverflow, "cylinder dimension " + std::to_string(dim) + " exceeds cap");
  SpMat dr = lineDerivativeSparse(cylinderLine(spec));
  SpMat idLine = identitySparse(spec.linePoints), idModes = identitySparse(modes);
  SpMat dn = diagonalModes(spec.circleModes);
  CylinderDirac out;
  if (q == 0) {
    CMatrix j = CMatrix::Zero(2, 2);
    j(0, 1) = 1;
    j(1, 0) = -1;
    SpMat d = kron(kron(toSparse(j), dr), idModes) + kron(kron(pauli(1), idLine), dn);
    out.dirac = HermitianOperator(d);
    out.grading = Grading(HermitianOperator(SpMat(kron(kron(pauli(3), idLine), idModes))));
  } else {
    SpMat d = kron(kron(pauli(3), SpMat(cd(0, -1) * dr)), idModes) + kron(kron(pauli(1), idLine), dn);
    out.dirac = HermitianOperator(d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Torus

TorusDirac torusDiracPlus(int modesPerAxis) {
  if (modesPerAxis < 1) throw Error(ErrorKind::InvalidArgument, "torus needs at least one mode per axis");
  const int k = modesPerAxis, n = 2 * k + 1, dim = n * n;
  TorusDirac t;
  t.dPlus = CMatrix::Zero(dim, dim);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const int k1 = a - k, k2 = b - k;
      t.momenta.emplace_back(k1, k2);
      t.dPlus(a * n + b, a * n + b) = cd(0, 1) * cd(k1, k2);
    }
  CMatrix full = CMatrix::Zero(2 * dim, 2 * dim);
  full.topRightCorner(dim, dim) = t.dPlus.adjoint();
  full.bottomLeftCorner(dim, dim) = t.dPlus;
  t.full = HermitianOperator(full);
  std::vector<int> signs(2 * dim, 1);
  std::fill(signs.begin() + dim, signs.end(), -1);
  t.grading = Grading::diagonal(signs);
  return t;
}

CMatrix torusFourierMatrix(int modesPerAxis) {
  const int k = modesPerAxis, n = 2 * k + 1, dim = n * n;
  CMatrix f(dim, dim);
  for (int j1 = 0; j1 < n; ++j1)
    for (int j2 = 0; j2 < n; ++j2)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double phase = 2 * M_PI * ((a - k) * j1 + (b - k) * j2) / n;
          f(j1 * n + j2, a * n + b) = std::polar(1.0 / n, phase);
        }
  return f;
}

// ---------------------------------------------------------------------------
// Trigonometric symbols and the Landau plane

cd TrigPolynomial::operator()(double theta) const {
  cd s = 0.0;
  for (const auto& [k, c] : coeffs) s += c * std::polar(1.0, k * theta);
  return s;
}

int TrigPolynomial::degree() const {
  int d = 0;
  for (const auto& [k, c] : coeffs)
    if (c != cd(0.0)) d = std::max(d, std::abs(k));
  return d;
}

TrigPolynomial TrigPolynomial::conjugate() const {
  TrigPolynomial out;
  for (const auto& [k, c] : coeffs) out.coeffs[-k] = std::conj(c);
  return out;
}

TrigPolynomial TrigPolynomial::monomial(int k, cd c) {
  TrigPolynomial p;
  p.coeffs[k] = c;
  return p;
}

namespace {

// Radial profile of |l, m>: psi = e^{i(m-l)theta} R(r).
struct RadialState {
  int l, m;
  std::vector<double> logCoeff;
  std::vector<int> sign, power;
  RadialState(int l_, int m_) : l(l_), m(m_) {
    const double norm = -0.5 * (std::log(M_PI) + std::lgamma(l + 1.0) + std::lgamma(m + 1.0));
    for (int j = 0; j <= std::min(l, m); ++j) {
      logCoeff.push_back(std::lgamma(l + 1.0) - std::lgamma(j + 1.0) - std::lgamma(l - j + 1.0) +
                         std::lgamma(m + 1.0) - std::lgamma(m - j + 1.0) + norm);
      sign.push_back(j % 2 == 0 ? 1 : -1);
      power.push_back(m + l - 2 * j);
    }
  }
  // R(r) * e^{+r^2/2} * r^{-shift}, with shift applied in the exponent to avoid overflow.
  double value(double r) const {
    double s = 0.0;
    for (std::size_t j = 0; j < logCoeff.size(); ++j) {
      if (power[j] == 0) s += sign[j] * std::exp(logCoeff[j] - 0.5 * r * r);
      else if (r > 0) s += sign[j] * std::exp(logCoeff[j] + power[j] * std::log(r) - 0.5 * r * r);
    }
    return s;
  }
};

double radialOverlap(const RadialState& a, const RadialState& b) {
  auto f = [&](double r) { return 2 * M_PI * a.value(r) * b.value(r) * r; };
  const double peak = std::sqrt(0.5 * (a.m + a.l + b.m + b.l) + 0.5);
  const double lo = std::max(0.0, peak - 14.0), hi = peak + 14.0;
  auto absf = [&](double r) { return std::abs(f(r)); };
  double total = 0.0, err = 0.0, mass = 0.0;
  double cuts[] = {0.0, lo, peak, hi};
  for (int s = 0; s < 3; ++s) {
    if (cuts[s + 1] <= cuts[s]) continue;
    double e = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, cuts[s], cuts[s + 1], 15, 1e-13, &e);
    err += e;
    mass += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(absf, cuts[s], cuts[s + 1], 15, 1e-13);
  }
  // Error relative to the integral of |f|, which is O(1) for normalised states.
  if (!(err <= 1e-8 * std::max(1.0, mass)) || !std::isfinite(total)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", err);
    throw Error(ErrorKind::QuadratureFailure, std::string("radial overlap quadrature error ") + buf);
  }
  return total;
}

}  // namespace

CMatrix landauMultiplication(const TrigPolynomial& f, const LandauBasis& out, const LandauBasis& in) {
  CMatrix m = CMatrix::Zero(out.dim(), in.dim());
  std::vector<RadialState> outStates, inStates;
  for (int l = 0; l < out.levels; ++l)
    for (int mm = 0; mm < out.fockModes; ++mm) outStates.emplace_back(l, mm);
  for (int l = 0; l < in.levels; ++l)
    for (int mm = 0; mm < in.fockModes; ++mm) inStates.emplace_back(l, mm);
  for (const auto& [k, c] : f.coeffs) {
    if (c == cd(0.0)) continue;
    for (int l = 0; l < in.levels; ++l)
      for (int mm = 0; mm < in.fockModes; ++mm)
        for (int lp = 0; lp < out.levels; ++lp) {
          const int mp = mm - l + k + lp;  // angular momentum selection
          if (mp < 0 || mp >= out.fockModes) continue;
          const double v = radialOverlap(outStates[out.index(lp, mp)], inStates[in.index(l, mm)]);
          m(out.index(lp, mp), in.index(l, mm)) += c * v;
        }
  }
  return m;
}

CMatrix landauSymbolMatrix(const TrigPolynomial& f, int fockModes) {
  if (fockModes < 1) throw Error(ErrorKind::InvalidArgument, "fockModes must be positive");
  LandauBasis b{1, fockModes};
  return landauMultiplication(f, b, b);
}

LandauDirac landauDirac(int fockModes, int topLevel) {
  if (topLevel < 1) throw Error(ErrorKind::InvalidArgument, "Landau Dirac needs at least one excited level");
  LandauDirac d;
  d.plus = LandauBasis{topLevel + 1, fockModes};
  d.minus = LandauBasis{topLevel, fockModes};
  d.dPlus = CMatrix::Zero(d.minus.dim(), d.plus.dim());
  for (int l = 1; l <= topLevel; ++l)
    for (int m = 0; m < fockModes; ++m) d.dPlus(d.minus.index(l - 1, m), d.plus.index(l, m)) = std::sqrt(2.0 * l);
  const Eigen::Index np = d.plus.dim(), nm = d.minus.dim();
  CMatrix full = CMatrix::Zero(np + nm, np + nm);
  full.block(0, np, np, nm) = d.dPlus.adjoint();
  full.block(np, 0, nm, np) = d.dPlus;
  d.full = HermitianOperator(full);
  std::vector<int> signs(np + nm, 1);
  std::fill(signs.begin() + np, signs.end(), -1);
  d.grading = Grading::diagonal(signs);
  return d;
}

// ---------------------------------------------------------------------------
// Collar cutoff and potentials

double CutoffRho::operator()(double r) const {
  const double s = std::clamp((r - transitionStart) / (transitionEnd - transitionStart), 0.0, 1.0);
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

CutoffRho cutoffRho(double transitionStart, double transitionEnd) {
  if (!(transitionStart < transitionEnd)) throw Error(ErrorKind::InvalidArgument, "collar transition is empty");
  return CutoffRho{transitionStart, transitionEnd};
}

CMatrix fourierAssemble(const std::function<CMatrix(double)>& symbol, int fiberDim, int modes, int angularDegree) {
  const int samples = std::max(4 * angularDegree + 4, 16);
  std::vector<CMatrix> coeff(2 * angularDegree + 1, CMatrix::Zero(fiberDim, fiberDim));
  for (int j = 0; j < samples; ++j) {
    const double th = 2 * M_PI * j / samples;
    CMatrix s = symbol(th);
    if (s.rows() != fiberDim || s.cols() != fiberDim) throw Error(ErrorKind::DimensionMismatch, "symbol fiber size");
    for (int q = -angularDegree; q <= angularDegree; ++q) coeff[q + angularDegree] += s * std::polar(1.0 / samples, -q * th);
  }
  const int n = 2 * modes + 1;
  CMatrix out = CMatrix::Zero(n * fiberDim, n * fiberDim);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const int q = a - b;
      if (std::abs(q) > angularDegree) continue;
      out.block(a * fiberDim, b * fiberDim, fiberDim, fiberDim) = coeff[q + angularDegree];
    }
  return out;
}

namespace {

CMatrix offDiagonalUnitary(int k, double theta) {
  CMatrix f = CMatrix::Zero(2, 2);
  f(1, 0) = std::polar(1.0, k * theta);
  f(0, 1) = std::polar(1.0, -k * theta);
  return f;
}

CMatrix pauli3() {
  CMatrix s = CMatrix::Zero(2, 2);
  s(0, 0) = 1;
  s(1, 1) = -1;
  return s;
}

}  // namespace

PotentialField samplePotential(const PotentialSpec& spec, const GeometrySpec& geom) {
  PotentialField field;
  field.fiberDim = spec.fiberDim;
  const int fd = spec.fiberDim;
  auto ident = CMatrix::Identity(fd, fd);

  if (const auto* line = std::get_if<LineSpec>(&geom)) {
    field.positions = lineGrid(*line);
    const double hold = 0.8 * line->halfLength;
    std::function<CMatrix(double)> s;
    if (const auto* sp = std::get_if<ScalarProfile>(&spec.kind)) {
      const auto shape = sp->shape;
      const double level = sp->level;
      s = [=](double x) -> CMatrix {
        return CMatrix(ident * (shape == ScalarProfile::Shape::tanh ? level * std::tanh(x) : level));
      };
    } else if (const auto* mp = std::get_if<MatrixPathPotential>(&spec.kind)) {
      OperatorPath path = mp->path;
      s = [path](double x) { return path.at(std::clamp(x, path.t0(), path.t1())).toDense(); };
    } else {
      throw Error(ErrorKind::InvalidArgument, "potential kind is not defined on a line");
    }
    field.symbol = [s, hold](double x, double) { return s(std::clamp(x, -hold, hold)); };
    const int n = line->points;
    std::vector<Triplet> t;
    field.exteriorMargin = kInf;
    CMatrix prev;
    const double h = 2 * line->halfLength / (n - 1);
    for (int j = 0; j < n; ++j) {
      CMatrix sj = field.symbol(field.positions[j], 0.0);
      if (sj.rows() != fd || sj.cols() != fd) throw Error(ErrorKind::DimensionMismatch, "potential fiber size");
      for (int a = 0; a < fd; ++a)
        for (int b = 0; b < fd; ++b)
          if (sj(a, b) != cd(0.0)) t.emplace_back(j * fd + a, j * fd + b, sj(a, b));
      const bool ext = std::abs(field.positions[j]) >= spec.exteriorBand;
      field.exterior.push_back(ext);
      if (ext) field.exteriorMargin = std::min(field.exteriorMargin, smallestAbsEigenvalue(sj));
      if (j > 0) field.differenceQuotient = std::max(field.differenceQuotient, opNorm(sj - prev) / h);
      prev = sj;
    }
    SpMat a(n * fd, n * fd);
    a.setFromTriplets(t.begin(), t.end());
    field.assembled = HermitianOperator(a);
  } else if (const auto* cyl = std::get_if<CylinderSpec>(&geom)) {
    LineSpec ls = cylinderLine(*cyl);
    field.positions = lineGrid(ls);
    int degree = 0;
    if (const auto* hh = std::get_if<HedgehogPotential>(&spec.kind)) {
      if (fd != 2) throw Error(ErrorKind::DimensionMismatch, "hedgehog potential has fiber dimension 2");
      const CMatrix cap = hh->cap.value_or(pauli3());
      const int k = hh->k;
      const CutoffRho rho = spec.rho;
      degree = std::abs(k);
      field.symbol = [=](double r, double th) -> CMatrix {
        const double p = rho(r);
        return CMatrix(p * cap + (1 - p) * offDiagonalUnitary(k, th));
      };
    } else if (const auto* cp = std::get_if<CollarPotential>(&spec.kind)) {
      const CutoffRho rho = spec.rho;
      auto boundary = cp->boundary;
      CMatrix ref = cp->reference;
      if (ref.rows() != fd) throw Error(ErrorKind::DimensionMismatch, "reference operator fiber size");
      degree = cp->angularDegree;
      field.symbol = [=](double r, double th) -> CMatrix {
        const double p = rho(r);
        return CMatrix(p * ref + (1 - p) * boundary(th));
      };
    } else if (const auto* sp = std::get_if<ScalarProfile>(&spec.kind)) {
      const auto shape = sp->shape;
      const double level = sp->level;
      field.symbol = [=](double r, double) -> CMatrix {
        return CMatrix(ident * (shape == ScalarProfile::Shape::tanh ? level * std::tanh(r) : level));
      };
    } else {
      throw Error(ErrorKind::InvalidArgument, "potential kind is not defined on a cylinder");
    }
    field.angularSamples = std::max(4 * degree + 4, 16);
    const int n = cyl->linePoints, modes = 2 * cyl->circleModes + 1;
    const Eigen::Index block = static_cast<Eigen::Index>(modes) * fd;
    const double h = 2 * cyl->halfLength / (n - 1);
    std::vector<Triplet> t;
    field.exteriorMargin = kInf;
    for (int j = 0; j < n; ++j) {
      const double r = field.positions[j];
      CMatrix b = fourierAssemble([&](double th) { return field.symbol(r, th); }, fd, cyl->circleModes, degree);
      for (Eigen::Index a = 0; a < block; ++a)
        for (Eigen::Index c = 0; c < block; ++c)
          if (std::abs(b(a, c)) > 1e-15) t.emplace_back(static_cast<int>(j * block + a), static_cast<int>(j * block + c), b(a, c));
      const bool ext = std::abs(r) >= spec.exteriorBand;
      field.exterior.push_back(ext);
      for (int s = 0; s < field.angularSamples; ++s) {
        const double th = 2 * M_PI * s / field.angularSamples;
        CMatrix sj = field.symbol(r, th);
        if (ext) field.exteriorMargin = std::min(field.exteriorMargin, smallestAbsEigenvalue(sj));
        if (j > 0)
          field.differenceQuotient =
              std::max(field.differenceQuotient, opNorm(CMatrix(sj - field.symbol(field.positions[j - 1], th))) / h);
      }
    }
    SpMat a(n * block, n * block);
    a.setFromTriplets(t.begin(), t.end());
    field.assembled = HermitianOperator(a);
  } else {
    throw Error(ErrorKind::InvalidArgument, "potentials are sampled on line and cylinder geometries only");
  }
  if (field.exteriorMargin < 1e-6)
    throw Error(ErrorKind::NotInvertibleOutsideCompact,
                "potential margin " + std::to_string(field.exteriorMargin) + " on exterior sites");
  return field;
}

HermitianOperator liftToSpinor(const HermitianOperator& op, int spinorDim) {
  if (spinorDim == 1) return op;
  return HermitianOperator(SpMat(kron(identitySparse(spinorDim), op.toSparse())));
}

RVector lineInteriorMask(const LineSpec& spec, int spinorDim, int fiberDim) {
  std::vector<double> x = lineGrid(spec);
  const Eigen::Index per = static_cast<Eigen::Index>(spec.points) * fiberDim;
  RVector mask(spinorDim * per);
  for (int s = 0; s < spinorDim; ++s)
    for (int j = 0; j < spec.points; ++j)
      for (int f = 0; f < fiberDim; ++f)
        mask(s * per + j * fiberDim + f) = std::abs(x[j]) <= 0.8 * spec.halfLength ? 1.0 : 0.0;
  return mask;
}

RVector cylinderInteriorMask(const CylinderSpec& spec, int spinorDim, int fiberDim) {
  std::vector<double> x = lineGrid(cylinderLine(spec));
  const int modes = 2 * spec.circleModes + 1;
  const Eigen::Index per = static_cast<Eigen::Index>(spec.linePoints) * modes * fiberDim;
  RVector mask(spinorDim * per);
  for (int s = 0; s < spinorDim; ++s)
    for (int j = 0; j < spec.linePoints; ++j)
      for (int a = 0; a < modes; ++a)
        for (int f = 0; f < fiberDim; ++f) {
          const bool in = std::abs(x[j]) <= 0.8 * spec.halfLength && std::abs(a - spec.circleModes) <= 0.75 * spec.circleModes;
          mask(s * per + (static_cast<Eigen::Index>(j) * modes + a) * fiberDim + f) = in ? 1.0 : 0.0;
        }
  return mask;
}

}  // namespace indexlab
