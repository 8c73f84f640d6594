#include <cmath>

#include "doctest.h"
#include "indexlab/geometry.hpp"
#include "support.hpp"

using namespace indexlab;

namespace {

CMatrix denseKron(const CMatrix& a, const CMatrix& b) { return kron(a, b); }

double closedFormShiftWeight(int m) {
  return std::exp(std::lgamma(m + 1.5) - 0.5 * (std::lgamma(m + 1.0) + std::lgamma(m + 2.0)));
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("circleDirac examples") {
    CMatrix d = circleDirac(2).dense();
    CHECK(d.rows() == 5);
    for (int i = 0; i < 5; ++i) CHECK(d(i, i).real() == doctest::Approx(i - 2));
    CHECK(maxAbs(CMatrix(d - CMatrix(d.diagonal().asDiagonal()))) == 0.0);
    EigenSystem a = eigh(circleDirac(6)), b = eigh(circleDirac(6));
    CHECK(maxAbs(CMatrix(a.vectors - b.vectors)) == 0.0);
    for (int i = 0; i < 13; ++i) CHECK(a.values(i) == doctest::Approx(i - 6));
  }

  TEST_CASE("gradedCircleDirac examples") {
    GradedCircle g = gradedCircleDirac(1);
    CHECK(g.dirac.dim() == 6);
    GradedCircle g5 = gradedCircleDirac(5);
    CHECK(checkOddness(g5.dirac, g5.grading) <= 1e-12);
    RVector ev = eigh(g5.dirac).values;
    std::vector<double> expect;
    for (int n = -5; n <= 5; ++n) {
      expect.push_back(std::abs(n));
      expect.push_back(-std::abs(n));
    }
    std::sort(expect.begin(), expect.end());
    for (int i = 0; i < ev.size(); ++i) CHECK(ev(i) == doctest::Approx(expect[i]).epsilon(1e-12));
  }

  TEST_CASE("lineOperator is antisymmetric and consistent") {
    LineSpec spec{5.0, 64};
    LineOperator op = lineOperator(spec);
    CHECK(maxAbs(CMatrix(op.derivative + op.derivative.transpose())) == 0.0);
    CVector ones = CVector::Ones(spec.points);
    CVector d1 = op.derivative * ones;
    for (int j = 1; j + 1 < spec.points; ++j) CHECK(std::abs(d1(j)) < 1e-14);
    CHECK_THROWS_AS(lineOperator(LineSpec{1.0, 8}), Error);
  }

  TEST_CASE("central difference error is second order") {
    auto maxErr = [](int points) {
      LineSpec spec{3.0, points};
      LineOperator op = lineOperator(spec);
      const double L = spec.halfLength;
      CVector f(points);
      for (int j = 0; j < points; ++j) f(j) = std::sin(M_PI * op.grid[j] / L);
      CVector df = op.derivative * f;
      double e = 0.0;
      for (int j = 1; j + 1 < points; ++j)
        e = std::max(e, std::abs(df(j) - (M_PI / L) * std::cos(M_PI * op.grid[j] / L)));
      return e;
    };
    const double e1 = maxErr(101), e2 = maxErr(201);
    // Taylor remainder: error ~ h^2 f'''/6.
    const double h = 6.0 / 100;
    CHECK(e1 <= std::pow(M_PI / 3.0, 3) * h * h / 6 * 1.01);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  }

  TEST_CASE("wilson term is positive and vanishes on constants interiorly") {
    LineSpec spec{4.0, 40};
    CMatrix w = CMatrix(wilsonTerm(spec, 1.0));
    CHECK(eigh(HermitianOperator(w)).values.minCoeff() >= -1e-12);
    CVector c = w * CVector::Ones(spec.points);
    for (int j = 1; j + 1 < spec.points; ++j) CHECK(std::abs(c(j)) < 1e-12);
  }

  TEST_CASE("cylinderDirac q=0 squares to a block-diagonal Laplacian") {
    CylinderSpec spec{3.0, 20, 4};
    CylinderDirac cd0 = cylinderDirac(spec, 0);
    REQUIRE(cd0.grading.has_value());
    CHECK(checkOddness(cd0.dirac, *cd0.grading) <= 1e-12);
    CMatrix d = cd0.dirac.toDense();
    CMatrix sq = d * d;
    const Eigen::Index half = d.rows() / 2;
    CHECK(maxAbs(CMatrix(sq.topRightCorner(half, half))) < 1e-12);
    CMatrix dr = lineOperator(cylinderLine(spec)).derivative;
    CMatrix dn = circleDirac(spec.circleModes).dense();
    CMatrix idr = CMatrix::Identity(dr.rows(), dr.rows()), idn = CMatrix::Identity(dn.rows(), dn.rows());
    CMatrix a = denseKron(dr, idn) + denseKron(idr, dn);
    CMatrix b = -denseKron(dr, idn) + denseKron(idr, dn);
    CHECK(maxAbs(CMatrix(sq.topLeftCorner(half, half) - a * b)) < 1e-10);
    CHECK(maxAbs(CMatrix(sq.topLeftCorner(half, half) - (denseKron(-dr * dr, idn) + denseKron(idr, dn * dn)))) < 1e-10);
  }

  TEST_CASE("cylinderDirac q=1 cross terms cancel in the square") {
    CylinderSpec spec{3.0, 20, 4};
    CMatrix d = cylinderDirac(spec, 1).dirac.toDense();
    CMatrix dr = lineOperator(cylinderLine(spec)).derivative;
    CMatrix dn = circleDirac(spec.circleModes).dense();
    CMatrix idr = CMatrix::Identity(dr.rows(), dr.rows()), idn = CMatrix::Identity(dn.rows(), dn.rows());
    CMatrix expect = denseKron(CMatrix::Identity(2, 2), CMatrix(denseKron(-dr * dr, idn) + denseKron(idr, dn * dn)));
    CHECK(maxAbs(CMatrix(d * d - expect)) < 1e-10);
    CHECK(cylinderDirac(spec, 1).dirac.hermiticityDefect() <= 1e-14);
  }

  TEST_CASE("cylinderDirac product form on r-profiles") {
    CylinderSpec spec{4.0, 40, 5};
    CylinderDirac c = cylinderDirac(spec, 0);
    LineOperator line = lineOperator(cylinderLine(spec));
    const int modes = 2 * spec.circleModes + 1, n = spec.linePoints;
    for (int mode : {0, 2, 5, 7, 10}) {
      const double lambda = mode - spec.circleModes;
      CVector f(n);
      for (int j = 0; j < n; ++j) f(j) = std::exp(-line.grid[j] * line.grid[j]);
      CVector v = CVector::Zero(2 * n * modes);
      for (int j = 0; j < n; ++j) v(n * modes + j * modes + mode) = f(j);
      CVector out = c.dirac.apply(v);
      CVector expect = line.derivative * f + lambda * f;
      for (int j = 0; j < n; ++j) CHECK(std::abs(out(j * modes + mode) - expect(j)) < 1e-12);
      CHECK(out.tail(n * modes).norm() < 1e-12);
    }
  }

  TEST_CASE("constant-in-r vectors see the boundary spectrum") {
    CylinderSpec spec{6.0, 60, 4};
    CylinderDirac c = cylinderDirac(spec, 0);
    const int modes = 9, n = spec.linePoints;
    for (int mode = 0; mode < modes; ++mode) {
      CVector v = CVector::Zero(2 * n * modes);
      for (int j = 0; j < n; ++j) {
        v(j * modes + mode) = 1.0;
        v(n * modes + j * modes + mode) = 1.0;
      }
      CVector out = c.dirac.apply(v);
      for (int j = 1; j + 1 < n; ++j) CHECK(std::abs(out(j * modes + mode) - double(mode - 4)) < 1e-12);
    }
  }

  TEST_CASE("cylinder dimension cap") {
    CHECK_THROWS_AS(cylinderDirac(CylinderSpec{12.0, 160, 12}, 0, 1000), Error);
    CHECK(cylinderDirac(CylinderSpec{12.0, 160, 12}, 0).dirac.dim() == 8000);
  }

  TEST_CASE("torusDiracPlus examples") {
    TorusDirac t = torusDiracPlus(4);
    CHECK(numericalKernel(t.dPlus, 1e-6).dim == 1);
    CHECK(checkOddness(t.full, t.grading) == 0.0);
    RVector ev = eigh(HermitianOperator(CMatrix(t.full.dense() * t.full.dense()))).values;
    std::vector<double> expect;
    for (auto [k1, k2] : t.momenta) {
      expect.push_back(k1 * k1 + k2 * k2);
      expect.push_back(k1 * k1 + k2 * k2);
    }
    std::sort(expect.begin(), expect.end());
    for (int i = 0; i < ev.size(); ++i) CHECK(ev(i) == doctest::Approx(expect[i]).epsilon(1e-10));
    CMatrix f = torusFourierMatrix(4);
    CHECK(maxAbs(CMatrix(f.adjoint() * f - CMatrix::Identity(f.rows(), f.rows()))) < 1e-12);
  }

  TEST_CASE("landauSymbolMatrix examples") {
    const int m = 24;
    CMatrix one = landauSymbolMatrix(TrigPolynomial::monomial(0), m);
    CHECK(maxAbs(CMatrix(one - CMatrix::Identity(m, m))) < 1e-10);

    CMatrix s = landauSymbolMatrix(TrigPolynomial::monomial(1), m);
    double prev = 0.0;
    for (int i = 0; i + 1 < m; ++i) {
      const double w = s(i + 1, i).real();
      CHECK(w == doctest::Approx(closedFormShiftWeight(i)).epsilon(1e-10));
      CHECK(w > prev);
      CHECK(w < 1.0);
      prev = w;
    }
    double offBand = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j + 1) offBand = std::max(offBand, std::abs(s(i, j)));
    CHECK(offBand == 0.0);

    CMatrix sd = landauSymbolMatrix(TrigPolynomial::monomial(-1), m);
    CHECK(maxAbs(CMatrix(sd - s.adjoint())) < 1e-12);
  }

  TEST_CASE("landau matrices respect conjugation of the symbol") {
    TrigPolynomial f;
    f.coeffs[0] = cd(0.3, 0.1);
    f.coeffs[2] = cd(-0.5, 0.7);
    f.coeffs[-1] = cd(1.1, 0.0);
    CMatrix a = landauSymbolMatrix(f, 20), b = landauSymbolMatrix(f.conjugate(), 20);
    CHECK(maxAbs(CMatrix(a.adjoint() - b)) < 1e-10);
    LandauBasis lb{3, 16};
    CMatrix c = landauMultiplication(f, lb, lb), d = landauMultiplication(f.conjugate(), lb, lb);
    CHECK(maxAbs(CMatrix(c.adjoint() - d)) < 1e-10);
  }

  TEST_CASE("higher Landau levels are orthonormal") {
    LandauBasis lb{4, 30};
    CMatrix id = landauMultiplication(TrigPolynomial::monomial(0), lb, lb);
    CHECK(maxAbs(CMatrix(id - CMatrix::Identity(lb.dim(), lb.dim()))) < 1e-9);
  }

  TEST_CASE("landauDirac kernel is the lowest level") {
    LandauDirac d = landauDirac(10, 2);
    CHECK(numericalKernel(d.dPlus, 1e-8).dim == 10);
    CHECK(numericalKernel(CMatrix(d.dPlus.adjoint()), 1e-8).dim == 0);
    CHECK(checkOddness(d.full, d.grading) == 0.0);
    RVector ev = eigh(d.full).values;
    for (int i = 0; i < ev.size(); ++i) {
      const double l = ev(i) * ev(i) / 2;
      CHECK(std::abs(l - std::round(l)) < 1e-10);
    }
  }

  TEST_CASE("cutoffRho examples") {
    CutoffRho r = cutoffRho(-3.0, 1.0);
    CHECK(r(-4.0) == 1.0);
    CHECK(r(2.0) == 0.0);
    CHECK(r(-1.0) == doctest::Approx(0.5));
    double prev = 1.0;
    for (double x = -4; x <= 2; x += 0.01) {
      CHECK(r(x) <= prev + 1e-15);
      CHECK(r(x) >= 0.0);
      prev = r(x);
    }
    CHECK_THROWS_AS(cutoffRho(1.0, 1.0), Error);
  }

  TEST_CASE("samplePotential on the line") {
    PotentialSpec tanhSpec{ScalarProfile{ScalarProfile::Shape::tanh, 1.0}, 1, 1.0};
    LineSpec line{20.0, 400};
    PotentialField f = samplePotential(tanhSpec, line);
    for (int j = 0; j < 400; j += 37) {
      const double x = f.positions[j];
      if (std::abs(x) <= 16.0) CHECK(f.assembled.toDense()(j, j).real() == doctest::Approx(std::tanh(x)));
    }
    CHECK(f.exteriorMargin >= std::tanh(1.0) - 1e-12);

    PotentialSpec constSpec{ScalarProfile{ScalarProfile::Shape::constant, 0.7}, 2, 1.0};
    PotentialField c = samplePotential(constSpec, line);
    CHECK(maxAbs(CMatrix(c.assembled.toDense() - 0.7 * CMatrix::Identity(800, 800))) == 0.0);
    CHECK(c.differenceQuotient == 0.0);

    PotentialSpec zero{ScalarProfile{ScalarProfile::Shape::constant, 0.0}, 1, 1.0};
    CHECK_THROWS_AS(samplePotential(zero, line), Error);
  }

  TEST_CASE("hedgehog on the cylinder winds at the hypersurface") {
    CylinderSpec cyl{12.0, 40, 6};
    for (int k : {-2, 1, 3}) {
      PotentialSpec spec{HedgehogPotential{k, std::nullopt}, 2, 7.0};
      PotentialField f = samplePotential(spec, cyl);
      std::vector<cd> loop;
      for (int j = 0; j < 128; ++j) loop.push_back(f.symbol(0.0, 2 * M_PI * j / 128)(1, 0));
      CHECK(phaseWinding(loop) == k);
      CHECK(f.exteriorMargin >= 0.9);
      // Lower-left block shifts circle modes by k with weight (1 - rho).
      const int modes = 13;
      const int site = 35;
      const double w = 1 - spec.rho(f.positions[site]);
      const Eigen::Index base = static_cast<Eigen::Index>(site) * modes * 2;
      CMatrix a = f.assembled.toDense();
      const int n = 6;
      if (n + k < modes && n + k >= 0)
        CHECK(std::abs(a(base + (n + k) * 2 + 1, base + n * 2 + 0) - cd(w)) < 1e-12);
    }
  }
}
