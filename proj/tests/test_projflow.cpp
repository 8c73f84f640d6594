#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "indexlab/projflow.hpp"
#include "support.hpp"

using namespace indexlab;
using testsupport::randomHermitian;
using testsupport::randomMatrix;
using testsupport::randomUnitary;

namespace {

CMatrix diag2(double a, double b) {
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// Odd projection for diag(1,-1)-grading with off-diagonal block u (1x1).
SpectralProjection oddProjection(cd u) {
  CMatrix f = CMatrix::Zero(2, 2);
  f(1, 0) = u;
  f(0, 1) = std::conj(u);
  return makeProjection(CMatrix(0.5 * (f + CMatrix::Identity(2, 2))));
}

ProjectionLoop scalarLoop(int winding, int samples) {
  std::vector<SpectralProjection> ps;
  for (int k = 0; k < samples; ++k) ps.push_back(oddProjection(std::polar(1.0, 2 * M_PI * winding * k / samples)));
  return makeProjectionLoop(std::move(ps), Grading::diagonal({1, -1}));
}

SpectralProjection randomProjection(std::mt19937_64& rng, int n, int rank) {
  CMatrix u = randomUnitary(rng, n);
  return projectionFromBasis(u.leftCols(rank));
}

OperatorPath scalarPath(std::function<double(double)> f, double t0, double t1, int samples) {
  return OperatorPath::fromGenerator(PathDomain::Interval, t0, t1, samples, [f](double t) {
    return HermitianOperator(CMatrix(CMatrix::Constant(1, 1, f(t))));
  });
}

// Independent flow oracle for paths with analytically known eigenvalues:
// count sign changes of each branch.
long branchCrossings(const std::vector<std::function<double(double)>>& branches, double t0, double t1) {
  long total = 0;
  for (const auto& b : branches) {
    const int steps = 4000;
    for (int k = 0; k < steps; ++k) {
      const double a = b(t0 + (t1 - t0) * k / steps), c = b(t0 + (t1 - t0) * (k + 1) / steps);
      if (a < 0 && c >= 0) ++total;
      if (a >= 0 && c < 0) --total;
    }
  }
  return total;
}

// Invertible Hermitian endpoint: |eigenvalues| in [0.5, 2], random signs.
CMatrix gappedHermitian(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> mag(0.5, 2.0);
  std::bernoulli_distribution sign(0.5);
  std::vector<double> evs;
  for (int i = 0; i < n; ++i) evs.push_back(sign(rng) ? mag(rng) : -mag(rng));
  return testsupport::hermitianWithSpectrum(rng, evs);
}

// Random path between gapped endpoints with a smooth random bump.
OperatorPath randomPath(std::mt19937_64& rng, int n, int samples) {
  CMatrix a = gappedHermitian(rng, n), b = gappedHermitian(rng, n), c = randomHermitian(rng, n);
  return OperatorPath::fromGenerator(PathDomain::Interval, 0, 1, samples, [a, b, c](double t) {
    return HermitianOperator(CMatrix((1 - t) * a + t * b + std::sin(M_PI * t) * c));
  });
}

}  // namespace

TEST_SUITE("projflow") {
  TEST_CASE("relind0 examples") {
    SpectralProjection p = makeProjection(diag2(1, 0));
    SpectralProjection q = makeProjection(diag2(1, 1));
    CHECK(relind0(p, p) == 0);
    CHECK(relind0(p, q) == -1);
    CHECK(relind0(q, p) == 1);
  }

  TEST_CASE("projectionToUnitaryBlock examples") {
    Grading g = Grading::diagonal({1, -1});
    CMatrix a = 0.5 * CMatrix::Ones(2, 2);
    CMatrix u = projectionToUnitaryBlock(makeProjection(a), g);
    CHECK(std::abs(u(0, 0) - cd(1)) < 1e-12);

    CMatrix b(2, 2);
    b << 0.5, cd(0, -0.5), cd(0, 0.5), 0.5;
    CMatrix ub = projectionToUnitaryBlock(makeProjection(b), g);
    CHECK(std::abs(ub(0, 0) - cd(0, 1)) < 1e-12);

    CHECK_THROWS_AS(projectionToUnitaryBlock(makeProjection(diag2(1, 0)), g), Error);

    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
      const int half = 4;
      CMatrix w = randomUnitary(rng, half);
      CMatrix f = CMatrix::Zero(2 * half, 2 * half);
      f.bottomLeftCorner(half, half) = w;
      f.topRightCorner(half, half) = w.adjoint();
      SpectralProjection p = makeProjection(CMatrix(0.5 * (f + CMatrix::Identity(2 * half, 2 * half))));
      std::vector<int> signs(2 * half, 1);
      for (int i = half; i < 2 * half; ++i) signs[i] = -1;
      CMatrix up = projectionToUnitaryBlock(p, Grading::diagonal(signs));
      CHECK(maxAbs(up * up.adjoint() - CMatrix::Identity(half, half)) < 1e-8);
      CHECK(maxAbs(up - w) < 1e-8);
    }
  }

  TEST_CASE("relind1 examples") {
    ProjectionLoop one = scalarLoop(0, 64);
    CHECK(relind1(one, one) == 0);
    CHECK(relind1(scalarLoop(1, 64), one) == 1);
    CHECK(relind1(scalarLoop(-2, 64), one) == -2);
    CHECK(relind1(one, scalarLoop(3, 64)) == -3);
    CHECK_THROWS_AS(relind1(scalarLoop(5, 8), one), Error);
  }

  TEST_CASE("relind0 is additive over random triples") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 6;
      std::uniform_int_distribution<int> r(0, n);
      SpectralProjection p = randomProjection(rng, n, r(rng));
      SpectralProjection q = randomProjection(rng, n, r(rng));
      SpectralProjection s = randomProjection(rng, n, r(rng));
      CHECK(relind0(p, s) == relind0(p, q) + relind0(q, s));
    }
  }

  TEST_CASE("relind1 is additive over compatible loops") {
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b) {
        ProjectionLoop la = scalarLoop(a, 96), lb = scalarLoop(b, 96), lc = scalarLoop(a - b + 1, 96);
        CHECK(relind1(la, lc) == relind1(la, lb) + relind1(lb, lc));
      }
  }

  TEST_CASE("relind0 is constant along a continuous family") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 5; ++trial) {
      const int n = 5;
      CMatrix x = randomHermitian(rng, n), y = randomHermitian(rng, n);
      SpectralProjection p0 = randomProjection(rng, n, 2);
      SpectralProjection q0 = randomProjection(rng, n, 3);
      const int expected = relind0(p0, q0);
      for (int k = 0; k < 8; ++k) {
        const double s = k / 7.0;
        CMatrix u = CMatrix(cd(0, 1) * s * x).exp();
        CMatrix v = CMatrix(cd(0, 1) * s * y).exp();
        SpectralProjection p = makeProjection(CMatrix(u * p0.matrix.dense() * u.adjoint()));
        SpectralProjection q = makeProjection(CMatrix(v * q0.matrix.dense() * v.adjoint()));
        CHECK(relind0(p, q) == expected);
      }
    }
  }

  TEST_CASE("relind0(P, U*PU) equals the index of the compression PUP") {
    std::mt19937_64 rng(34);
    for (int trial = 0; trial < 10; ++trial) {
      const int n = 6;
      std::uniform_int_distribution<int> r(1, n - 1);
      SpectralProjection p = randomProjection(rng, n, r(rng));
      CMatrix u = randomUnitary(rng, n);
      SpectralProjection q = makeProjection(CMatrix(u.adjoint() * p.matrix.dense() * u));
      // Compression on Ran P, counted directly.
      CMatrix c = p.basis.adjoint() * u * p.basis;
      KernelResult ker = numericalKernel(c, 1e-8, true);
      KernelResult coker = numericalKernel(CMatrix(c.adjoint()), 1e-8, true);
      CHECK(relind0(p, q) == static_cast<int>(ker.dim - coker.dim));
    }
  }

  TEST_CASE("spectralFlow0 examples") {
    CHECK(spectralFlow0(scalarPath([](double t) { return t - 0.5; }, 0, 1, 11), 0, 12) == 1);
    CHECK(spectralFlow0(scalarPath([](double) { return 0.7; }, 0, 1, 5), 0, 12) == 0);
    OperatorPath two = OperatorPath::fromGenerator(PathDomain::Interval, 0, 1, 9, [](double t) {
      return HermitianOperator(diag2(t - 0.25, 0.75 - t));
    });
    CHECK(spectralFlow0(two, 0, 12) == 0);
    FlowResult fr = spectralFlow(two, FlowOptions{});
    CHECK(fr.crossingParameters.size() == 2);
  }

  TEST_CASE("spectralFlow0 matches independent branch counting") {
    std::vector<std::function<double(double)>> branches = {
        [](double t) { return std::sin(3 * M_PI * t) + 0.3; },
        [](double t) { return 0.8 - 2 * t; },
        [](double t) { return t * t - 0.2; },
    };
    std::mt19937_64 rng(35);
    CMatrix u = randomUnitary(rng, 3);
    OperatorPath p = OperatorPath::fromGenerator(PathDomain::Interval, 0, 1, 40, [branches, u](double t) {
      RVector d(3);
      for (int i = 0; i < 3; ++i) d(i) = branches[i](t);
      return HermitianOperator(CMatrix(u * d.cast<cd>().asDiagonal() * u.adjoint()));
    });
    CHECK(spectralFlow0(p, 0, 12) == branchCrossings(branches, 0, 1));
  }

  TEST_CASE("undersampled paths refine or fail loudly") {
    OperatorPath fast = scalarPath([](double t) { return std::sin(20 * M_PI * t) + 0.1; }, 0, 1, 4);
    CHECK(spectralFlow0(fast, 0.05, 12) == branchCrossings({[](double t) { return std::sin(20 * M_PI * t) + 0.1; }}, 0, 1));
    CHECK_THROWS_AS(spectralFlow0(fast, 0.05, 0), Error);
  }

  TEST_CASE("spectral flow is additive under concatenation") {
    std::mt19937_64 rng(36);
    for (int trial = 0; trial < 6; ++trial) {
      OperatorPath a = randomPath(rng, 5, 60);
      CMatrix end = a.at(1).dense();
      CMatrix target = gappedHermitian(rng, 5);
      OperatorPath b = OperatorPath::fromGenerator(PathDomain::Interval, 0, 1, 60, [end, target](double t) {
        return HermitianOperator(CMatrix((1 - t) * end + t * target));
      });
      const long whole = spectralFlow0(OperatorPath::concatenate(a, b), 0, 14);
      CHECK(whole == spectralFlow0(a, 0, 14) + spectralFlow0(b, 0, 14));
    }
  }

  TEST_CASE("spectral flow changes sign under reversal") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 8; ++trial) {
      OperatorPath p = randomPath(rng, 6, 80);
      CHECK(spectralFlow0(p.reversed(), 0, 14) == -spectralFlow0(p, 0, 14));
    }
  }

  TEST_CASE("fromSamples validates and interpolates") {
    std::vector<HermitianOperator> hs = {HermitianOperator(diag2(-1, 1)), HermitianOperator(diag2(1, -1))};
    OperatorPath p = OperatorPath::fromSamples(PathDomain::Interval, {0, 1}, hs);
    CHECK(maxAbs(CMatrix(p.at(0.5).dense())) < 1e-14);
    CHECK(spectralFlow0(p, 0.2, 12) == 0);
    CHECK_THROWS_AS(OperatorPath::fromSamples(PathDomain::Interval, {1, 0}, hs), Error);
    CHECK_THROWS_AS(OperatorPath::fromSamples(PathDomain::Circle, {0, 1}, hs), Error);
    CMatrix x = CMatrix::Zero(2, 2);
    x(0, 1) = x(1, 0) = 1;
    CHECK_THROWS_AS(OperatorPath::fromSamples(PathDomain::Interval, {0, 1}, hs, Grading::diagonal({1, -1})), Error);
  }

  TEST_CASE("suspension oracle examples") {
    OperatorPath th = scalarPath([](double t) { return std::tanh(t); }, -3, 3, 41);
    CHECK(suspensionIndexOracle(th, 400) == 1);
    CHECK(suspensionIndexOracle(th.reversed(), 400) == -1);
    CHECK(suspensionIndexOracle(scalarPath([](double) { return -0.8; }, 0, 1, 3), 200) == 0);
  }

  TEST_CASE("suspension oracle agrees with spectral flow on random paths") {
    std::mt19937_64 rng(38);
    for (int trial = 0; trial < 4; ++trial) {
      OperatorPath p = randomPath(rng, 3, 60);
      CHECK(suspensionIndexOracle(p, 300) == spectralFlow0(p, 0, 14));
    }
  }
}
