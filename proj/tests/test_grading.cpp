#include "doctest.h"
#include "indexlab/grading.hpp"
#include "support.hpp"

using namespace indexlab;
using testsupport::hermitianWithSpectrum;
using testsupport::randomHermitian;
using testsupport::randomMatrix;

namespace {

CMatrix pauliX() {
  CMatrix x = CMatrix::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1;
  return x;
}

// Random invertible Hermitian matrix that is odd for diag(1..1,-1..-1).
CMatrix randomOdd(std::mt19937_64& rng, int half) {
  CMatrix b = randomMatrix(rng, half, half);
  CMatrix h = CMatrix::Zero(2 * half, 2 * half);
  h.topRightCorner(half, half) = b.adjoint();
  h.bottomLeftCorner(half, half) = b;
  return h;
}

std::vector<int> splitSigns(int half) {
  std::vector<int> s(2 * half, 1);
  for (int i = half; i < 2 * half; ++i) s[i] = -1;
  return s;
}

}  // namespace

TEST_SUITE("grading") {
  TEST_CASE("signature validation and degree") {
    CHECK(makeSignature(1, 1).degree() == 0);
    CHECK(makeSignature(1, 0).degree() == 1);
    CHECK_THROWS_AS(makeSignature(2, 0), Error);
  }

  TEST_CASE("grading invariants") {
    Grading g = Grading::diagonal({1, -1, 1});
    CHECK(g.plusRank() == 2);
    CMatrix notInv = CMatrix::Identity(2, 2) * 2.0;
    CHECK_THROWS_AS(Grading(HermitianOperator(notInv)), Error);
    Grading x{HermitianOperator(pauliX())};
    CHECK(x.plusRank() == 1);
    Grading t = Grading::tensor(Grading::diagonal({1, -1}), x);
    CHECK(t.dim() == 4);
    CHECK(t.plusRank() == 2);
  }

  TEST_CASE("positiveSpectralProjection examples") {
    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = 2;
    d(1, 1) = -1;
    SpectralProjection p = positiveSpectralProjection(HermitianOperator(d), 1e-6);
    CMatrix expect = CMatrix::Zero(2, 2);
    expect(0, 0) = 1;
    CHECK(maxAbs(p.matrix.dense() - expect) < 1e-12);

    SpectralProjection px = positiveSpectralProjection(HermitianOperator(pauliX()), 1e-6);
    CHECK(px.rank == 1);
    CHECK(maxAbs(px.matrix.dense() - 0.5 * CMatrix::Ones(2, 2)) < 1e-12);

    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
      CMatrix h = hermitianWithSpectrum(rng, {-3, -1.5, -0.5, 0.4, 1.2, 2.5});
      SpectralProjection pr = positiveSpectralProjection(HermitianOperator(h), 1e-3);
      const CMatrix& m = pr.matrix.dense();
      CHECK(maxAbs(m * m - m) < 1e-10);
      CHECK(maxAbs(h * m - m * h) < 1e-10);
      CHECK(pr.rank == 3);
    }
    CHECK_THROWS_AS(positiveSpectralProjection(HermitianOperator(CMatrix(CMatrix::Zero(2, 2))), 1e-6), Error);
  }

  TEST_CASE("P+(H) + P+(-H) is the identity for invertible H") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
      CMatrix h = randomHermitian(rng, 7);
      SpectralProjection a = positiveSpectralProjection(HermitianOperator(h), 1e-9);
      SpectralProjection b = positiveSpectralProjection(HermitianOperator(CMatrix(-h)), 1e-9);
      CHECK(maxAbs(a.matrix.dense() + b.matrix.dense() - CMatrix::Identity(7, 7)) < 1e-8);
    }
  }

  TEST_CASE("checkOddness examples") {
    Grading g = Grading::diagonal({1, -1});
    CHECK(checkOddness(HermitianOperator(pauliX()), g) == doctest::Approx(0.0));
    CHECK(checkOddness(HermitianOperator(CMatrix(CMatrix::Identity(2, 2))), g) == doctest::Approx(2.0));
    CMatrix ones = CMatrix::Identity(3, 3);
    CHECK_THROWS_AS(checkOddness(HermitianOperator(ones), g), Error);
  }

  TEST_CASE("2P+(H)-1 stays odd for odd invertible H") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
      const int half = 4;
      CMatrix h = randomOdd(rng, half);
      Grading g = Grading::diagonal(splitSigns(half));
      REQUIRE(checkOddness(HermitianOperator(h), g) <= 1e-8);
      SpectralProjection p = positiveSpectralProjection(HermitianOperator(h), 1e-9);
      CMatrix f = 2.0 * p.matrix.dense() - CMatrix::Identity(2 * half, 2 * half);
      CHECK(checkOddness(HermitianOperator(f), g) <= 1e-8);
    }
  }

  TEST_CASE("cliffordDefectCheck examples") {
    Grading g = Grading::diagonal({1, -1});
    CHECK(cliffordDefectCheck(HermitianOperator(pauliX()), g).verdict == SymmetryVerdict::exactSymmetry);

    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = 5;
    d(1, 1) = -5;
    Grading gx{HermitianOperator(pauliX())};
    CHECK(cliffordDefectCheck(HermitianOperator(d), gx).verdict == SymmetryVerdict::exactSymmetry);

    CMatrix k = CMatrix::Identity(2, 2);
    CliffordReport near = cliffordDefectCheck(HermitianOperator(CMatrix(d + 1e-3 * k)), gx);
    CHECK(near.verdict == SymmetryVerdict::approximateSymmetry);
    CHECK(cliffordDefectCheck(HermitianOperator(CMatrix(CMatrix::Identity(2, 2))), g).verdict == SymmetryVerdict::none);
  }

  TEST_CASE("exact Clifford symmetry forces a balanced positive projection") {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 10; ++trial) {
      CMatrix h = randomOdd(rng, 3);
      Grading g = Grading::diagonal(splitSigns(3));
      REQUIRE(cliffordDefectCheck(HermitianOperator(h), g).verdict == SymmetryVerdict::exactSymmetry);
      CHECK(positiveSpectralProjection(HermitianOperator(h), 1e-9).rank == 3);
    }
  }
}
