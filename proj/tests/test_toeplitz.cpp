#include <cmath>
#include <random>

#include "doctest.h"
#include "indexlab/toeplitz.hpp"

using namespace indexlab;

namespace {

CMatrix sigma(int k) {
  CMatrix m(2, 2);
  if (k == 1) m << 0, 1, 1, 0;
  if (k == 2) m << 0, cd(0, -1), cd(0, 1), 0;
  if (k == 3) m << 1, 0, 0, -1;
  return m;
}

// Multiplication by f on both chirality parts of the Landau model.
CMatrix landauScalar(const LandauDirac& ld, const TrigPolynomial& f) {
  const Eigen::Index np = ld.plus.dim(), nm = ld.minus.dim();
  CMatrix m = CMatrix::Zero(np + nm, np + nm);
  m.topLeftCorner(np, np) = landauMultiplication(f, ld.plus, ld.plus);
  m.bottomRightCorner(nm, nm) = landauMultiplication(f, ld.minus, ld.minus);
  return m;
}

RVector sortedSingularValues(const CMatrix& m) {
  RVector s = svdTriple(m).singularValues;
  std::sort(s.data(), s.data() + s.size());
  return s;
}

}  // namespace

TEST_SUITE("toeplitz") {
  TEST_CASE("kernel projection of the torus Dirac operator") {
    TorusDirac td = torusDiracPlus(4);
    KernelProjection kp = kernelProjection(td.full, 0.5);
    CHECK(kp.kernelDim == 2);
    CHECK(kp.gap == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(maxAbs(CMatrix(td.full.toDense() * kp.projection.matrix.toDense())) <= 1e-8);
  }

  TEST_CASE("invertible operator has no kernel") {
    CMatrix d = CMatrix::Zero(3, 3);
    d.diagonal() << 1.0, -2.0, 3.0;
    KernelProjection kp = kernelProjection(HermitianOperator(d), 0.5);
    CHECK(kp.kernelDim == 0);
    CHECK(kp.gap == doctest::Approx(1.0));
  }

  TEST_CASE("Landau kernel is the retained lowest level") {
    for (int fock : {8, 20}) {
      LandauDirac ld = landauDirac(fock, 2);
      KernelProjection kp = kernelProjection(ld.full, 0.5);
      CHECK(kp.kernelDim == fock);
      CHECK(kp.gap == doctest::Approx(std::sqrt(2.0)).epsilon(1e-8));
    }
  }

  TEST_CASE("small nonzero eigenvalue violates the gap") {
    CMatrix d = CMatrix::Zero(2, 2);
    d(1, 1) = 0.1;
    CHECK_THROWS_AS(kernelProjection(HermitianOperator(d), 0.5), Error);
  }

  TEST_CASE("compressing the grading gives the identity") {
    LandauDirac ld = landauDirac(10, 1);
    KernelProjection kp = kernelProjection(ld.full, 0.5);
    ToeplitzOperator t = toeplitzCompress(ld.grading.involution(), kp, makeSignature(1, 0), ld.grading);
    CHECK(maxAbs(CMatrix(t.matrix - CMatrix::Identity(10, 10))) < 1e-10);
    CHECK(t.plusDim == 10);
  }

  TEST_CASE("Landau e^{i theta}: T+ is the lowest-level weighted shift") {
    const int fock = 12;
    LandauDirac ld = landauDirac(fock, 1);
    KernelProjection kp = kernelProjection(ld.full, 0.5);
    const TrigPolynomial f = TrigPolynomial::monomial(1);
    CMatrix fm = landauScalar(ld, f);
    CMatrix lower = CMatrix::Zero(2, 2), upper = CMatrix::Zero(2, 2);
    lower(1, 0) = 1;
    upper(0, 1) = 1;
    HermitianOperator bigF(CMatrix(kron(fm, lower) + kron(CMatrix(fm.adjoint()), upper)));
    ToeplitzOperator t = toeplitzCompress(bigF, kp, makeSignature(0, 0), ld.grading, 2);
    CHECK(t.tPlus.rows() == fock);
    CHECK(t.tMinus.size() == 0);
    RVector a = sortedSingularValues(t.tPlus), b = sortedSingularValues(landauSymbolMatrix(f, fock));
    CHECK(maxAbs(CMatrix((a - b).cast<cd>())) < 1e-8);
  }

  TEST_CASE("q = 1 compressions are flagged trivial") {
    LandauDirac ld = landauDirac(6, 1);
    KernelProjection kp = kernelProjection(ld.full, 0.5);
    try {
      toeplitzCompress(ld.grading.involution(), kp, makeSignature(1, 1), ld.grading);
      FAIL("expected SignatureTrivial");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SignatureTrivial);
    }
  }

  TEST_CASE("q = 1 vanishing certificates") {
    LandauDirac ld = landauDirac(10, 1);
    KernelProjection kp = kernelProjection(ld.full, 0.5);
    CMatrix fm = landauScalar(ld, TrigPolynomial::monomial(1));
    CMatrix re = 0.5 * (fm + fm.adjoint()), im = cd(0, -0.5) * (fm - fm.adjoint());
    VanishingCertificate c11 = q1Vanishing(HermitianOperator(re), kp, makeSignature(1, 1), std::nullopt, 1);
    CHECK(c11.certified);
    CHECK(c11.index == 0);
    HermitianOperator f01(CMatrix(kron(re, sigma(1)) + kron(im, sigma(2))));
    VanishingCertificate c01 =
        q1Vanishing(f01, kp, makeSignature(0, 1), Grading(HermitianOperator(sigma(3))), 2);
    CHECK(c01.certified);
    CHECK(c01.clifford.verdict == SymmetryVerdict::exactSymmetry);
    CHECK(c01.index == 0);
  }

  TEST_CASE("commutator with a D-commuting symbol vanishes") {
    LandauDirac ld = landauDirac(10, 1);
    KernelProjection kp = kernelProjection(ld.full, 0.5);
    DecayProfile d = commutatorDecayProfile(kp, ld.grading.involution());
    CHECK(d.singularValues.front() < 1e-10);
  }

  TEST_CASE("Landau e^{i theta} commutator decays only algebraically") {
    // The matrix elements between neighbouring levels fall off like m^{-1/2},
    // so sigma_{dim/4} / sigma_1 stays far above 1e-2 at desk-scale truncations.
    LandauDirac ld = landauDirac(32, 1);
    KernelProjection kp = kernelProjection(ld.full, 0.5);
    CMatrix fm = landauScalar(ld, TrigPolynomial::monomial(1));
    DecayProfile d = commutatorDecayProfile(kp, HermitianOperator(CMatrix(0.5 * (fm + fm.adjoint()))));
    CHECK(d.tailRatio < 0.5);
    CHECK(d.tailRatio > 0.05);
    CHECK_FALSE(d.decaying);
  }

  TEST_CASE("random symbol commutator is flagged non-decaying") {
    std::mt19937 rng(7);
    std::normal_distribution<double> g;
    LandauDirac ld = landauDirac(10, 1);
    KernelProjection kp = kernelProjection(ld.full, 0.5);
    const Eigen::Index n = ld.full.dim();
    CMatrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cd(g(rng), g(rng));
    DecayProfile d = commutatorDecayProfile(kp, HermitianOperator(CMatrix(0.5 * (a + a.adjoint()))));
    CHECK(d.tailRatio > 0.1);
    CHECK_FALSE(d.decaying);
  }

  TEST_CASE("Hardy Toeplitz index of z^k is -k") {
    for (int k = -3; k <= 3; ++k) {
      auto u = [k](double th) { return CMatrix::Constant(1, 1, std::polar(1.0, k * th)).eval(); };
      CHECK(toeplitzIndexBySpectralFlow(u, 1, std::max(std::abs(k), 1)) == -k);
    }
  }

  TEST_CASE("non-unitary symbol is rejected") {
    auto u = [](double th) { return CMatrix::Constant(1, 1, 2.0 * std::polar(1.0, th)).eval(); };
    CHECK_THROWS_AS(toeplitzIndexBySpectralFlow(u, 1, 1), Error);
  }

  TEST_CASE("localized kernel index of a finite shift") {
    // S e_j = e_{j+1}: cokernel e_0 inside the mask, kernel e_{n-1} outside.
    const int n = 12;
    CMatrix s = CMatrix::Zero(n, n);
    for (int j = 0; j + 1 < n; ++j) s(j + 1, j) = 1.0;
    RVector mask = RVector::Zero(n);
    mask.head(9).setOnes();
    CHECK(localizedKernelIndex(s, mask, 0.25) == -1);
    CHECK(localizedKernelIndex(CMatrix(s.adjoint()), mask, 0.25) == 1);
    CHECK(localizedKernelIndex(CMatrix::Identity(n, n), mask, 0.25) == 0);
  }

  TEST_CASE("even-even identity on the Landau plane") {
    EvenEvenReport r1 = evenEvenToeplitzIndex(32, TrigPolynomial::monomial(1));
    CHECK(r1.indexTplus == -1);
    CHECK(r1.indexTminus == 0);
    CHECK(r1.kernelCountTplus == -1);
    REQUIRE(r1.productIndex.conclusive());
    CHECK(*r1.productIndex.value == -1);
    CHECK(r1.agree);

    EvenEvenReport r2 = evenEvenToeplitzIndex(32, TrigPolynomial::monomial(-2));
    CHECK(r2.indexTplus == 2);
    CHECK(*r2.productIndex.value == 2);
    CHECK(r2.agree);

    EvenEvenReport r0 = evenEvenToeplitzIndex(32, TrigPolynomial::monomial(0));
    CHECK(r0.indexTplus == 0);
    CHECK(r0.indexTminus == 0);
    CHECK(*r0.productIndex.value == 0);
    CHECK(r0.agree);
  }

  TEST_CASE("hedgehog family coefficients reproduce the symbol") {
    for (double t : {0.0, 0.17, 0.6}) {
      MatrixSymbol s = hedgehogFamily(t);
      for (double th : {0.0, 1.1, 4.0}) {
        CMatrix expected = std::sin(2 * M_PI * t) * sigma(1) + std::sin(th) * sigma(2) +
                           (1 + std::cos(2 * M_PI * t) + std::cos(th)) * sigma(3);
        CHECK(maxAbs(CMatrix(s(th) - expected)) < 1e-12);
      }
    }
    CHECK(hedgehogFamily(0.3).degree() == 1);
  }

  TEST_CASE("hedgehog family flow: Toeplitz and product routes agree") {
    FamilyFlowReport one = toeplitzFamilyFlow([](double t) { return hedgehogFamily(t); }, 24);
    CHECK(one.agree);
    CHECK(std::abs(one.toeplitzFlow.value) == 1);
    FamilyFlowReport two = toeplitzFamilyFlow([](double t) { return hedgehogFamily(t, 2); }, 24);
    CHECK(two.agree);
    CHECK(two.toeplitzFlow.value == 2 * one.toeplitzFlow.value);
  }

  TEST_CASE("constant family has zero flow on both routes") {
    FamilyFlowReport r = toeplitzFamilyFlow([](double) { return hedgehogFamily(0.25); }, 16);
    CHECK(r.toeplitzFlow.value == 0);
    CHECK(r.productFlow.value == 0);
    CHECK(r.agree);
  }

  TEST_CASE("property: matrix symbol multiplication is linear in the coefficients") {
    LandauBasis b{2, 6};
    MatrixSymbol a;
    a.dim = 2;
    a.coeffs[1] = sigma(1);
    MatrixSymbol c = a;
    c.coeffs[-1] = sigma(3);
    MatrixSymbol only;
    only.dim = 2;
    only.coeffs[-1] = sigma(3);
    CMatrix lhs = landauMatrixMultiplication(c, b, b);
    CMatrix rhs = landauMatrixMultiplication(a, b, b) + landauMatrixMultiplication(only, b, b);
    CHECK(maxAbs(CMatrix(lhs - rhs)) < 1e-12);
  }
}
