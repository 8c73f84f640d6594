#pragma once

#include <random>

#include "indexlab/numlin.hpp"

namespace testsupport {

using indexlab::cd;
using indexlab::CMatrix;

inline CMatrix randomMatrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = cd(g(rng), g(rng));
  return m;
}

inline CMatrix randomHermitian(std::mt19937_64& rng, int n) {
  CMatrix a = randomMatrix(rng, n, n);
  return 0.5 * (a + a.adjoint());
}

inline CMatrix randomUnitary(std::mt19937_64& rng, int n) {
  Eigen::HouseholderQR<CMatrix> qr(randomMatrix(rng, n, n));
  return qr.householderQ() * CMatrix::Identity(n, n);
}

// Hermitian matrix with prescribed eigenvalues in a random eigenbasis.
inline CMatrix hermitianWithSpectrum(std::mt19937_64& rng, const std::vector<double>& evs) {
  const int n = static_cast<int>(evs.size());
  CMatrix u = randomUnitary(rng, n);
  CMatrix d = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) d(i, i) = evs[i];
  return u * d * u.adjoint();
}

}  // namespace testsupport
