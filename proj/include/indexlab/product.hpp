#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "indexlab/geometry.hpp"
#include "indexlab/grading.hpp"
#include "indexlab/projflow.hpp"

namespace indexlab {

// D acts on V; the potential acts on V (x) F with the fiber F innermost.
struct ProductInputs {
  HermitianOperator d;
  HermitianOperator s;
  int fiberDim = 1;
  Signature signature;
  double lambda = 1.0;
  std::optional<Grading> gammaS;  // on F, required when p = 0
  std::optional<Grading> gammaD;  // on V, required when q = 0
  // Added to lambda * S without scaling; must satisfy the same grading
  // hypotheses as S. Used for lattice mass terms that gap out doublers.
  std::optional<HermitianOperator> regulator;
  RVector interiorMask;  // on V (x) F; empty means everything is interior
  std::string provenance;
};

struct ProductOperator {
  HermitianOperator matrix;
  Signature signature;
  std::optional<Grading> grading;
  double lambda = 1.0;
  RVector interiorMask;  // on the product space
  std::string provenance;
};

// (1,1): [[0, D + iS], [D - iS, 0]] with grading diag(1,-1).
// (0,0): D (x) Gamma_S + S with grading Gamma_D (x) Gamma_S.
// (1,0): D + Gamma_D S.
// (0,1): D (x) Gamma_S + S, ungraded.
ProductOperator buildProductOperator(const ProductInputs& in);

struct FredholmEstimate {
  double cHat = 0.0;
  double deltaHat = 0.0;
  bool satisfied = false;
};
// Exterior margin and commutator bound of lambda * S from the sampled field.
// The commutator uses first-order difference quotients in every direction
// the field varies (r, and theta on the cylinder).
FredholmEstimate fredholmEstimate(const PotentialField& field, double lambda);

struct IndexResult {
  std::optional<long> value;  // empty: inconclusive
  std::vector<double> zeroCluster;
  double gapRatio = kInf;
  std::vector<double> chirality;
  std::vector<double> localization;
  std::string method = "chirality";
  std::string note;
  bool conclusive() const { return value.has_value(); }
};

struct ModeThresholds {
  double chirality = 0.9;
  double localized = 0.6;
  double delocalized = 0.4;
  double gapRatio = 10.0;
};

// Chirality-weighted count of localised near-zero modes (|eigenvalue| < window).
IndexResult indexByChirality(const ProductOperator& op, double window, const ModeThresholds& th = {});

// Graded version on an explicit operator, grading and interior mask.
IndexResult chiralIndex(const HermitianOperator& h, const Grading& gamma, const RVector& interiorMask, double window,
                        const ModeThresholds& th = {});

struct LambdaChoice {
  double lambda = 0.0;
  FredholmEstimate estimate;
  IndexResult index;
};
// Smallest lambda on the grid whose estimate holds and whose graded zero
// cluster is separated by the required gap ratio.
LambdaChoice lambdaSearch(const std::function<ProductOperator(double)>& build, const PotentialField& field,
                          const std::vector<double>& lambdaGrid, double window);

// Spectral flow of a loop of ungraded product operators over t in [0, 1].
struct FamilyOptions {
  int samples = 64;
  double window = 0.0;
  int maxRefine = 12;
  bool filterByLocalization = true;
};
FlowResult familyIndexOverCircle(const std::function<ProductOperator(double)>& family, const FamilyOptions& options);

// Fraction of the vector's weight on the mask.
double maskWeight(const CVector& v, const RVector& mask);

// (1,1) operator on a line: D = -i d/dx (x) 1_F, S the sampled potential,
// and a Wilson term r W (x) 1_F against fermion doubling.
ProductOperator lineProduct(const PotentialField& field, const LineSpec& spec, double lambda, double wilson = 1.0);

// Kernel minus cokernel of a square matrix (singular values below tol),
// counting localised directions only. `weight` is the Hermitian mask operator
// in the matrix's coordinates; it is diagonalised inside each null space so
// degenerate singular vectors are not mixed. Empty when a direction has
// weight strictly between the two thresholds.
std::optional<long> localizedNullity(const CMatrix& t, const CMatrix& weight, double tol, const ModeThresholds& th = {});

}  // namespace indexlab
