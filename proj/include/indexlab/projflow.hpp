#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "indexlab/grading.hpp"

namespace indexlab {

int relind0(const SpectralProjection& p, const SpectralProjection& q);

// Off-diagonal block of 2P-1 from E+ to E- in the Gamma eigenbasis
// (coordinate basis when Gamma is diagonal).
CMatrix projectionToUnitaryBlock(const SpectralProjection& p, const Grading& gamma);

struct ProjectionLoop {
  std::vector<SpectralProjection> samples;  // over the circle, closing sample optional
  Grading grading;
};
ProjectionLoop makeProjectionLoop(std::vector<SpectralProjection> samples, const Grading& grading);

long relind1(const ProjectionLoop& p, const ProjectionLoop& q);

enum class PathDomain { Interval, Circle };

class OperatorPath {
 public:
  using Generator = std::function<HermitianOperator(double)>;

  static OperatorPath fromGenerator(PathDomain domain, double t0, double t1, int samples, Generator gen,
                                    std::optional<Grading> grading = std::nullopt);
  // Explicit samples; intermediate parameters are filled by linear interpolation.
  static OperatorPath fromSamples(PathDomain domain, std::vector<double> ts, std::vector<HermitianOperator> samples,
                                  std::optional<Grading> grading = std::nullopt);

  PathDomain domain() const { return domain_; }
  double t0() const { return ts_.front(); }
  double t1() const { return ts_.back(); }
  const std::vector<double>& parameters() const { return ts_; }
  HermitianOperator at(double t) const;
  const std::optional<Grading>& grading() const { return grading_; }

  OperatorPath reversed() const;
  // Runs `a` then `b`; b's parameters are shifted to follow a's.
  static OperatorPath concatenate(const OperatorPath& a, const OperatorPath& b);

 private:
  PathDomain domain_ = PathDomain::Interval;
  std::vector<double> ts_;
  Generator gen_;
  std::optional<Grading> grading_;
};

struct FlowOptions {
  double window = 0.0;  // <= 0: a quarter of the median |eigenvalue| at the endpoints
  int maxRefine = 12;
  // Optional per-vector localisation score in [0,1]; crossings whose vector
  // scores below `localizationThreshold` are not counted.
  std::function<double(const CVector&)> localization;
  double localizationThreshold = 0.5;
  int denseLimit = 1200;
};

struct FlowResult {
  long value = 0;
  long rawCrossings = 0;   // all crossings, before localisation filtering
  long filteredOut = 0;    // net crossings discarded by the filter
  int refinements = 0;
  double window = 0.0;
  std::vector<double> crossingParameters;
};

FlowResult spectralFlow(const OperatorPath& path, const FlowOptions& options);
long spectralFlow0(const OperatorPath& path, double window, int maxRefine);

// Index of d/dt + H(t) on a line grid with the path held constant outside
// its parameter interval. Implemented with the product-operator machinery.
long suspensionIndexOracle(const OperatorPath& path, int gridPoints);

}  // namespace indexlab
