#pragma once

#include <stdexcept>
#include <string>

namespace indexlab {

enum class ErrorKind {
  NonHermitianInput,
  ConvergenceFailure,
  IllConditionedSplit,
  UndersampledLoop,
  SpectrumTouchesZero,
  DimensionMismatch,
  NotOdd,
  RefinementExhausted,
  InconclusiveIndex,
  DimensionOverflow,
  QuadratureFailure,
  NotInvertibleOutsideCompact,
  GradingHypothesisViolated,
  EmptyExterior,
  NoAdmissibleLambda,
  GradingAbsent,
  HypersurfaceNotInGrid,
  MethodDisagreement,
  GapViolated,
  SignatureTrivial,
  NormExceeded,
  ChernOracleMismatch,
  ParseError,
  ValidationError,
  BaselineMissing,
  IoError,
  InvalidArgument,
};

const char* errorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(errorKindName(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace indexlab
