#pragma once

#include <stdexcept>
#include <string>

namespace mlmc {

// Base class for all library errors. `code()` is a stable machine-readable
// slug; the CLI prints it as part of its single-line diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define MLMC_DEFINE_ERROR(Name, slug)                                 \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(slug, what) {}     \
  };

// estimator
MLMC_DEFINE_ERROR(EmptyLevel, "empty-level")
MLMC_DEFINE_ERROR(InsufficientSamples, "insufficient-samples")
MLMC_DEFINE_ERROR(DimensionMismatch, "dimension-mismatch")
MLMC_DEFINE_ERROR(NonpositiveCost, "nonpositive-cost")
MLMC_DEFINE_ERROR(InsufficientLevels, "insufficient-levels")

// partition
MLMC_DEFINE_ERROR(InvalidSpec, "invalid-spec")
MLMC_DEFINE_ERROR(OutOfRange, "out-of-range")

// scheduler
MLMC_DEFINE_ERROR(UnschedulableTask, "unschedulable-task")
MLMC_DEFINE_ERROR(InstanceTooLarge, "instance-too-large")
MLMC_DEFINE_ERROR(ApproximationViolation, "approximation-violation")

// runtime / models / metrics
MLMC_DEFINE_ERROR(InvalidArgs, "invalid-args")
MLMC_DEFINE_ERROR(ModelFailure, "model-failure")
MLMC_DEFINE_ERROR(ProtocolViolation, "protocol-violation")
MLMC_DEFINE_ERROR(SolveFailure, "solve-failure")

#undef MLMC_DEFINE_ERROR

}  // namespace mlmc
