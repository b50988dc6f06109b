#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace ergodic_smpc {

/// Base class of every error thrown by the library.
///
/// Errors raised deep inside a simulation are annotated on the way out with
/// the step index and, for ensembles, the particle id. Annotation mutates the
/// object in place so that `throw;` keeps the dynamic type intact.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message)
      : std::runtime_error(message), message_(message), what_(message) {}

  const char* what() const noexcept override { return what_.c_str(); }

  const std::string& message() const noexcept { return message_; }
  std::optional<std::size_t> step() const noexcept { return step_; }
  std::optional<std::size_t> particle() const noexcept { return particle_; }

  void set_step(std::size_t step) {
    step_ = step;
    rebuild();
  }
  void set_particle(std::size_t particle) {
    particle_ = particle;
    rebuild();
  }

 private:
  void rebuild() {
    what_ = message_;
    if (particle_) what_ += " [particle " + std::to_string(*particle_) + "]";
    if (step_) what_ += " [step " + std::to_string(*step_) + "]";
  }

  std::string message_;
  std::string what_;
  std::optional<std::size_t> step_;
  std::optional<std::size_t> particle_;
};

#define ERGODIC_SMPC_ERROR(Name)                          \
  class Name : public Error {                             \
   public:                                                \
    explicit Name(const std::string& m) : Error(m) {}     \
  }

/// Probability vector negative or not summing to one.
ERGODIC_SMPC_ERROR(InvalidProbabilityError);
/// State left the finite range or crossed the divergence bound.
ERGODIC_SMPC_ERROR(NumericalBlowupError);
/// Sampler produced a parameter outside the declared parameter space.
ERGODIC_SMPC_ERROR(ParameterDomainError);
/// R + B^T Q B is singular or too badly conditioned to solve.
ERGODIC_SMPC_ERROR(SingularNormalMatrixError);
/// Density negative somewhere, or missing where one is required.
ERGODIC_SMPC_ERROR(InvalidDensityError);
/// Measures built on different bin edges.
ERGODIC_SMPC_ERROR(IncompatibleMeasureError);
/// User-supplied function returned a non-finite value.
ERGODIC_SMPC_ERROR(EvaluationError);
/// Malformed argument (dimension mismatch, empty input, bad range).
ERGODIC_SMPC_ERROR(InvalidArgumentError);
/// File could not be read, written or parsed.
ERGODIC_SMPC_ERROR(IoError);

#undef ERGODIC_SMPC_ERROR

}  // namespace ergodic_smpc
