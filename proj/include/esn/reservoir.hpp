#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "esn/activations.hpp"
#include "esn/rng.hpp"
#include "esn/types.hpp"

namespace esn {

/// Everything needed to draw one reservoir deterministically.
struct ReservoirConfig {
  Index n = 100;
  double rho_target = 0.95;
  double leak = 0.7;
  double density = 0.1;
  double input_scaling = 1.0;
  Index input_dim = 1;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Drawn weights; immutable after construction by convention.
struct ReservoirMatrices {
  SparseMatd w_res;
  Matd w_in;
  double achieved_rho = 0.0;
  /// Number of redraws forced by a zero spectral radius draw.
  int redraws = 0;

  Index n() const { return w_res.rows(); }
  Index input_dim() const { return w_in.cols(); }
  Matd dense_res() const { return Matd(w_res); }
};

/// Thrown when an iterative spectral estimate fails to converge; carries
/// the best estimate reached.
struct SpectralError : std::runtime_error {
  SpectralError(const std::string& what, double partial_estimate)
      : std::runtime_error(what), partial(partial_estimate) {}
  double partial;
};

/// Largest eigenvalue modulus via dense eigendecomposition.
double spectral_radius_dense(const Matd& m);

/// Largest eigenvalue modulus via normalized power iteration with a
/// two-dimensional Krylov fit, so complex dominant pairs converge too.
/// Throws SpectralError when the iteration budget runs out.
double spectral_radius_power(const SparseMatd& m, double rel_tol = 1e-9,
                             Index max_iters = 200000,
                             const Vecd* warm_start = nullptr,
                             Vecd* dominant_out = nullptr);

/// Dispatches to the dense path for small matrices and the iterative
/// estimator for large ones.
double spectral_radius(const Matd& m);
double spectral_radius(const SparseMatd& m);

/// Side of the dense/iterative dispatch split.
constexpr Index kDenseSpectralLimit = 600;

/// All eigenvalues of a square matrix (dense path), for verification dumps.
Eigen::VectorXcd eigenvalues_dense(const Matd& m);

/// Induced infinity norm (max absolute row sum).
double induced_inf_norm(const SparseMatd& m);
double induced_inf_norm(const Matd& m);

/// Draws sparse uniform weights, rescales them to the target spectral
/// radius, and draws the input weights. Deterministic in config.seed.
ReservoirMatrices build_reservoir(const ReservoirConfig& config);

enum class InputDist { Gaussian, Uniform, Sparse };

std::string input_dist_name(InputDist dist);
InputDist input_dist_from_name(std::string_view name);

/// One drawn input sequence; values is t_len x input_dim, row t holds u(t).
struct InputSequence {
  InputDist dist = InputDist::Gaussian;
  Matd values;
  std::uint64_t seed = 0;
};

/// Draws are row-sequential, so a longer sequence with the same seed is an
/// exact prefix extension of a shorter one.
InputSequence gen_inputs(InputDist dist, Index t_len, Index input_dim,
                         std::uint64_t seed);

enum class InitMode { Zero, RandomScaled };

/// Zero: the origin. RandomScaled: uniform [-1,1]^n rescaled so the largest
/// absolute component equals 2.0 exactly.
Vecd init_state(InitMode mode, Index n, std::uint64_t seed);

/// Reservoir state tagged with its timestep.
struct StateVector {
  Vecd x;
  Index t = 0;
};

/// One leaky update x' = (1-a) x + a f(w_in u + w_res x). Returns the new
/// state; throws std::invalid_argument on dimension mismatch. On a
/// non-finite update the returned state carries diverged = true and the
/// previous (frozen) value of x.
struct StepOutcome {
  StateVector state;
  bool diverged = false;
};
StepOutcome step(const StateVector& s, const Eigen::Ref<const Vecd>& u,
                 const ReservoirMatrices& m, const ActivationSpec& spec,
                 double leak, Rng* rng = nullptr);

/// Allocation-free stepping for inner loops. Optionally exposes the
/// pre-activation and post-activation vectors of the last step.
class Stepper {
 public:
  Stepper(const ReservoirMatrices& m, const ActivationSpec& spec, double leak);

  /// Advances s in place; returns false (leaving s frozen) on divergence.
  bool advance(StateVector& s, const Eigen::Ref<const Vecd>& u,
               Rng* rng = nullptr);

  const Vecd& preactivation() const { return preact_; }
  const Vecd& postactivation() const { return postact_; }

 private:
  const ReservoirMatrices& m_;
  ActivationSpec spec_;
  double leak_;
  Vecd preact_;
  Vecd postact_;
  Vecd next_;
};

enum class IssCheck { holds, violated, not_applicable };

/// Checks the input-to-state stability bound
///   ||x(t)||_inf <= (1-a)^t ||x(0)||_inf + B (||w_res|| + ||w_in|| u_max)
/// with induced infinity norms and B = max(|lo|, |hi|) of the declared
/// bounds. Unbounded activations report not_applicable.
IssCheck check_iss_bound(const std::vector<Vecd>& trajectory,
                         const ReservoirMatrices& m,
                         const ActivationSpec& spec, double leak,
                         double u_max);

}  // namespace esn
