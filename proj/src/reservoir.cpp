#include "esn/reservoir.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace esn {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument(what);
}

void require_square(Index rows, Index cols) {
  if (rows != cols) fail("spectral radius requires a square matrix");
  if (rows < 1) fail("spectral radius requires a non-empty matrix");
}

/// Normalized power iteration with a two-dimensional Krylov fit. The fit
/// projects the matrix action onto span{v, Wv}, whose 2x2 eigenproblem
/// tracks a dominant complex pair as well as a single dominant eigenvalue.
template <class M>
double power_impl(const M& m, double rel_tol, Index max_iters,
                  const Vecd* warm_start, Vecd* dominant_out) {
  const Index n = m.rows();
  Vecd v(n);
  bool seeded = false;
  if (warm_start != nullptr && warm_start->size() == n &&
      warm_start->allFinite()) {
    const double norm = warm_start->norm();
    if (norm > 0.0) {
      v = *warm_start / norm;
      seeded = true;
    }
  }
  if (!seeded) {
    Rng rng(mix_seed({0xC0FFEE5EEDull, static_cast<std::uint64_t>(n)}));
    for (Index i = 0; i < n; ++i) v[i] = rng.uniform(-1.0, 1.0);
    v.normalize();
  }

  constexpr int kNeedStable = 16;
  double est = 0.0;
  double prev = -1.0;
  int stable = 0;
  Vecd w1(n), q1(n), w2(n);
  for (Index it = 0; it < max_iters; ++it) {
    w1.noalias() = m * v;
    const double n1 = w1.norm();
    if (n1 == 0.0) {
      if (dominant_out != nullptr) *dominant_out = v;
      return 0.0;
    }
    q1 = w1 / n1;
    w2.noalias() = m * q1;

    // Least-squares fit W q1 ~ h01 v + h11 q1 with W v = n1 q1 exact,
    // giving the 2x2 companion block [[0, h01], [n1, h11]].
    const double c = q1.dot(v);
    const double b0 = w2.dot(v);
    const double b1 = w2.dot(q1);
    const double det = 1.0 - c * c;
    double h01 = 0.0;
    double h11 = b1;
    if (std::fabs(det) > 1e-14) {
      h01 = (b0 - c * b1) / det;
      h11 = (b1 - c * b0) / det;
    }
    const double disc = h11 * h11 + 4.0 * h01 * n1;
    double mod;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      mod = std::max(std::fabs(0.5 * (h11 + sq)), std::fabs(0.5 * (h11 - sq)));
    } else {
      mod = std::sqrt(std::max(0.0, -h01 * n1));
    }

    const double n2 = w2.norm();
    if (n2 == 0.0) {
      if (dominant_out != nullptr) *dominant_out = q1;
      return 0.0;
    }
    v = w2 / n2;

    est = mod;
    if (prev > 0.0 && std::fabs(est - prev) <= rel_tol * std::fabs(est)) {
      if (++stable >= kNeedStable) {
        if (dominant_out != nullptr) *dominant_out = v;
        return est;
      }
    } else {
      stable = 0;
    }
    prev = est;
  }
  throw SpectralError("spectral radius estimate did not converge", est);
}

}  // namespace

void ReservoirConfig::validate() const {
  if (n < 1) fail("reservoir n must be >= 1");
  if (!(rho_target > 0.0)) fail("rho_target must be > 0");
  if (!(leak > 0.0 && leak <= 1.0)) fail("leak must be in (0, 1]");
  if (!(density > 0.0 && density <= 1.0)) fail("density must be in (0, 1]");
  if (!(input_scaling >= 0.0)) fail("input_scaling must be >= 0");
  if (input_dim < 1) fail("input_dim must be >= 1");
}

double spectral_radius_dense(const Matd& m) {
  require_square(m.rows(), m.cols());
  Eigen::EigenSolver<Matd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw SpectralError("dense eigendecomposition did not converge", 0.0);
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius_power(const SparseMatd& m, double rel_tol,
                             Index max_iters, const Vecd* warm_start,
                             Vecd* dominant_out) {
  require_square(m.rows(), m.cols());
  return power_impl(m, rel_tol, max_iters, warm_start, dominant_out);
}

double spectral_radius(const Matd& m) {
  require_square(m.rows(), m.cols());
  if (m.rows() <= kDenseSpectralLimit) return spectral_radius_dense(m);
  return power_impl(m, 1e-9, 200000, nullptr, nullptr);
}

double spectral_radius(const SparseMatd& m) {
  require_square(m.rows(), m.cols());
  if (m.rows() <= kDenseSpectralLimit) return spectral_radius_dense(Matd(m));
  return power_impl(m, 1e-9, 200000, nullptr, nullptr);
}

Eigen::VectorXcd eigenvalues_dense(const Matd& m) {
  require_square(m.rows(), m.cols());
  Eigen::EigenSolver<Matd> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw SpectralError("dense eigendecomposition did not converge", 0.0);
  }
  return solver.eigenvalues();
}

double induced_inf_norm(const SparseMatd& m) {
  if (m.rows() == 0) return 0.0;
  Vecd row_sums = Vecd::Zero(m.rows());
  for (Index k = 0; k < m.outerSize(); ++k) {
    for (SparseMatd::InnerIterator it(m, k); it; ++it) {
      row_sums[it.row()] += std::fabs(it.value());
    }
  }
  return row_sums.maxCoeff();
}

double induced_inf_norm(const Matd& m) {
  if (m.rows() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

ReservoirMatrices build_reservoir(const ReservoirConfig& config) {
  config.validate();
  ReservoirMatrices out;
  const Index n = config.n;

  double rho_current = 0.0;
  int attempt = 0;
  // At n = 1 and density 0.1 each draw is nonzero with probability 0.1, so
  // the cap must be deep enough that exhaustion is astronomically unlikely.
  constexpr int kMaxRedraws = 512;
  std::vector<Eigen::Triplet<double>> triplets;
  Rng rng(0);
  while (true) {
    rng = Rng(mix_seed({config.seed, stream::reservoir,
                        static_cast<std::uint64_t>(attempt)}));
    triplets.clear();
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        if (rng.bernoulli(config.density)) {
          triplets.emplace_back(i, j, rng.uniform(-1.0, 1.0));
        }
      }
    }
    out.w_res.resize(n, n);
    out.w_res.setFromTriplets(triplets.begin(), triplets.end());
    rho_current = spectral_radius(out.w_res);
    if (rho_current > 0.0) break;
    if (++attempt > kMaxRedraws) {
      throw std::runtime_error(
          "build_reservoir: could not draw a nonzero spectral radius");
    }
  }
  out.redraws = attempt;

  const double factor = config.rho_target / rho_current;
  for (Index k = 0; k < out.w_res.nonZeros(); ++k) {
    out.w_res.valuePtr()[k] *= factor;
  }
  // Spectral radius scales exactly linearly, so the rescaled radius is the
  // target up to the accuracy of the estimate itself.
  out.achieved_rho = rho_current * factor;

  out.w_in.resize(n, config.input_dim);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < config.input_dim; ++j) {
      out.w_in(i, j) = rng.uniform(-1.0, 1.0) * config.input_scaling;
    }
  }
  return out;
}

std::string input_dist_name(InputDist dist) {
  switch (dist) {
    case InputDist::Gaussian: return "gaussian";
    case InputDist::Uniform: return "uniform";
    case InputDist::Sparse: return "sparse";
  }
  fail("unknown input distribution");
}

InputDist input_dist_from_name(std::string_view name) {
  if (name == "gaussian") return InputDist::Gaussian;
  if (name == "uniform") return InputDist::Uniform;
  if (name == "sparse") return InputDist::Sparse;
  fail("unknown input distribution: " + std::string(name));
}

InputSequence gen_inputs(InputDist dist, Index t_len, Index input_dim,
                         std::uint64_t seed) {
  if (t_len < 0) fail("gen_inputs t_len must be >= 0");
  if (input_dim < 1) fail("gen_inputs input_dim must be >= 1");
  InputSequence out;
  out.dist = dist;
  out.seed = seed;
  out.values.resize(t_len, input_dim);
  Rng rng(seed);
  for (Index t = 0; t < t_len; ++t) {
    for (Index j = 0; j < input_dim; ++j) {
      switch (dist) {
        case InputDist::Gaussian:
          out.values(t, j) = rng.gaussian();
          break;
        case InputDist::Uniform:
          out.values(t, j) = rng.uniform(-1.0, 1.0);
          break;
        case InputDist::Sparse:
          out.values(t, j) = rng.bernoulli(0.9) ? 0.0 : rng.uniform(-1.0, 1.0);
          break;
      }
    }
  }
  return out;
}

Vecd init_state(InitMode mode, Index n, std::uint64_t seed) {
  if (n < 1) fail("init_state n must be >= 1");
  if (mode == InitMode::Zero) return Vecd::Zero(n);

  Vecd x(n);
  std::uint64_t attempt = 0;
  while (true) {
    Rng rng(mix_seed({seed, stream::init, attempt}));
    for (Index i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);
    Index peak = 0;
    const double max_abs = x.cwiseAbs().maxCoeff(&peak);
    if (max_abs > 0.0) {
      x *= 2.0 / max_abs;
      x[peak] = std::copysign(2.0, x[peak]);
      return x;
    }
    ++attempt;
  }
}

Stepper::Stepper(const ReservoirMatrices& m, const ActivationSpec& spec,
                 double leak)
    : m_(m), spec_(spec), leak_(leak) {
  spec_.validate();
  if (!(leak > 0.0 && leak <= 1.0)) fail("leak must be in (0, 1]");
  preact_.resize(m.n());
  postact_.resize(m.n());
  next_.resize(m.n());
}

bool Stepper::advance(StateVector& s, const Eigen::Ref<const Vecd>& u,
                      Rng* rng) {
  if (s.x.size() != m_.n()) fail("state dimension mismatch");
  if (u.size() != m_.input_dim()) fail("input dimension mismatch");
  preact_.noalias() = m_.w_in * u;
  preact_.noalias() += m_.w_res * s.x;
  if (!preact_.allFinite()) return false;
  apply_elementwise(spec_, preact_, postact_, rng);
  next_ = (1.0 - leak_) * s.x + leak_ * postact_;
  if (!next_.allFinite()) return false;
  s.x.swap(next_);
  ++s.t;
  return true;
}

StepOutcome step(const StateVector& s, const Eigen::Ref<const Vecd>& u,
                 const ReservoirMatrices& m, const ActivationSpec& spec,
                 double leak, Rng* rng) {
  Stepper stepper(m, spec, leak);
  StepOutcome out{s, false};
  out.diverged = !stepper.advance(out.state, u, rng);
  return out;
}

IssCheck check_iss_bound(const std::vector<Vecd>& trajectory,
                         const ReservoirMatrices& m,
                         const ActivationSpec& spec, double leak,
                         double u_max) {
  const Interval bounds = spec.declared_bounds();
  if (!bounds.bounded()) return IssCheck::not_applicable;
  if (trajectory.empty()) fail("check_iss_bound needs a non-empty trajectory");

  const double b = std::max(std::fabs(bounds.lo), std::fabs(bounds.hi));
  const double gain =
      b * (induced_inf_norm(m.w_res) + induced_inf_norm(m.w_in) * u_max);
  const double x0 = trajectory.front().cwiseAbs().maxCoeff();
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    const double lhs = trajectory[t].cwiseAbs().maxCoeff();
    const double rhs =
        std::pow(1.0 - leak, static_cast<double>(t)) * x0 + gain;
    if (lhs > rhs + 1e-9) return IssCheck::violated;
  }
  return IssCheck::holds;
}

}  // namespace esn
