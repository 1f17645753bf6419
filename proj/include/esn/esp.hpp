#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "esn/reservoir.hpp"

namespace esn {

/// Configuration for a two-trajectory convergence experiment.
struct EspTestSpec {
  ReservoirConfig config;
  ActivationSpec activation;
  InputDist input_dist = InputDist::Gaussian;
  InitMode init_a = InitMode::Zero;
  InitMode init_b = InitMode::RandomScaled;
  int horizon = 200;
  int extended_horizon = 2000;
  double threshold = 0.1;
  int trials = 1;
  bool extend_if_unconverged = false;

  /// Throws std::invalid_argument when any field is out of range.
  void validate() const;
};

/// Outcome of one trajectory pair, distances indexed by timestep from 0.
struct TrajectoryPairResult {
  std::vector<double> distances;
  std::vector<double> distances_inf;
  Matd component_deltas;
  bool converged = false;
  std::optional<int> convergence_time;
  double final_distance = 0.0;
  std::optional<double> decay_rate;
  std::optional<int> symbol_lock_time;
  bool diverged = false;
  std::optional<bool> extended_converged;
  std::optional<int> extended_convergence_time;
  std::optional<double> extended_final_distance;
};

/// Post-activation outputs of both trajectories, row r is timestep
/// start_time + r; populated only for activations with a finite codebook.
struct SymbolTrace {
  Matd s_a;
  Matd s_b;
  int start_time = 1;

  bool populated() const { return s_a.size() > 0; }
};

/// A pair run along with its symbol record.
struct PairRun {
  TrajectoryPairResult result;
  SymbolTrace symbols;
};

/// Runs two trajectories under identical inputs and returns the distance
/// diagnostics together with the symbol trace.
PairRun run_pair_traced(const EspTestSpec& spec, std::uint64_t trial_seed);

/// Convenience wrapper returning only the distance diagnostics.
TrajectoryPairResult run_pair(const EspTestSpec& spec, std::uint64_t trial_seed);

/// Runs trial_seed = 0..spec.trials-1 and collects results.
std::vector<TrajectoryPairResult> run_trials(const EspTestSpec& spec);

/// Least-squares slope of ln d_t over the window (1e-14, d_0]; none when
/// fewer than 10 samples qualify.
std::optional<double> estimate_decay_rate(const std::vector<double>& distances);

/// Smallest recorded time T with exact symbol equality for all t >= T; none
/// if the final recorded step still mismatches.
std::optional<int> detect_symbol_lock(const SymbolTrace& trace);

/// True iff distances follow d_t = (1-leak)^(t-T) d_T after symbol lock
/// (exactly zero when leak = 1).
bool verify_post_lock_contraction(const TrajectoryPairResult& result,
                                  const SymbolTrace& trace, double leak);

/// True iff every component of every step obeys
/// |delta_t| <= (1-leak)|delta_{t-1}| + leak * d_l * [symbols differ] + 1e-9.
bool check_collision_bound(const TrajectoryPairResult& result,
                           const SymbolTrace& trace, double leak, double d_l);

/// Distance trace for t = perturb_time..horizon between a run and a twin
/// whose input at perturb_time was redrawn (twin inputs identical when
/// perturb is false).
std::vector<double> fading_memory_probe(const EspTestSpec& spec,
                                        int perturb_time,
                                        std::uint64_t trial_seed,
                                        bool perturb = true);

/// Distinct limit cycles of the quantized dynamics, each a sequence of
/// post-activation states.
struct AttractorReport {
  std::vector<std::vector<Vecd>> cycles;
  std::vector<long> basin_counts;
  bool unique = false;
};

/// Raised when an orbit fails to repeat within the step budget.
struct AttractorBudgetError : std::runtime_error {
  explicit AttractorBudgetError(AttractorReport partial_in)
      : std::runtime_error("attractor search exceeded its step budget"),
        partial(std::move(partial_in)) {}

  AttractorReport partial;
};

/// Follows each initial condition under a periodic input cycle until its
/// post-activation state repeats, then groups the cycles up to rotation.
/// Requires leak = 1, a codebook activation, and n <= 8.
AttractorReport enumerate_quantized_attractors(const EspTestSpec& spec,
                                               const Matd& input_cycle,
                                               const std::vector<Vecd>& inits,
                                               long step_budget = 1000000);

/// Overload sampling init_samples initial conditions uniformly from
/// [-2, 2]^n.
AttractorReport enumerate_quantized_attractors(const EspTestSpec& spec,
                                               const Matd& input_cycle,
                                               int init_samples,
                                               long step_budget = 1000000);

/// Overload over explicit weights; the dynamics always use leak = 1.
AttractorReport enumerate_quantized_attractors(const ReservoirMatrices& m,
                                               const ActivationSpec& activation,
                                               const Matd& input_cycle,
                                               const std::vector<Vecd>& inits,
                                               long step_budget = 1000000);

}  // namespace esn
