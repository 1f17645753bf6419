#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "esn/esp.hpp"

namespace esn {

/// Cartesian grid of reservoir configurations to test.
struct SweepGrid {
  std::vector<double> rho_values{0.95};
  std::vector<double> leak_values{0.7};
  std::vector<Index> n_values{100};
  std::vector<ActivationSpec> activations{ActivationSpec::from_name("tanh")};
  std::vector<InputDist> distributions{InputDist::Gaussian};
  int trials_per_cell = 20;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int horizon = 200;
  double threshold = 0.1;
  double density = 0.1;
  double input_scaling = 1.0;

  /// Throws std::invalid_argument on empty axes or out-of-range fields.
  void validate() const;

  /// Order-sensitive digest of every field; identical grids hash equally.
  std::uint64_t config_hash() const;
};

/// Aggregated trial statistics for one grid cell.
struct CellStats {
  long trial_count = 0;
  long converged_count = 0;
  long diverged_count = 0;
  double convergence_fraction = 0.0;
  std::optional<double> mean_convergence_time;
  double mean_final_distance = 0.0;
  std::optional<double> mean_final_distance_unconverged;
  double distance_std = 0.0;
  bool all_seeds_converged = false;
};

/// One grid point with its aggregated statistics.
struct SweepCell {
  std::string activation;
  InputDist distribution = InputDist::Gaussian;
  Index n = 0;
  double rho = 0.0;
  double leak = 0.0;
  CellStats stats;
};

/// Full sweep output; the timestamp stays in memory and is never emitted so
/// that re-runs of the same grid produce byte-identical artifacts.
struct PhaseDiagram {
  SweepGrid grid;
  std::vector<SweepCell> cells;
  std::uint64_t config_hash = 0;
  std::string run_id;
  std::chrono::system_clock::time_point timestamp{};
  bool complete = true;
};

/// Stable per-cell digest that keys the trial substreams.
std::uint64_t sweep_cell_hash(const std::string& activation_name,
                              InputDist dist, Index n, double rho,
                              double leak);

/// Seed for one trial of one cell.
std::uint64_t sweep_trial_seed(std::uint64_t seed_value, int trial_idx,
                               std::uint64_t cell_hash);

/// Runs every (cell, seed, trial) combination and aggregates per-cell
/// statistics; the result is independent of parallelism. A set cancel flag
/// stops the run early and marks the diagram incomplete.
PhaseDiagram run_sweep(const SweepGrid& grid, int parallelism = 1,
                       const std::atomic<bool>* cancel = nullptr);

/// Convergence-versus-size table at the fixed baseline rho = 0.95, a = 0.7.
PhaseDiagram scaling_run(const std::vector<ActivationSpec>& activations,
                         const std::vector<Index>& n_values,
                         int trials_per_cell,
                         const std::vector<std::uint64_t>& seeds,
                         int parallelism = 1,
                         const std::atomic<bool>* cancel = nullptr);

/// Convergence-versus-rho table for one activation at n = 100, a = 0.7.
PhaseDiagram extreme_rho_run(const ActivationSpec& activation,
                             const std::vector<double>& rho_values,
                             int trials_per_cell,
                             const std::vector<std::uint64_t>& seeds,
                             int parallelism = 1,
                             const std::atomic<bool>* cancel = nullptr);

enum class EmitFormat { csv, json };

/// Renders the diagram to one file; identical diagrams produce
/// byte-identical output.
void emit(const PhaseDiagram& diagram, EmitFormat format,
          const std::string& path);

/// Writes rho,leak,value heatmap files (convergence fraction and the binary
/// all-converged indicator) per (activation, distribution, n) into dir.
/// Returns the written paths.
std::vector<std::string> emit_heatmaps(const PhaseDiagram& diagram,
                                       const std::string& dir,
                                       const std::string& prefix);

/// Parses a key = value grid description with comma-separated lists and
/// '#' comments; unknown keys are errors.
SweepGrid parse_sweep_config(const std::string& text);

/// Applies one key=value override to an existing grid.
void apply_override(SweepGrid& grid, const std::string& key,
                    const std::string& value);

}  // namespace esn
