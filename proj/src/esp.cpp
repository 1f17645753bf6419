#include "esn/esp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include "esn/rng.hpp"

namespace esn {

namespace {

[[noreturn]] void fail(const char* what) { throw std::invalid_argument(what); }

Matd pack_rows(const std::vector<Vecd>& rows, Index cols) {
  Matd out(static_cast<Index>(rows.size()), cols);
  for (Index r = 0; r < out.rows(); ++r) {
    out.row(r) = rows[static_cast<std::size_t>(r)].transpose();
  }
  return out;
}

}  // namespace

void EspTestSpec::validate() const {
  config.validate();
  activation.validate();
  if (!(threshold > 0.0)) fail("threshold must be positive");
  if (horizon < 1) fail("horizon must be >= 1");
  if (extended_horizon < horizon) fail("extended_horizon must be >= horizon");
  if (trials < 1) fail("trials must be >= 1");
}

PairRun run_pair_traced(const EspTestSpec& spec, std::uint64_t trial_seed) {
  spec.validate();
  const std::uint64_t master = mix_seed({spec.config.seed, trial_seed});

  ReservoirConfig cfg = spec.config;
  cfg.seed = master;
  const ReservoirMatrices m = build_reservoir(cfg);

  const bool extend =
      spec.extend_if_unconverged && spec.extended_horizon > spec.horizon;
  const Index total = extend ? spec.extended_horizon : spec.horizon;
  const InputSequence inputs = gen_inputs(
      spec.input_dist, total, cfg.input_dim, mix_seed({master, stream::input}));

  std::uint64_t init_ordinal = 0;
  const auto draw_init = [&](InitMode mode) {
    if (mode == InitMode::Zero) return init_state(InitMode::Zero, cfg.n, 0);
    return init_state(InitMode::RandomScaled, cfg.n,
                      mix_seed({master, stream::init, init_ordinal++}));
  };
  StateVector a{draw_init(spec.init_a), 0};
  StateVector b{draw_init(spec.init_b), 0};

  Rng noise_a(mix_seed({master, stream::noise_a}));
  Rng noise_b(mix_seed({master, stream::noise_b}));
  Rng* rng_a = spec.activation.stochastic() ? &noise_a : nullptr;
  Rng* rng_b = spec.activation.stochastic() ? &noise_b : nullptr;

  const bool codebook = spec.activation.has_codebook();
  PairRun run;
  TrajectoryPairResult& r = run.result;
  r.distances.reserve(static_cast<std::size_t>(total) + 1);
  r.distances_inf.reserve(static_cast<std::size_t>(total) + 1);
  std::vector<Vecd> delta_rows;
  std::vector<Vecd> symbol_rows_a;
  std::vector<Vecd> symbol_rows_b;

  const auto record_distance = [&] {
    const Vecd diff = a.x - b.x;
    r.distances.push_back(diff.norm());
    r.distances_inf.push_back(diff.lpNorm<Eigen::Infinity>());
    if (codebook) delta_rows.push_back(diff.cwiseAbs());
  };
  record_distance();

  Stepper stepper_a(m, spec.activation, cfg.leak);
  Stepper stepper_b(m, spec.activation, cfg.leak);
  const auto converged_so_far = [&] {
    for (const double d : r.distances) {
      if (d < spec.threshold) return true;
    }
    return false;
  };

  bool extension_entered = false;
  for (Index t = 1; t <= total; ++t) {
    const auto u = inputs.values.row(t - 1).transpose();
    const bool ok_a = stepper_a.advance(a, u, rng_a);
    const bool ok_b = stepper_b.advance(b, u, rng_b);
    if (!ok_a || !ok_b) {
      r.diverged = true;
      break;
    }
    record_distance();
    if (codebook) {
      symbol_rows_a.push_back(stepper_a.postactivation());
      symbol_rows_b.push_back(stepper_b.postactivation());
    }
    if (t == spec.horizon && extend) {
      if (converged_so_far()) break;
      extension_entered = true;
    }
  }

  if (codebook) {
    r.component_deltas = pack_rows(delta_rows, cfg.n);
    run.symbols.s_a = pack_rows(symbol_rows_a, cfg.n);
    run.symbols.s_b = pack_rows(symbol_rows_b, cfg.n);
    run.symbols.start_time = 1;
  }

  const int recorded = static_cast<int>(r.distances.size()) - 1;
  const int base = std::min(recorded, spec.horizon);
  for (int t = 0; t <= base; ++t) {
    if (r.distances[static_cast<std::size_t>(t)] < spec.threshold) {
      r.converged = true;
      r.convergence_time = t;
      break;
    }
  }
  r.final_distance = r.diverged ? std::numeric_limits<double>::infinity()
                                : r.distances[static_cast<std::size_t>(base)];
  r.decay_rate = estimate_decay_rate(std::vector<double>(
      r.distances.begin(), r.distances.begin() + base + 1));
  if (codebook && run.symbols.populated()) {
    r.symbol_lock_time = detect_symbol_lock(run.symbols);
  }

  if (extension_entered) {
    bool ext_converged = false;
    for (int t = 0; t <= recorded; ++t) {
      if (r.distances[static_cast<std::size_t>(t)] < spec.threshold) {
        ext_converged = true;
        r.extended_convergence_time = t;
        break;
      }
    }
    r.extended_converged = ext_converged;
    r.extended_final_distance =
        r.diverged ? std::numeric_limits<double>::infinity()
                   : r.distances.back();
  }
  return run;
}

TrajectoryPairResult run_pair(const EspTestSpec& spec,
                              std::uint64_t trial_seed) {
  return run_pair_traced(spec, trial_seed).result;
}

std::vector<TrajectoryPairResult> run_trials(const EspTestSpec& spec) {
  spec.validate();
  std::vector<TrajectoryPairResult> out;
  out.reserve(static_cast<std::size_t>(spec.trials));
  for (int trial = 0; trial < spec.trials; ++trial) {
    out.push_back(run_pair(spec, static_cast<std::uint64_t>(trial)));
  }
  return out;
}

std::optional<double> estimate_decay_rate(
    const std::vector<double>& distances) {
  if (distances.empty()) return std::nullopt;
  const double d0 = distances[0];
  double n = 0.0;
  double sum_t = 0.0;
  double sum_tt = 0.0;
  double sum_y = 0.0;
  double sum_ty = 0.0;
  for (std::size_t t = 0; t < distances.size(); ++t) {
    const double d = distances[t];
    if (!(d > 1e-14) || !(d <= d0)) continue;
    const double x = static_cast<double>(t);
    const double y = std::log(d);
    n += 1.0;
    sum_t += x;
    sum_tt += x * x;
    sum_y += y;
    sum_ty += x * y;
  }
  if (n < 10.0) return std::nullopt;
  const double denom = n * sum_tt - sum_t * sum_t;
  if (denom == 0.0) return std::nullopt;
  return (n * sum_ty - sum_t * sum_y) / denom;
}

std::optional<int> detect_symbol_lock(const SymbolTrace& trace) {
  if (!trace.populated()) {
    fail("symbol lock requires a populated symbol trace");
  }
  if (trace.s_a.rows() != trace.s_b.rows() ||
      trace.s_a.cols() != trace.s_b.cols()) {
    fail("symbol traces must have matching shapes");
  }
  Index first_locked_row = trace.s_a.rows();
  for (Index row = trace.s_a.rows() - 1; row >= 0; --row) {
    if (trace.s_a.row(row) != trace.s_b.row(row)) break;
    first_locked_row = row;
  }
  if (first_locked_row == trace.s_a.rows()) return std::nullopt;
  return trace.start_time + static_cast<int>(first_locked_row);
}

bool verify_post_lock_contraction(const TrajectoryPairResult& result,
                                  const SymbolTrace& trace, double leak) {
  const std::optional<int> lock = detect_symbol_lock(trace);
  if (!lock) fail("post-lock contraction requires a locked trace");
  const std::size_t lock_t = static_cast<std::size_t>(*lock);
  if (lock_t >= result.distances.size()) {
    fail("lock time lies outside the recorded distances");
  }
  if (leak == 1.0) {
    for (std::size_t t = lock_t + 1; t < result.distances.size(); ++t) {
      if (result.distances[t] != 0.0) return false;
    }
    return true;
  }
  const double d_lock = result.distances[lock_t];
  double predicted = d_lock;
  for (std::size_t t = lock_t + 1; t < result.distances.size(); ++t) {
    predicted *= 1.0 - leak;
    const double actual = result.distances[t];
    // The absolute term covers additive rounding noise in the state
    // updates, which floors the measured distance near 1e-14 while the
    // geometric prediction keeps shrinking.
    if (std::fabs(actual - predicted) > 1e-6 * predicted + 1e-12) {
      return false;
    }
  }
  return true;
}

bool check_collision_bound(const TrajectoryPairResult& result,
                           const SymbolTrace& trace, double leak, double d_l) {
  if (!trace.populated()) fail("collision bound requires a symbol trace");
  if (result.component_deltas.rows() != trace.s_a.rows() + 1) {
    fail("component deltas and symbol trace do not align");
  }
  const Matd& deltas = result.component_deltas;
  for (Index t = 1; t < deltas.rows(); ++t) {
    const Index sym_row = t - 1;
    for (Index i = 0; i < deltas.cols(); ++i) {
      const bool mismatch = trace.s_a(sym_row, i) != trace.s_b(sym_row, i);
      const double bound = (1.0 - leak) * deltas(t - 1, i) +
                           (mismatch ? leak * d_l : 0.0) + 1e-9;
      if (deltas(t, i) > bound) return false;
    }
  }
  return true;
}

std::vector<double> fading_memory_probe(const EspTestSpec& spec,
                                        int perturb_time,
                                        std::uint64_t trial_seed,
                                        bool perturb) {
  spec.validate();
  if (perturb_time < 0 || perturb_time >= spec.horizon) {
    fail("perturb_time must lie in [0, horizon)");
  }
  const std::uint64_t master = mix_seed({spec.config.seed, trial_seed});
  ReservoirConfig cfg = spec.config;
  cfg.seed = master;
  const ReservoirMatrices m = build_reservoir(cfg);
  const InputSequence inputs =
      gen_inputs(spec.input_dist, spec.horizon, cfg.input_dim,
                 mix_seed({master, stream::input}));

  Matd values_b = inputs.values;
  if (perturb) {
    values_b.row(perturb_time) =
        gen_inputs(spec.input_dist, 1, cfg.input_dim,
                   mix_seed({master, stream::perturb}))
            .values.row(0);
  }

  // Both twins start identically and share the noise realization, so the
  // replaced input is the only difference between them.
  StateVector a{init_state(InitMode::Zero, cfg.n, 0), 0};
  StateVector b{init_state(InitMode::Zero, cfg.n, 0), 0};
  const std::uint64_t noise_seed = mix_seed({master, stream::noise_a});
  Rng noise_a(noise_seed);
  Rng noise_b(noise_seed);
  Rng* rng_a = spec.activation.stochastic() ? &noise_a : nullptr;
  Rng* rng_b = spec.activation.stochastic() ? &noise_b : nullptr;

  Stepper stepper_a(m, spec.activation, cfg.leak);
  Stepper stepper_b(m, spec.activation, cfg.leak);
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(spec.horizon - perturb_time) + 1);
  if (perturb_time == 0) trace.push_back((a.x - b.x).norm());
  for (int t = 1; t <= spec.horizon; ++t) {
    const bool ok_a = stepper_a.advance(a, inputs.values.row(t - 1).transpose(),
                                        rng_a);
    const bool ok_b =
        stepper_b.advance(b, values_b.row(t - 1).transpose(), rng_b);
    if (!ok_a || !ok_b) break;
    if (t >= perturb_time) trace.push_back((a.x - b.x).norm());
  }
  return trace;
}

namespace {

struct CycleSearch {
  const std::vector<double>& codebook;
  std::unordered_map<std::uint64_t, int> level_of;
  Index n;
  Index period;

  CycleSearch(const std::vector<double>& cb, Index n_in, Index period_in)
      : codebook(cb), n(n_in), period(period_in) {
    for (std::size_t i = 0; i < cb.size(); ++i) {
      level_of.emplace(std::bit_cast<std::uint64_t>(cb[i]),
                       static_cast<int>(i));
    }
  }

  std::uint64_t encode(const Vecd& x, Index phase) const {
    std::uint64_t code = static_cast<std::uint64_t>(phase);
    for (Index i = 0; i < n; ++i) {
      const auto it = level_of.find(std::bit_cast<std::uint64_t>(x[i]));
      if (it == level_of.end()) {
        throw std::logic_error(
            "post-activation state left the activation codebook");
      }
      code = code * codebook.size() + static_cast<std::uint64_t>(it->second);
    }
    return code;
  }
};

std::vector<std::uint64_t> canonical_rotation(
    std::vector<std::uint64_t> cycle) {
  std::vector<std::uint64_t> best = cycle;
  for (std::size_t shift = 1; shift < cycle.size(); ++shift) {
    std::rotate(cycle.begin(), cycle.begin() + 1, cycle.end());
    if (cycle < best) best = cycle;
  }
  return best;
}

}  // namespace

AttractorReport enumerate_quantized_attractors(const ReservoirMatrices& m,
                                               const ActivationSpec& activation,
                                               const Matd& input_cycle,
                                               const std::vector<Vecd>& inits,
                                               long step_budget) {
  activation.validate();
  if (!activation.has_codebook()) {
    fail("attractor enumeration requires a codebook activation");
  }
  if (m.n() > 8) fail("attractor enumeration requires n <= 8");
  if (input_cycle.rows() < 1) fail("input cycle must have at least one step");
  if (input_cycle.rows() > 4096) fail("input cycle period must be <= 4096");
  if (input_cycle.cols() != m.input_dim()) {
    fail("input cycle width must match the input dimension");
  }
  if (inits.empty()) fail("at least one initial condition is required");
  if (step_budget < 1) fail("step budget must be >= 1");

  const std::vector<double> codebook = activation.codebook();
  const Index period = input_cycle.rows();
  CycleSearch search(codebook, m.n(), period);

  AttractorReport report;
  std::map<std::vector<std::uint64_t>, std::size_t> cycle_index;

  for (const Vecd& x0 : inits) {
    if (x0.size() != m.n()) fail("initial condition has the wrong dimension");
    StateVector s{x0, 0};
    Stepper stepper(m, activation, 1.0);
    std::unordered_map<std::uint64_t, long> seen;
    std::vector<std::uint64_t> codes;
    std::vector<Vecd> states;
    long repeat_at = -1;
    long first_seen = -1;
    for (long step = 0; step < step_budget; ++step) {
      const auto u = input_cycle.row(s.t % period).transpose();
      if (!stepper.advance(s, u)) {
        throw std::logic_error("quantized trajectory diverged");
      }
      const std::uint64_t code = search.encode(s.x, s.t % period);
      const auto [it, inserted] = seen.emplace(code, step);
      if (!inserted) {
        repeat_at = step;
        first_seen = it->second;
        break;
      }
      codes.push_back(code);
      states.push_back(s.x);
    }
    if (repeat_at < 0) {
      report.unique = report.cycles.size() == 1;
      throw AttractorBudgetError(std::move(report));
    }

    std::vector<std::uint64_t> cycle_codes(
        codes.begin() + first_seen, codes.end());
    const std::vector<std::uint64_t> canon =
        canonical_rotation(std::move(cycle_codes));
    const auto [it, inserted] =
        cycle_index.emplace(canon, report.cycles.size());
    if (inserted) {
      report.cycles.emplace_back(states.begin() + first_seen, states.end());
      report.basin_counts.push_back(0);
    }
    ++report.basin_counts[it->second];
  }
  report.unique = report.cycles.size() == 1;
  return report;
}

AttractorReport enumerate_quantized_attractors(const EspTestSpec& spec,
                                               const Matd& input_cycle,
                                               const std::vector<Vecd>& inits,
                                               long step_budget) {
  spec.validate();
  if (spec.config.leak != 1.0) {
    fail("attractor enumeration requires leak = 1");
  }
  if (spec.config.n > 8) fail("attractor enumeration requires n <= 8");
  ReservoirConfig cfg = spec.config;
  const ReservoirMatrices m = build_reservoir(cfg);
  return enumerate_quantized_attractors(m, spec.activation, input_cycle, inits,
                                        step_budget);
}

AttractorReport enumerate_quantized_attractors(const EspTestSpec& spec,
                                               const Matd& input_cycle,
                                               int init_samples,
                                               long step_budget) {
  if (init_samples < 1) fail("init_samples must be >= 1");
  std::vector<Vecd> inits;
  inits.reserve(static_cast<std::size_t>(init_samples));
  for (int i = 0; i < init_samples; ++i) {
    Rng rng(mix_seed({spec.config.seed, stream::attractor,
                      static_cast<std::uint64_t>(i)}));
    Vecd x0(spec.config.n);
    for (Index j = 0; j < spec.config.n; ++j) x0[j] = rng.uniform(-2.0, 2.0);
    inits.push_back(std::move(x0));
  }
  return enumerate_quantized_attractors(spec, input_cycle, inits, step_budget);
}

}  // namespace esn
