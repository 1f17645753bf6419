#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "esn/esp.hpp"

using namespace esn;

namespace {

ReservoirMatrices manual_matrices(const Matd& w_res, const Matd& w_in) {
  ReservoirMatrices m;
  m.w_res = w_res.sparseView();
  m.w_in = w_in;
  m.achieved_rho = spectral_radius_dense(w_res);
  return m;
}

EspTestSpec base_spec(const char* family, Index n, double rho, double leak,
                      std::uint64_t seed) {
  EspTestSpec spec;
  spec.config.n = n;
  spec.config.rho_target = rho;
  spec.config.leak = leak;
  spec.config.seed = seed;
  spec.activation = ActivationSpec::from_name(family);
  return spec;
}

double median(std::vector<double> v) {
  REQUIRE(!v.empty());
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return 0.5 * (v[mid - 1] + v[mid]);
}

SymbolTrace fixture_trace(const std::vector<double>& a,
                          const std::vector<double>& b) {
  SymbolTrace trace;
  trace.start_time = 0;
  trace.s_a.resize(static_cast<Index>(a.size()), 1);
  trace.s_b.resize(static_cast<Index>(b.size()), 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    trace.s_a(static_cast<Index>(i), 0) = a[i];
    trace.s_b(static_cast<Index>(i), 0) = b[i];
  }
  return trace;
}

}  // namespace

TEST_CASE("decay rate estimation") {
  SUBCASE("exact geometric sequence") {
    std::vector<double> d;
    for (int t = 0; t < 40; ++t) d.push_back(5.0 * std::pow(0.3, t));
    const auto rate = estimate_decay_rate(d);
    REQUIRE(rate.has_value());
    CHECK(std::fabs(*rate - std::log(0.3)) <= 1e-6);
  }

  SUBCASE("constant trace has zero slope") {
    const std::vector<double> d(20, 0.7);
    const auto rate = estimate_decay_rate(d);
    REQUIRE(rate.has_value());
    CHECK(std::fabs(*rate) <= 1e-9);
  }

  SUBCASE("too few usable points") {
    std::vector<double> d;
    for (int t = 0; t < 9; ++t) d.push_back(std::pow(0.5, t));
    CHECK_FALSE(estimate_decay_rate(d).has_value());
    CHECK_FALSE(estimate_decay_rate(std::vector<double>(30, 0.0)).has_value());
    CHECK_FALSE(estimate_decay_rate({}).has_value());
  }

  SUBCASE("points above the starting distance are excluded") {
    std::vector<double> d;
    for (int t = 0; t < 30; ++t) d.push_back(2.0 * std::pow(0.5, t));
    d[3] = 100.0;
    const auto rate = estimate_decay_rate(d);
    REQUIRE(rate.has_value());
    CHECK(std::fabs(*rate - std::log(0.5)) <= 1e-2);
  }
}

TEST_CASE("symbol lock detection") {
  SUBCASE("equal from the start") {
    const SymbolTrace t = fixture_trace({1, 0, 1, 1}, {1, 0, 1, 1});
    CHECK(detect_symbol_lock(t) == 0);
  }

  SUBCASE("locks mid-trace") {
    const SymbolTrace t =
        fixture_trace({0, 0, 1, 0, 1, 1, 1, 1}, {1, 0, 1, 1, 0, 1, 1, 1});
    CHECK(detect_symbol_lock(t) == 5);
  }

  SUBCASE("mismatch at the final step means no lock") {
    const SymbolTrace t = fixture_trace({1, 1, 1, 0}, {1, 1, 1, 1});
    CHECK_FALSE(detect_symbol_lock(t).has_value());
  }

  SUBCASE("empty trace is a configuration error") {
    CHECK_THROWS_AS(detect_symbol_lock(SymbolTrace{}), std::invalid_argument);
  }

  SUBCASE("start time offsets the reported lock") {
    SymbolTrace t = fixture_trace({0, 1, 1}, {1, 1, 1});
    t.start_time = 1;
    CHECK(detect_symbol_lock(t) == 2);
  }
}

TEST_CASE("pair runs") {
  SUBCASE("identical zero initial states stay identical") {
    EspTestSpec spec = base_spec("tanh", 30, 0.95, 0.7, 1);
    spec.init_a = InitMode::Zero;
    spec.init_b = InitMode::Zero;
    const TrajectoryPairResult r = run_pair(spec, 0);
    REQUIRE(r.distances.size() == 201);
    for (const double d : r.distances) CHECK(d == 0.0);
    CHECK(r.converged);
    CHECK(r.convergence_time == 0);
    CHECK(r.final_distance == 0.0);
    CHECK_FALSE(r.decay_rate.has_value());
    CHECK_FALSE(r.diverged);
  }

  SUBCASE("median convergence time for a smooth baseline") {
    EspTestSpec spec = base_spec("tanh", 100, 0.95, 0.7, 7);
    std::vector<double> times;
    for (int trial = 0; trial < 21; ++trial) {
      const TrajectoryPairResult r = run_pair(spec, trial);
      REQUIRE(r.converged);
      times.push_back(double(*r.convergence_time));
    }
    const double med = median(times);
    CHECK(med >= 7.0);
    CHECK(med <= 23.0);
  }

  SUBCASE("median convergence time for the staircase activation") {
    EspTestSpec spec = base_spec("cantor_function", 100, 0.95, 0.7, 7);
    std::vector<double> times;
    for (int trial = 0; trial < 21; ++trial) {
      const TrajectoryPairResult r = run_pair(spec, trial);
      REQUIRE(r.converged);
      times.push_back(double(*r.convergence_time));
    }
    const double med = median(times);
    CHECK(med >= 2.0);
    CHECK(med <= 10.0);
  }

  SUBCASE("convergence flag matches the recorded distances") {
    for (const char* family :
         {"tanh", "relu", "cantor_set", "logistic_sigmoid", "weierstrass"}) {
      for (std::uint64_t seed : {11ull, 12ull}) {
        EspTestSpec spec = base_spec(family, 30, 0.95, 0.7, seed);
        spec.horizon = 100;
        const TrajectoryPairResult r = run_pair(spec, 3);
        REQUIRE(!r.diverged);
        REQUIRE(r.distances.size() == 101);
        double min_d = r.distances[0];
        std::optional<int> first;
        for (std::size_t t = 0; t < r.distances.size(); ++t) {
          CHECK(r.distances[t] >= 0.0);
          min_d = std::min(min_d, r.distances[t]);
          if (!first && r.distances[t] < spec.threshold) {
            first = static_cast<int>(t);
          }
        }
        CHECK(r.converged == (min_d < spec.threshold));
        CHECK(r.convergence_time == first);
        CHECK(r.final_distance == r.distances.back());
      }
    }
  }

  SUBCASE("distances stay under the bounded-state ceiling") {
    EspTestSpec spec = base_spec("tanh", 50, 1.2, 0.7, 5);
    const TrajectoryPairResult r = run_pair(spec, 1);
    const double ceiling = 4.0 * std::sqrt(50.0) + 1e-9;
    for (const double d : r.distances) CHECK(d <= ceiling);
  }

  SUBCASE("swapping the initial conditions leaves distances unchanged") {
    for (const char* family : {"tanh", "cantor_set"}) {
      EspTestSpec spec = base_spec(family, 40, 0.9, 0.7, 9);
      EspTestSpec swapped = spec;
      std::swap(swapped.init_a, swapped.init_b);
      const TrajectoryPairResult r1 = run_pair(spec, 4);
      const TrajectoryPairResult r2 = run_pair(swapped, 4);
      CHECK(r1.distances == r2.distances);
      CHECK(r1.distances_inf == r2.distances_inf);
    }
  }

  SUBCASE("identical spec and trial seed reproduce bitwise") {
    for (const char* family : {"tanh", "weierstrass", "mandelbrot_discrete"}) {
      const EspTestSpec spec = base_spec(family, 40, 0.9, 0.7, 13);
      const TrajectoryPairResult r1 = run_pair(spec, 2);
      const TrajectoryPairResult r2 = run_pair(spec, 2);
      CHECK(r1.distances == r2.distances);
      CHECK(r1.converged == r2.converged);
      CHECK(r1.convergence_time == r2.convergence_time);
    }
  }

  SUBCASE("distinct trial seeds give distinct runs") {
    const EspTestSpec spec = base_spec("tanh", 40, 0.9, 0.7, 13);
    const TrajectoryPairResult r1 = run_pair(spec, 2);
    const TrajectoryPairResult r2 = run_pair(spec, 3);
    CHECK(r1.distances != r2.distances);
  }

  SUBCASE("run_trials covers trial seeds 0..trials-1") {
    EspTestSpec spec = base_spec("tanh", 20, 0.9, 0.7, 13);
    spec.trials = 4;
    const auto batch = run_trials(spec);
    REQUIRE(batch.size() == 4);
    CHECK(batch[0].distances == run_pair(spec, 0).distances);
    CHECK(batch[3].distances == run_pair(spec, 3).distances);
  }

  SUBCASE("overflow is reported as divergence") {
    EspTestSpec spec = base_spec("relu", 10, 1e80, 1.0, 3);
    spec.config.input_scaling = 1e200;
    spec.horizon = 50;
    const TrajectoryPairResult r = run_pair(spec, 0);
    CHECK(r.diverged);
    CHECK(std::isinf(r.final_distance));
    CHECK(r.distances.size() < 51);
  }

  SUBCASE("spec validation") {
    EspTestSpec spec = base_spec("tanh", 10, 0.9, 0.7, 1);
    spec.threshold = 0.0;
    CHECK_THROWS_AS(run_pair(spec, 0), std::invalid_argument);
    spec = base_spec("tanh", 10, 0.9, 0.7, 1);
    spec.extended_horizon = 100;
    CHECK_THROWS_AS(run_pair(spec, 0), std::invalid_argument);
    spec = base_spec("tanh", 10, 0.9, 0.7, 1);
    spec.trials = 0;
    CHECK_THROWS_AS(run_trials(spec), std::invalid_argument);
  }
}

TEST_CASE("extended horizon runs") {
  SUBCASE("an unconverged run keeps stepping when extension is enabled") {
    EspTestSpec spec = base_spec("weierstrass", 50, 0.95, 0.7, 17);
    spec.extend_if_unconverged = true;
    spec.extended_horizon = 600;
    const TrajectoryPairResult r = run_pair(spec, 1);
    if (!r.converged && !r.diverged) {
      REQUIRE(r.distances.size() == 601);
      REQUIRE(r.extended_converged.has_value());
      CHECK(r.final_distance == r.distances[200]);
      CHECK(r.extended_final_distance == r.distances.back());
      CHECK_FALSE(r.convergence_time.has_value());
    }
  }

  SUBCASE("a converged run never extends") {
    EspTestSpec spec = base_spec("tanh", 50, 0.95, 0.7, 17);
    spec.extend_if_unconverged = true;
    spec.extended_horizon = 600;
    const TrajectoryPairResult r = run_pair(spec, 1);
    REQUIRE(r.converged);
    CHECK(r.distances.size() == 201);
    CHECK_FALSE(r.extended_converged.has_value());
    CHECK_FALSE(r.extended_final_distance.has_value());
  }

  SUBCASE("extension is off by default") {
    EspTestSpec spec = base_spec("weierstrass", 50, 0.95, 0.7, 17);
    const TrajectoryPairResult r = run_pair(spec, 1);
    CHECK(r.distances.size() == 201);
    CHECK_FALSE(r.extended_converged.has_value());
  }
}

TEST_CASE("post-lock contraction and collision bound") {
  SUBCASE("locked quantized runs contract geometrically") {
    int locked = 0;
    for (const char* family : {"cantor_set", "mandelbrot_discrete"}) {
      for (std::uint64_t trial = 0; trial < 8; ++trial) {
        EspTestSpec spec = base_spec(family, 15, 0.9, 0.7, 23);
        spec.horizon = 150;
        const PairRun run = run_pair_traced(spec, trial);
        REQUIRE(run.symbols.populated());
        CHECK(check_collision_bound(run.result, run.symbols, 0.7, 1.0));
        if (run.result.symbol_lock_time) {
          ++locked;
          CHECK(verify_post_lock_contraction(run.result, run.symbols, 0.7));
        }
      }
    }
    CHECK(locked >= 1);
  }

  SUBCASE("leak of one zeroes the distance after lock") {
    int locked = 0;
    for (std::uint64_t trial = 0; trial < 8; ++trial) {
      EspTestSpec spec = base_spec("cantor_set", 12, 0.9, 1.0, 29);
      spec.horizon = 120;
      const PairRun run = run_pair_traced(spec, trial);
      if (!run.result.symbol_lock_time) continue;
      ++locked;
      CHECK(verify_post_lock_contraction(run.result, run.symbols, 1.0));
      const auto lock = static_cast<std::size_t>(*run.result.symbol_lock_time);
      for (std::size_t t = lock + 1; t < run.result.distances.size(); ++t) {
        CHECK(run.result.distances[t] == 0.0);
      }
    }
    CHECK(locked >= 1);
  }

  SUBCASE("a non-contracting trace is rejected") {
    TrajectoryPairResult result;
    result.distances = {1.0, 1.0, 1.0, 1.0};
    const SymbolTrace trace = fixture_trace({1, 1, 1, 1}, {1, 1, 1, 1});
    CHECK_FALSE(verify_post_lock_contraction(result, trace, 0.5));
  }

  SUBCASE("a contracting fixture is accepted") {
    TrajectoryPairResult result;
    result.distances = {1.0, 0.5, 0.25, 0.125};
    const SymbolTrace trace = fixture_trace({1, 1, 1, 1}, {1, 1, 1, 1});
    CHECK(verify_post_lock_contraction(result, trace, 0.5));
  }

  SUBCASE("contraction check requires a lock") {
    TrajectoryPairResult result;
    result.distances = {1.0, 0.5};
    const SymbolTrace trace = fixture_trace({1, 1}, {1, 0});
    CHECK_THROWS_AS(verify_post_lock_contraction(result, trace, 0.5),
                    std::invalid_argument);
  }

  SUBCASE("collision fixtures") {
    TrajectoryPairResult result;
    result.component_deltas.resize(2, 1);
    result.component_deltas << 1.0, 0.5;
    CHECK(check_collision_bound(result, fixture_trace({0}, {0}), 0.5, 1.0));

    result.component_deltas << 1.0, 0.51;
    CHECK_FALSE(
        check_collision_bound(result, fixture_trace({0}, {0}), 0.5, 1.0));

    result.component_deltas << 1.0, 1.0;
    CHECK(check_collision_bound(result, fixture_trace({0}, {1}), 0.5, 1.0));

    result.component_deltas << 1.0, 5.0;
    CHECK_FALSE(
        check_collision_bound(result, fixture_trace({0}, {1}), 0.5, 1.0));
  }
}

TEST_CASE("fading memory probe") {
  SUBCASE("no perturbation means a zero trace") {
    const EspTestSpec spec = base_spec("tanh", 50, 0.95, 0.7, 31);
    const std::vector<double> trace = fading_memory_probe(spec, 20, 0, false);
    REQUIRE(trace.size() == 181);
    for (const double d : trace) CHECK(d == 0.0);
  }

  SUBCASE("a smooth reservoir forgets the perturbation") {
    const EspTestSpec spec = base_spec("tanh", 100, 0.95, 0.7, 31);
    const std::vector<double> trace = fading_memory_probe(spec, 20, 0);
    REQUIRE(trace.size() == 181);
    CHECK(trace[0] == 0.0);
    CHECK(*std::max_element(trace.begin(), trace.end()) > 0.0);
    for (std::size_t k = 40; k < trace.size(); ++k) CHECK(trace[k] < 0.01);
  }

  SUBCASE("a rough reservoir keeps amplifying the perturbation") {
    const EspTestSpec spec = base_spec("weierstrass", 100, 0.95, 0.7, 31);
    const std::vector<double> trace = fading_memory_probe(spec, 20, 0);
    REQUIRE(trace.size() == 181);
    for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k] >= 0.01);
  }

  SUBCASE("perturb time must precede the horizon") {
    const EspTestSpec spec = base_spec("tanh", 10, 0.9, 0.7, 1);
    CHECK_THROWS_AS(fading_memory_probe(spec, 200, 0), std::invalid_argument);
    CHECK_THROWS_AS(fading_memory_probe(spec, -1, 0), std::invalid_argument);
  }
}

TEST_CASE("quantized attractor enumeration") {
  ActivationSpec cantor_set = ActivationSpec::from_name("cantor_set");

  SUBCASE("zero weights collapse to a unique fixed point") {
    const ReservoirMatrices m =
        manual_matrices(Matd::Zero(1, 1), Matd::Zero(1, 1));
    const Matd cycle = Matd::Zero(1, 1);
    std::vector<Vecd> inits;
    for (const double v : {-1.5, 0.3, 2.0}) {
      inits.push_back(Vecd::Constant(1, v));
    }
    const AttractorReport report =
        enumerate_quantized_attractors(m, cantor_set, cycle, inits);
    REQUIRE(report.cycles.size() == 1);
    REQUIRE(report.cycles[0].size() == 1);
    CHECK(report.cycles[0][0][0] == 0.0);
    CHECK(report.unique);
    CHECK(report.basin_counts == std::vector<long>{3});
  }

  SUBCASE("a flip map settles into a unique two-cycle") {
    Matd w_res(1, 1), w_in(1, 1);
    w_res << 20.0;
    w_in << -20.0;
    const ReservoirMatrices m = manual_matrices(w_res, w_in);
    const Matd cycle = Matd::Ones(1, 1);
    std::vector<Vecd> inits;
    for (const double v : {0.0, 1.0, -2.0, 0.77}) {
      inits.push_back(Vecd::Constant(1, v));
    }
    const AttractorReport report =
        enumerate_quantized_attractors(m, cantor_set, cycle, inits);
    REQUIRE(report.cycles.size() == 1);
    REQUIRE(report.cycles[0].size() == 2);
    const double lo = std::min(report.cycles[0][0][0], report.cycles[0][1][0]);
    const double hi = std::max(report.cycles[0][0][0], report.cycles[0][1][0]);
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
    CHECK(report.unique);
    CHECK(report.basin_counts == std::vector<long>{4});
  }

  SUBCASE("a negative self-loop splits into two fixed points") {
    Matd w_res(1, 1), w_in(1, 1);
    w_res << -20.0;
    w_in << 0.0;
    const ReservoirMatrices m = manual_matrices(w_res, w_in);
    const Matd cycle = Matd::Zero(1, 1);
    std::vector<Vecd> inits;
    for (const double v : {-1.0, -0.05}) {
      inits.push_back(Vecd::Constant(1, v));
    }
    const AttractorReport report =
        enumerate_quantized_attractors(m, cantor_set, cycle, inits);
    REQUIRE(report.cycles.size() == 2);
    CHECK_FALSE(report.unique);
    CHECK(report.basin_counts == std::vector<long>({1, 1}));
    long total = 0;
    for (const long c : report.basin_counts) total += c;
    CHECK(total == 2);
  }

  SUBCASE("orbits repeat within the state-space bound") {
    Matd w_res(2, 2), w_in(2, 1);
    w_res << 2.5, -1.5, 1.0, 0.5;
    w_in << 1.0, -1.0;
    const ReservoirMatrices m = manual_matrices(w_res, w_in);
    Matd cycle(2, 1);
    cycle << 0.3, -0.7;
    std::vector<Vecd> inits;
    for (int i = 0; i < 5; ++i) {
      Rng rng(mix_seed({77, static_cast<std::uint64_t>(i)}));
      Vecd x0(2);
      x0 << rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0);
      inits.push_back(x0);
    }
    // Pigeonhole: 2 levels ^ 2 units x period 2 = 8 reachable pairs, so a
    // budget of 9 steps must always suffice.
    const AttractorReport report =
        enumerate_quantized_attractors(m, cantor_set, cycle, inits, 9);
    long total = 0;
    for (const long c : report.basin_counts) total += c;
    CHECK(total == 5);
    CHECK(report.cycles.size() == report.basin_counts.size());
  }

  SUBCASE("an exhausted budget raises an error with the partial report") {
    const ReservoirMatrices m =
        manual_matrices(Matd::Zero(1, 1), Matd::Zero(1, 1));
    const Matd cycle = Matd::Zero(1, 1);
    const std::vector<Vecd> inits{Vecd::Constant(1, 0.5)};
    CHECK_THROWS_AS(
        enumerate_quantized_attractors(m, cantor_set, cycle, inits, 1),
        AttractorBudgetError);
    try {
      enumerate_quantized_attractors(m, cantor_set, cycle, inits, 1);
    } catch (const AttractorBudgetError& e) {
      CHECK(e.partial.cycles.empty());
    }
  }

  SUBCASE("sampled initial conditions cover the requested count") {
    EspTestSpec spec = base_spec("mandelbrot_discrete", 4, 2.5, 1.0, 41);
    spec.config.density = 1.0;
    const Matd cycle = Matd::Constant(1, 1, 0.5);
    const AttractorReport report =
        enumerate_quantized_attractors(spec, cycle, 12);
    long total = 0;
    for (const long c : report.basin_counts) total += c;
    CHECK(total == 12);
    CHECK(report.unique == (report.cycles.size() == 1));
  }

  SUBCASE("validation rejects unusable configurations") {
    const Matd cycle = Matd::Zero(1, 1);
    EspTestSpec spec = base_spec("cantor_set", 4, 0.9, 0.7, 1);
    CHECK_THROWS_AS(enumerate_quantized_attractors(spec, cycle, 3),
                    std::invalid_argument);
    spec = base_spec("tanh", 4, 0.9, 1.0, 1);
    CHECK_THROWS_AS(enumerate_quantized_attractors(spec, cycle, 3),
                    std::invalid_argument);
    spec = base_spec("cantor_set", 9, 0.9, 1.0, 1);
    CHECK_THROWS_AS(enumerate_quantized_attractors(spec, cycle, 3),
                    std::invalid_argument);
  }
}
