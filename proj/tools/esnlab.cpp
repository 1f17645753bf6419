#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <csignal>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "esn/analysis.hpp"
#include "esn/esp.hpp"
#include "esn/io.hpp"
#include "esn/rng.hpp"
#include "esn/sweep.hpp"
#include "json.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidationError = 2;
constexpr int kIoError = 3;
constexpr int kIncomplete = 4;
constexpr int kInterrupted = 130;

std::atomic<bool> g_cancel{false};

void handle_interrupt(int) { g_cancel.store(true); }

std::string default_out_dir() {
  if (const char* env = std::getenv("ESNLAB_OUT")) {
    if (*env != '\0') return env;
  }
  return "out";
}

nlohmann::ordered_json opt_json(const std::optional<int>& v) {
  if (v) return *v;
  return nullptr;
}

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

std::string describe_time(const std::optional<double>& v) {
  if (!v) return "-";
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.2f", *v);
  return buffer;
}

void print_cells(const esn::PhaseDiagram& diagram) {
  for (const esn::SweepCell& cell : diagram.cells) {
    std::printf(
        "%-22s %-8s n=%-5ld rho=%-8g leak=%-5g fraction=%.4f "
        "mean_time=%-8s mean_final=%g\n",
        cell.activation.c_str(),
        esn::input_dist_name(cell.distribution).c_str(),
        static_cast<long>(cell.n), cell.rho, cell.leak,
        cell.stats.convergence_fraction,
        describe_time(cell.stats.mean_convergence_time).c_str(),
        cell.stats.mean_final_distance);
  }
}

int finish_diagram(const esn::PhaseDiagram& diagram, const std::string& out,
                   const std::string& stem) {
  print_cells(diagram);
  esn::emit(diagram, esn::EmitFormat::csv, out + "/" + stem + ".csv");
  esn::emit(diagram, esn::EmitFormat::json, out + "/" + stem + ".json");
  esn::emit_heatmaps(diagram, out, stem);
  std::printf("run %s: %zu cells -> %s/%s.{csv,json}\n",
              diagram.run_id.c_str(), diagram.cells.size(), out.c_str(),
              stem.c_str());
  if (!diagram.complete) {
    std::fprintf(stderr, "run incomplete; partial results flagged\n");
    return g_cancel.load() ? kInterrupted : kIncomplete;
  }
  return kOk;
}

struct EspTestOptions {
  std::string family = "tanh";
  std::string dist = "gaussian";
  long n = 100;
  double rho = 0.95;
  double leak = 0.7;
  double density = 0.1;
  double input_scaling = 1.0;
  int trials = 1;
  int horizon = 200;
  double threshold = 0.1;
  int extended_horizon = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_esp_test_cmd(const EspTestOptions& o) {
  esn::EspTestSpec spec;
  spec.config.n = o.n;
  spec.config.rho_target = o.rho;
  spec.config.leak = o.leak;
  spec.config.density = o.density;
  spec.config.input_scaling = o.input_scaling;
  spec.config.seed = o.seed;
  spec.activation = esn::ActivationSpec::from_name(o.family);
  spec.input_dist = esn::input_dist_from_name(o.dist);
  spec.horizon = o.horizon;
  spec.threshold = o.threshold;
  spec.trials = o.trials;
  if (o.extended_horizon > 0) {
    spec.extend_if_unconverged = true;
    spec.extended_horizon = o.extended_horizon;
  }
  spec.validate();

  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  bool interrupted = false;
  for (int t = 0; t < o.trials; ++t) {
    if (g_cancel.load()) {
      interrupted = true;
      break;
    }
    const esn::TrajectoryPairResult r = esn::run_pair(spec, t);
    std::printf("trial %d: converged=%s time=%d final=%g diverged=%s\n", t,
                r.converged ? "true" : "false",
                r.convergence_time.value_or(-1), r.final_distance,
                r.diverged ? "true" : "false");

    std::string trace = "t,distance\n";
    for (std::size_t i = 0; i < r.distances.size(); ++i) {
      trace += std::to_string(i);
      trace += ',';
      trace += esn::format_double(r.distances[i]);
      trace += '\n';
    }
    esn::write_text_atomic(o.out + "/trace_" + std::to_string(t) + ".csv",
                           trace);

    nlohmann::ordered_json rec;
    rec["trial"] = t;
    rec["converged"] = r.converged;
    rec["convergence_time"] = opt_json(r.convergence_time);
    rec["final_distance"] = r.final_distance;
    rec["decay_rate"] = opt_json(r.decay_rate);
    rec["symbol_lock_time"] = opt_json(r.symbol_lock_time);
    rec["diverged"] = r.diverged;
    if (r.extended_converged.has_value()) {
      rec["extended_converged"] = *r.extended_converged;
      rec["extended_convergence_time"] = opt_json(r.extended_convergence_time);
      rec["extended_final_distance"] = opt_json(r.extended_final_distance);
    }
    rec["distances"] = r.distances;
    records.push_back(std::move(rec));
  }
  esn::write_text_atomic(o.out + "/esp_test.json", records.dump(2) + "\n");
  std::printf("wrote %zu trial records to %s/esp_test.json\n", records.size(),
              o.out.c_str());
  return interrupted ? kInterrupted : kOk;
}

struct SweepOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out;
  int parallelism = 1;
  bool full_paper = false;
};

void apply_set_flags(esn::SweepGrid& grid,
                     const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    }
    esn::apply_override(grid, kv.substr(0, eq), kv.substr(eq + 1));
  }
}

int run_sweep_cmd(const SweepOptions& o) {
  esn::SweepGrid grid;
  if (!o.config_path.empty()) {
    grid = esn::parse_sweep_config(esn::read_text_file(o.config_path));
  }
  if (o.full_paper) {
    grid.trials_per_cell = 50;
    grid.seeds = {1, 2, 3, 4, 5};
  }
  apply_set_flags(grid, o.sets);
  const esn::PhaseDiagram diagram = run_sweep(grid, o.parallelism, &g_cancel);
  return finish_diagram(diagram, o.out, "phase");
}

struct ScalingOptions {
  std::vector<std::string> families;
  std::vector<long> n_values{1, 10, 50, 100};
  int trials = 20;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int parallelism = 1;
  bool full_paper = false;
  std::string out;
};

int run_scaling_cmd(const ScalingOptions& o) {
  std::vector<std::string> families = o.families;
  if (families.empty()) {
    for (const std::string& name : esn::ActivationSpec::family_names()) {
      if (name != "brownian") families.push_back(name);
    }
  }
  std::vector<esn::ActivationSpec> activations;
  for (const std::string& name : families) {
    activations.push_back(esn::ActivationSpec::from_name(name));
  }
  std::vector<esn::Index> sizes(o.n_values.begin(), o.n_values.end());
  const int trials = o.full_paper ? 50 : o.trials;
  const std::vector<std::uint64_t> seeds =
      o.full_paper ? std::vector<std::uint64_t>{1, 2, 3, 4, 5} : o.seeds;
  const esn::PhaseDiagram diagram =
      esn::scaling_run(activations, sizes, trials, seeds, o.parallelism,
                       &g_cancel);
  return finish_diagram(diagram, o.out, "scaling");
}

struct ExtremeRhoOptions {
  std::string family = "cantor_function";
  std::vector<double> rho_values{0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0};
  int trials = 20;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int parallelism = 1;
  bool full_paper = false;
  std::string out;
};

int run_extreme_rho_cmd(const ExtremeRhoOptions& o) {
  const int trials = o.full_paper ? 50 : o.trials;
  const std::vector<std::uint64_t> seeds =
      o.full_paper ? std::vector<std::uint64_t>{1, 2, 3, 4, 5} : o.seeds;
  const esn::PhaseDiagram diagram = esn::extreme_rho_run(
      esn::ActivationSpec::from_name(o.family), o.rho_values, trials, seeds,
      o.parallelism, &g_cancel);
  return finish_diagram(diagram, o.out, "extreme_rho");
}

struct LipschitzOptions {
  std::vector<std::string> families;
  long samples = 100000;
  double epsilon = 1e-6;
  double lo = -5.0;
  double hi = 5.0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_lipschitz_cmd(const LipschitzOptions& o) {
  std::vector<std::string> families = o.families;
  if (families.empty()) {
    for (const std::string& name : esn::ActivationSpec::family_names()) {
      if (name != "brownian") families.push_back(name);
    }
  }
  std::string csv = "family,max,median,p95\n";
  for (const std::string& name : families) {
    const esn::LipschitzStats stats = esn::estimate_lipschitz(
        esn::ActivationSpec::from_name(name), o.epsilon, o.samples,
        esn::Interval{o.lo, o.hi}, o.seed);
    std::printf("%-22s max=%-12g median=%-12g p95=%g\n", name.c_str(),
                stats.max, stats.median, stats.p95);
    csv += name;
    csv += ',';
    csv += esn::format_double(stats.max);
    csv += ',';
    csv += esn::format_double(stats.median);
    csv += ',';
    csv += esn::format_double(stats.p95);
    csv += '\n';
  }
  esn::write_text_atomic(o.out + "/lipschitz.csv", csv);
  std::printf("wrote %zu rows to %s/lipschitz.csv\n", families.size(),
              o.out.c_str());
  return kOk;
}

struct VerifySpectralOptions {
  long n = 500;
  double rho = 10.0;
  double density = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

int run_verify_spectral_cmd(const VerifySpectralOptions& o) {
  esn::ReservoirConfig config;
  config.n = o.n;
  config.rho_target = o.rho;
  config.density = o.density;
  config.seed = o.seed;
  const esn::ReservoirMatrices m = esn::build_reservoir(config);

  if (o.n <= esn::kDenseSpectralLimit) {
    const Eigen::VectorXcd eigs = esn::eigenvalues_dense(m.dense_res());
    double max_modulus = 0.0;
    std::string csv = "re,im\n";
    for (esn::Index i = 0; i < eigs.size(); ++i) {
      max_modulus = std::max(max_modulus, std::abs(eigs[i]));
      csv += esn::format_double(eigs[i].real());
      csv += ',';
      csv += esn::format_double(eigs[i].imag());
      csv += '\n';
    }
    esn::write_text_atomic(o.out + "/eigenvalues.csv", csv);
    std::printf(
        "n=%ld target=%g achieved=%.10g rel_err=%.3g (%ld eigenvalues -> "
        "%s/eigenvalues.csv)\n",
        o.n, o.rho, max_modulus, std::abs(max_modulus - o.rho) / o.rho,
        static_cast<long>(eigs.size()), o.out.c_str());
  } else {
    const double estimate = esn::spectral_radius(m.w_res);
    std::string csv = "estimate\n";
    csv += esn::format_double(estimate);
    csv += '\n';
    esn::write_text_atomic(o.out + "/spectral_estimate.csv", csv);
    std::printf("n=%ld target=%g estimate=%.10g rel_err=%.3g -> "
                "%s/spectral_estimate.csv\n",
                o.n, o.rho, estimate, std::abs(estimate - o.rho) / o.rho,
                o.out.c_str());
  }
  return kOk;
}

struct OracleOptions {
  std::string family = "cantor_set";
  long n = 4;
  double rho = 1.0;
  double density = 1.0;
  int inits = 8;
  long cycle_length = 1;
  bool zero_input = false;
  long budget = 1000000;
  std::uint64_t seed = 0;
  std::string out;
};

int run_oracle_cmd(const OracleOptions& o) {
  esn::EspTestSpec spec;
  spec.config.n = o.n;
  spec.config.rho_target = o.rho;
  spec.config.leak = 1.0;
  spec.config.density = o.density;
  spec.config.seed = o.seed;
  spec.activation = esn::ActivationSpec::from_name(o.family);

  esn::Matd cycle;
  if (o.zero_input) {
    cycle = esn::Matd::Zero(o.cycle_length, 1);
  } else {
    cycle = esn::gen_inputs(esn::InputDist::Gaussian, o.cycle_length, 1,
                            esn::mix_seed({o.seed, esn::stream::input}))
                .values;
  }

  esn::AttractorReport report;
  bool budget_exhausted = false;
  try {
    report = esn::enumerate_quantized_attractors(spec, cycle, o.inits,
                                                 o.budget);
  } catch (const esn::AttractorBudgetError& e) {
    report = e.partial;
    budget_exhausted = true;
    std::fprintf(stderr, "budget exhausted: %s\n", e.what());
  }

  nlohmann::ordered_json j;
  j["family"] = o.family;
  j["n"] = o.n;
  j["inits"] = o.inits;
  j["cycle_length"] = o.cycle_length;
  j["budget_exhausted"] = budget_exhausted;
  j["unique"] = report.unique;
  j["basin_counts"] = report.basin_counts;
  nlohmann::ordered_json cycles = nlohmann::ordered_json::array();
  for (const std::vector<esn::Vecd>& cyc : report.cycles) {
    nlohmann::ordered_json states = nlohmann::ordered_json::array();
    for (const esn::Vecd& state : cyc) {
      states.push_back(
          std::vector<double>(state.data(), state.data() + state.size()));
    }
    cycles.push_back(std::move(states));
  }
  j["cycles"] = std::move(cycles);
  esn::write_text_atomic(o.out + "/oracle.json", j.dump(2) + "\n");

  std::printf("%zu distinct cycle(s), unique=%s, basins:", report.cycles.size(),
              report.unique ? "true" : "false");
  for (long basin : report.basin_counts) std::printf(" %ld", basin);
  std::printf(" -> %s/oracle.json\n", o.out.c_str());
  return kOk;
}

struct CurvesOptions {
  std::string family = "tanh";
  long points = 10001;
  double lo = -3.0;
  double hi = 3.0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_curves_cmd(const CurvesOptions& o) {
  if (o.points < 2) throw std::invalid_argument("curves needs >= 2 points");
  const esn::ActivationSpec spec = esn::ActivationSpec::from_name(o.family);
  esn::Rng rng(o.seed);
  std::string csv = "x,value\n";
  for (long i = 0; i < o.points; ++i) {
    const double x = o.lo + (o.hi - o.lo) * static_cast<double>(i) /
                              static_cast<double>(o.points - 1);
    const double y = spec.stochastic() ? spec.eval(x, rng) : spec.eval(x);
    csv += esn::format_double(x);
    csv += ',';
    csv += esn::format_double(y);
    csv += '\n';
  }
  const std::string path = o.out + "/curve_" + o.family + ".csv";
  esn::write_text_atomic(path, csv);
  std::printf("wrote %ld points to %s\n", o.points, path.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, handle_interrupt);

  CLI::App app{"reservoir stability laboratory"};
  app.require_subcommand(1);
  app.footer(
      "exit codes: 0 ok (scientific outcomes such as non-convergence are "
      "data), 2 validation error, 3 I/O error, 4 incomplete run, 130 "
      "interrupted\n"
      "ESNLAB_OUT sets the default output directory (fallback: ./out)");
  const std::string out_default = default_out_dir();
  int rc = kOk;

  EspTestOptions esp_opts;
  esp_opts.out = out_default;
  CLI::App* esp = app.add_subcommand(
      "esp-test", "Run two-trajectory convergence trials");
  esp->add_option("--family", esp_opts.family, "Activation family name");
  esp->add_option("--dist", esp_opts.dist,
                  "Input distribution: gaussian, uniform, sparse");
  esp->add_option("--n", esp_opts.n, "Reservoir size");
  esp->add_option("--rho", esp_opts.rho, "Target spectral radius");
  esp->add_option("--leak", esp_opts.leak, "Leak rate in (0,1]");
  esp->add_option("--density", esp_opts.density, "Reservoir weight density");
  esp->add_option("--input-scaling", esp_opts.input_scaling,
                  "Input weight multiplier");
  esp->add_option("--trials", esp_opts.trials, "Number of trials");
  esp->add_option("--horizon", esp_opts.horizon, "Steps per trial");
  esp->add_option("--threshold", esp_opts.threshold,
                  "Convergence distance threshold");
  esp->add_option("--extended-horizon", esp_opts.extended_horizon,
                  "Continue unconverged trials to this horizon");
  esp->add_option("--seed", esp_opts.seed, "Master seed");
  esp->add_option("--out", esp_opts.out, "Output directory");
  esp->callback([&]() { rc = run_esp_test_cmd(esp_opts); });

  SweepOptions sweep_opts;
  sweep_opts.out = out_default;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run a full parameter grid and emit phase data");
  sweep->add_option("--config", sweep_opts.config_path,
                    "Grid config file (key = value lines)");
  sweep->add_option("--set", sweep_opts.sets,
                    "Override one grid key, key=value (repeatable)");
  sweep->add_option("--parallelism", sweep_opts.parallelism, "Worker threads");
  sweep->add_flag("--full-paper-scale", sweep_opts.full_paper,
                  "Use 50 trials x 5 seeds per cell");
  sweep->add_option("--out", sweep_opts.out, "Output directory");
  sweep->callback([&]() { rc = run_sweep_cmd(sweep_opts); });

  ScalingOptions scaling_opts;
  scaling_opts.out = out_default;
  CLI::App* scaling = app.add_subcommand(
      "scaling", "Convergence versus reservoir size at rho=0.95, leak=0.7");
  scaling->add_option("--families", scaling_opts.families,
                      "Comma-separated activation families (default: all "
                      "deterministic)")
      ->delimiter(',');
  scaling->add_option("--n-values", scaling_opts.n_values,
                      "Comma-separated reservoir sizes")
      ->delimiter(',');
  scaling->add_option("--trials", scaling_opts.trials, "Trials per cell");
  scaling->add_option("--seeds", scaling_opts.seeds, "Comma-separated seeds")
      ->delimiter(',');
  scaling->add_option("--parallelism", scaling_opts.parallelism,
                      "Worker threads");
  scaling->add_flag("--full-paper-scale", scaling_opts.full_paper,
                    "Use 50 trials x 5 seeds per cell");
  scaling->add_option("--out", scaling_opts.out, "Output directory");
  scaling->callback([&]() { rc = run_scaling_cmd(scaling_opts); });

  ExtremeRhoOptions extreme_opts;
  extreme_opts.out = out_default;
  CLI::App* extreme = app.add_subcommand(
      "extreme-rho", "Convergence versus spectral radius at n=100, leak=0.7");
  extreme->add_option("--family", extreme_opts.family, "Activation family");
  extreme->add_option("--rho-values", extreme_opts.rho_values,
                      "Comma-separated spectral radii")
      ->delimiter(',');
  extreme->add_option("--trials", extreme_opts.trials, "Trials per cell");
  extreme->add_option("--seeds", extreme_opts.seeds, "Comma-separated seeds")
      ->delimiter(',');
  extreme->add_option("--parallelism", extreme_opts.parallelism,
                      "Worker threads");
  extreme->add_flag("--full-paper-scale", extreme_opts.full_paper,
                    "Use 50 trials x 5 seeds per cell");
  extreme->add_option("--out", extreme_opts.out, "Output directory");
  extreme->callback([&]() { rc = run_extreme_rho_cmd(extreme_opts); });

  LipschitzOptions lip_opts;
  lip_opts.out = out_default;
  CLI::App* lip = app.add_subcommand(
      "lipschitz", "Sampled difference-quotient table per activation");
  lip->add_option("--families", lip_opts.families,
                  "Comma-separated activation families (default: all "
                  "deterministic)")
      ->delimiter(',');
  lip->add_option("--samples", lip_opts.samples, "Sample count");
  lip->add_option("--epsilon", lip_opts.epsilon, "Difference step");
  lip->add_option("--lo", lip_opts.lo, "Domain lower bound");
  lip->add_option("--hi", lip_opts.hi, "Domain upper bound");
  lip->add_option("--seed", lip_opts.seed, "Sampling seed");
  lip->add_option("--out", lip_opts.out, "Output directory");
  lip->callback([&]() { rc = run_lipschitz_cmd(lip_opts); });

  VerifySpectralOptions spectral_opts;
  spectral_opts.out = out_default;
  CLI::App* spectral = app.add_subcommand(
      "verify-spectral", "Check the achieved spectral radius of one draw");
  spectral->add_option("--n", spectral_opts.n, "Reservoir size");
  spectral->add_option("--rho", spectral_opts.rho, "Target spectral radius");
  spectral->add_option("--density", spectral_opts.density, "Weight density");
  spectral->add_option("--seed", spectral_opts.seed, "Draw seed");
  spectral->add_option("--out", spectral_opts.out, "Output directory");
  spectral->callback([&]() { rc = run_verify_spectral_cmd(spectral_opts); });

  OracleOptions oracle_opts;
  oracle_opts.out = out_default;
  CLI::App* oracle = app.add_subcommand(
      "oracle", "Enumerate limit cycles of a quantized reservoir at leak=1");
  oracle->add_option("--family", oracle_opts.family,
                     "Codebook activation: mandelbrot_discrete or cantor_set");
  oracle->add_option("--n", oracle_opts.n, "Reservoir size (<= 8)");
  oracle->add_option("--rho", oracle_opts.rho, "Target spectral radius");
  oracle->add_option("--density", oracle_opts.density, "Weight density");
  oracle->add_option("--inits", oracle_opts.inits,
                     "Number of sampled initial states");
  oracle->add_option("--cycle-length", oracle_opts.cycle_length,
                     "Periodic input cycle length");
  oracle->add_flag("--zero-input", oracle_opts.zero_input,
                   "Drive with a constant zero input");
  oracle->add_option("--budget", oracle_opts.budget, "Step budget per init");
  oracle->add_option("--seed", oracle_opts.seed, "Master seed");
  oracle->add_option("--out", oracle_opts.out, "Output directory");
  oracle->callback([&]() { rc = run_oracle_cmd(oracle_opts); });

  CurvesOptions curves_opts;
  curves_opts.out = out_default;
  CLI::App* curves = app.add_subcommand(
      "curves", "Export one activation curve as x,value samples");
  curves->add_option("--family", curves_opts.family, "Activation family");
  curves->add_option("--points", curves_opts.points, "Sample count");
  curves->add_option("--lo", curves_opts.lo, "Domain lower bound");
  curves->add_option("--hi", curves_opts.hi, "Domain upper bound");
  curves->add_option("--seed", curves_opts.seed,
                     "Noise seed for the stochastic family");
  curves->add_option("--out", curves_opts.out, "Output directory");
  curves->callback([&]() { rc = run_curves_cmd(curves_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kValidationError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIoError;
  }
  return rc;
}
