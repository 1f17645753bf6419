#include "esn/sweep.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "esn/io.hpp"
#include "json.hpp"

namespace esn {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument(what);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

/// Running digest that folds values in strict field order.
struct Digest {
  std::uint64_t h = 0x5EEDBA5EC0DEC0DEull;
  void add(std::uint64_t v) { h = mix_seed({h, v}); }
  void add_double(double v) { add(bits(v)); }
  void add_string(const std::string& s) {
    add(s.size());
    add(fnv1a(s));
  }
};

void digest_activation(Digest& d, const ActivationSpec& spec) {
  d.add_string(spec.name());
  d.add_double(spec.mandelbrot.scale);
  d.add(static_cast<std::uint64_t>(spec.mandelbrot.t_max));
  d.add_double(spec.mandelbrot.bailout);
  d.add_double(spec.logistic.r);
  d.add_double(spec.logistic.eps);
  d.add_double(spec.weierstrass.a);
  d.add_double(spec.weierstrass.b);
  d.add(static_cast<std::uint64_t>(spec.weierstrass.terms));
  d.add_double(spec.weierstrass.s);
  d.add(static_cast<std::uint64_t>(spec.cantor.depth));
  d.add_double(spec.brownian.eta);
  d.add_double(spec.brownian.dt);
  d.add_double(spec.brownian.k_sigma);
}

/// Per-task result kept deliberately small so full-scale sweeps stay cheap.
struct TrialSummary {
  bool converged = false;
  bool diverged = false;
  int convergence_time = -1;
  double final_distance = 0.0;
};

struct TaskLayout {
  long cells = 0;
  long seeds = 0;
  long trials = 0;

  long total() const { return cells * seeds * trials; }
  long cell_of(long task) const { return task / (seeds * trials); }
  long seed_of(long task) const { return (task / trials) % seeds; }
  long trial_of(long task) const { return task % trials; }
};

std::vector<SweepCell> make_cells(const SweepGrid& grid) {
  std::vector<SweepCell> cells;
  cells.reserve(grid.activations.size() * grid.distributions.size() *
                grid.n_values.size() * grid.rho_values.size() *
                grid.leak_values.size());
  for (const ActivationSpec& act : grid.activations) {
    for (InputDist dist : grid.distributions) {
      for (Index n : grid.n_values) {
        for (double rho : grid.rho_values) {
          for (double leak : grid.leak_values) {
            SweepCell cell;
            cell.activation = act.name();
            cell.distribution = dist;
            cell.n = n;
            cell.rho = rho;
            cell.leak = leak;
            cells.push_back(std::move(cell));
          }
        }
      }
    }
  }
  return cells;
}

EspTestSpec cell_spec(const SweepGrid& grid, const SweepCell& cell,
                      const ActivationSpec& activation) {
  EspTestSpec spec;
  spec.config.n = cell.n;
  spec.config.rho_target = cell.rho;
  spec.config.leak = cell.leak;
  spec.config.density = grid.density;
  spec.config.input_scaling = grid.input_scaling;
  spec.config.input_dim = 1;
  spec.config.seed = 0;
  spec.activation = activation;
  spec.input_dist = cell.distribution;
  spec.horizon = grid.horizon;
  spec.threshold = grid.threshold;
  return spec;
}

TrialSummary summarize(const TrajectoryPairResult& r) {
  TrialSummary s;
  s.converged = r.converged;
  s.diverged = r.diverged;
  s.convergence_time = r.convergence_time.value_or(-1);
  s.final_distance = r.final_distance;
  return s;
}

CellStats aggregate(const SweepGrid& grid,
                    const std::vector<TrialSummary>& summaries,
                    const std::vector<unsigned char>& done, long first,
                    long count) {
  CellStats st;
  double time_sum = 0.0;
  long time_n = 0;
  double dist_sum = 0.0;
  double dist_sq_sum = 0.0;
  long dist_n = 0;
  double stuck_sum = 0.0;
  long stuck_n = 0;
  for (long i = first; i < first + count; ++i) {
    if (!done[static_cast<std::size_t>(i)]) continue;
    const TrialSummary& s = summaries[static_cast<std::size_t>(i)];
    ++st.trial_count;
    if (s.diverged) {
      ++st.diverged_count;
    } else if (s.converged) {
      ++st.converged_count;
      if (s.convergence_time >= 0) {
        time_sum += s.convergence_time;
        ++time_n;
      }
    }
    if (!s.diverged) {
      dist_sum += s.final_distance;
      dist_sq_sum += s.final_distance * s.final_distance;
      ++dist_n;
      if (!s.converged) {
        stuck_sum += s.final_distance;
        ++stuck_n;
      }
    }
  }
  st.convergence_fraction =
      st.trial_count > 0
          ? static_cast<double>(st.converged_count) / st.trial_count
          : 0.0;
  if (time_n > 0) st.mean_convergence_time = time_sum / time_n;
  st.mean_final_distance =
      dist_n > 0 ? dist_sum / dist_n : std::numeric_limits<double>::infinity();
  if (stuck_n > 0) st.mean_final_distance_unconverged = stuck_sum / stuck_n;
  if (dist_n > 0) {
    const double mean = dist_sum / dist_n;
    const double var = std::max(0.0, dist_sq_sum / dist_n - mean * mean);
    st.distance_std = std::sqrt(var);
  }
  const long expected = static_cast<long>(grid.seeds.size()) *
                        static_cast<long>(grid.trials_per_cell);
  st.all_seeds_converged =
      st.trial_count == expected && st.converged_count == st.trial_count;
  return st;
}

std::string hex16(std::uint64_t v) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(v));
  return std::string(buffer, 16);
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value,
                                    const std::string& key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= value.size()) {
    const std::size_t comma = value.find(',', start);
    const std::size_t end = comma == std::string::npos ? value.size() : comma;
    const std::string token = trim(value.substr(start, end - start));
    if (token.empty()) {
      fail("empty list entry for config key '" + key + "'");
    }
    parts.push_back(token);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (parts.empty()) fail("empty value for config key '" + key + "'");
  return parts;
}

double parse_double_token(const std::string& token, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    fail("config key '" + key + "' has a malformed number: '" + token + "'");
  }
}

long long parse_int_token(const std::string& token, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    fail("config key '" + key + "' has a malformed integer: '" + token + "'");
  }
}

std::uint64_t parse_u64_token(const std::string& token,
                              const std::string& key) {
  const long long v = parse_int_token(token, key);
  if (v < 0) fail("config key '" + key + "' requires a nonnegative integer");
  return static_cast<std::uint64_t>(v);
}

using Setter = std::function<void(SweepGrid&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"rho_values",
       [](SweepGrid& g, const std::string& v) {
         g.rho_values.clear();
         for (const std::string& t : split_list(v, "rho_values")) {
           g.rho_values.push_back(parse_double_token(t, "rho_values"));
         }
       }},
      {"leak_values",
       [](SweepGrid& g, const std::string& v) {
         g.leak_values.clear();
         for (const std::string& t : split_list(v, "leak_values")) {
           g.leak_values.push_back(parse_double_token(t, "leak_values"));
         }
       }},
      {"n_values",
       [](SweepGrid& g, const std::string& v) {
         g.n_values.clear();
         for (const std::string& t : split_list(v, "n_values")) {
           g.n_values.push_back(
               static_cast<Index>(parse_int_token(t, "n_values")));
         }
       }},
      {"activations",
       [](SweepGrid& g, const std::string& v) {
         g.activations.clear();
         for (const std::string& t : split_list(v, "activations")) {
           g.activations.push_back(ActivationSpec::from_name(t));
         }
       }},
      {"distributions",
       [](SweepGrid& g, const std::string& v) {
         g.distributions.clear();
         for (const std::string& t : split_list(v, "distributions")) {
           g.distributions.push_back(input_dist_from_name(t));
         }
       }},
      {"trials_per_cell",
       [](SweepGrid& g, const std::string& v) {
         g.trials_per_cell =
             static_cast<int>(parse_int_token(trim(v), "trials_per_cell"));
       }},
      {"seeds",
       [](SweepGrid& g, const std::string& v) {
         g.seeds.clear();
         for (const std::string& t : split_list(v, "seeds")) {
           g.seeds.push_back(parse_u64_token(t, "seeds"));
         }
       }},
      {"horizon",
       [](SweepGrid& g, const std::string& v) {
         g.horizon = static_cast<int>(parse_int_token(trim(v), "horizon"));
       }},
      {"threshold",
       [](SweepGrid& g, const std::string& v) {
         g.threshold = parse_double_token(trim(v), "threshold");
       }},
      {"density",
       [](SweepGrid& g, const std::string& v) {
         g.density = parse_double_token(trim(v), "density");
       }},
      {"input_scaling",
       [](SweepGrid& g, const std::string& v) {
         g.input_scaling = parse_double_token(trim(v), "input_scaling");
       }},
  };
  return table;
}

nlohmann::ordered_json stats_json(const CellStats& st) {
  nlohmann::ordered_json j;
  j["trial_count"] = st.trial_count;
  j["converged_count"] = st.converged_count;
  j["diverged_count"] = st.diverged_count;
  j["convergence_fraction"] = st.convergence_fraction;
  if (st.mean_convergence_time) {
    j["mean_convergence_time"] = *st.mean_convergence_time;
  } else {
    j["mean_convergence_time"] = nullptr;
  }
  j["mean_final_distance"] = st.mean_final_distance;
  if (st.mean_final_distance_unconverged) {
    j["mean_final_distance_unconverged"] = *st.mean_final_distance_unconverged;
  } else {
    j["mean_final_distance_unconverged"] = nullptr;
  }
  j["distance_std"] = st.distance_std;
  j["all_seeds_converged"] = st.all_seeds_converged;
  return j;
}

std::string render_csv(const PhaseDiagram& diagram) {
  std::string out =
      "activation,distribution,n,rho,leak,seed_count,trials,"
      "convergence_fraction,mean_conv_time,mean_final_distance,"
      "all_seeds_converged\n";
  for (const SweepCell& cell : diagram.cells) {
    out += cell.activation;
    out += ',';
    out += input_dist_name(cell.distribution);
    out += ',';
    out += std::to_string(cell.n);
    out += ',';
    out += format_double(cell.rho);
    out += ',';
    out += format_double(cell.leak);
    out += ',';
    out += std::to_string(diagram.grid.seeds.size());
    out += ',';
    out += std::to_string(cell.stats.trial_count);
    out += ',';
    out += format_double(cell.stats.convergence_fraction);
    out += ',';
    if (cell.stats.mean_convergence_time) {
      out += format_double(*cell.stats.mean_convergence_time);
    }
    out += ',';
    out += format_double(cell.stats.mean_final_distance);
    out += ',';
    out += cell.stats.all_seeds_converged ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string render_json(const PhaseDiagram& diagram) {
  nlohmann::ordered_json j;
  j["run_id"] = diagram.run_id;
  j["config_hash"] = diagram.config_hash;
  j["complete"] = diagram.complete;
  nlohmann::ordered_json grid;
  grid["rho_values"] = diagram.grid.rho_values;
  grid["leak_values"] = diagram.grid.leak_values;
  grid["n_values"] = diagram.grid.n_values;
  std::vector<std::string> activation_names;
  for (const ActivationSpec& act : diagram.grid.activations) {
    activation_names.push_back(act.name());
  }
  grid["activations"] = activation_names;
  std::vector<std::string> dist_names;
  for (InputDist dist : diagram.grid.distributions) {
    dist_names.push_back(input_dist_name(dist));
  }
  grid["distributions"] = dist_names;
  grid["trials_per_cell"] = diagram.grid.trials_per_cell;
  grid["seeds"] = diagram.grid.seeds;
  grid["horizon"] = diagram.grid.horizon;
  grid["threshold"] = diagram.grid.threshold;
  grid["density"] = diagram.grid.density;
  grid["input_scaling"] = diagram.grid.input_scaling;
  j["grid"] = std::move(grid);
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const SweepCell& cell : diagram.cells) {
    nlohmann::ordered_json jc;
    jc["activation"] = cell.activation;
    jc["distribution"] = input_dist_name(cell.distribution);
    jc["n"] = cell.n;
    jc["rho"] = cell.rho;
    jc["leak"] = cell.leak;
    jc["stats"] = stats_json(cell.stats);
    cells.push_back(std::move(jc));
  }
  j["cells"] = std::move(cells);
  return j.dump(2) + "\n";
}

}  // namespace

void SweepGrid::validate() const {
  if (rho_values.empty()) fail("rho_values must be nonempty");
  if (leak_values.empty()) fail("leak_values must be nonempty");
  if (n_values.empty()) fail("n_values must be nonempty");
  if (activations.empty()) fail("activations must be nonempty");
  if (distributions.empty()) fail("distributions must be nonempty");
  if (seeds.empty()) fail("seeds must be nonempty");
  if (trials_per_cell < 1) fail("trials_per_cell must be >= 1");
  if (horizon < 1) fail("horizon must be >= 1");
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    fail("threshold must be positive and finite");
  }
  if (!(density > 0.0) || density > 1.0) fail("density must be in (0, 1]");
  if (!std::isfinite(input_scaling) || input_scaling < 0.0) {
    fail("input_scaling must be finite and >= 0");
  }
  for (double rho : rho_values) {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
      fail("rho values must be positive and finite");
    }
  }
  for (double leak : leak_values) {
    if (!(leak > 0.0) || leak > 1.0) fail("leak values must be in (0, 1]");
  }
  for (Index n : n_values) {
    if (n < 1) fail("n values must be >= 1");
  }
  for (const ActivationSpec& act : activations) act.validate();
}

std::uint64_t SweepGrid::config_hash() const {
  Digest d;
  d.add(rho_values.size());
  for (double v : rho_values) d.add_double(v);
  d.add(leak_values.size());
  for (double v : leak_values) d.add_double(v);
  d.add(n_values.size());
  for (Index v : n_values) d.add(static_cast<std::uint64_t>(v));
  d.add(activations.size());
  for (const ActivationSpec& act : activations) digest_activation(d, act);
  d.add(distributions.size());
  for (InputDist dist : distributions) {
    d.add(static_cast<std::uint64_t>(dist));
  }
  d.add(static_cast<std::uint64_t>(trials_per_cell));
  d.add(seeds.size());
  for (std::uint64_t s : seeds) d.add(s);
  d.add(static_cast<std::uint64_t>(horizon));
  d.add_double(threshold);
  d.add_double(density);
  d.add_double(input_scaling);
  return d.h;
}

std::uint64_t sweep_cell_hash(const std::string& activation_name,
                              InputDist dist, Index n, double rho,
                              double leak) {
  return mix_seed({fnv1a(activation_name), static_cast<std::uint64_t>(dist),
                   static_cast<std::uint64_t>(n), bits(rho), bits(leak)});
}

std::uint64_t sweep_trial_seed(std::uint64_t seed_value, int trial_idx,
                               std::uint64_t cell_hash) {
  return mix_seed(
      {seed_value, static_cast<std::uint64_t>(trial_idx), cell_hash});
}

PhaseDiagram run_sweep(const SweepGrid& grid, int parallelism,
                       const std::atomic<bool>* cancel) {
  grid.validate();
  PhaseDiagram diagram;
  diagram.grid = grid;
  diagram.cells = make_cells(grid);
  diagram.config_hash = grid.config_hash();
  diagram.run_id = hex16(diagram.config_hash);

  TaskLayout layout;
  layout.cells = static_cast<long>(diagram.cells.size());
  layout.seeds = static_cast<long>(grid.seeds.size());
  layout.trials = grid.trials_per_cell;
  const long total = layout.total();

  std::vector<std::uint64_t> cell_hashes(diagram.cells.size());
  for (std::size_t c = 0; c < diagram.cells.size(); ++c) {
    const SweepCell& cell = diagram.cells[c];
    cell_hashes[c] = sweep_cell_hash(cell.activation, cell.distribution,
                                     cell.n, cell.rho, cell.leak);
  }
  std::vector<EspTestSpec> specs;
  specs.reserve(diagram.cells.size());
  {
    std::size_t c = 0;
    for (const ActivationSpec& act : grid.activations) {
      const std::size_t per_activation = grid.distributions.size() *
                                         grid.n_values.size() *
                                         grid.rho_values.size() *
                                         grid.leak_values.size();
      for (std::size_t k = 0; k < per_activation; ++k, ++c) {
        specs.push_back(cell_spec(grid, diagram.cells[c], act));
      }
    }
  }

  std::vector<TrialSummary> summaries(static_cast<std::size_t>(total));
  std::vector<unsigned char> done(static_cast<std::size_t>(total), 0);
  std::atomic<long> next_task{0};
  std::atomic<bool> out_of_memory{false};
  std::atomic<bool> halt{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (true) {
      if (halt.load(std::memory_order_relaxed)) break;
      if (cancel != nullptr && cancel->load(std::memory_order_relaxed)) break;
      const long task = next_task.fetch_add(1, std::memory_order_relaxed);
      if (task >= total) break;
      const long cell_idx = layout.cell_of(task);
      const long seed_idx = layout.seed_of(task);
      const long trial_idx = layout.trial_of(task);
      try {
        const std::uint64_t trial_seed = sweep_trial_seed(
            grid.seeds[static_cast<std::size_t>(seed_idx)],
            static_cast<int>(trial_idx),
            cell_hashes[static_cast<std::size_t>(cell_idx)]);
        const TrajectoryPairResult result =
            run_pair(specs[static_cast<std::size_t>(cell_idx)], trial_seed);
        summaries[static_cast<std::size_t>(task)] = summarize(result);
        done[static_cast<std::size_t>(task)] = 1;
      } catch (const std::bad_alloc&) {
        out_of_memory.store(true, std::memory_order_relaxed);
        halt.store(true, std::memory_order_relaxed);
        break;
      } catch (...) {
        {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
        halt.store(true, std::memory_order_relaxed);
        break;
      }
    }
  };

  const int thread_count =
      std::max(1, std::min<int>(parallelism, static_cast<int>(std::min<long>(
                                                 total, 1024))));
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(thread_count));
    for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  long done_count = 0;
  for (unsigned char flag : done) done_count += flag;
  diagram.complete =
      done_count == total && !out_of_memory.load(std::memory_order_relaxed);

  const long per_cell = layout.seeds * layout.trials;
  for (std::size_t c = 0; c < diagram.cells.size(); ++c) {
    diagram.cells[c].stats = aggregate(
        grid, summaries, done, static_cast<long>(c) * per_cell, per_cell);
  }
  diagram.timestamp = std::chrono::system_clock::now();
  return diagram;
}

PhaseDiagram scaling_run(const std::vector<ActivationSpec>& activations,
                         const std::vector<Index>& n_values,
                         int trials_per_cell,
                         const std::vector<std::uint64_t>& seeds,
                         int parallelism, const std::atomic<bool>* cancel) {
  SweepGrid grid;
  grid.rho_values = {0.95};
  grid.leak_values = {0.7};
  grid.n_values = n_values;
  grid.activations = activations;
  grid.distributions = {InputDist::Gaussian};
  grid.trials_per_cell = trials_per_cell;
  grid.seeds = seeds;
  return run_sweep(grid, parallelism, cancel);
}

PhaseDiagram extreme_rho_run(const ActivationSpec& activation,
                             const std::vector<double>& rho_values,
                             int trials_per_cell,
                             const std::vector<std::uint64_t>& seeds,
                             int parallelism, const std::atomic<bool>* cancel) {
  SweepGrid grid;
  grid.rho_values = rho_values;
  grid.leak_values = {0.7};
  grid.n_values = {100};
  grid.activations = {activation};
  grid.distributions = {InputDist::Gaussian};
  grid.trials_per_cell = trials_per_cell;
  grid.seeds = seeds;
  return run_sweep(grid, parallelism, cancel);
}

void emit(const PhaseDiagram& diagram, EmitFormat format,
          const std::string& path) {
  diagram.grid.validate();
  const std::string content =
      format == EmitFormat::csv ? render_csv(diagram) : render_json(diagram);
  write_text_atomic(path, content);
}

std::vector<std::string> emit_heatmaps(const PhaseDiagram& diagram,
                                       const std::string& dir,
                                       const std::string& prefix) {
  diagram.grid.validate();
  const SweepGrid& grid = diagram.grid;
  const std::size_t per_panel =
      grid.rho_values.size() * grid.leak_values.size();
  std::vector<std::string> written;
  std::size_t cell_idx = 0;
  for (const ActivationSpec& act : grid.activations) {
    for (InputDist dist : grid.distributions) {
      for (Index n : grid.n_values) {
        std::string fraction = "rho,leak,value\n";
        std::string allconv = "rho,leak,value\n";
        for (std::size_t k = 0; k < per_panel; ++k) {
          const SweepCell& cell = diagram.cells[cell_idx + k];
          const std::string key =
              format_double(cell.rho) + "," + format_double(cell.leak) + ",";
          fraction +=
              key + format_double(cell.stats.convergence_fraction) + "\n";
          allconv += key + (cell.stats.all_seeds_converged ? "1" : "0") + "\n";
        }
        cell_idx += per_panel;
        const std::string stem = dir + "/" + prefix + "_" + act.name() + "_" +
                                 input_dist_name(dist) + "_n" +
                                 std::to_string(n);
        const std::string fraction_path = stem + "_fraction.csv";
        const std::string allconv_path = stem + "_allconv.csv";
        write_text_atomic(fraction_path, fraction);
        write_text_atomic(allconv_path, allconv);
        written.push_back(fraction_path);
        written.push_back(allconv_path);
      }
    }
  }
  return written;
}

SweepGrid parse_sweep_config(const std::string& text) {
  SweepGrid grid;
  std::size_t line_start = 0;
  int line_number = 0;
  while (line_start <= text.size()) {
    const std::size_t newline = text.find('\n', line_start);
    const std::size_t end =
        newline == std::string::npos ? text.size() : newline;
    std::string line = text.substr(line_start, end - line_start);
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        fail("config line " + std::to_string(line_number) +
             " is not key = value: '" + line + "'");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) {
        fail("config line " + std::to_string(line_number) + " has no key");
      }
      apply_override(grid, key, value);
    }
    if (newline == std::string::npos) break;
    line_start = newline + 1;
  }
  return grid;
}

void apply_override(SweepGrid& grid, const std::string& key,
                    const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) fail("unknown config key '" + key + "'");
  it->second(grid, value);
}

}  // namespace esn
