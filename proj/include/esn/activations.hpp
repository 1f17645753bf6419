#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "esn/rng.hpp"
#include "esn/types.hpp"

namespace esn {

enum class ActivationFamily {
  Tanh,
  ReLU,
  MandelbrotDiscrete,
  MandelbrotContinuous,
  LogisticSigmoid,
  LogisticModulo,
  Weierstrass,
  CantorFunction,
  CantorSet,
  Brownian,
};

/// Escape-time map parameters: c = x / scale, iterate z <- z^2 + c from
/// z = 0, escape when |z| > bailout, for at most t_max iterations.
struct MandelbrotParams {
  double scale = 2.0;
  int t_max = 20;
  double bailout = 2.0;
};

/// Logistic map r*y*(1-y) applied to a squashed argument. The squashing is
/// chosen by the family: sigmoid or clip(|x| mod 1, eps, 1-eps).
struct LogisticParams {
  double r = 3.7;
  double eps = 1e-10;
};

/// Truncated Weierstrass series (1/(1-a)) * sum_{k<terms} a^k cos(b^k pi s x).
struct WeierstrassParams {
  double a = 0.5;
  double b = 3.0;
  int terms = 10;
  double s = 1.0;
};

/// Depth of the ternary recursion for the Cantor staircase and Cantor set.
struct CantorParams {
  int depth = 10;
};

/// eta * (tanh(x) + w), w ~ N(0, dt) clamped to |w| <= k_sigma * sqrt(dt).
struct BrownianParams {
  double eta = 0.3;
  double dt = 0.01;
  double k_sigma = 3.0;
};

/// Closed output interval; hi may be +infinity (ReLU).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool bounded() const;
};

/// One activation function: family tag plus the parameters of that family.
/// Quantized families (MandelbrotDiscrete, CantorSet) expose a finite
/// codebook of output levels; Brownian is the only stochastic family.
struct ActivationSpec {
  ActivationFamily family = ActivationFamily::Tanh;
  MandelbrotParams mandelbrot;
  LogisticParams logistic;
  WeierstrassParams weierstrass;
  CantorParams cantor;
  BrownianParams brownian;

  /// Throws std::invalid_argument when a parameter is out of range.
  void validate() const;

  Interval declared_bounds() const;
  bool has_codebook() const;
  /// Sorted distinct output levels; empty unless has_codebook().
  std::vector<double> codebook() const;
  bool stochastic() const { return family == ActivationFamily::Brownian; }

  std::string name() const;
  static ActivationSpec from_name(std::string_view name);
  static std::vector<std::string> family_names();

  /// Scalar evaluation; throws for Brownian (which needs an rng).
  double eval(double x) const;
  double eval(double x, Rng& rng) const;
};

double eval_tanh(double x);
double eval_relu(double x);
double eval_mandelbrot(double x, const MandelbrotParams& p, bool continuous);
double eval_logistic(double x, const LogisticParams& p, bool modulo);
double eval_weierstrass(double x, const WeierstrassParams& p);
double eval_cantor_function(double x, const CantorParams& p);
double eval_cantor_set(double x, const CantorParams& p);

/// Cantor staircase on y in [0,1], evaluated depth levels deep by the
/// digit-by-digit fold (value-identical to the textbook recursion).
double cantor_staircase(double y, int depth);

/// Clamped Brownian increment w (the only source of randomness).
double brownian_increment(const BrownianParams& p, Rng& rng);
/// Deterministic part given an increment; eval_brownian composes the two.
double brownian_value(double x, double w, const BrownianParams& p);
double eval_brownian(double x, const BrownianParams& p, Rng& rng);

/// Logistic sigmoid 1/(1+exp(-x)), shared by several families.
double sigmoid(double x);

/// Elementwise application. rng is required for the Brownian family
/// (one increment per component, consumed in index order) and ignored
/// otherwise; passing none for Brownian is a configuration error.
Vecd apply_elementwise(const ActivationSpec& spec, const Vecd& v,
                       Rng* rng = nullptr);
void apply_elementwise(const ActivationSpec& spec, const Vecd& v, Vecd& out,
                       Rng* rng = nullptr);

}  // namespace esn
