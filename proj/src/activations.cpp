#include "esn/activations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace esn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument(what);
}

}  // namespace

bool Interval::bounded() const {
  return std::isfinite(lo) && std::isfinite(hi);
}

double eval_tanh(double x) { return std::tanh(x); }

double eval_relu(double x) { return x > 0.0 ? x : 0.0; }

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double eval_mandelbrot(double x, const MandelbrotParams& p, bool continuous) {
  // c is real, so the whole orbit stays on the real line.
  const double c = x / p.scale;
  double z = 0.0;
  for (int n = 1; n <= p.t_max; ++n) {
    z = z * z + c;
    if (std::fabs(z) > p.bailout) {
      if (!continuous) {
        return static_cast<double>(n) / static_cast<double>(p.t_max);
      }
      double t = static_cast<double>(n) - std::log2(std::log2(std::fabs(z)));
      t = std::clamp(t, 0.0, static_cast<double>(p.t_max));
      return t / static_cast<double>(p.t_max);
    }
  }
  return 1.0;
}

double eval_logistic(double x, const LogisticParams& p, bool modulo) {
  double y;
  if (modulo) {
    y = std::clamp(std::fmod(std::fabs(x), 1.0), p.eps, 1.0 - p.eps);
  } else {
    y = sigmoid(x);
  }
  return p.r * y * (1.0 - y);
}

double eval_weierstrass(double x, const WeierstrassParams& p) {
  double sum = 0.0;
  double ak = 1.0;
  double bk = 1.0;
  const double pi = 3.141592653589793238462643383279502884;
  for (int k = 0; k < p.terms; ++k) {
    sum += ak * std::cos(bk * pi * p.s * x);
    ak *= p.a;
    bk *= p.b;
  }
  return sum / (1.0 - p.a);
}

double cantor_staircase(double y, int depth) {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;

  // Record ternary branch decisions, then fold backwards so the arithmetic
  // matches the recursive definition rounding-for-rounding.
  constexpr int kMaxFold = 64;
  if (depth > kMaxFold) {
    // Depths beyond the fold buffer fall back to the literal recursion.
    constexpr double third = 1.0 / 3.0;
    constexpr double two_thirds = 2.0 / 3.0;
    if (y <= third) return 0.5 * cantor_staircase(3.0 * y, depth - 1);
    if (y < two_thirds) return 0.5;
    return 0.5 + 0.5 * cantor_staircase(3.0 * y - 2.0, depth - 1);
  }

  constexpr double third = 1.0 / 3.0;
  constexpr double two_thirds = 2.0 / 3.0;
  bool high[kMaxFold];
  int levels = 0;
  bool plateau = false;
  for (int d = 0; d < depth; ++d) {
    if (y <= third) {
      high[levels++] = false;
      y = 3.0 * y;
    } else if (y < two_thirds) {
      plateau = true;
      break;
    } else {
      high[levels++] = true;
      y = 3.0 * y - 2.0;
    }
  }
  double r = plateau ? 0.5 : y;
  for (int d = levels - 1; d >= 0; --d) {
    r = high[d] ? 0.5 + 0.5 * r : 0.5 * r;
  }
  return r;
}

double eval_cantor_function(double x, const CantorParams& p) {
  return cantor_staircase(sigmoid(x), p.depth);
}

double eval_cantor_set(double x, const CantorParams& p) {
  const double y = sigmoid(x);
  double pow3 = 1.0;
  for (int k = 0; k < p.depth; ++k) {
    const double digit = std::floor(std::fmod(pow3 * y, 3.0));
    if (digit == 1.0) return 0.0;
    pow3 *= 3.0;
  }
  return 1.0;
}

double brownian_increment(const BrownianParams& p, Rng& rng) {
  const double m = p.k_sigma * std::sqrt(p.dt);
  const double w = std::sqrt(p.dt) * rng.gaussian();
  return std::clamp(w, -m, m);
}

double brownian_value(double x, double w, const BrownianParams& p) {
  return p.eta * (std::tanh(x) + w);
}

double eval_brownian(double x, const BrownianParams& p, Rng& rng) {
  return brownian_value(x, brownian_increment(p, rng), p);
}

void ActivationSpec::validate() const {
  switch (family) {
    case ActivationFamily::Tanh:
    case ActivationFamily::ReLU:
      break;
    case ActivationFamily::MandelbrotDiscrete:
    case ActivationFamily::MandelbrotContinuous:
      if (!(mandelbrot.scale > 0.0)) fail("mandelbrot scale must be > 0");
      if (mandelbrot.t_max < 1) fail("mandelbrot t_max must be >= 1");
      if (!(mandelbrot.bailout >= 2.0)) fail("mandelbrot bailout must be >= 2");
      break;
    case ActivationFamily::LogisticSigmoid:
    case ActivationFamily::LogisticModulo:
      if (!(logistic.r > 0.0 && logistic.r <= 4.0))
        fail("logistic r must be in (0, 4]");
      if (!(logistic.eps > 0.0 && logistic.eps < 0.5))
        fail("logistic eps must be in (0, 0.5)");
      break;
    case ActivationFamily::Weierstrass:
      if (!(weierstrass.a > 0.0 && weierstrass.a < 1.0))
        fail("weierstrass a must be in (0, 1)");
      if (!(weierstrass.b > 1.0)) fail("weierstrass b must be > 1");
      if (!(weierstrass.a * weierstrass.b > 1.0))
        fail("weierstrass a*b must be > 1");
      if (weierstrass.terms < 1) fail("weierstrass terms must be >= 1");
      if (!(weierstrass.s > 0.0)) fail("weierstrass s must be > 0");
      break;
    case ActivationFamily::CantorFunction:
    case ActivationFamily::CantorSet:
      if (cantor.depth < 1) fail("cantor depth must be >= 1");
      break;
    case ActivationFamily::Brownian:
      if (!(brownian.eta > 0.0)) fail("brownian eta must be > 0");
      if (!(brownian.dt > 0.0)) fail("brownian dt must be > 0");
      if (!(brownian.k_sigma > 0.0)) fail("brownian k_sigma must be > 0");
      break;
  }
}

Interval ActivationSpec::declared_bounds() const {
  switch (family) {
    case ActivationFamily::Tanh:
      return {-1.0, 1.0};
    case ActivationFamily::ReLU:
      return {0.0, kInf};
    case ActivationFamily::MandelbrotDiscrete:
    case ActivationFamily::MandelbrotContinuous:
      return {0.0, 1.0};
    case ActivationFamily::LogisticSigmoid:
    case ActivationFamily::LogisticModulo:
      return {0.0, logistic.r / 4.0};
    case ActivationFamily::Weierstrass: {
      const double a = weierstrass.a;
      const double c =
          (1.0 - std::pow(a, weierstrass.terms)) / ((1.0 - a) * (1.0 - a));
      return {-c, c};
    }
    case ActivationFamily::CantorFunction:
    case ActivationFamily::CantorSet:
      return {0.0, 1.0};
    case ActivationFamily::Brownian: {
      const double c =
          brownian.eta * (1.0 + brownian.k_sigma * std::sqrt(brownian.dt));
      return {-c, c};
    }
  }
  fail("unknown activation family");
}

bool ActivationSpec::has_codebook() const {
  return family == ActivationFamily::MandelbrotDiscrete ||
         family == ActivationFamily::CantorSet;
}

std::vector<double> ActivationSpec::codebook() const {
  if (family == ActivationFamily::MandelbrotDiscrete) {
    std::vector<double> levels;
    levels.reserve(mandelbrot.t_max + 1);
    for (int n = 0; n <= mandelbrot.t_max; ++n) {
      levels.push_back(static_cast<double>(n) /
                       static_cast<double>(mandelbrot.t_max));
    }
    return levels;
  }
  if (family == ActivationFamily::CantorSet) {
    return {0.0, 1.0};
  }
  return {};
}

std::string ActivationSpec::name() const {
  switch (family) {
    case ActivationFamily::Tanh: return "tanh";
    case ActivationFamily::ReLU: return "relu";
    case ActivationFamily::MandelbrotDiscrete: return "mandelbrot_discrete";
    case ActivationFamily::MandelbrotContinuous:
      return "mandelbrot_continuous";
    case ActivationFamily::LogisticSigmoid: return "logistic_sigmoid";
    case ActivationFamily::LogisticModulo: return "logistic_modulo";
    case ActivationFamily::Weierstrass: return "weierstrass";
    case ActivationFamily::CantorFunction: return "cantor_function";
    case ActivationFamily::CantorSet: return "cantor_set";
    case ActivationFamily::Brownian: return "brownian";
  }
  fail("unknown activation family");
}

ActivationSpec ActivationSpec::from_name(std::string_view name) {
  ActivationSpec spec;
  if (name == "tanh") spec.family = ActivationFamily::Tanh;
  else if (name == "relu") spec.family = ActivationFamily::ReLU;
  else if (name == "mandelbrot_discrete")
    spec.family = ActivationFamily::MandelbrotDiscrete;
  else if (name == "mandelbrot_continuous")
    spec.family = ActivationFamily::MandelbrotContinuous;
  else if (name == "logistic_sigmoid")
    spec.family = ActivationFamily::LogisticSigmoid;
  else if (name == "logistic_modulo")
    spec.family = ActivationFamily::LogisticModulo;
  else if (name == "weierstrass") spec.family = ActivationFamily::Weierstrass;
  else if (name == "cantor_function")
    spec.family = ActivationFamily::CantorFunction;
  else if (name == "cantor_set") spec.family = ActivationFamily::CantorSet;
  else if (name == "brownian") spec.family = ActivationFamily::Brownian;
  else fail("unknown activation family: " + std::string(name));
  return spec;
}

std::vector<std::string> ActivationSpec::family_names() {
  return {"tanh",
          "relu",
          "mandelbrot_discrete",
          "mandelbrot_continuous",
          "logistic_sigmoid",
          "logistic_modulo",
          "weierstrass",
          "cantor_function",
          "cantor_set",
          "brownian"};
}

double ActivationSpec::eval(double x) const {
  switch (family) {
    case ActivationFamily::Tanh: return eval_tanh(x);
    case ActivationFamily::ReLU: return eval_relu(x);
    case ActivationFamily::MandelbrotDiscrete:
      return eval_mandelbrot(x, mandelbrot, false);
    case ActivationFamily::MandelbrotContinuous:
      return eval_mandelbrot(x, mandelbrot, true);
    case ActivationFamily::LogisticSigmoid:
      return eval_logistic(x, logistic, false);
    case ActivationFamily::LogisticModulo:
      return eval_logistic(x, logistic, true);
    case ActivationFamily::Weierstrass:
      return eval_weierstrass(x, weierstrass);
    case ActivationFamily::CantorFunction:
      return eval_cantor_function(x, cantor);
    case ActivationFamily::CantorSet: return eval_cantor_set(x, cantor);
    case ActivationFamily::Brownian:
      fail("brownian activation requires an rng");
  }
  fail("unknown activation family");
}

double ActivationSpec::eval(double x, Rng& rng) const {
  if (family == ActivationFamily::Brownian) {
    return eval_brownian(x, brownian, rng);
  }
  return eval(x);
}

void apply_elementwise(const ActivationSpec& spec, const Vecd& v, Vecd& out,
                       Rng* rng) {
  if (spec.stochastic() && rng == nullptr) {
    fail("brownian activation requires an rng");
  }
  out.resize(v.size());
  if (spec.stochastic()) {
    for (Index i = 0; i < v.size(); ++i) {
      out[i] = eval_brownian(v[i], spec.brownian, *rng);
    }
    return;
  }
  for (Index i = 0; i < v.size(); ++i) {
    out[i] = spec.eval(v[i]);
  }
}

Vecd apply_elementwise(const ActivationSpec& spec, const Vecd& v, Rng* rng) {
  Vecd out;
  apply_elementwise(spec, v, out, rng);
  return out;
}

}  // namespace esn
