#include "dmf/model.hpp"

#include <cmath>
#include <string>

#include "dmf/errors.hpp"

namespace dmf {

void validate(const ModelSpec& spec) {
  if (spec.p < 2 || spec.p % 2 != 0) {
    throw InvalidInput("model.p: must be an even integer >= 2, got " + std::to_string(spec.p));
  }
  if (spec.p > kMaxArity) {
    throw InvalidInput("model.p: arity above " + std::to_string(kMaxArity) + " is not supported");
  }
  if (!(spec.beta > 0.0) || !std::isfinite(spec.beta)) {
    throw InvalidInput("model.beta: must be finite and > 0");
  }
  if (!(spec.alpha >= 0.0) || !std::isfinite(spec.alpha)) {
    throw InvalidInput("model.alpha: must be finite and >= 0");
  }
  if (spec.kind == ModelKind::pspin && !spec.coupling.is_symmetric()) {
    throw InvalidInput("model.J: the p-spin coupling law must be symmetric about 0");
  }
}

ThetaSample sample_theta(const ModelSpec& spec, RandomStream& rng) {
  ThetaSample t;
  if (spec.kind == ModelKind::pspin) {
    t.coupling = spec.coupling.sample(rng);
  } else {
    for (int l = 0; l < spec.p; ++l) t.literals[l] = static_cast<std::int8_t>(rng.sign());
  }
  return t;
}

double theta_value(const ModelSpec& spec, const ThetaSample& theta,
                   std::span<const std::int8_t> sigma) {
  if (spec.kind == ModelKind::pspin) {
    int prod = 1;
    for (int l = 0; l < spec.p; ++l) prod *= sigma[l];
    return spec.beta * theta.coupling * prod;
  }
  for (int l = 0; l < spec.p; ++l) {
    if (sigma[l] != theta.literals[l]) return 0.0;
  }
  return -spec.beta;
}

namespace {

ABF build_abf(const ModelSpec& spec, const ThetaSample& theta) {
  ABF r;
  r.p = spec.p;
  if (spec.kind == ModelKind::pspin) {
    const double bj = spec.beta * theta.coupling;
    r.a = std::cosh(bj);
    r.b = std::tanh(bj);
    for (int l = 0; l < spec.p; ++l) r.f[l] = {-1.0, 1.0};
  } else {
    r.a = 1.0;
    r.b = std::expm1(-spec.beta);
    for (int l = 0; l < spec.p; ++l) {
      const double j = theta.literals[l];
      r.f[l] = {(1.0 - j) / 2.0, (1.0 + j) / 2.0};
    }
  }
  return r;
}

}  // namespace

ABF abf(const ModelSpec& spec, const ThetaSample& theta) {
#ifndef NDEBUG
  return abf_checked(spec, theta);
#else
  return build_abf(spec, theta);
#endif
}

ABF abf_checked(const ModelSpec& spec, const ThetaSample& theta) {
  const ABF r = build_abf(spec, theta);
  std::array<std::int8_t, kMaxArity> sigma{};
  const std::uint32_t patterns = 1u << spec.p;
  for (std::uint32_t mask = 0; mask < patterns; ++mask) {
    double prod = r.b;
    for (int l = 0; l < spec.p; ++l) {
      const int bit = (mask >> l) & 1u;
      sigma[l] = static_cast<std::int8_t>(bit ? 1 : -1);
      prod *= r.f[l][bit];
    }
    if (!(std::fabs(prod) < 1.0)) {
      throw ConditionViolation("|b f_1...f_p| < 1 fails for some sign pattern");
    }
    const double lhs = std::exp(theta_value(spec, theta, std::span(sigma.data(), spec.p)));
    const double rhs = r.a * (1.0 + prod);
    if (std::fabs(lhs - rhs) > 1e-12 * std::fabs(lhs)) {
      throw ConditionViolation("exp theta != a(1 + b f...f) for some sign pattern");
    }
  }
  return r;
}

namespace {

// Av f(eps) e^{x eps} / ch(x), written with th(x) to avoid overflow.
inline double field_factor(const ABF& r, int l, double x) {
  const double t = std::tanh(x);
  return 0.5 * (r.f[l][1] * (1.0 + t) + r.f[l][0] * (1.0 - t));
}

void check_fields(std::span<const double> x, std::size_t expected, const char* what) {
  if (x.size() != expected) {
    throw InvalidInput(std::string(what) + ": wrong number of fields");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": non-finite field");
  }
}

}  // namespace

double bracket_full(const ModelSpec& spec, const ThetaSample& theta,
                    std::span<const double> x) {
  return std::exp(log_bracket_full(spec, theta, x));
}

double log_bracket_full(const ModelSpec& spec, const ThetaSample& theta,
                        std::span<const double> x) {
  check_fields(x, static_cast<std::size_t>(spec.p), "bracket_full");
  const ABF r = abf(spec, theta);
  double prod = r.b;
  for (int l = 0; l < spec.p; ++l) prod *= field_factor(r, l, x[l]);
  return std::log(r.a) + std::log1p(prod);
}

double bracket_minus(const ModelSpec& spec, const ThetaSample& theta,
                     std::span<const double> x, int eps) {
  return std::exp(cavity_U(spec, theta, x, eps));
}

double cavity_U(const ModelSpec& spec, const ThetaSample& theta,
                std::span<const double> x, int eps) {
  check_fields(x, static_cast<std::size_t>(spec.p - 1), "bracket_minus");
  if (eps != 1 && eps != -1) throw InvalidInput("bracket_minus: eps must be +1 or -1");
  const ABF r = abf(spec, theta);
  double prod = r.b * r.f[spec.p - 1][eps > 0 ? 1 : 0];
  for (int l = 0; l < spec.p - 1; ++l) prod *= field_factor(r, l, x[l]);
  return std::log(r.a) + std::log1p(prod);
}

CavityStats cavity_Bu(const ModelSpec& spec, const ThetaSample& theta,
                      std::span<const double> x) {
  check_fields(x, static_cast<std::size_t>(spec.p - 1), "cavity_Bu");
  const ABF r = abf(spec, theta);
  double common = r.b;
  for (int l = 0; l < spec.p - 1; ++l) common *= field_factor(r, l, x[l]);
  const double log_a = std::log(r.a);
  const double u_plus = log_a + std::log1p(common * r.f[spec.p - 1][1]);
  const double u_minus = log_a + std::log1p(common * r.f[spec.p - 1][0]);
  CavityStats s;
  s.u = 0.5 * (u_plus - u_minus);
  s.log_B = 0.5 * (u_plus + u_minus);
  s.B = std::exp(s.log_B);
  return s;
}

double power_mean_gap(double x, double y, int p) {
  if (p < 2 || p % 2 != 0) throw InvalidInput("power_mean_gap: p must be even and >= 2");
  return std::pow(x, p) - p * x * std::pow(y, p - 1) + (p - 1) * std::pow(y, p);
}

}  // namespace dmf
