#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "dmf/measure.hpp"
#include "dmf/rng.hpp"

namespace dmf {

inline constexpr int kMaxArity = 20;

enum class ModelKind { pspin, ksat };

/// One diluted model: clause law theta, arity p, density alpha (E M = alpha N)
/// and the i.i.d. external field h.
struct ModelSpec {
  ModelKind kind = ModelKind::pspin;
  int p = 2;
  double beta = 1.0;
  double alpha = 0.1;
  ScalarLaw field{LeafFamily::point, 0.0, 0.0};
  /// Coupling J of the p-spin clause; must be symmetric about 0.
  ScalarLaw coupling{LeafFamily::two_point, 1.0, 0.0};
  /// Multiply fields drawn from zeta by beta before any kernel sees them.
  bool beta_scaled_fields = false;

  double field_scale() const { return beta_scaled_fields ? beta : 1.0; }
};

/// Throws InvalidInput naming the offending field.
void validate(const ModelSpec& spec);

/// One clause's disorder: J for p-spin, the literal signs J_1..J_p for K-sat.
struct ThetaSample {
  double coupling = 0.0;
  std::array<std::int8_t, kMaxArity> literals{};
};

/// exp theta(s) = a (1 + b f_1(s_1) ... f_p(s_p)); f[l] = {f_l(-1), f_l(+1)}.
struct ABF {
  double a = 1.0;
  double b = 0.0;
  int p = 0;
  std::array<std::array<double, 2>, kMaxArity> f{};
};

/// Effective-field decomposition B e^{eps u} = <E>^-_x at eps_p = eps.
struct CavityStats {
  double B = 1.0;
  double u = 0.0;
  double log_B = 0.0;
};

ThetaSample sample_theta(const ModelSpec& spec, RandomStream& rng);

/// theta(sigma_1..sigma_p) evaluated from its definition.
double theta_value(const ModelSpec& spec, const ThetaSample& theta,
                   std::span<const std::int8_t> sigma);

ABF abf(const ModelSpec& spec, const ThetaSample& theta);
/// abf() plus the exhaustive 2^p check of the factorization and |b f...f| < 1;
/// throws ConditionViolation (relative tolerance 1e-12).
ABF abf_checked(const ModelSpec& spec, const ThetaSample& theta);

/// <E>_x for p fields.
double bracket_full(const ModelSpec& spec, const ThetaSample& theta,
                    std::span<const double> x);
double log_bracket_full(const ModelSpec& spec, const ThetaSample& theta,
                        std::span<const double> x);

/// <E>^-_x for p-1 fields with the last spin fixed to eps.
double bracket_minus(const ModelSpec& spec, const ThetaSample& theta,
                     std::span<const double> x, int eps);

/// U(theta, x_1..x_{p-1}, eps) = log <E>^-_x at eps_p = eps.
double cavity_U(const ModelSpec& spec, const ThetaSample& theta,
                std::span<const double> x, int eps);

CavityStats cavity_Bu(const ModelSpec& spec, const ThetaSample& theta,
                      std::span<const double> x);

/// x^p - p x y^{p-1} + (p-1) y^p, nonnegative for even p.
double power_mean_gap(double x, double y, int p);

}  // namespace dmf
