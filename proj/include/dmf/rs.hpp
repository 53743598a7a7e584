#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dmf/estimate.hpp"
#include "dmf/measure.hpp"
#include "dmf/model.hpp"

namespace dmf {

struct RSConfig {
  std::size_t n_outer = 100000;
  std::size_t population = kDefaultPopulationSize;
  /// Poisson truncation; 0 selects mean + 12 sqrt(mean) + 20.
  unsigned poisson_cap = 0;
  int iterations = 200;
  /// Fraction of atoms carried over unchanged per population step.
  double damping = 0.0;
  /// Residual above which solve_fixed_point reports non-convergence.
  double tolerance = 1e-2;
  /// Solve x ~ h + sum_j u_j instead of x ~ sum_j u_j (not part of the
  /// zero-field fixed-point equation; off by default).
  bool include_field = false;
  Exec exec{};

  unsigned cap_for(double mean) const { return poisson_cap ? poisson_cap : dmf::poisson_cap(mean); }
};

/// phi(0) = log 2 + E log Av exp(sum_{j<=k} U_j(eps) + h eps), k ~ Poisson(alpha p).
BoundEstimate phi_zero(const ModelSpec& spec, const Population& zeta, const RSConfig& cfg,
                       std::uint64_t seed);

/// E log <E>_x with x i.i.d. from zeta.
BoundEstimate bracket_term(const ModelSpec& spec, const Population& zeta,
                           const RSConfig& cfg, std::uint64_t seed);

/// Phi(zeta) = phi(0) - alpha (p-1) E log <E>_x.
BoundEstimate rs_bound(const ModelSpec& spec, const Population& zeta, const RSConfig& cfg,
                       std::uint64_t seed);

/// Phi(zeta) through the (B, u) form:
/// log 2 + alpha p E log B + E log ch(sum u_j + h) - alpha (p-1) E log <E>_x.
BoundEstimate rs_bound_bu(const ModelSpec& spec, const Population& zeta,
                          const RSConfig& cfg, std::uint64_t seed);

/// One population-dynamics sweep for x ~ sum_{j<=k} u_j. Atom a of sweep
/// `iteration` is a pure function of (seed, iteration, a).
Population population_dynamics_step(const ModelSpec& spec, const Population& in,
                                    const RSConfig& cfg, std::uint64_t seed,
                                    std::uint64_t iteration);
/// Serial reference for population_dynamics_step.
Population population_dynamics_step_serial(const ModelSpec& spec, const Population& in,
                                           const RSConfig& cfg, std::uint64_t seed,
                                           std::uint64_t iteration);

struct FixedPointResult {
  Population population;
  double residual = 0.0;
  bool converged = true;
  std::vector<double> residual_curve;  // W1 between consecutive iterates
};

/// Iterates population_dynamics_step cfg.iterations times from `init`
/// (resized to cfg.population atoms when it is a different size).
FixedPointResult solve_fixed_point(const ModelSpec& spec, const Population& init,
                                   const RSConfig& cfg, std::uint64_t seed);

}  // namespace dmf
