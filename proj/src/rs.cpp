#include "dmf/rs.hpp"

#include <omp.h>

#include <array>
#include <cmath>
#include <numbers>

#include "dmf/errors.hpp"

namespace dmf {

namespace {

enum StreamTag : std::uint64_t {
  kTagPhiZero = 0x7273'0001,
  kTagBracket = 0x7273'0002,
  kTagLogB = 0x7273'0003,
  kTagLogCh = 0x7273'0004,
  kTagBracketBu = 0x7273'0005,
  kTagDynamics = 0x7273'0006,
};

using Fields = std::array<double, kMaxArity>;

void draw_fields(const Population& zeta, double scale, int count, Fields& x,
                 RandomStream& rng) {
  for (int l = 0; l < count; ++l) x[l] = scale * zeta.draw(rng);
}

double phi_zero_sample(const ModelSpec& spec, const Population& zeta, unsigned cap,
                       RandomStream& rng) {
  const unsigned k = rng.poisson(spec.alpha * spec.p, cap);
  double sum_plus = 0.0, sum_minus = 0.0;
  Fields x{};
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(spec.p - 1));
  for (unsigned j = 0; j < k; ++j) {
    const ThetaSample theta = sample_theta(spec, rng);
    draw_fields(zeta, spec.field_scale(), spec.p - 1, x, rng);
    sum_plus += cavity_U(spec, theta, xs, +1);
    sum_minus += cavity_U(spec, theta, xs, -1);
  }
  const double h = spec.field.sample(rng);
  // log 2 + log Av = log(e^{S+ + h} + e^{S- - h})
  return log_add_exp(sum_plus + h, sum_minus - h);
}

double bracket_sample(const ModelSpec& spec, const Population& zeta, RandomStream& rng) {
  const ThetaSample theta = sample_theta(spec, rng);
  Fields x{};
  draw_fields(zeta, spec.field_scale(), spec.p, x, rng);
  return log_bracket_full(spec, theta, std::span(x.data(), static_cast<std::size_t>(spec.p)));
}

double effective_field(const ModelSpec& spec, const Population& zeta, unsigned cap,
                       bool with_field, RandomStream& rng) {
  const unsigned k = rng.poisson(spec.alpha * spec.p, cap);
  double sum = 0.0;
  Fields x{};
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(spec.p - 1));
  for (unsigned j = 0; j < k; ++j) {
    const ThetaSample theta = sample_theta(spec, rng);
    draw_fields(zeta, spec.field_scale(), spec.p - 1, x, rng);
    sum += cavity_Bu(spec, theta, xs).u;
  }
  if (with_field) sum += spec.field.sample(rng);
  return sum;
}

}  // namespace

BoundEstimate phi_zero(const ModelSpec& spec, const Population& zeta, const RSConfig& cfg,
                       std::uint64_t seed) {
  validate(spec);
  const unsigned cap = cfg.cap_for(spec.alpha * spec.p);
  return run_mean(
      [&](std::uint64_t, RandomStream& rng) { return phi_zero_sample(spec, zeta, cap, rng); },
      cfg.n_outer, seed, cfg.exec, kTagPhiZero);
}

BoundEstimate bracket_term(const ModelSpec& spec, const Population& zeta,
                           const RSConfig& cfg, std::uint64_t seed) {
  validate(spec);
  return run_mean([&](std::uint64_t, RandomStream& rng) { return bracket_sample(spec, zeta, rng); },
                  cfg.n_outer, seed, cfg.exec, kTagBracket);
}

BoundEstimate rs_bound(const ModelSpec& spec, const Population& zeta, const RSConfig& cfg,
                       std::uint64_t seed) {
  const BoundEstimate phi = phi_zero(spec, zeta, cfg, seed);
  const BoundEstimate br = bracket_term(spec, zeta, cfg, seed);
  BoundEstimate out = combine(phi, br, -spec.alpha * (spec.p - 1));
  out.meta["phi_zero"] = phi.value;
  out.meta["phi_zero_stderr"] = phi.std_error;
  out.meta["bracket"] = br.value;
  out.meta["bracket_stderr"] = br.std_error;
  return out;
}

BoundEstimate rs_bound_bu(const ModelSpec& spec, const Population& zeta,
                          const RSConfig& cfg, std::uint64_t seed) {
  validate(spec);
  const unsigned cap = cfg.cap_for(spec.alpha * spec.p);
  const double scale = spec.field_scale();
  const BoundEstimate log_b = run_mean(
      [&](std::uint64_t, RandomStream& rng) {
        const ThetaSample theta = sample_theta(spec, rng);
        Fields x{};
        draw_fields(zeta, scale, spec.p - 1, x, rng);
        return cavity_Bu(spec, theta, std::span(x.data(), static_cast<std::size_t>(spec.p - 1)))
            .log_B;
      },
      cfg.n_outer, seed, cfg.exec, kTagLogB);
  const BoundEstimate log_ch = run_mean(
      [&](std::uint64_t, RandomStream& rng) {
        const double u = effective_field(spec, zeta, cap, false, rng);
        return log_cosh(u + spec.field.sample(rng));
      },
      cfg.n_outer, seed, cfg.exec, kTagLogCh);
  const BoundEstimate br =
      run_mean([&](std::uint64_t, RandomStream& rng) { return bracket_sample(spec, zeta, rng); },
               cfg.n_outer, seed, cfg.exec, kTagBracketBu);

  const double alpha_p = spec.alpha * spec.p;
  const double alpha_p1 = spec.alpha * (spec.p - 1);
  BoundEstimate out;
  out.value = std::numbers::ln2 + alpha_p * log_b.value + log_ch.value - alpha_p1 * br.value;
  out.std_error = std::sqrt(std::pow(alpha_p * log_b.std_error, 2) +
                            std::pow(log_ch.std_error, 2) +
                            std::pow(alpha_p1 * br.std_error, 2));
  out.n_outer = cfg.n_outer;
  out.seed = seed;
  out.meta["log_B"] = log_b.value;
  out.meta["log_ch"] = log_ch.value;
  out.meta["bracket"] = br.value;
  return out;
}

namespace {

double dynamics_atom(const ModelSpec& spec, const Population& in, const RSConfig& cfg,
                     unsigned cap, std::uint64_t seed, std::uint64_t iteration,
                     std::uint64_t atom) {
  auto rng = RandomStream::for_sample(seed, mix64(kTagDynamics, iteration), atom);
  if (cfg.damping > 0.0 && rng.uniform() < cfg.damping) return in[atom];
  return effective_field(spec, in, cap, cfg.include_field, rng);
}

void check_damping(const RSConfig& cfg) {
  if (!(cfg.damping >= 0.0 && cfg.damping <= 1.0)) {
    throw InvalidParameter("damping must lie in [0, 1]");
  }
}

}  // namespace

Population population_dynamics_step(const ModelSpec& spec, const Population& in,
                                    const RSConfig& cfg, std::uint64_t seed,
                                    std::uint64_t iteration) {
  validate(spec);
  check_damping(cfg);
  const unsigned cap = cfg.cap_for(spec.alpha * spec.p);
  std::vector<double> out(in.size());
  const int threads = cfg.exec.workers > 0 ? cfg.exec.workers : omp_get_max_threads();
  const auto n = static_cast<std::int64_t>(in.size());
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::int64_t a = 0; a < n; ++a) {
    out[a] = dynamics_atom(spec, in, cfg, cap, seed, iteration, static_cast<std::uint64_t>(a));
  }
  return Population(std::move(out));
}

Population population_dynamics_step_serial(const ModelSpec& spec, const Population& in,
                                           const RSConfig& cfg, std::uint64_t seed,
                                           std::uint64_t iteration) {
  validate(spec);
  check_damping(cfg);
  const unsigned cap = cfg.cap_for(spec.alpha * spec.p);
  std::vector<double> out(in.size());
  for (std::size_t a = 0; a < in.size(); ++a) {
    out[a] = dynamics_atom(spec, in, cfg, cap, seed, iteration, a);
  }
  return Population(std::move(out));
}

FixedPointResult solve_fixed_point(const ModelSpec& spec, const Population& init,
                                   const RSConfig& cfg, std::uint64_t seed) {
  if (cfg.iterations < 1) throw InvalidParameter("fixed point: iterations must be >= 1");
  Population current = init;
  if (init.size() != cfg.population && cfg.population > 0) {
    std::vector<double> atoms(cfg.population);
    RandomStream rng(seed, 0x696e6974ULL);
    for (auto& a : atoms) a = init.draw(rng);
    current = Population(std::move(atoms));
  }
  FixedPointResult result{current, 0.0, true, {}};
  result.residual_curve.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int t = 0; t < cfg.iterations; ++t) {
    Population next = population_dynamics_step(spec, current, cfg, seed,
                                               static_cast<std::uint64_t>(t));
    result.residual_curve.push_back(wasserstein1(current, next));
    current = std::move(next);
  }
  result.residual = result.residual_curve.back();
  result.converged = result.residual <= cfg.tolerance;
  result.population = std::move(current);
  return result;
}

}  // namespace dmf
