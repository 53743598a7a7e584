#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dmf/errors.hpp"
#include "dmf/estimate.hpp"
#include "dmf/measure.hpp"
#include "dmf/rng.hpp"

namespace dmf {

/// The K largest atoms u_1 > ... > u_K of a Poisson process on (0, inf) with
/// intensity x^{-m-1}, stored as logs: u_k = tau_k^{-1/m} for the arrival
/// times tau_k of a unit-rate Poisson process.
struct PDAtoms {
  double m = 0.5;
  std::vector<double> log_points;

  std::size_t size() const { return log_points.size(); }
  std::vector<double> points() const;
};

PDAtoms sample_pd_atoms(double m, std::size_t K, RandomStream& rng);

/// v_k = u_k / sum u: decreasing, summing to one.
std::vector<double> pd_weights(const PDAtoms& atoms);

/// Requires 0 < m_1 < ... < m_r < 1; throws InvalidParameter otherwise.
void validate_m_vector(std::span<const double> m);

/// Derrida-Ruelle cascade truncated at K children per node.
struct CascadeTree {
  std::vector<double> m;
  std::size_t K = 0;
  /// node_log_u[l][node] for level l (K^{l+1} nodes, parent-major order).
  std::vector<std::vector<double>> node_log_u;
  /// log v over the K^r leaves, normalized.
  std::vector<double> leaf_log_weights;

  int depth() const { return static_cast<int>(m.size()); }
  std::vector<double> leaf_weights() const;
};

CascadeTree cascade_weights(std::span<const double> m, std::size_t K, RandomStream& rng);

/// A hierarchy of conditional expectations as consumed by t_operator.
/// `descend(ctx, level, rng)` redraws the level-(level+1) random measures
/// given the level-`level` context; `leaf_log_value(ctx, rng)` draws the
/// leaf variables given the level-(r-1) context and returns log U.
template <class M>
concept TreeModel = requires(const M& model, const typename M::Context& ctx, int level,
                             RandomStream& rng) {
  { model.descend(ctx, level, rng) } -> std::convertible_to<typename M::Context>;
  { model.leaf_log_value(ctx, rng) } -> std::convertible_to<double>;
};

namespace detail {

template <class M>
double t_level(const M& model, const typename M::Context& ctx, int level,
               std::span<const double> m, std::span<const std::size_t> n, RandomStream& rng,
               std::vector<std::vector<double>>& scratch) {
  if constexpr (requires { { model.constant_log_value(ctx) } -> std::same_as<std::optional<double>>; }) {
    // Nothing random below this context: every T-level is the identity.
    if (const auto fixed = model.constant_log_value(ctx)) return *fixed;
  }
  const int r = static_cast<int>(m.size());
  auto& values = scratch[static_cast<std::size_t>(level)];
  values.resize(n[static_cast<std::size_t>(level)]);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = level == r - 1
                    ? model.leaf_log_value(ctx, rng)
                    : t_level(model, model.descend(ctx, level, rng), level + 1, m, n, rng, scratch);
  }
  return log_mean_power_from_logs(values, m[static_cast<std::size_t>(level)]);
}

}  // namespace detail

/// log T_0 U by nested Monte Carlo: T_r U = U and
/// T_l U = (E_l (T_{l+1} U)^{m_{l+1}})^{1/m_{l+1}}, each E_l replaced by an
/// average over n[l] conditionally independent children with jackknife bias
/// correction. `root` is the F_0 context.
template <TreeModel M>
double t_operator_log(const M& model, const typename M::Context& root,
                      std::span<const double> m, std::span<const std::size_t> n,
                      RandomStream& rng) {
  validate_m_vector(m);
  if (n.size() != m.size()) throw InvalidParameter("t_operator: need one sample count per level");
  if (m.empty()) return model.leaf_log_value(root, rng);
  std::vector<std::vector<double>> scratch(m.size());
  return detail::t_level(model, root, 0, m, n, rng, scratch);
}

template <TreeModel M>
double t_operator(const M& model, const typename M::Context& root, std::span<const double> m,
                  std::span<const std::size_t> n, RandomStream& rng) {
  return std::exp(t_operator_log(model, root, m, n, rng));
}

/// xi = scale * exp(g Z): constant when g == 0.
struct XiSpec {
  double scale = 1.0;
  double g = 0.0;

  double sample_log(RandomStream& rng) const;
  /// (1/m) log E xi^m = log scale + m g^2 / 2.
  double log_power_mean(double m) const;
};

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
  double std_error = 0.0;  // of the gap
  double lhs_stderr = 0.0;
  double rhs_stderr = 0.0;  // 0 when rhs is analytic
  std::size_t K = 0;
  std::vector<double> m;
  std::size_t n_outer = 0;
  std::uint64_t seed = 0;
  /// lhs at 2K minus lhs at K on the same atoms, with its stderr.
  double shift = 0.0;
  double shift_stderr = 0.0;
  /// |bias(K)| ~ (|shift| + 2 shift_stderr) / (1 - 2^{1 - 1/m_r}).
  double bias_bound = 0.0;
  /// Closed-form rhs when one exists.
  std::optional<double> rhs_exact;
};

/// E log sum_k v_k xi_k (truncated at K atoms) against (1/m) log E xi^m.
IdentityCheck verify_pd(const XiSpec& xi, double m, std::size_t K, std::size_t n_outer,
                        std::uint64_t seed, Exec exec = {});

/// Test function V = c (constant) or V = exp(lambda x) of one leaf variable x
/// drawn through the hierarchy `zeta` of depth r.
struct VSpec {
  bool constant = false;
  double c = 1.0;
  double lambda = 1.0;
};

/// E log sum_gamma v_gamma V(gamma) over a K-per-level cascade against
/// E log T_0 V from t_operator with per-level counts `levels`.
IdentityCheck verify_pd2(const VSpec& v, const HierarchicalMeasure& zeta,
                         std::span<const double> m, std::size_t K, std::size_t n_outer,
                         std::span<const std::size_t> levels, std::uint64_t seed,
                         Exec exec = {});

/// Closed form of E log T_0 exp(lambda x) for a parametric Gaussian or point
/// chain; nullopt for other hierarchies.
std::optional<double> gaussian_chain_log_t0(const HierarchicalMeasure& zeta, double lambda,
                                            std::span<const double> m);

}  // namespace dmf
