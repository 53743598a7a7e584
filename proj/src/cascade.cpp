#include "dmf/cascade.hpp"

#include <cmath>
#include <limits>

#include "dmf/errors.hpp"

namespace dmf {

namespace {

constexpr std::uint64_t kTagPd = 0x70640001;
constexpr std::uint64_t kTagPd2Lhs = 0x70640002;
constexpr std::uint64_t kTagPd2Rhs = 0x70640003;

double richardson_bound(double shift, double shift_se, double m) {
  // Truncation bias decays like K^{1-1/m}; a doubling shift s bounds it by
  // s / (1 - 2^{1-1/m}).
  return (std::abs(shift) + 2.0 * shift_se) / (1.0 - std::exp2(1.0 - 1.0 / m));
}

struct CursorModel {
  using Context = MeasureCursor;
  VSpec v;

  MeasureCursor descend(const MeasureCursor& ctx, int, RandomStream& rng) const {
    return ctx.descend(rng);
  }
  double leaf_log_value(const MeasureCursor& ctx, RandomStream& rng) const {
    const double x = ctx.draw_leaf(rng);
    return v.constant ? std::log(v.c) : v.lambda * x;
  }
};

}  // namespace

std::vector<double> PDAtoms::points() const {
  std::vector<double> out(log_points.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::exp(log_points[k]);
  return out;
}

PDAtoms sample_pd_atoms(double m, std::size_t K, RandomStream& rng) {
  if (!(m > 0.0 && m < 1.0)) throw InvalidParameter("PD exponent m must lie in (0,1)");
  if (K < 1) throw InvalidParameter("PD truncation K must be >= 1");
  PDAtoms atoms{m, std::vector<double>(K)};
  double tau = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    tau += rng.exponential();
    atoms.log_points[k] = -std::log(tau) / m;
  }
  return atoms;
}

std::vector<double> pd_weights(const PDAtoms& atoms) {
  const double norm = log_sum_exp(atoms.log_points);
  std::vector<double> out(atoms.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::exp(atoms.log_points[k] - norm);
  return out;
}

void validate_m_vector(std::span<const double> m) {
  double prev = 0.0;
  for (double x : m) {
    if (!(x > prev && x < 1.0))
      throw InvalidParameter("m vector must satisfy 0 < m_1 < ... < m_r < 1");
    prev = x;
  }
}

std::vector<double> CascadeTree::leaf_weights() const {
  std::vector<double> out(leaf_log_weights.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::exp(leaf_log_weights[k]);
  return out;
}

CascadeTree cascade_weights(std::span<const double> m, std::size_t K, RandomStream& rng) {
  validate_m_vector(m);
  if (m.empty()) throw InvalidParameter("cascade needs at least one level");
  if (K < 1) throw InvalidParameter("cascade K must be >= 1");
  CascadeTree tree;
  tree.m.assign(m.begin(), m.end());
  tree.K = K;
  std::vector<double> path{0.0};
  for (double ml : m) {
    std::vector<double> level;
    level.reserve(path.size() * K);
    std::vector<double> next;
    next.reserve(path.size() * K);
    for (double base : path) {
      const auto atoms = sample_pd_atoms(ml, K, rng);
      for (double lu : atoms.log_points) {
        level.push_back(lu);
        next.push_back(base + lu);
      }
    }
    tree.node_log_u.push_back(std::move(level));
    path = std::move(next);
  }
  const double norm = log_sum_exp(path);
  for (double& x : path) x -= norm;
  tree.leaf_log_weights = std::move(path);
  return tree;
}

double XiSpec::sample_log(RandomStream& rng) const {
  return std::log(scale) + (g == 0.0 ? 0.0 : g * rng.normal());
}

double XiSpec::log_power_mean(double m) const { return std::log(scale) + m * g * g / 2.0; }

IdentityCheck verify_pd(const XiSpec& xi, double m, std::size_t K, std::size_t n_outer,
                        std::uint64_t seed, Exec exec) {
  if (!(xi.scale > 0.0) || !std::isfinite(xi.g)) throw InvalidParameter("xi must be positive");
  if (n_outer < 2) throw InvalidParameter("verify_pd needs n_outer >= 2");
  const auto est = run_means<2>(
      [&](std::uint64_t, RandomStream& rng) {
        const auto atoms = sample_pd_atoms(m, 2 * K, rng);
        std::vector<double> weighted(2 * K);
        for (std::size_t k = 0; k < 2 * K; ++k)
          weighted[k] = atoms.log_points[k] + xi.sample_log(rng);
        const std::span<const double> lu(atoms.log_points);
        const std::span<const double> lw(weighted);
        const double at_k = log_sum_exp(lw.first(K)) - log_sum_exp(lu.first(K));
        const double at_2k = log_sum_exp(lw) - log_sum_exp(lu);
        return std::array<double, 2>{at_k, at_2k - at_k};
      },
      n_outer, seed, exec, kTagPd);
  IdentityCheck out;
  out.lhs = est[0].value;
  out.lhs_stderr = est[0].std_error;
  out.rhs = xi.log_power_mean(m);
  out.rhs_exact = out.rhs;
  out.gap = out.lhs - out.rhs;
  out.std_error = out.lhs_stderr;
  out.K = K;
  out.m = {m};
  out.n_outer = n_outer;
  out.seed = seed;
  out.shift = est[1].value;
  out.shift_stderr = est[1].std_error;
  out.bias_bound = richardson_bound(out.shift, out.shift_stderr, m);
  return out;
}

std::optional<double> gaussian_chain_log_t0(const HierarchicalMeasure& zeta, double lambda,
                                            std::span<const double> m) {
  if (!zeta.is_parametric()) return std::nullopt;
  const auto& chain = zeta.chain();
  const auto family = chain.leaf.family;
  if (family != LeafFamily::gaussian && family != LeafFamily::point) return std::nullopt;
  const std::size_t r = m.size();
  if (chain.level_sd.size() != r || r == 0) return std::nullopt;
  // The F_0 shift is a constant inside log T_0; deeper levels contribute
  // m_l s_l^2 and the leaf m_r w^2.
  const double leaf_sd = family == LeafFamily::gaussian ? chain.leaf.width : 0.0;
  double quad = m[r - 1] * leaf_sd * leaf_sd;
  for (std::size_t l = 1; l < r; ++l) quad += m[l - 1] * chain.level_sd[l] * chain.level_sd[l];
  return lambda * chain.leaf.center + lambda * lambda * quad / 2.0;
}

IdentityCheck verify_pd2(const VSpec& v, const HierarchicalMeasure& zeta,
                         std::span<const double> m, std::size_t K, std::size_t n_outer,
                         std::span<const std::size_t> levels, std::uint64_t seed, Exec exec) {
  validate_m_vector(m);
  const std::size_t r = m.size();
  if (r == 0) throw InvalidParameter("verify_pd2 needs at least one level");
  if (zeta.depth() != static_cast<int>(r))
    throw InvalidParameter("verify_pd2: hierarchy depth must equal the number of m levels");
  if (v.constant && !(v.c > 0.0)) throw InvalidParameter("V must be positive");
  if (levels.size() != r) throw InvalidParameter("verify_pd2: need one sample count per level");
  if (n_outer < 2) throw InvalidParameter("verify_pd2 needs n_outer >= 2");
  const double log_c = v.constant ? std::log(v.c) : 0.0;
  const std::size_t K2 = 2 * K;

  // One cascade with 2K children per node; the sub-tree of the first K
  // children at every level is the K-truncated cascade on the same randomness.
  const auto lhs = run_means<2>(
      [&](std::uint64_t, RandomStream& rng) {
        const auto tree = cascade_weights(m, K2, rng);
        std::vector<MeasureCursor> nodes{MeasureCursor(zeta).descend(rng)};
        for (std::size_t l = 0; l + 1 < r; ++l) {
          std::vector<MeasureCursor> next;
          next.reserve(nodes.size() * K2);
          for (const auto& c : nodes)
            for (std::size_t k = 0; k < K2; ++k) next.push_back(c.descend(rng));
          nodes = std::move(next);
        }
        const std::size_t leaves = tree.leaf_log_weights.size();
        std::vector<double> all_w, all_wv, sub_w, sub_wv;
        all_w.reserve(leaves);
        all_wv.reserve(leaves);
        std::size_t index = 0;
        for (const auto& c : nodes) {
          for (std::size_t k = 0; k < K2; ++k, ++index) {
            const double lv = v.constant ? log_c : v.lambda * c.draw_leaf(rng);
            const double lw = tree.leaf_log_weights[index];
            all_w.push_back(lw);
            all_wv.push_back(lw + lv);
            bool inside = true;
            for (std::size_t rest = index; rest > 0 && inside; rest /= K2) inside = rest % K2 < K;
            if (inside) {
              sub_w.push_back(lw);
              sub_wv.push_back(lw + lv);
            }
          }
        }
        const double at_k = log_sum_exp(sub_wv) - log_sum_exp(sub_w);
        const double at_2k = log_sum_exp(all_wv) - log_sum_exp(all_w);
        return std::array<double, 2>{at_k, at_2k - at_k};
      },
      n_outer, seed, exec, kTagPd2Lhs);

  const CursorModel model{v};
  const auto rhs = run_mean(
      [&](std::uint64_t, RandomStream& rng) {
        return t_operator_log(model, MeasureCursor(zeta).descend(rng), m, levels, rng);
      },
      n_outer, seed, exec, kTagPd2Rhs);

  IdentityCheck out;
  out.lhs = lhs[0].value;
  out.lhs_stderr = lhs[0].std_error;
  out.rhs = rhs.value;
  out.rhs_stderr = rhs.std_error;
  out.gap = out.lhs - out.rhs;
  out.std_error = std::hypot(out.lhs_stderr, out.rhs_stderr);
  out.K = K;
  out.m.assign(m.begin(), m.end());
  out.n_outer = n_outer;
  out.seed = seed;
  out.shift = lhs[1].value;
  out.shift_stderr = lhs[1].std_error;
  out.bias_bound = richardson_bound(out.shift, out.shift_stderr, m.back());
  if (v.constant)
    out.rhs_exact = log_c;
  else
    out.rhs_exact = gaussian_chain_log_t0(zeta, v.lambda, m);
  return out;
}

}  // namespace dmf
