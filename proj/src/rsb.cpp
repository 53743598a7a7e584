#include "dmf/rsb.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "dmf/cascade.hpp"
#include "dmf/errors.hpp"

namespace dmf {

namespace {

constexpr std::uint64_t kTagFirst1 = 0x72736201;
constexpr std::uint64_t kTagSecond1 = 0x72736202;
constexpr std::uint64_t kTagFirstR = 0x72736203;
constexpr std::uint64_t kTagSecondR = 0x72736204;

using Cursors = std::vector<MeasureCursor>;

// Leaf value of a cursor whose remaining draws are all deterministic.
double degenerate_leaf(MeasureCursor c) {
  RandomStream any(0, 0);
  while (c.depth() > 0) c = c.descend(any);
  return c.draw_leaf(any);
}

bool all_degenerate(const Cursors& cs) {
  return std::all_of(cs.begin(), cs.end(), [](const MeasureCursor& c) { return c.is_degenerate(); });
}

// F_0 of the first term: k clauses with p-1 cavity coordinates each, and h.
struct FirstTerm {
  const ModelSpec* spec;
  std::vector<ThetaSample> thetas;
  double h = 0.0;

  int width() const { return spec->p - 1; }

  double log_value(std::span<const double> x) const {
    double plus = 0.0, minus = 0.0;
    const auto w = static_cast<std::size_t>(width());
    for (std::size_t j = 0; j < thetas.size(); ++j) {
      const auto xs = x.subspan(j * w, w);
      plus += cavity_U(*spec, thetas[j], xs, +1);
      minus += cavity_U(*spec, thetas[j], xs, -1);
    }
    return log_add_exp(plus + h, minus - h);
  }
};

// F_0 of the second term: one clause on p coordinates.
struct SecondTerm {
  const ModelSpec* spec;
  ThetaSample theta;

  double log_value(std::span<const double> x) const {
    return log_bracket_full(*spec, theta, x);
  }
};

template <class Term>
struct TreeTerm {
  using Context = Cursors;
  const Term* term;
  double scale;

  Cursors descend(const Cursors& ctx, int, RandomStream& rng) const {
    Cursors out;
    out.reserve(ctx.size());
    for (const auto& c : ctx) out.push_back(c.descend(rng));
    return out;
  }

  double leaf_log_value(const Cursors& ctx, RandomStream& rng) const {
    std::vector<double> x(ctx.size());
    for (std::size_t i = 0; i < ctx.size(); ++i) x[i] = scale * ctx[i].draw_leaf(rng);
    return term->log_value(x);
  }

  std::optional<double> constant_log_value(const Cursors& ctx) const {
    if (!all_degenerate(ctx)) return std::nullopt;
    std::vector<double> x(ctx.size());
    for (std::size_t i = 0; i < ctx.size(); ++i) x[i] = scale * degenerate_leaf(ctx[i]);
    return term->log_value(x);
  }
};

Cursors draw_roots(const HierarchicalMeasure& zeta, std::size_t count, RandomStream& rng) {
  Cursors out;
  out.reserve(count);
  const MeasureCursor root(zeta);
  for (std::size_t i = 0; i < count; ++i) out.push_back(root.descend(rng));
  return out;
}

FirstTerm draw_first(const ModelSpec& spec, unsigned cap, RandomStream& rng) {
  FirstTerm t{&spec, {}, 0.0};
  const unsigned k = rng.poisson(spec.alpha * spec.p, cap);
  t.thetas.reserve(k);
  for (unsigned j = 0; j < k; ++j) t.thetas.push_back(sample_theta(spec, rng));
  t.h = spec.field.sample(rng);
  return t;
}

template <class Term>
double one_step_sample(const Term& term, const Cursors& etas, double scale, double m,
                       std::size_t n_inner, RandomStream& rng) {
  const TreeTerm<Term> tree{&term, scale};
  if (const auto fixed = tree.constant_log_value(etas)) return *fixed;
  std::vector<double> logs(n_inner);
  for (auto& v : logs) v = tree.leaf_log_value(etas, rng);
  return log_mean_power_from_logs(logs, m);
}

BoundEstimate assemble(const ModelSpec& spec, const BoundEstimate& first,
                       const BoundEstimate& second) {
  BoundEstimate out = combine(first, second, -spec.alpha * (spec.p - 1));
  out.meta["first_term"] = first.value;
  out.meta["first_term_stderr"] = first.std_error;
  out.meta["bracket_term"] = second.value;
  out.meta["bracket_term_stderr"] = second.std_error;
  return out;
}

void check_m(double m) {
  if (!(m > 0.0 && m < 1.0)) throw InvalidParameter("m must lie in (0,1)");
}

}  // namespace

std::vector<std::size_t> RSBConfig::levels_for(int depth) const {
  std::vector<std::size_t> out;
  for (int l = 0; l < depth; ++l) {
    if (levels.empty())
      out.push_back(n_inner);
    else
      out.push_back(levels[std::min<std::size_t>(static_cast<std::size_t>(l), levels.size() - 1)]);
  }
  return out;
}

BoundEstimate one_rsb_bound(const ModelSpec& spec, const HierarchicalMeasure& zeta, double m,
                            const RSBConfig& cfg, std::uint64_t seed) {
  validate(spec);
  check_m(m);
  if (zeta.depth() != 1) throw InvalidParameter("one_rsb_bound needs a depth-1 hierarchy");
  if (cfg.n_inner < 2) throw InvalidParameter("n_inner must be >= 2");
  const unsigned cap = cfg.cap_for(spec.alpha * spec.p);
  const double scale = spec.field_scale();
  const auto first = run_mean(
      [&](std::uint64_t, RandomStream& rng) {
        const FirstTerm term = draw_first(spec, cap, rng);
        const Cursors etas = draw_roots(zeta, term.thetas.size() * term.width(), rng);
        return one_step_sample(term, etas, scale, m, cfg.n_inner, rng);
      },
      cfg.n_outer, seed, cfg.exec, kTagFirst1);
  const auto second = run_mean(
      [&](std::uint64_t, RandomStream& rng) {
        const SecondTerm term{&spec, sample_theta(spec, rng)};
        const Cursors etas = draw_roots(zeta, static_cast<std::size_t>(spec.p), rng);
        return one_step_sample(term, etas, scale, m, cfg.n_inner, rng);
      },
      cfg.n_outer, seed, cfg.exec, kTagSecond1);
  BoundEstimate out = assemble(spec, first, second);
  out.n_inner = cfg.n_inner;
  return out;
}

BoundEstimate r_rsb_bound(const ModelSpec& spec, const HierarchicalMeasure& zeta,
                          std::span<const double> m, const RSBConfig& cfg, std::uint64_t seed) {
  validate(spec);
  validate_m_vector(m);
  const int r = static_cast<int>(m.size());
  if (r < 1) throw InvalidParameter("r_rsb_bound needs at least one m level");
  if (zeta.depth() != r)
    throw InvalidParameter("r_rsb_bound: hierarchy depth must equal the number of m levels");
  const auto n = cfg.levels_for(r);
  for (auto c : n)
    if (c < 2) throw InvalidParameter("per-level sample counts must be >= 2");
  const unsigned cap = cfg.cap_for(spec.alpha * spec.p);
  const double scale = spec.field_scale();
  const auto first = run_mean(
      [&](std::uint64_t, RandomStream& rng) {
        const FirstTerm term = draw_first(spec, cap, rng);
        const Cursors etas = draw_roots(zeta, term.thetas.size() * term.width(), rng);
        return t_operator_log(TreeTerm<FirstTerm>{&term, scale}, etas, m, n, rng);
      },
      cfg.n_outer, seed, cfg.exec, kTagFirstR);
  const auto second = run_mean(
      [&](std::uint64_t, RandomStream& rng) {
        const SecondTerm term{&spec, sample_theta(spec, rng)};
        const Cursors etas = draw_roots(zeta, static_cast<std::size_t>(spec.p), rng);
        return t_operator_log(TreeTerm<SecondTerm>{&term, scale}, etas, m, n, rng);
      },
      cfg.n_outer, seed, cfg.exec, kTagSecondR);
  BoundEstimate out = assemble(spec, first, second);
  std::size_t cost = 1;
  for (auto c : n) cost *= c;
  out.n_inner = cost;
  return out;
}

GridResult grid_search(const ModelSpec& spec, const std::vector<GridCandidate>& candidates,
                       const std::vector<std::vector<double>>& m_grid, const RSBConfig& cfg,
                       std::uint64_t seed) {
  GridResult out;
  for (const auto& cand : candidates) {
    const int depth = cand.zeta.depth();
    if (depth == 0) {
      const Population pop = cand.zeta.is_population()
                                 ? cand.zeta.population()
                                 : materialize(cand.zeta, cfg.population, seed);
      RSConfig rs;
      rs.n_outer = cfg.n_outer;
      rs.poisson_cap = cfg.poisson_cap;
      rs.exec = cfg.exec;
      out.table.push_back({cand.label, 0, {}, rs_bound(spec, pop, rs, seed)});
      continue;
    }
    for (const auto& m : m_grid) {
      if (static_cast<int>(m.size()) != depth) continue;
      BoundEstimate b = depth == 1 ? one_rsb_bound(spec, cand.zeta, m[0], cfg, seed)
                                   : r_rsb_bound(spec, cand.zeta, m, cfg, seed);
      out.table.push_back({cand.label, depth, m, std::move(b)});
    }
  }
  if (out.table.empty()) throw InvalidParameter("grid_search: no grid point matches a candidate");
  for (std::size_t i = 1; i < out.table.size(); ++i)
    if (out.table[i].bound.value < out.table[out.best].bound.value) out.best = i;
  return out;
}

std::vector<GridCandidate> family_candidates(LeafFamily family, std::span<const double> sigmas,
                                             std::span<const double> level_sd) {
  std::vector<GridCandidate> out;
  for (double s : sigmas) {
    ScalarLaw leaf = family == LeafFamily::gaussian ? ScalarLaw{family, 0.0, s}
                                                    : ScalarLaw{family, s, 0.0};
    std::string label = leaf.describe();
    if (!level_sd.empty()) {
      label += "@";
      for (std::size_t i = 0; i < level_sd.size(); ++i)
        label += (i ? "," : "") + format_double(level_sd[i]);
    }
    HierarchicalMeasure zeta =
        level_sd.empty()
            ? HierarchicalMeasure(ParametricChain{leaf, {}})
            : HierarchicalMeasure(ParametricChain{leaf, {level_sd.begin(), level_sd.end()}});
    out.push_back({std::move(label), std::move(zeta)});
  }
  return out;
}

}  // namespace dmf
