#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dmf/estimate.hpp"
#include "dmf/measure.hpp"
#include "dmf/model.hpp"
#include "dmf/rs.hpp"

namespace dmf {

struct RSBConfig {
  std::size_t n_outer = 20000;
  /// Inner draws per outer sample of the one-step bound.
  std::size_t n_inner = 2000;
  /// Children per level of the r-step recursion; padded with the last entry
  /// (or n_inner when empty) up to depth r. Cost per bound term is the
  /// product over levels.
  std::vector<std::size_t> levels{200, 100};
  /// Atoms used when a parametric depth-0 measure is materialized for the
  /// RS bound in grid_search.
  std::size_t population = kDefaultPopulationSize;
  unsigned poisson_cap = 0;
  Exec exec{};

  std::vector<std::size_t> levels_for(int depth) const;
  unsigned cap_for(double mean) const { return poisson_cap ? poisson_cap : dmf::poisson_cap(mean); }
};

/// Phi_1(zeta, m) for a depth-1 hierarchy: theta, k, h and the measures
/// eta drawn from zeta are outer; the fields x drawn from the eta's are
/// inner. meta holds the two terms.
BoundEstimate one_rsb_bound(const ModelSpec& spec, const HierarchicalMeasure& zeta, double m,
                            const RSBConfig& cfg, std::uint64_t seed);

/// Phi_r(zeta, m_1..m_r) for a depth-r hierarchy through t_operator. theta,
/// k and h are fixed per outer sample; every coordinate owns an independent
/// measure chain redrawn along each tree branch.
BoundEstimate r_rsb_bound(const ModelSpec& spec, const HierarchicalMeasure& zeta,
                          std::span<const double> m, const RSBConfig& cfg, std::uint64_t seed);

struct GridCandidate {
  std::string label;
  HierarchicalMeasure zeta;
};

struct GridRow {
  std::string label;
  int depth = 0;
  std::vector<double> m;  // empty for the RS bound
  BoundEstimate bound;
};

struct GridResult {
  std::vector<GridRow> table;
  std::size_t best = 0;  // index of the smallest bound value
};

/// Evaluates every candidate with a shared seed: depth 0 by rs_bound (once),
/// depth r >= 1 by the RSB bound at each entry of m_grid of length r.
GridResult grid_search(const ModelSpec& spec, const std::vector<GridCandidate>& candidates,
                       const std::vector<std::vector<double>>& m_grid, const RSBConfig& cfg,
                       std::uint64_t seed);

/// One candidate per sigma: gaussian:0,sigma, point:sigma or twopoint:sigma,
/// at the depth implied by level_sd.
std::vector<GridCandidate> family_candidates(LeafFamily family, std::span<const double> sigmas,
                                             std::span<const double> level_sd);

}  // namespace dmf
