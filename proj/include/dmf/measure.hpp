#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dmf/rng.hpp"

namespace dmf {

inline constexpr std::size_t kDefaultPopulationSize = 10000;

/// Empirical probability measure on the real line: a uniform mixture of
/// point masses at `atoms`. Non-empty, all atoms finite.
class Population {
 public:
  explicit Population(std::vector<double> atoms);

  std::span<const double> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  double operator[](std::size_t i) const { return atoms_[i]; }

  /// A uniformly chosen atom.
  double draw(RandomStream& rng) const { return atoms_[rng.below(atoms_.size())]; }

  /// Every atom equal (the measure is a point mass).
  bool is_point_mass() const;

  bool operator==(const Population&) const = default;

 private:
  std::vector<double> atoms_;
};

Population make_population(std::vector<double> atoms);
double draw(const Population& pop, RandomStream& rng);

/// Leaf families of the parametric generators.
enum class LeafFamily { point, gaussian, two_point };

/// A law on the real line given by a family and its parameters:
///   point:     delta_{center}
///   gaussian:  N(center, width^2)
///   two_point: (delta_{center} + delta_{-center}) / 2
struct ScalarLaw {
  LeafFamily family = LeafFamily::point;
  double center = 0.0;
  double width = 0.0;

  double sample(RandomStream& rng) const;
  bool is_point_mass() const;
  bool is_symmetric() const;
  std::string describe() const;

  bool operator==(const ScalarLaw&) const = default;
};

/// Parses "point:x", "gaussian:mu,sigma" or "twopoint:x".
ScalarLaw parse_scalar_law(const std::string& text);

/// Parametric hierarchy of depth level_sd.size(). Drawing a child shifts the
/// center by N(0, level_sd[0]^2) and drops that level; at depth 0 the measure
/// is `leaf` with its center replaced by the current center.
struct ParametricChain {
  ScalarLaw leaf;
  std::vector<double> level_sd;

  bool operator==(const ParametricChain&) const = default;
};

/// A probability measure on M_depth (M_0 being the reals): a Population at
/// depth 0, a uniform mixture of equal-depth children, or a parametric chain.
class HierarchicalMeasure {
 public:
  explicit HierarchicalMeasure(Population pop);
  explicit HierarchicalMeasure(std::vector<HierarchicalMeasure> children);
  explicit HierarchicalMeasure(ParametricChain chain);

  /// delta_{delta_{... delta_{x0}}} with `depth` nestings above the point mass.
  static HierarchicalMeasure degenerate(double x0, int depth);

  int depth() const { return depth_; }
  bool is_population() const { return std::holds_alternative<Population>(node_); }
  bool is_mixture() const;
  bool is_parametric() const { return std::holds_alternative<ParametricChain>(node_); }

  const Population& population() const { return std::get<Population>(node_); }
  const std::vector<HierarchicalMeasure>& children() const;
  const ParametricChain& chain() const { return std::get<ParametricChain>(node_); }

  /// True when every draw path ends at the same leaf value.
  bool is_degenerate() const { return degenerate_; }

  bool operator==(const HierarchicalMeasure&) const = default;

 private:
  int depth_ = 0;
  bool degenerate_ = false;
  std::variant<std::vector<HierarchicalMeasure>, Population, ParametricChain> node_;
};

/// A position inside a hierarchy: the random measure drawn so far. Cheap to
/// copy; the referenced HierarchicalMeasure must outlive it.
class MeasureCursor {
 public:
  explicit MeasureCursor(const HierarchicalMeasure& root);

  /// Depth of the measure this cursor denotes (0 = a measure on the reals).
  int depth() const;
  /// Draws a measure from this one; requires depth() >= 1.
  MeasureCursor descend(RandomStream& rng) const;
  /// Draws a real from this measure; requires depth() == 0.
  double draw_leaf(RandomStream& rng) const;
  /// Leaf draws are deterministic from here on.
  bool is_degenerate() const;

 private:
  MeasureCursor(const HierarchicalMeasure* node, int offset, double center)
      : node_(node), offset_(offset), center_(center) {}

  const HierarchicalMeasure* node_;
  int offset_ = 0;     // levels consumed inside a parametric chain
  double center_ = 0;  // current chain center
};

struct ChainSample {
  std::vector<MeasureCursor> path;  // measures of depth r-1, ..., 0
  double leaf = 0.0;
};

/// Samples one branch zeta -> eta -> ... -> x.
ChainSample draw_chain(const HierarchicalMeasure& hm, RandomStream& rng);

/// Wasserstein-1 distance between two empirical measures, exact for the step
/// quantile functions of both.
double wasserstein1(const Population& a, const Population& b);

/// `size` i.i.d. draws from a depth-0 measure.
Population materialize(const HierarchicalMeasure& hm, std::size_t size,
                       std::uint64_t seed);
/// Population of `size` draws of a scalar law.
Population materialize(const ScalarLaw& law, std::size_t size, std::uint64_t seed);

/// Text format: "depth r" header, then nested "{ ... }" blocks; depth-0 blocks
/// list one atom per line in shortest round-trip decimal. A parametric node is
/// a single line "chain <family> <center> <width> [level sds...]".
void save_measure(std::ostream& out, const HierarchicalMeasure& hm);
HierarchicalMeasure load_measure(std::istream& in);
void save_measure_file(const std::string& path, const HierarchicalMeasure& hm);
HierarchicalMeasure load_measure_file(const std::string& path);

/// Compact spec used by the CLI:
///   point:x | gaussian:mu,sigma | twopoint:x  optionally followed by
///   "@s1,s2,..." (parametric chain with those level sds), or file:<path>.
HierarchicalMeasure parse_measure_spec(const std::string& text);

std::string format_double(double x);

}  // namespace dmf
