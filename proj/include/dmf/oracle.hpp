#pragma once

#include <cmath>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmf/estimate.hpp"
#include "dmf/measure.hpp"
#include "dmf/model.hpp"
#include "dmf/rs.hpp"
#include "dmf/rsb.hpp"

namespace dmf {

inline constexpr int kMaxSpins = 24;

struct Clause {
  std::array<int, kMaxArity> index{};  // 0-based, repetition allowed
  ThetaSample theta;
};

/// -H_N(sigma) = sum_c theta_c(sigma_{i_1..i_p}) + sum_i h_i sigma_i.
struct Instance {
  int N = 0;
  std::vector<Clause> clauses;
  std::vector<double> h;
};

/// M ~ Poisson(alpha N) clauses with i.i.d. uniform indices and theta's, and
/// N fields. Throws InvalidInput unless 1 <= N <= 24.
Instance build_instance(const ModelSpec& spec, int N, RandomStream& rng);

/// -H_N(sigma) recomputed from scratch; sigma[i] in {-1, +1}.
double log_weight(const ModelSpec& spec, const Instance& inst, std::span<const std::int8_t> sigma);

/// log sum_sigma exp(-H_N(sigma)) over all 2^N configurations, visited in
/// Gray-code order so each step updates only the clauses touching one spin.
double exact_log_partition(const ModelSpec& spec, const Instance& inst);

/// (1/N) E log Z_N over n_instances independent instances.
BoundEstimate estimate_free_energy(const ModelSpec& spec, int N, std::size_t n_instances,
                                   std::uint64_t seed, Exec exec = {});
BoundEstimate estimate_free_energy_serial(const ModelSpec& spec, int N,
                                          std::size_t n_instances, std::uint64_t seed);

/// A trial measure for the gap report. `m` empty selects the RS bound
/// (depth 0), one entry the one-step bound, r entries the r-step bound.
struct GapCandidate {
  std::string id;
  HierarchicalMeasure zeta;
  std::vector<double> m;
};

struct GapConfig {
  std::size_t n_instances = 2000;
  RSConfig rs{};
  RSBConfig rsb{};
  Exec exec{};
};

struct GapRow {
  int N = 0;
  std::string zeta_id;
  std::vector<double> m;
  double free_energy = 0.0;
  double free_energy_stderr = 0.0;
  double bound = 0.0;
  double bound_stderr = 0.0;
  double gap = 0.0;        // bound - free_energy
  double std_error = 0.0;  // combined
  bool violation = false;
};

struct GapReport {
  std::vector<GapRow> rows;
  std::size_t n_violations = 0;
  /// min gap / std_error over rows with std_error > 0.
  std::optional<double> worst_gap_sigma;
};

inline double roundoff_slack(double scale) { return 1e-12 * (1.0 + std::abs(scale)); }

/// Flags gap < -3 se - roundoff_slack. worst_gap_sigma skips rows whose se is below the slack.
bool is_violation(double gap, double se, double scale);

GapReport gap_report(const ModelSpec& spec, std::span<const int> Ns,
                     const std::vector<GapCandidate>& zetas, const GapConfig& cfg,
                     std::uint64_t seed);

/// Bound of one candidate as used by gap_report.
BoundEstimate candidate_bound(const ModelSpec& spec, const GapCandidate& cand,
                              const GapConfig& cfg, std::uint64_t seed);

void write_gap_csv(std::ostream& out, const GapReport& report);

}  // namespace dmf
