#pragma once

#include <omp.h>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dmf/rng.hpp"

namespace dmf {

/// A Monte Carlo estimate of an expectation: mean of outer replicates with
/// std_error = sample standard deviation / sqrt(n_outer).
struct BoundEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_outer = 0;
  std::size_t n_inner = 0;  // 0 when there is no nested expectation
  std::uint64_t seed = 0;
  std::map<std::string, double> meta;
};

/// Welford accumulator.
class RunningStats {
 public:
  void push(double x);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two values.
  double variance() const;
  double std_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Number of OpenMP threads used by the parallel kernels; 0 means the
/// runtime default.
struct Exec {
  int workers = 0;
};

/// Outer-sample procedure: sample index and the stream owned by that sample.
using OuterSampler = std::function<double(std::uint64_t index, RandomStream& rng)>;

/// Mean and std_error of `n` independent outer samples. Sample i draws from
/// RandomStream::for_sample(seed, tag, i), so the result is bit-identical for
/// every worker count. A non-finite sample makes the value NaN and records
/// the first offending index in meta["nonfinite_index"].
BoundEstimate run_mean(const OuterSampler& sampler, std::size_t n,
                       std::uint64_t seed, Exec exec = {}, std::uint64_t tag = 0);

/// Single-threaded reference for run_mean.
BoundEstimate run_mean_serial(const OuterSampler& sampler, std::size_t n,
                              std::uint64_t seed, std::uint64_t tag = 0);

/// Vector-valued run_mean: component c of every sample is summarized on its
/// own. Same stream addressing and determinism contract as run_mean.
template <std::size_t N, class Sampler>
std::array<BoundEstimate, N> run_means(const Sampler& sampler, std::size_t n,
                                       std::uint64_t seed, Exec exec = {},
                                       std::uint64_t tag = 0) {
  std::vector<std::array<double, N>> samples(n);
  const int threads = exec.workers > 0 ? exec.workers : omp_get_max_threads();
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
  for (std::int64_t i = 0; i < count; ++i) {
    auto rng = RandomStream::for_sample(seed, tag, static_cast<std::uint64_t>(i));
    samples[i] = sampler(static_cast<std::uint64_t>(i), rng);
  }
  std::array<BoundEstimate, N> out;
  for (std::size_t c = 0; c < N; ++c) {
    RunningStats stats;
    for (const auto& s : samples) stats.push(s[c]);
    out[c].value = stats.mean();
    out[c].std_error = stats.std_error();
    out[c].n_outer = n;
    out[c].seed = seed;
  }
  return out;
}

/// a + scale * b for independent estimates; std_error combined in quadrature.
BoundEstimate combine(const BoundEstimate& a, const BoundEstimate& b, double scale);

/// (1/m) log( (1/n) sum X_i^m ) from log X_i, with first-order jackknife bias
/// correction. Requires n >= 2 and m > 0.
double log_mean_power_from_logs(std::span<const double> log_x, double m);

/// Same, drawing n_inner positive values from `sampler`. Throws InvalidSample
/// on a value <= 0.
double log_mean_power(const std::function<double(RandomStream&)>& sampler, double m,
                      std::size_t n_inner, RandomStream& rng);

/// log(exp(a) + exp(b)) without overflow.
double log_add_exp(double a, double b);
/// log sum exp over a range.
double log_sum_exp(std::span<const double> xs);
/// log ch(x) without overflow.
double log_cosh(double x);

}  // namespace dmf
