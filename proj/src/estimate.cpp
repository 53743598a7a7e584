#include "dmf/estimate.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dmf/errors.hpp"

namespace dmf {

void RunningStats::push(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double RunningStats::variance() const {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::std_error() const {
  return n_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

namespace {

BoundEstimate summarize(const std::vector<double>& samples, std::uint64_t seed) {
  BoundEstimate est;
  est.n_outer = samples.size();
  est.seed = seed;
  RunningStats stats;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      est.value = std::numeric_limits<double>::quiet_NaN();
      est.std_error = std::numeric_limits<double>::quiet_NaN();
      est.meta["nonfinite_index"] = static_cast<double>(i);
      return est;
    }
    stats.push(samples[i]);
  }
  est.value = stats.mean();
  est.std_error = stats.std_error();
  return est;
}

void check_count(std::size_t n) {
  if (n < 2) throw InvalidParameter("run_mean: need at least two outer samples");
}

}  // namespace

BoundEstimate run_mean(const OuterSampler& sampler, std::size_t n, std::uint64_t seed,
                       Exec exec, std::uint64_t tag) {
  check_count(n);
  std::vector<double> samples(n);
  const int threads = exec.workers > 0 ? exec.workers : omp_get_max_threads();
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 64) num_threads(threads)
  for (std::int64_t i = 0; i < count; ++i) {
    auto rng = RandomStream::for_sample(seed, tag, static_cast<std::uint64_t>(i));
    samples[i] = sampler(static_cast<std::uint64_t>(i), rng);
  }
  return summarize(samples, seed);
}

BoundEstimate run_mean_serial(const OuterSampler& sampler, std::size_t n,
                              std::uint64_t seed, std::uint64_t tag) {
  check_count(n);
  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = RandomStream::for_sample(seed, tag, i);
    samples[i] = sampler(i, rng);
  }
  return summarize(samples, seed);
}

BoundEstimate combine(const BoundEstimate& a, const BoundEstimate& b, double scale) {
  BoundEstimate out;
  out.value = a.value + scale * b.value;
  out.std_error = std::hypot(a.std_error, scale * b.std_error);
  out.n_outer = std::min(a.n_outer, b.n_outer);
  out.n_inner = std::max(a.n_inner, b.n_inner);
  out.seed = a.seed;
  return out;
}

double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - top);
  return top + std::log(sum);
}

double log_cosh(double x) {
  const double ax = std::fabs(x);
  return ax + std::log1p(std::exp(-2.0 * ax)) - std::numbers::ln2;
}

double log_mean_power_from_logs(std::span<const double> log_x, double m) {
  const std::size_t n = log_x.size();
  if (n < 2) throw InvalidParameter("log_mean_power: need at least two inner samples");
  if (!(m > 0.0)) throw InvalidParameter("log_mean_power: m must be positive");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : log_x) {
    if (!std::isfinite(v)) throw InvalidSample("log_mean_power: non-finite log value");
    lo = std::min(lo, m * v);
    hi = std::max(hi, m * v);
  }
  const double dn = static_cast<double>(n);
  const double log_n = std::log(dn);
  const double log_n1 = std::log(dn - 1.0);

  double full = 0.0;
  double loo_sum = 0.0;
  if (hi - lo < 600.0) {
    // Linear space is safe: every term is at least exp(-600).
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::exp(m * log_x[i] - hi);
    std::vector<double> suffix(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + y[i];
    full = std::log(suffix[0]) - log_n;
    double prefix = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      loo_sum += std::log(prefix + suffix[i + 1]) - log_n1;
      prefix += y[i];
    }
  } else {
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> suffix(n + 1, ninf);
    for (std::size_t i = n; i-- > 0;) suffix[i] = log_add_exp(suffix[i + 1], m * log_x[i] - hi);
    full = suffix[0] - log_n;
    double prefix = ninf;
    for (std::size_t i = 0; i < n; ++i) {
      loo_sum += log_add_exp(prefix, suffix[i + 1]) - log_n1;
      prefix = log_add_exp(prefix, m * log_x[i] - hi);
    }
  }
  // jackknife: n * theta - (n - 1) * mean(theta_{-i}), all relative to hi
  const double jack = dn * full - (dn - 1.0) * (loo_sum / dn);
  return (hi + jack) / m;
}

double log_mean_power(const std::function<double(RandomStream&)>& sampler, double m,
                      std::size_t n_inner, RandomStream& rng) {
  std::vector<double> logs(n_inner);
  for (std::size_t i = 0; i < n_inner; ++i) {
    const double x = sampler(rng);
    if (!(x > 0.0)) throw InvalidSample("log_mean_power: inner sample must be positive");
    logs[i] = std::log(x);
  }
  return log_mean_power_from_logs(logs, m);
}

}  // namespace dmf
