#include "dmf/oracle.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>

#include "dmf/errors.hpp"

namespace dmf {

namespace {

constexpr std::uint64_t kTagInstance = 0x6f72'0001;
constexpr std::uint64_t kTagMaterialize = 0x6f72'0002;
// Cached clause values are re-summed from scratch this often.
constexpr std::uint64_t kResyncPeriod = 1u << 12;

double clause_value(const ModelSpec& spec, const Clause& c, std::span<const std::int8_t> sigma) {
  std::array<std::int8_t, kMaxArity> local{};
  for (int l = 0; l < spec.p; ++l) local[l] = sigma[static_cast<std::size_t>(c.index[l])];
  return theta_value(spec, c.theta, std::span(local.data(), static_cast<std::size_t>(spec.p)));
}

// Streaming log-sum-exp.
struct LogAccumulator {
  double max = -INFINITY;
  double sum = 0.0;

  void push(double v) {
    if (v > max) {
      sum = sum * std::exp(max - v) + 1.0;
      max = v;
    } else {
      sum += std::exp(v - max);
    }
  }
  double value() const { return max + std::log(sum); }
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

double free_energy_sample(const ModelSpec& spec, int N, RandomStream& rng) {
  const Instance inst = build_instance(spec, N, rng);
  return exact_log_partition(spec, inst) / N;
}

}  // namespace

Instance build_instance(const ModelSpec& spec, int N, RandomStream& rng) {
  validate(spec);
  if (N < 1 || N > kMaxSpins) throw InvalidInput("oracle.N: must lie in [1, 24]");
  Instance inst;
  inst.N = N;
  const double mean = spec.alpha * N;
  const unsigned M = mean > 0.0 ? rng.poisson(mean, poisson_cap(mean)) : 0u;
  inst.clauses.resize(M);
  for (auto& c : inst.clauses) {
    for (int l = 0; l < spec.p; ++l) c.index[l] = static_cast<int>(rng.below(static_cast<std::uint64_t>(N)));
    c.theta = sample_theta(spec, rng);
  }
  inst.h.resize(static_cast<std::size_t>(N));
  for (auto& h : inst.h) h = spec.field.sample(rng);
  return inst;
}

double log_weight(const ModelSpec& spec, const Instance& inst, std::span<const std::int8_t> sigma) {
  double w = 0.0;
  for (const auto& c : inst.clauses) w += clause_value(spec, c, sigma);
  for (int i = 0; i < inst.N; ++i) w += inst.h[i] * sigma[i];
  return w;
}

double exact_log_partition(const ModelSpec& spec, const Instance& inst) {
  const int N = inst.N;
  if (N < 1 || N > kMaxSpins) throw InvalidInput("oracle.N: must lie in [1, 24]");
  // incident[i]: clauses containing spin i, each listed once.
  std::vector<std::vector<std::uint32_t>> incident(static_cast<std::size_t>(N));
  for (std::size_t c = 0; c < inst.clauses.size(); ++c) {
    for (int l = 0; l < spec.p; ++l) {
      auto& list = incident[static_cast<std::size_t>(inst.clauses[c].index[l])];
      if (list.empty() || list.back() != c) list.push_back(static_cast<std::uint32_t>(c));
    }
  }
  std::vector<std::int8_t> sigma(static_cast<std::size_t>(N), 1);
  std::vector<double> cached(inst.clauses.size());
  for (std::size_t c = 0; c < cached.size(); ++c) cached[c] = clause_value(spec, inst.clauses[c], sigma);
  auto full = [&] {
    double w = 0.0;
    for (double v : cached) w += v;
    for (int i = 0; i < N; ++i) w += inst.h[i] * sigma[i];
    return w;
  };
  double w = full();
  LogAccumulator acc;
  acc.push(w);
  const std::uint64_t states = std::uint64_t{1} << N;
  for (std::uint64_t step = 1; step < states; ++step) {
    const auto i = static_cast<std::size_t>(std::countr_zero(step));
    w -= 2.0 * inst.h[i] * sigma[i];
    sigma[i] = static_cast<std::int8_t>(-sigma[i]);
    for (auto c : incident[i]) {
      const double v = clause_value(spec, inst.clauses[c], sigma);
      w += v - cached[c];
      cached[c] = v;
    }
    if (step % kResyncPeriod == 0) w = full();
    acc.push(w);
  }
  return acc.value();
}

BoundEstimate estimate_free_energy(const ModelSpec& spec, int N, std::size_t n_instances,
                                   std::uint64_t seed, Exec exec) {
  validate(spec);
  return run_mean([&](std::uint64_t, RandomStream& rng) { return free_energy_sample(spec, N, rng); },
                  n_instances, seed, exec, mix64(kTagInstance, static_cast<std::uint64_t>(N)));
}

BoundEstimate estimate_free_energy_serial(const ModelSpec& spec, int N,
                                          std::size_t n_instances, std::uint64_t seed) {
  validate(spec);
  return run_mean_serial(
      [&](std::uint64_t, RandomStream& rng) { return free_energy_sample(spec, N, rng); },
      n_instances, seed, mix64(kTagInstance, static_cast<std::uint64_t>(N)));
}

bool is_violation(double gap, double se, double scale) {
  return gap < -3.0 * se - roundoff_slack(scale);
}

BoundEstimate candidate_bound(const ModelSpec& spec, const GapCandidate& cand,
                              const GapConfig& cfg, std::uint64_t seed) {
  const int depth = cand.zeta.depth();
  if (static_cast<int>(cand.m.size()) != depth)
    throw InvalidParameter("gap candidate '" + cand.id + "': m has " +
                           std::to_string(cand.m.size()) + " entries, hierarchy depth is " +
                           std::to_string(depth));
  if (depth == 0) {
    const Population pop = cand.zeta.is_population()
                               ? cand.zeta.population()
                               : materialize(cand.zeta, cfg.rs.population, mix64(seed, kTagMaterialize));
    RSConfig rs = cfg.rs;
    rs.exec = cfg.exec;
    return rs_bound(spec, pop, rs, seed);
  }
  RSBConfig rsb = cfg.rsb;
  rsb.exec = cfg.exec;
  if (depth == 1) return one_rsb_bound(spec, cand.zeta, cand.m[0], rsb, seed);
  return r_rsb_bound(spec, cand.zeta, cand.m, rsb, seed);
}

GapReport gap_report(const ModelSpec& spec, std::span<const int> Ns,
                     const std::vector<GapCandidate>& zetas, const GapConfig& cfg,
                     std::uint64_t seed) {
  validate(spec);
  std::vector<BoundEstimate> bounds;
  bounds.reserve(zetas.size());
  for (const auto& z : zetas) bounds.push_back(candidate_bound(spec, z, cfg, seed));

  GapReport report;
  for (int N : Ns) {
    const BoundEstimate F = estimate_free_energy(spec, N, cfg.n_instances, seed, cfg.exec);
    for (std::size_t z = 0; z < zetas.size(); ++z) {
      GapRow row;
      row.N = N;
      row.zeta_id = zetas[z].id;
      row.m = zetas[z].m;
      row.free_energy = F.value;
      row.free_energy_stderr = F.std_error;
      row.bound = bounds[z].value;
      row.bound_stderr = bounds[z].std_error;
      row.gap = row.bound - row.free_energy;
      row.std_error = std::hypot(F.std_error, bounds[z].std_error);
      row.violation = is_violation(row.gap, row.std_error, row.free_energy);
      if (row.violation) ++report.n_violations;
      if (row.std_error > roundoff_slack(row.free_energy)) {
        const double s = row.gap / row.std_error;
        if (!report.worst_gap_sigma || s < *report.worst_gap_sigma) report.worst_gap_sigma = s;
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void write_gap_csv(std::ostream& out, const GapReport& report) {
  out << "N,zeta,m,free_energy,free_energy_stderr,bound,bound_stderr,gap,stderr,status\n";
  for (const auto& r : report.rows) {
    std::string m;
    for (std::size_t i = 0; i < r.m.size(); ++i) m += (i ? ";" : "") + format_double(r.m[i]);
    out << r.N << ',' << csv_field(r.zeta_id) << ',' << m << ',' << format_double(r.free_energy) << ','
        << format_double(r.free_energy_stderr) << ',' << format_double(r.bound) << ','
        << format_double(r.bound_stderr) << ',' << format_double(r.gap) << ','
        << format_double(r.std_error) << ',' << (r.violation ? "VIOLATION" : "ok") << '\n';
  }
}

}  // namespace dmf
