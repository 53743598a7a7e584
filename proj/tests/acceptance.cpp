// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "dmf/cascade.hpp"
#include "dmf/cli.hpp"
#include "dmf/model.hpp"
#include "dmf/oracle.hpp"
#include "dmf/rs.hpp"
#include "dmf/rsb.hpp"

namespace {

using dmf::HierarchicalMeasure;
using dmf::ModelKind;
using dmf::ModelSpec;

struct Verdict {
  bool pass;
  std::string detail;
};

ModelSpec make(ModelKind kind, int p, double beta, double alpha) {
  ModelSpec s;
  s.kind = kind;
  s.p = p;
  s.beta = beta;
  s.alpha = alpha;
  return s;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// The model grid shared by the RS and 1RSB gap checks.
struct GridModel {
  std::string name;
  ModelSpec spec;
};

std::vector<GridModel> gap_grid_models() {
  std::vector<GridModel> out;
  for (double alpha : {0.1, 0.5}) {
    const std::string a = fmt("%.1f", alpha);
    out.push_back({"pspin b=0.5 a=" + a, make(ModelKind::pspin, 2, 0.5, alpha)});
    out.push_back({"pspin b=1 a=" + a, make(ModelKind::pspin, 2, 1.0, alpha)});
    out.push_back({"ksat b=1 a=" + a, make(ModelKind::ksat, 2, 1.0, alpha)});
  }
  return out;
}

const std::vector<int> kSizes{8, 12, 16};
constexpr std::size_t kInstances = 2000;
constexpr std::uint64_t kSeed = 2024;

// Free energies are shared by criteria 1 and 2.
std::vector<std::vector<dmf::BoundEstimate>>& free_energies() {
  static std::vector<std::vector<dmf::BoundEstimate>> table = [] {
    std::vector<std::vector<dmf::BoundEstimate>> t;
    for (const auto& gm : gap_grid_models()) {
      std::vector<dmf::BoundEstimate> row;
      for (int N : kSizes) row.push_back(dmf::estimate_free_energy(gm.spec, N, kInstances, kSeed));
      t.push_back(std::move(row));
    }
    return t;
  }();
  return table;
}

struct GapTally {
  int rows = 0;
  int violations = 0;
  double worst = INFINITY;
  std::string worst_row;

  void add(const std::string& label, const dmf::BoundEstimate& F, const dmf::BoundEstimate& bound) {
    const double gap = bound.value - F.value;
    const double se = std::hypot(F.std_error, bound.std_error);
    ++rows;
    if (dmf::is_violation(gap, se, F.value)) ++violations;
    if (se > 0 && gap / se < worst) {
      worst = gap / se;
      worst_row = label;
    }
  }
  Verdict verdict() const {
    return {violations == 0, "rows=" + std::to_string(rows) + " violations=" + std::to_string(violations) +
                                 " worst_gap_sigma=" + fmt("%.2f", worst) + " (" + worst_row + ")"};
  }
};

Verdict criterion1() {
  GapTally tally;
  const auto models = gap_grid_models();
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& spec = models[i].spec;
    dmf::RSConfig cfg;
    cfg.n_outer = 100000;
    cfg.population = 10000;
    cfg.iterations = 200;
    const auto init = dmf::materialize(dmf::ScalarLaw{dmf::LeafFamily::gaussian, 0.0, 1.0}, 10000, kSeed);
    const auto fp = dmf::solve_fixed_point(spec, init, cfg, kSeed);
    const std::vector<std::pair<std::string, dmf::Population>> zetas{
        {"delta0", dmf::make_population({0.0})}, {"fixed-point", fp.population}};
    for (const auto& [zname, pop] : zetas) {
      const auto bound = dmf::rs_bound(spec, pop, cfg, kSeed);
      for (std::size_t n = 0; n < kSizes.size(); ++n)
        tally.add(models[i].name + " N=" + std::to_string(kSizes[n]) + " " + zname,
                  free_energies()[i][n], bound);
    }
  }
  return tally.verdict();
}

Verdict criterion2() {
  GapTally tally;
  const auto models = gap_grid_models();
  const std::vector<std::pair<std::string, HierarchicalMeasure>> zetas{
      {"delta_delta0", HierarchicalMeasure::degenerate(0.0, 1)},
      {"gaussian:0,0.5@0.5", dmf::parse_measure_spec("gaussian:0,0.5@0.5")}};
  dmf::RSBConfig cfg;
  cfg.n_outer = 20000;
  cfg.n_inner = 1000;
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (const auto& [zname, zeta] : zetas) {
      for (double m : {0.3, 0.7}) {
        const auto bound = dmf::one_rsb_bound(models[i].spec, zeta, m, cfg, kSeed);
        for (std::size_t n = 0; n < kSizes.size(); ++n)
          tally.add(models[i].name + " N=" + std::to_string(kSizes[n]) + " " + zname + " m=" + fmt("%.1f", m),
                    free_energies()[i][n], bound);
      }
    }
  }
  return tally.verdict();
}

Verdict criterion3() {
  bool pass = true;
  std::string detail;
  for (double m : {0.3, 0.5, 0.7, 0.9}) {
    const auto c = dmf::verify_pd(dmf::XiSpec{1.0, 1.0}, m, 10000, 2000, kSeed);
    const bool ok_gap = std::abs(c.gap) <= 3 * c.std_error;
    const bool ok_shift = std::abs(c.shift) <= 2 * c.std_error;
    pass = pass && ok_gap && ok_shift;
    detail += " m=" + fmt("%.1f", m) + ":gap/se=" + fmt("%.2f", c.gap / c.std_error) +
              ",shift/se=" + fmt("%.2f", c.shift / c.std_error) + (ok_gap && ok_shift ? "" : "[x]");
  }
  return {pass, detail.substr(1)};
}

Verdict criterion4() {
  const auto zeta = dmf::parse_measure_spec("gaussian:0,0.8@0.5,0.8");
  const std::vector<double> m{0.2, 0.4};
  const std::vector<std::size_t> levels{200, 200};
  const auto c = dmf::verify_pd2(dmf::VSpec{false, 1.0, 1.0}, zeta, m, 300, 500, levels, kSeed);
  const double exact = c.rhs_exact.value();
  const bool ok_rhs = std::abs(c.lhs - c.rhs) <= 3 * c.std_error;
  const bool ok_exact = std::abs(c.lhs - exact) <= 3 * c.lhs_stderr;
  return {ok_rhs && ok_exact,
          "lhs=" + fmt("%.5f", c.lhs) + " rhs(operator)=" + fmt("%.5f", c.rhs) + " closed_form=" + fmt("%.5f", exact) +
              " |lhs-rhs|/se=" + fmt("%.2f", std::abs(c.lhs - c.rhs) / c.std_error) +
              " |lhs-closed|/se=" + fmt("%.2f", std::abs(c.lhs - exact) / c.lhs_stderr)};
}

Verdict criterion5() {
  const auto gauss = dmf::materialize(dmf::ScalarLaw{dmf::LeafFamily::gaussian, 0.0, 1.0}, 10000, kSeed);
  const auto two = dmf::make_population({-0.5, 0.5});
  const auto d0 = dmf::make_population({0.0});
  int n = 0, bad = 0;
  double worst = 0;
  std::uint64_t seed = 100;
  for (auto kind : {ModelKind::pspin, ModelKind::ksat}) {
    for (double alpha : {0.2, 0.8}) {
      for (const auto* pop : {&d0, &gauss, &two}) {
        auto spec = make(kind, 2, kind == ModelKind::pspin ? 1.2 : 1.0, alpha);
        spec.field = dmf::ScalarLaw{dmf::LeafFamily::two_point, 0.3, 0.0};
        dmf::RSConfig cfg;
        cfg.n_outer = 100000;
        const auto a = dmf::rs_bound(spec, *pop, cfg, seed);
        const auto b = dmf::rs_bound_bu(spec, *pop, cfg, seed);
        const double z = std::abs(a.value - b.value) / std::hypot(a.std_error, b.std_error);
        worst = std::max(worst, z);
        bad += z > 3;
        ++n;
        ++seed;
      }
    }
  }
  return {bad == 0, "specs=" + std::to_string(n) + " failures=" + std::to_string(bad) +
                        " max|diff|/se=" + fmt("%.2f", worst)};
}

Verdict criterion6() {
  bool pass = true;
  std::string detail;
  const std::vector<ModelSpec> specs{make(ModelKind::pspin, 2, 1.0, 0.5), make(ModelKind::ksat, 2, 1.0, 0.5),
                                     make(ModelKind::pspin, 4, 0.8, 0.3)};
  dmf::RSConfig rs;
  rs.n_outer = 50000;
  dmf::RSBConfig rsb;
  rsb.n_outer = 50000;
  rsb.n_inner = 10;
  rsb.levels = {10, 10};
  double worst = 0;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const double x0 = 0.4;
    const auto phi = dmf::rs_bound(specs[s], dmf::make_population({x0}), rs, kSeed + s);
    double first = NAN;
    for (double m : {0.2, 0.5, 0.8}) {
      const auto b = dmf::one_rsb_bound(specs[s], HierarchicalMeasure::degenerate(x0, 1), m, rsb, kSeed);
      if (std::isnan(first)) first = b.value;
      const double z = std::abs(b.value - phi.value) / std::hypot(b.std_error, phi.std_error);
      worst = std::max(worst, z);
      pass = pass && z <= 3 && b.value == first;
    }
    const std::vector<double> m2{0.3, 0.7};
    const auto r2 = dmf::r_rsb_bound(specs[s], HierarchicalMeasure::degenerate(x0, 2), m2, rsb, kSeed);
    const double z2 = std::abs(r2.value - phi.value) / std::hypot(r2.std_error, phi.std_error);
    worst = std::max(worst, z2);
    pass = pass && z2 <= 3;
  }
  detail = "degenerate max|diff|/se=" + fmt("%.2f", worst);
  // m -> 0 with zeta concentrated on one measure eta0.
  double worst_small = -INFINITY;
  dmf::RSBConfig small;
  small.n_outer = 5000;
  small.n_inner = 1000;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const auto eta = dmf::materialize(dmf::ScalarLaw{dmf::LeafFamily::gaussian, 0.0, 0.8}, 10000, kSeed + s);
    const HierarchicalMeasure zeta(std::vector<HierarchicalMeasure>{HierarchicalMeasure(eta)});
    const auto b = dmf::one_rsb_bound(specs[s], zeta, 0.01, small, kSeed);
    const auto phi = dmf::rs_bound(specs[s], eta, rs, kSeed);
    const double slack = std::abs(b.value - phi.value) - 3 * std::hypot(b.std_error, phi.std_error);
    worst_small = std::max(worst_small, slack);
    pass = pass && slack <= 0.01;
  }
  detail += " m=0.01 max(|diff|-3se)=" + fmt("%.4f", worst_small);
  return {pass, detail};
}

Verdict criterion7() {
  const auto spec = make(ModelKind::pspin, 2, 0.5, 0.05);
  const auto F = dmf::estimate_free_energy(spec, 16, kInstances, kSeed);
  const double closed = std::numbers::ln2 + spec.alpha * std::log(std::cosh(spec.beta));
  dmf::RSConfig cfg;
  const auto fp = dmf::solve_fixed_point(spec, dmf::make_population({0.0}), cfg, kSeed);
  const bool pass = std::abs(F.value - closed) <= 0.02 && fp.residual == 0.0;
  return {pass, "F16=" + fmt("%.5f", F.value) + " closed_form=" + fmt("%.5f", closed) +
                    " |diff|=" + fmt("%.5f", std::abs(F.value - closed)) + " residual=" + fmt("%g", fp.residual)};
}

double boltzmann(const ModelSpec& s, const dmf::ThetaSample& t, const std::vector<int>& eps) {
  double prod = 1;
  if (s.kind == ModelKind::pspin) {
    for (int e : eps) prod *= e;
    return std::exp(s.beta * t.coupling * prod);
  }
  for (std::size_t l = 0; l < eps.size(); ++l) prod *= (1.0 + t.literals[l] * eps[l]) / 2.0;
  return std::exp(-s.beta * prod);
}

double brute_bracket(const ModelSpec& s, const dmf::ThetaSample& t, const std::vector<double>& x, int last) {
  // last == 0: all p coordinates averaged; otherwise eps_p fixed to `last`.
  const int free = last == 0 ? s.p : s.p - 1;
  double num = 0, den = 0;
  for (unsigned mask = 0; mask < (1u << free); ++mask) {
    std::vector<int> eps(free);
    double field = 0;
    for (int l = 0; l < free; ++l) {
      eps[l] = (mask >> l) & 1u ? 1 : -1;
      field += x[l] * eps[l];
    }
    if (last != 0) eps.push_back(last);
    num += boltzmann(s, t, eps) * std::exp(field);
    den += std::exp(field);
  }
  return num / den;
}

double naive_log_partition(const ModelSpec& s, const dmf::Instance& inst) {
  std::vector<double> w;
  std::vector<std::int8_t> sigma(inst.N);
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << inst.N); ++c) {
    for (int i = 0; i < inst.N; ++i) sigma[i] = (c >> i) & 1 ? -1 : 1;
    w.push_back(dmf::log_weight(s, inst, sigma));
  }
  const double top = *std::max_element(w.begin(), w.end());
  long double sum = 0;
  for (double v : w) sum += std::exp(static_cast<long double>(v - top));
  return top + static_cast<double>(std::log(sum));
}

Verdict criterion8() {
  double worst_bracket = 0;
  int inputs = 0;
  for (const auto& spec : {make(ModelKind::pspin, 2, 1.0, 0.5), make(ModelKind::pspin, 4, 1.5, 0.5),
                           make(ModelKind::ksat, 2, 1.0, 0.5), make(ModelKind::ksat, 4, 2.0, 0.5)}) {
    dmf::RandomStream rng(kSeed, static_cast<std::uint64_t>(spec.p * 2 + (spec.kind == ModelKind::ksat)));
    for (int i = 0; i < 250; ++i, ++inputs) {
      const auto t = dmf::sample_theta(spec, rng);
      std::vector<double> x(spec.p);
      for (auto& v : x) v = 2 * rng.normal();
      const double full = dmf::bracket_full(spec, t, x);
      worst_bracket = std::max(worst_bracket, std::abs(full - brute_bracket(spec, t, x, 0)) / full);
      const std::vector<double> xm(x.begin(), x.end() - 1);
      for (int e : {-1, 1}) {
        const double bm = dmf::bracket_minus(spec, t, xm, e);
        worst_bracket = std::max(worst_bracket, std::abs(bm - brute_bracket(spec, t, xm, e)) / bm);
      }
    }
  }
  double worst_z = 0;
  dmf::RandomStream rng(kSeed, 77);
  for (int i = 0; i < 100; ++i) {
    auto spec = i % 2 ? make(ModelKind::ksat, 2, 1.5, 1.5) : make(ModelKind::pspin, 2, 1.0, 1.5);
    spec.field = dmf::ScalarLaw{dmf::LeafFamily::gaussian, 0.0, 0.5};
    const auto inst = dmf::build_instance(spec, 1 + static_cast<int>(rng.below(12)), rng);
    const double fast = dmf::exact_log_partition(spec, inst);
    worst_z = std::max(worst_z, std::abs(fast - naive_log_partition(spec, inst)));
  }
  double min_gap = INFINITY;
  dmf::RandomStream pr(kSeed, 78);
  for (int i = 0; i < 1000000; ++i) {
    const double x = 10 * pr.uniform() - 5, y = 10 * pr.uniform() - 5;
    const int p = 2 * (1 + static_cast<int>(pr.below(3)));
    min_gap = std::min(min_gap, dmf::power_mean_gap(x, y, p));
  }
  const bool pass = worst_bracket <= 1e-10 && worst_z <= 1e-10 && min_gap >= -1e-12;
  return {pass, "inputs=" + std::to_string(inputs) + " bracket_rel_err=" + fmt("%.1e", worst_bracket) +
                    " logZ_err=" + fmt("%.1e", worst_z) + " min_power_mean_gap=" + fmt("%.1e", min_gap)};
}

std::string run_cli_json(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"dmbound"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  if (dmf::run_cli(static_cast<int>(argv.size()), argv.data(), out, err) != 0) return "error: " + err.str();
  return out.str();
}

Verdict criterion9() {
  const std::vector<std::vector<std::string>> runs{
      {"rs", "model.kind=ksat", "model.alpha=0.5", "bound.zeta=gaussian:0,1", "sampling.n_outer=20000"},
      {"rsb1", "bound.zeta=gaussian:0,0.5@0.5", "sampling.m=0.4", "sampling.n_outer=400", "sampling.n_inner=50"},
      {"fixed-point", "model.kind=ksat", "sampling.population=2000", "fixed_point.iterations=10"},
      {"verify-pd", "sampling.K=500", "sampling.n_outer=200"},
      {"gap", "gap.N=6,8", "gap.zetas=point:0;fixed-point", "sampling.n_instances=50", "sampling.n_outer=2000",
       "sampling.population=500", "fixed_point.iterations=5"},
  };
  int identical = 0;
  for (const auto& base : runs) {
    std::vector<std::string> outputs;
    for (const char* workers : {"--workers=1", "--workers=1", "--workers=4"}) {
      auto args = base;
      args.push_back("--seed=31");
      args.push_back(workers);
      outputs.push_back(run_cli_json(args));
    }
    const bool same = outputs[0].rfind("error", 0) != 0 && outputs[0] == outputs[1] && outputs[0] == outputs[2];
    identical += same;
  }
  return {identical == static_cast<int>(runs.size()),
          "commands=" + std::to_string(runs.size()) + " byte_identical=" + std::to_string(identical)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1 RS bound vs exact F_N", criterion1},
      {"2 one-step RSB bound vs exact F_N", criterion2},
      {"3 single-level cascade identity", criterion3},
      {"4 two-level cascade identity", criterion4},
      {"5 RS cross-form agreement", criterion5},
      {"6 degeneracy collapses", criterion6},
      {"7 small-alpha exactness", criterion7},
      {"8 kernel brute-force equivalence", criterion8},
      {"9 CLI reproducibility", criterion9},
  };
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    const Verdict v = fn();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %s: %s  %s  [%.1fs]\n", name.c_str(), v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !v.pass;
  }
  return failures == 0 ? 0 : 1;
}
