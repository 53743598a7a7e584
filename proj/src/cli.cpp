#include "dmf/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "dmf/cascade.hpp"
#include "dmf/errors.hpp"
#include "dmf/measure.hpp"
#include "dmf/oracle.hpp"
#include "dmf/rs.hpp"
#include "dmf/rsb.hpp"
#include "json.hpp"

namespace dmf {

namespace {

using nlohmann::json;

constexpr std::uint64_t kTagMaterialize = 0x636c6901;
constexpr const char* kFixedPointToken = "fixed-point";

// Keys that describe where or how a run executes rather than what it computes.
bool is_recorded(const std::string& key) { return key != "output.path"; }

json resolved_config(const RunConfig& cfg) {
  json out = json::object();
  for (const auto& [key, value] : cfg.values()) {
    if (!is_recorded(key)) continue;
    switch (cfg.type_of(key)) {
      case KeyType::integer: out[key] = cfg.integer(key); break;
      case KeyType::real: out[key] = cfg.real(key); break;
      case KeyType::boolean: out[key] = cfg.boolean(key); break;
      case KeyType::text: out[key] = value; break;
    }
  }
  return out;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json estimate_json(const BoundEstimate& b) {
  json out{{"value", number(b.value)},
           {"stderr", number(b.std_error)},
           {"n_outer", b.n_outer},
           {"n_inner", b.n_inner}};
  json meta = json::object();
  for (const auto& [k, v] : b.meta) meta[k] = number(v);
  out["meta"] = meta;
  return out;
}

json check_json(const IdentityCheck& c) {
  json out{{"lhs", number(c.lhs)},
           {"rhs", number(c.rhs)},
           {"gap", number(c.gap)},
           {"stderr", number(c.std_error)},
           {"lhs_stderr", number(c.lhs_stderr)},
           {"rhs_stderr", number(c.rhs_stderr)},
           {"K", c.K},
           {"n_outer", c.n_outer},
           {"seed", c.seed},
           {"shift", number(c.shift)},
           {"shift_stderr", number(c.shift_stderr)},
           {"bias_bound", number(c.bias_bound)},
           {"rhs_exact", c.rhs_exact ? number(*c.rhs_exact) : json(nullptr)}};
  if (c.m.size() == 1)
    out["m"] = c.m[0];
  else
    out["m_vec"] = c.m;
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

struct Context {
  const RunConfig& cfg;
  Exec exec;
  std::uint64_t seed;
  ModelSpec spec;
  json config;
  std::ostream& json_out;
  std::ostream* csv;

  void emit(const std::string& method, json result) const {
    json record{{"method", method},
                {"config", config},
                {"seed", seed},
                {"version", DMF_VERSION},
                {"result", std::move(result)}};
    json_out << record.dump() << '\n';
  }
};

RSConfig rs_config(const RunConfig& cfg, Exec exec) {
  RSConfig rs;
  rs.n_outer = static_cast<std::size_t>(cfg.integer("sampling.n_outer"));
  rs.population = static_cast<std::size_t>(cfg.integer("sampling.population"));
  rs.poisson_cap = static_cast<unsigned>(cfg.integer("sampling.poisson_cap"));
  rs.iterations = static_cast<int>(cfg.integer("fixed_point.iterations"));
  rs.damping = cfg.real("fixed_point.damping");
  rs.tolerance = cfg.real("fixed_point.tolerance");
  rs.include_field = cfg.boolean("fixed_point.include_field");
  rs.exec = exec;
  if (rs.n_outer < 2) throw InvalidInput("sampling.n_outer: must be >= 2");
  if (rs.population < 1) throw InvalidInput("sampling.population: must be >= 1");
  return rs;
}

RSBConfig rsb_config(const RunConfig& cfg, Exec exec) {
  RSBConfig rsb;
  rsb.n_outer = static_cast<std::size_t>(cfg.integer("sampling.n_outer"));
  rsb.n_inner = static_cast<std::size_t>(cfg.integer("sampling.n_inner"));
  rsb.population = static_cast<std::size_t>(cfg.integer("sampling.population"));
  rsb.poisson_cap = static_cast<unsigned>(cfg.integer("sampling.poisson_cap"));
  rsb.levels.clear();
  for (double v : cfg.reals("sampling.levels")) {
    if (!(v >= 2) || v != std::floor(v)) throw InvalidInput("sampling.levels: entries must be integers >= 2");
    rsb.levels.push_back(static_cast<std::size_t>(v));
  }
  rsb.exec = exec;
  if (rsb.n_outer < 2) throw InvalidInput("sampling.n_outer: must be >= 2");
  if (rsb.n_inner < 2) throw InvalidInput("sampling.n_inner: must be >= 2");
  return rsb;
}

std::vector<std::vector<double>> m_groups(const RunConfig& cfg) {
  auto groups = cfg.real_groups("sampling.m");
  if (groups.empty()) throw InvalidInput("sampling.m: no value given");
  for (const auto& g : groups) {
    try {
      validate_m_vector(g);
    } catch (const Error& e) {
      throw InvalidInput(std::string("sampling.m: ") + e.what());
    }
  }
  return groups;
}

FixedPointResult solve_from_config(const Context& ctx) {
  const RSConfig rs = rs_config(ctx.cfg, ctx.exec);
  HierarchicalMeasure init = parse_measure_spec(ctx.cfg.text("fixed_point.init"));
  if (init.depth() != 0) throw InvalidInput("fixed_point.init: must be a depth-0 measure");
  const Population start = init.is_population() && init.population().size() == rs.population
                               ? init.population()
                               : materialize(init, rs.population, mix64(ctx.seed, kTagMaterialize));
  return solve_fixed_point(ctx.spec, start, rs, ctx.seed);
}

HierarchicalMeasure resolve_zeta(const Context& ctx, const std::string& text, const std::string& key) {
  if (text == kFixedPointToken) return HierarchicalMeasure(solve_from_config(ctx).population);
  try {
    return parse_measure_spec(text);
  } catch (const Error& e) {
    throw InvalidInput(key + ": " + e.what());
  }
}

Population depth0_population(const Context& ctx, const HierarchicalMeasure& zeta,
                             const std::string& key) {
  if (zeta.depth() != 0) throw InvalidInput(key + ": the RS bound needs a depth-0 measure");
  if (zeta.is_population()) return zeta.population();
  return materialize(zeta, static_cast<std::size_t>(ctx.cfg.integer("sampling.population")),
                     mix64(ctx.seed, kTagMaterialize));
}

void write_estimate_csv(std::ostream* csv, const BoundEstimate& b) {
  if (!csv) return;
  *csv << "value,stderr,n_outer,n_inner\n"
       << format_double(b.value) << ',' << format_double(b.std_error) << ',' << b.n_outer << ','
       << b.n_inner << '\n';
}

void write_check_csv(std::ostream* csv, const IdentityCheck& c) {
  if (!csv) return;
  *csv << "lhs,rhs,gap,stderr,K,n_outer,shift,bias_bound\n"
       << format_double(c.lhs) << ',' << format_double(c.rhs) << ',' << format_double(c.gap) << ','
       << format_double(c.std_error) << ',' << c.K << ',' << c.n_outer << ','
       << format_double(c.shift) << ',' << format_double(c.bias_bound) << '\n';
}

std::string estimate_summary(const std::string& method, const BoundEstimate& b) {
  return method + ": value=" + fmt(b.value) + " stderr=" + fmt(b.std_error);
}

RunOutcome method_rs(const Context& ctx) {
  const RSConfig rs = rs_config(ctx.cfg, ctx.exec);
  const Population pop = depth0_population(
      ctx, resolve_zeta(ctx, ctx.cfg.text("bound.zeta"), "bound.zeta"), "bound.zeta");
  const std::string& form = ctx.cfg.text("bound.form");
  BoundEstimate b;
  if (form == "direct")
    b = rs_bound(ctx.spec, pop, rs, ctx.seed);
  else if (form == "bu")
    b = rs_bound_bu(ctx.spec, pop, rs, ctx.seed);
  else
    throw InvalidInput("bound.form: expected direct or bu, got '" + form + "'");
  ctx.emit("rs", estimate_json(b));
  write_estimate_csv(ctx.csv, b);
  return {kExitOk, estimate_summary("rs", b)};
}

RunOutcome method_rsb1(const Context& ctx) {
  const RSBConfig rsb = rsb_config(ctx.cfg, ctx.exec);
  const auto zeta = resolve_zeta(ctx, ctx.cfg.text("bound.zeta"), "bound.zeta");
  if (zeta.depth() != 1) throw InvalidInput("bound.zeta: rsb1 needs a depth-1 hierarchy");
  const auto groups = m_groups(ctx.cfg);
  if (groups.size() != 1 || groups[0].size() != 1)
    throw InvalidInput("sampling.m: rsb1 needs a single m");
  const BoundEstimate b = one_rsb_bound(ctx.spec, zeta, groups[0][0], rsb, ctx.seed);
  json result = estimate_json(b);
  result["m"] = groups[0][0];
  ctx.emit("rsb1", result);
  write_estimate_csv(ctx.csv, b);
  return {kExitOk, estimate_summary("rsb1", b)};
}

RunOutcome method_rsbr(const Context& ctx) {
  const RSBConfig rsb = rsb_config(ctx.cfg, ctx.exec);
  const auto zeta = resolve_zeta(ctx, ctx.cfg.text("bound.zeta"), "bound.zeta");
  const auto groups = m_groups(ctx.cfg);
  if (groups.size() != 1) throw InvalidInput("sampling.m: rsbr needs one m vector");
  if (static_cast<int>(groups[0].size()) != zeta.depth())
    throw InvalidInput("sampling.m: length must equal the depth of bound.zeta");
  const BoundEstimate b = r_rsb_bound(ctx.spec, zeta, groups[0], rsb, ctx.seed);
  json result = estimate_json(b);
  result["m_vec"] = groups[0];
  ctx.emit("rsbr", result);
  write_estimate_csv(ctx.csv, b);
  return {kExitOk, estimate_summary("rsbr", b)};
}

RunOutcome method_fixed_point(const Context& ctx) {
  const FixedPointResult fp = solve_from_config(ctx);
  RunningStats stats;
  for (double a : fp.population.atoms()) stats.push(a);
  json curve = json::array();
  for (double r : fp.residual_curve) curve.push_back(number(r));
  ctx.emit("fixed-point", json{{"residual", number(fp.residual)},
                               {"converged", fp.converged},
                               {"iterations", fp.residual_curve.size()},
                               {"population", fp.population.size()},
                               {"mean", number(stats.mean())},
                               {"variance", number(stats.variance())},
                               {"residual_curve", curve}});
  if (const auto& path = ctx.cfg.text("fixed_point.save"); !path.empty())
    save_measure_file(path, HierarchicalMeasure(fp.population));
  if (ctx.csv) {
    *ctx.csv << "iteration,residual\n";
    for (std::size_t t = 0; t < fp.residual_curve.size(); ++t)
      *ctx.csv << t + 1 << ',' << format_double(fp.residual_curve[t]) << '\n';
  }
  return {kExitOk, "fixed-point: residual=" + fmt(fp.residual) +
                       (fp.converged ? " converged" : " not converged")};
}

std::string check_summary(const std::string& method, const IdentityCheck& c) {
  return method + ": lhs=" + fmt(c.lhs) + " rhs=" + fmt(c.rhs) + " gap=" + fmt(c.gap) +
         " stderr=" + fmt(c.std_error) + " bias_bound=" + fmt(c.bias_bound);
}

RunOutcome method_verify_pd(const Context& ctx) {
  const auto groups = m_groups(ctx.cfg);
  if (groups.size() != 1 || groups[0].size() != 1)
    throw InvalidInput("sampling.m: verify-pd needs a single m");
  const XiSpec xi{ctx.cfg.real("xi.scale"), ctx.cfg.real("xi.g")};
  if (!(xi.scale > 0)) throw InvalidInput("xi.scale: must be > 0");
  const auto K = static_cast<std::size_t>(ctx.cfg.integer("sampling.K"));
  if (K < 1) throw InvalidInput("sampling.K: must be >= 1");
  const auto c = verify_pd(xi, groups[0][0], K,
                           static_cast<std::size_t>(ctx.cfg.integer("sampling.n_outer")), ctx.seed,
                           ctx.exec);
  ctx.emit("verify-pd", check_json(c));
  write_check_csv(ctx.csv, c);
  return {kExitOk, check_summary("verify-pd", c)};
}

RunOutcome method_verify_pd2(const Context& ctx) {
  const auto groups = m_groups(ctx.cfg);
  if (groups.size() != 1) throw InvalidInput("sampling.m: verify-pd2 needs one m vector");
  const auto& m = groups[0];
  const auto zeta = resolve_zeta(ctx, ctx.cfg.text("bound.zeta"), "bound.zeta");
  if (zeta.depth() != static_cast<int>(m.size()))
    throw InvalidInput("sampling.m: length must equal the depth of bound.zeta");
  VSpec v;
  const std::string& kind = ctx.cfg.text("v.kind");
  if (kind == "const") {
    v.constant = true;
    v.c = ctx.cfg.real("v.c");
    if (!(v.c > 0)) throw InvalidInput("v.c: must be > 0");
  } else if (kind == "exp") {
    v.lambda = ctx.cfg.real("v.lambda");
  } else {
    throw InvalidInput("v.kind: expected exp or const, got '" + kind + "'");
  }
  const auto K = static_cast<std::size_t>(ctx.cfg.integer("sampling.K"));
  if (K < 1) throw InvalidInput("sampling.K: must be >= 1");
  const auto levels = rsb_config(ctx.cfg, ctx.exec).levels_for(static_cast<int>(m.size()));
  const auto c = verify_pd2(v, zeta, m, K,
                            static_cast<std::size_t>(ctx.cfg.integer("sampling.n_outer")), levels,
                            ctx.seed, ctx.exec);
  ctx.emit("verify-pd2", check_json(c));
  write_check_csv(ctx.csv, c);
  return {kExitOk, check_summary("verify-pd2", c)};
}

RunOutcome method_oracle(const Context& ctx) {
  const auto N = ctx.cfg.integer("oracle.N");
  if (N < 1 || N > kMaxSpins) throw InvalidInput("oracle.N: must lie in [1, 24]");
  const auto n = static_cast<std::size_t>(ctx.cfg.integer("sampling.n_instances"));
  if (n < 2) throw InvalidInput("sampling.n_instances: must be >= 2");
  const BoundEstimate F = estimate_free_energy(ctx.spec, static_cast<int>(N), n, ctx.seed, ctx.exec);
  json result = estimate_json(F);
  result["N"] = N;
  ctx.emit("oracle", result);
  write_estimate_csv(ctx.csv, F);
  return {kExitOk, "oracle: N=" + std::to_string(N) + " F=" + fmt(F.value) + " stderr=" + fmt(F.std_error)};
}

RunOutcome method_gap(const Context& ctx) {
  GapConfig gc;
  gc.n_instances = static_cast<std::size_t>(ctx.cfg.integer("sampling.n_instances"));
  if (gc.n_instances < 2) throw InvalidInput("sampling.n_instances: must be >= 2");
  gc.rs = rs_config(ctx.cfg, ctx.exec);
  gc.rsb = rsb_config(ctx.cfg, ctx.exec);
  gc.exec = ctx.exec;
  std::vector<int> Ns;
  for (double v : ctx.cfg.reals("gap.N")) {
    if (v != std::floor(v) || v < 1 || v > kMaxSpins) throw InvalidInput("gap.N: entries must be integers in [1, 24]");
    Ns.push_back(static_cast<int>(v));
  }
  if (Ns.empty()) throw InvalidInput("gap.N: no sizes given");
  std::vector<std::vector<double>> groups;
  std::vector<GapCandidate> cands;
  for (const auto& item : ctx.cfg.items("gap.zetas")) {
    auto zeta = resolve_zeta(ctx, item, "gap.zetas");
    if (zeta.depth() == 0) {
      cands.push_back({item, std::move(zeta), {}});
      continue;
    }
    if (groups.empty()) groups = m_groups(ctx.cfg);
    for (const auto& m : groups)
      if (static_cast<int>(m.size()) == zeta.depth()) cands.push_back({item, zeta, m});
  }
  if (cands.empty()) throw InvalidInput("gap.zetas: no usable candidate");
  const GapReport report = gap_report(ctx.spec, Ns, cands, gc, ctx.seed);
  for (const auto& r : report.rows) {
    json row{{"N", r.N},
             {"zeta", r.zeta_id},
             {"m", r.m},
             {"free_energy", number(r.free_energy)},
             {"free_energy_stderr", number(r.free_energy_stderr)},
             {"bound", number(r.bound)},
             {"bound_stderr", number(r.bound_stderr)},
             {"gap", number(r.gap)},
             {"stderr", number(r.std_error)},
             {"violation", r.violation}};
    ctx.emit("gap", row);
  }
  ctx.emit("gap", json{{"n_rows", report.rows.size()},
                       {"n_violations", report.n_violations},
                       {"worst_gap_sigma", report.worst_gap_sigma ? number(*report.worst_gap_sigma)
                                                                  : json(nullptr)}});
  if (ctx.csv) write_gap_csv(*ctx.csv, report);
  std::string summary = "gap: rows=" + std::to_string(report.rows.size()) +
                        " violations=" + std::to_string(report.n_violations);
  if (report.worst_gap_sigma) summary += " worst_gap_sigma=" + fmt(*report.worst_gap_sigma);
  return {report.n_violations ? kExitViolation : kExitOk, summary};
}

RunOutcome method_grid(const Context& ctx) {
  const RSBConfig rsb = rsb_config(ctx.cfg, ctx.exec);
  const std::string& fam = ctx.cfg.text("grid.family");
  LeafFamily family;
  if (fam == "gaussian")
    family = LeafFamily::gaussian;
  else if (fam == "point")
    family = LeafFamily::point;
  else if (fam == "twopoint")
    family = LeafFamily::two_point;
  else
    throw InvalidInput("grid.family: expected gaussian, point or twopoint, got '" + fam + "'");
  const auto sigmas = ctx.cfg.reals("grid.sigmas");
  if (sigmas.empty()) throw InvalidInput("grid.sigmas: no values given");
  for (double s : sigmas)
    if (!(s >= 0) || !std::isfinite(s)) throw InvalidInput("grid.sigmas: entries must be finite and >= 0");
  const auto level_sd = ctx.cfg.reals("grid.level_sd");
  for (double s : level_sd)
    if (!(s >= 0) || !std::isfinite(s)) throw InvalidInput("grid.level_sd: entries must be finite and >= 0");
  std::vector<GridCandidate> cands;
  if (level_sd.empty() || ctx.cfg.boolean("grid.include_rs"))
    cands = family_candidates(family, sigmas, {});
  if (!level_sd.empty()) {
    auto deep = family_candidates(family, sigmas, level_sd);
    cands.insert(cands.end(), deep.begin(), deep.end());
  }
  const auto groups = level_sd.empty() ? std::vector<std::vector<double>>{} : m_groups(ctx.cfg);
  const GridResult res = grid_search(ctx.spec, cands, groups, rsb, ctx.seed);
  json table = json::array();
  for (const auto& row : res.table) {
    json r = estimate_json(row.bound);
    r["zeta"] = row.label;
    r["depth"] = row.depth;
    r["m"] = row.m;
    table.push_back(r);
  }
  const auto& best = res.table[res.best];
  ctx.emit("grid", json{{"table", table}, {"best", res.best}});
  if (ctx.csv) {
    *ctx.csv << "zeta,depth,m,value,stderr\n";
    for (const auto& row : res.table) {
      std::string m;
      for (std::size_t i = 0; i < row.m.size(); ++i) m += (i ? ";" : "") + format_double(row.m[i]);
      *ctx.csv << '"' << row.label << "\"," << row.depth << ',' << m << ','
               << format_double(row.bound.value) << ',' << format_double(row.bound.std_error) << '\n';
    }
  }
  return {kExitOk, "grid: best " + best.label + " value=" + fmt(best.bound.value) +
                       " stderr=" + fmt(best.bound.std_error)};
}

const std::vector<std::pair<std::string, RunOutcome (*)(const Context&)>>& methods() {
  static const std::vector<std::pair<std::string, RunOutcome (*)(const Context&)>> table{
      {"rs", method_rs},
      {"rsb1", method_rsb1},
      {"rsbr", method_rsbr},
      {"fixed-point", method_fixed_point},
      {"verify-pd", method_verify_pd},
      {"verify-pd2", method_verify_pd2},
      {"oracle", method_oracle},
      {"gap", method_gap},
      {"grid", method_grid},
  };
  return table;
}

std::string csv_path_for(const std::string& json_path) {
  const auto dot = json_path.find_last_of('.');
  const auto slash = json_path.find_last_of('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
    return json_path.substr(0, dot) + ".csv";
  return json_path + ".csv";
}

}  // namespace

RunOutcome run_method(const RunConfig& cfg, Exec exec, std::ostream& json_out, std::ostream* csv) {
  const std::string& method = cfg.text("method");
  for (const auto& [name, fn] : methods()) {
    if (name != method) continue;
    const Context ctx{cfg,       exec, static_cast<std::uint64_t>(cfg.integer("seed")),
                      cfg.model(), resolved_config(cfg), json_out, csv};
    return fn(ctx);
  }
  throw InvalidInput("method: unknown method '" + method + "'");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Free-energy bounds for diluted mean-field spin models"};
  app.set_version_flag("--version", std::string(DMF_VERSION));
  app.require_subcommand(1);

  std::string config_path;
  std::optional<long long> seed;
  int workers = 0;
  std::string out_path;
  bool beta_scaled = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "Config file (key = value lines)");
    sub->add_option("--seed", seed, "Random seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--workers", workers, "Parallel workers (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out_path, "NDJSON output path; a .csv mirror is written alongside");
    sub->add_flag("--beta-scaled-fields", beta_scaled, "Multiply fields drawn from zeta by beta");
    sub->allow_extras();
  };
  add_common(app.add_subcommand("run", "Run the method named in the config"));
  for (const auto& [name, fn] : methods()) add_common(app.add_subcommand(name, "Run method " + name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    std::vector<std::string> overrides = sub->remaining();
    if (config_path.find('=') != std::string::npos) {
      overrides.insert(overrides.begin(), config_path);
      config_path.clear();
    }
    if (sub->get_name() == "run" && config_path.empty())
      throw InvalidInput("run: a config file is required");
    RunConfig cfg = config_path.empty() ? RunConfig() : RunConfig::load_file(config_path);
    if (sub->get_name() != "run") cfg.set("method", sub->get_name());
    for (const auto& o : overrides) cfg.apply_override(o);
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (!out_path.empty()) cfg.set("output.path", out_path);
    if (beta_scaled) cfg.set("model.beta_scaled_fields", "true");

    const auto start = std::chrono::steady_clock::now();
    const std::string& path = cfg.text("output.path");
    RunOutcome outcome;
    if (path.empty()) {
      outcome = run_method(cfg, Exec{workers}, out, nullptr);
    } else {
      std::ostringstream json_buf, csv_buf;
      outcome = run_method(cfg, Exec{workers}, json_buf, &csv_buf);
      std::ofstream jf(path, std::ios::binary);
      std::ofstream cf(csv_path_for(path), std::ios::binary);
      if (!jf || !cf) throw InvalidInput("output.path: cannot write '" + path + "'");
      jf << json_buf.str();
      cf << csv_buf.str();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    (path.empty() ? err : out) << outcome.summary << " wall=" << fmt(seconds) << "s\n";
    return outcome.exit_code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace dmf
