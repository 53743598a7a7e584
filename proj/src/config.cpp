#include "dmf/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "dmf/errors.hpp"
#include "dmf/measure.hpp"

namespace dmf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_ll(const std::string& s, long long& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && p == end && !s.empty();
}

bool parse_real(const std::string& s, double& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && p == end && !s.empty();
}

bool parse_bool(const std::string& s, bool& out) {
  if (s == "true" || s == "1" || s == "yes") return out = true, true;
  if (s == "false" || s == "0" || s == "no") return out = false, true;
  return false;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<double> parse_reals(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) {
    double v;
    if (!parse_real(item, v)) throw InvalidInput(key + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

const KeySpec* find_key(const std::string& key) {
  for (const auto& k : config_schema())
    if (k.key == key) return &k;
  return nullptr;
}

}  // namespace

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema{
      {"method", KeyType::text, "rs"},
      {"seed", KeyType::integer, "1"},
      {"output.path", KeyType::text, ""},
      {"model.kind", KeyType::text, "pspin"},
      {"model.p", KeyType::integer, "2"},
      {"model.beta", KeyType::real, "1"},
      {"model.alpha", KeyType::real, "0.1"},
      {"model.field", KeyType::text, "point:0"},
      {"model.J", KeyType::text, "twopoint:1"},
      {"model.beta_scaled_fields", KeyType::boolean, "false"},
      {"bound.zeta", KeyType::text, "point:0"},
      {"bound.form", KeyType::text, "direct"},
      {"sampling.n_outer", KeyType::integer, "100000"},
      {"sampling.n_inner", KeyType::integer, "2000"},
      {"sampling.levels", KeyType::text, "200,100"},
      {"sampling.population", KeyType::integer, "10000"},
      {"sampling.poisson_cap", KeyType::integer, "0"},
      {"sampling.K", KeyType::integer, "10000"},
      {"sampling.m", KeyType::text, "0.5"},
      {"sampling.n_instances", KeyType::integer, "2000"},
      {"fixed_point.init", KeyType::text, "gaussian:0,1"},
      {"fixed_point.iterations", KeyType::integer, "200"},
      {"fixed_point.damping", KeyType::real, "0"},
      {"fixed_point.tolerance", KeyType::real, "0.01"},
      {"fixed_point.include_field", KeyType::boolean, "false"},
      {"fixed_point.save", KeyType::text, ""},
      {"xi.scale", KeyType::real, "1"},
      {"xi.g", KeyType::real, "1"},
      {"v.kind", KeyType::text, "exp"},
      {"v.lambda", KeyType::real, "1"},
      {"v.c", KeyType::real, "1"},
      {"oracle.N", KeyType::integer, "12"},
      {"gap.N", KeyType::text, "8,12,16"},
      {"gap.zetas", KeyType::text, "point:0;fixed-point"},
      {"grid.family", KeyType::text, "gaussian"},
      {"grid.sigmas", KeyType::text, "0,0.5,1"},
      {"grid.level_sd", KeyType::text, ""},
      {"grid.include_rs", KeyType::boolean, "true"},
  };
  return schema;
}

RunConfig::RunConfig() {
  for (const auto& k : config_schema()) values_[k.key] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const KeySpec* spec = find_key(key);
  if (!spec) throw InvalidInput(key + ": unknown key");
  const std::string value = trim(raw);
  switch (spec->type) {
    case KeyType::integer: {
      long long v;
      if (!parse_ll(value, v)) throw InvalidInput(key + ": expected an integer, got '" + value + "'");
      if (v < 0) throw InvalidInput(key + ": must be >= 0");
      break;
    }
    case KeyType::real: {
      double v;
      if (!parse_real(value, v)) throw InvalidInput(key + ": expected a number, got '" + value + "'");
      break;
    }
    case KeyType::boolean: {
      bool v;
      if (!parse_bool(value, v)) throw InvalidInput(key + ": expected true or false, got '" + value + "'");
      break;
    }
    case KeyType::text:
      break;
  }
  values_[key] = value;
}

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw InvalidInput("override '" + assignment + "': expected key=value");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = source + ":" + std::to_string(number) + ": ";
    if (eq == std::string::npos) throw ParseError(where + "expected key = value");
    try {
      cfg.set(trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const InvalidInput& e) {
      throw ParseError(where + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open config file");
  return parse(in, path);
}

const std::string& RunConfig::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InvalidInput(key + ": unknown key");
  return it->second;
}

long long RunConfig::integer(const std::string& key) const {
  long long v = 0;
  parse_ll(text(key), v);
  return v;
}

double RunConfig::real(const std::string& key) const {
  double v = 0;
  parse_real(text(key), v);
  return v;
}

bool RunConfig::boolean(const std::string& key) const {
  bool v = false;
  parse_bool(text(key), v);
  return v;
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  return parse_reals(key, text(key));
}

std::vector<std::string> RunConfig::items(const std::string& key) const {
  return split(text(key), ';');
}

std::vector<std::vector<double>> RunConfig::real_groups(const std::string& key) const {
  std::vector<std::vector<double>> out;
  for (const auto& group : items(key)) out.push_back(parse_reals(key, group));
  return out;
}

KeyType RunConfig::type_of(const std::string& key) const {
  const KeySpec* spec = find_key(key);
  if (!spec) throw InvalidInput(key + ": unknown key");
  return spec->type;
}

ModelSpec RunConfig::model() const {
  ModelSpec spec;
  const std::string& kind = text("model.kind");
  if (kind == "pspin")
    spec.kind = ModelKind::pspin;
  else if (kind == "ksat")
    spec.kind = ModelKind::ksat;
  else
    throw InvalidInput("model.kind: expected pspin or ksat, got '" + kind + "'");
  spec.p = static_cast<int>(std::min<long long>(integer("model.p"), 1 << 20));
  spec.beta = real("model.beta");
  spec.alpha = real("model.alpha");
  try {
    spec.field = parse_scalar_law(text("model.field"));
  } catch (const Error& e) {
    throw InvalidInput(std::string("model.field: ") + e.what());
  }
  try {
    spec.coupling = parse_scalar_law(text("model.J"));
  } catch (const Error& e) {
    throw InvalidInput(std::string("model.J: ") + e.what());
  }
  spec.beta_scaled_fields = boolean("model.beta_scaled_fields");
  validate(spec);
  return spec;
}

}  // namespace dmf
