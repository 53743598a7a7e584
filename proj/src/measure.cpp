#include "dmf/measure.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "dmf/errors.hpp"

namespace dmf {

Population::Population(std::vector<double> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw InvalidMeasure("population must have at least one atom");
  for (double a : atoms_) {
    if (!std::isfinite(a)) throw InvalidMeasure("population atoms must be finite");
  }
}

bool Population::is_point_mass() const {
  return std::all_of(atoms_.begin(), atoms_.end(),
                     [&](double a) { return a == atoms_.front(); });
}

Population make_population(std::vector<double> atoms) {
  return Population(std::move(atoms));
}

double draw(const Population& pop, RandomStream& rng) { return pop.draw(rng); }

double ScalarLaw::sample(RandomStream& rng) const {
  switch (family) {
    case LeafFamily::point:
      return center;
    case LeafFamily::gaussian:
      return width == 0.0 ? center : center + width * rng.normal();
    case LeafFamily::two_point:
      return rng.sign() * center;
  }
  return center;
}

bool ScalarLaw::is_point_mass() const {
  switch (family) {
    case LeafFamily::point:
      return true;
    case LeafFamily::gaussian:
      return width == 0.0;
    case LeafFamily::two_point:
      return center == 0.0;
  }
  return false;
}

bool ScalarLaw::is_symmetric() const {
  return family == LeafFamily::two_point || center == 0.0;
}

std::string ScalarLaw::describe() const {
  switch (family) {
    case LeafFamily::point:
      return "point:" + format_double(center);
    case LeafFamily::gaussian:
      return "gaussian:" + format_double(center) + "," + format_double(width);
    case LeafFamily::two_point:
      return "twopoint:" + format_double(center);
  }
  return {};
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto* first = t.data();
  const auto* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (t.empty() || ec != std::errc() || ptr != last) {
    throw ParseError(what + ": expected a number, got '" + text + "'");
  }
  return value;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, what));
  return out;
}

LeafFamily parse_family(const std::string& name) {
  if (name == "point") return LeafFamily::point;
  if (name == "gaussian") return LeafFamily::gaussian;
  if (name == "twopoint") return LeafFamily::two_point;
  throw ParseError("unknown law family '" + name + "' (point|gaussian|twopoint)");
}

const char* family_name(LeafFamily f) {
  switch (f) {
    case LeafFamily::point:
      return "point";
    case LeafFamily::gaussian:
      return "gaussian";
    case LeafFamily::two_point:
      return "twopoint";
  }
  return "point";
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

ScalarLaw parse_scalar_law(const std::string& text) {
  const std::string t = trim(text);
  const auto colon = t.find(':');
  if (colon == std::string::npos) {
    throw ParseError("law '" + text + "': expected family:parameters");
  }
  ScalarLaw law;
  law.family = parse_family(t.substr(0, colon));
  const auto params = parse_list(t.substr(colon + 1), "law '" + text + "'");
  const std::size_t expected = law.family == LeafFamily::gaussian ? 2 : 1;
  if (params.size() != expected) {
    throw ParseError("law '" + text + "': wrong number of parameters");
  }
  law.center = params[0];
  if (law.family == LeafFamily::gaussian) {
    law.width = params[1];
    if (law.width < 0) throw ParseError("law '" + text + "': negative width");
  }
  return law;
}

// --- HierarchicalMeasure ---------------------------------------------------

HierarchicalMeasure::HierarchicalMeasure(Population pop)
    : depth_(0), degenerate_(pop.is_point_mass()), node_(std::move(pop)) {}

HierarchicalMeasure::HierarchicalMeasure(std::vector<HierarchicalMeasure> children) {
  if (children.empty()) throw InvalidMeasure("mixture node needs at least one child");
  const int d = children.front().depth();
  for (const auto& c : children) {
    if (c.depth() != d) throw InvalidMeasure("children of a node must have equal depth");
  }
  depth_ = d + 1;
  // Degenerate when every child is degenerate at the same leaf value.
  degenerate_ = std::all_of(children.begin(), children.end(),
                            [](const auto& c) { return c.is_degenerate(); });
  if (degenerate_) {
    RandomStream rng(0, 0);
    const double first = draw_chain(children.front(), rng).leaf;
    for (const auto& c : children) {
      if (draw_chain(c, rng).leaf != first) degenerate_ = false;
    }
  }
  node_ = std::move(children);
}

HierarchicalMeasure::HierarchicalMeasure(ParametricChain chain) {
  if (!std::isfinite(chain.leaf.center) || !std::isfinite(chain.leaf.width) ||
      chain.leaf.width < 0) {
    throw InvalidMeasure("parametric leaf parameters must be finite and width >= 0");
  }
  for (double sd : chain.level_sd) {
    if (!std::isfinite(sd) || sd < 0) throw InvalidMeasure("level sd must be finite and >= 0");
  }
  depth_ = static_cast<int>(chain.level_sd.size());
  degenerate_ = chain.leaf.is_point_mass() &&
                std::all_of(chain.level_sd.begin(), chain.level_sd.end(),
                            [](double s) { return s == 0.0; });
  node_ = std::move(chain);
}

HierarchicalMeasure HierarchicalMeasure::degenerate(double x0, int depth) {
  if (depth < 0) throw InvalidMeasure("depth must be >= 0");
  HierarchicalMeasure hm(Population({x0}));
  for (int d = 0; d < depth; ++d) hm = HierarchicalMeasure(std::vector{hm});
  return hm;
}

bool HierarchicalMeasure::is_mixture() const {
  return std::holds_alternative<std::vector<HierarchicalMeasure>>(node_);
}

const std::vector<HierarchicalMeasure>& HierarchicalMeasure::children() const {
  return std::get<std::vector<HierarchicalMeasure>>(node_);
}

// --- MeasureCursor -----------------------------------------------------------

MeasureCursor::MeasureCursor(const HierarchicalMeasure& root)
    : node_(&root), offset_(0), center_(root.is_parametric() ? root.chain().leaf.center : 0.0) {}

int MeasureCursor::depth() const { return node_->depth() - offset_; }

MeasureCursor MeasureCursor::descend(RandomStream& rng) const {
  if (depth() < 1) throw InvalidMeasure("cannot descend below depth 0");
  if (node_->is_parametric()) {
    const double sd = node_->chain().level_sd[static_cast<std::size_t>(offset_)];
    const double next = sd == 0.0 ? center_ : center_ + sd * rng.normal();
    return MeasureCursor(node_, offset_ + 1, next);
  }
  const auto& kids = node_->children();
  const auto& child = kids.size() == 1 ? kids.front() : kids[rng.below(kids.size())];
  return MeasureCursor(child);
}

double MeasureCursor::draw_leaf(RandomStream& rng) const {
  if (depth() != 0) throw InvalidMeasure("leaf draw requires a depth-0 measure");
  if (node_->is_parametric()) {
    ScalarLaw law = node_->chain().leaf;
    law.center = center_;
    return law.sample(rng);
  }
  return node_->population().draw(rng);
}

bool MeasureCursor::is_degenerate() const {
  if (!node_->is_parametric()) return node_->is_degenerate();
  const auto& sds = node_->chain().level_sd;
  for (std::size_t i = static_cast<std::size_t>(offset_); i < sds.size(); ++i) {
    if (sds[i] != 0.0) return false;
  }
  ScalarLaw law = node_->chain().leaf;
  law.center = center_;
  return law.is_point_mass();
}

ChainSample draw_chain(const HierarchicalMeasure& hm, RandomStream& rng) {
  ChainSample out;
  MeasureCursor cur(hm);
  out.path.reserve(static_cast<std::size_t>(hm.depth()));
  while (cur.depth() > 0) {
    cur = cur.descend(rng);
    out.path.push_back(cur);
  }
  out.leaf = cur.draw_leaf(rng);
  return out;
}

// --- distances and materialization ------------------------------------------

double wasserstein1(const Population& a, const Population& b) {
  std::vector<double> x(a.atoms().begin(), a.atoms().end());
  std::vector<double> y(b.atoms().begin(), b.atoms().end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  if (x.size() == y.size()) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sum += std::fabs(x[i] - y[i]);
    return sum / static_cast<double>(x.size());
  }
  // Integrate |F_a^{-1}(t) - F_b^{-1}(t)| over the merged breakpoints
  // i/na and j/nb. Integer arithmetic on the common denominator na*nb.
  const auto na = static_cast<std::uint64_t>(x.size());
  const auto nb = static_cast<std::uint64_t>(y.size());
  std::uint64_t i = 0, j = 0, t = 0;
  double sum = 0.0;
  while (i < na && j < nb) {
    const std::uint64_t next_a = (i + 1) * nb;
    const std::uint64_t next_b = (j + 1) * na;
    const std::uint64_t next = std::min(next_a, next_b);
    sum += static_cast<double>(next - t) * std::fabs(x[i] - y[j]);
    t = next;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  return sum / static_cast<double>(na * nb);
}

Population materialize(const HierarchicalMeasure& hm, std::size_t size, std::uint64_t seed) {
  if (hm.depth() != 0) throw InvalidMeasure("materialize: expected a depth-0 measure");
  if (hm.is_population()) return hm.population();
  std::vector<double> atoms(size);
  MeasureCursor cur(hm);
  RandomStream rng(seed, 0x706f70ULL);
  for (auto& a : atoms) a = cur.draw_leaf(rng);
  return Population(std::move(atoms));
}

Population materialize(const ScalarLaw& law, std::size_t size, std::uint64_t seed) {
  return materialize(HierarchicalMeasure(ParametricChain{law, {}}), size, seed);
}

// --- text format --------------------------------------------------------------

namespace {

void write_node(std::ostream& out, const HierarchicalMeasure& hm, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  if (hm.is_parametric()) {
    const auto& c = hm.chain();
    out << pad << "chain " << family_name(c.leaf.family) << ' ' << format_double(c.leaf.center)
        << ' ' << format_double(c.leaf.width);
    for (double sd : c.level_sd) out << ' ' << format_double(sd);
    out << '\n';
    return;
  }
  out << pad << "{\n";
  if (hm.is_population()) {
    for (double a : hm.population().atoms()) out << pad << "  " << format_double(a) << '\n';
  } else {
    for (const auto& c : hm.children()) write_node(out, c, indent + 1);
  }
  out << pad << "}\n";
}

struct LineReader {
  std::istream& in;
  std::size_t line_no = 0;

  bool next(std::string& line) {
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto hash = raw.find('#');
      if (hash != std::string::npos) raw.resize(hash);
      line = trim(raw);
      if (!line.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("measure file line " + std::to_string(line_no) + ": " + msg);
  }
};

HierarchicalMeasure parse_chain_line(LineReader& r, const std::string& line) {
  std::istringstream ss(line);
  std::string word, fam;
  ss >> word >> fam;
  std::vector<double> nums;
  std::string tok;
  while (ss >> tok) nums.push_back(parse_double(tok, "chain parameter"));
  if (nums.size() < 2) r.fail("chain needs family, center and width");
  ParametricChain chain;
  chain.leaf.family = parse_family(fam);
  chain.leaf.center = nums[0];
  chain.leaf.width = nums[1];
  chain.level_sd.assign(nums.begin() + 2, nums.end());
  return HierarchicalMeasure(std::move(chain));
}

HierarchicalMeasure read_node(LineReader& r, int depth, const std::string& first) {
  if (first.rfind("chain", 0) == 0) {
    auto hm = parse_chain_line(r, first);
    if (hm.depth() != depth) r.fail("chain depth does not match the enclosing block");
    return hm;
  }
  if (first != "{") r.fail("expected '{' or 'chain', got '" + first + "'");
  std::string line;
  if (depth == 0) {
    std::vector<double> atoms;
    while (true) {
      if (!r.next(line)) r.fail("unterminated block");
      if (line == "}") break;
      try {
        atoms.push_back(parse_double(line, "atom"));
      } catch (const ParseError& e) {
        r.fail(e.what());
      }
    }
    try {
      return HierarchicalMeasure(Population(std::move(atoms)));
    } catch (const InvalidMeasure& e) {
      r.fail(e.what());
    }
  }
  std::vector<HierarchicalMeasure> kids;
  while (true) {
    if (!r.next(line)) r.fail("unterminated block");
    if (line == "}") break;
    kids.push_back(read_node(r, depth - 1, line));
  }
  if (kids.empty()) r.fail("empty mixture block");
  return HierarchicalMeasure(std::move(kids));
}

}  // namespace

void save_measure(std::ostream& out, const HierarchicalMeasure& hm) {
  out << "depth " << hm.depth() << '\n';
  write_node(out, hm, 0);
}

HierarchicalMeasure load_measure(std::istream& in) {
  LineReader r{in};
  std::string line;
  if (!r.next(line)) r.fail("empty measure file");
  std::istringstream header(line);
  std::string word;
  int depth = -1;
  header >> word >> depth;
  if (word != "depth" || depth < 0) r.fail("expected header 'depth <r>'");
  if (!r.next(line)) r.fail("missing measure body");
  auto hm = read_node(r, depth, line);
  if (r.next(line)) r.fail("trailing content after measure");
  return hm;
}

void save_measure_file(const std::string& path, const HierarchicalMeasure& hm) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open '" + path + "' for writing");
  save_measure(out, hm);
}

HierarchicalMeasure load_measure_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open measure file '" + path + "'");
  return load_measure(in);
}

HierarchicalMeasure parse_measure_spec(const std::string& text) {
  const std::string t = trim(text);
  if (t.rfind("file:", 0) == 0) return load_measure_file(t.substr(5));
  const auto at = t.find('@');
  ParametricChain chain;
  chain.leaf = parse_scalar_law(t.substr(0, at));
  if (at != std::string::npos) chain.level_sd = parse_list(t.substr(at + 1), "level sds");
  if (at == std::string::npos && chain.leaf.family == LeafFamily::point) {
    return HierarchicalMeasure(Population({chain.leaf.center}));
  }
  return HierarchicalMeasure(std::move(chain));
}

}  // namespace dmf
