#include "fracshape/cli.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

namespace fracshape::cli {

namespace fs = std::filesystem;
using io::Json;

bool CommandResult::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

// ---------------------------------------------------------------------------
// Schema-checked access to one JSON object. Every key must be read before
// done(), so typos surface as "unknown field" errors.

class Section {
 public:
  Section(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError("config field '" + path_ + "': expected an object");
  }

  bool has(const std::string& key) const {
    used_.insert(key);
    return j_->contains(key);
  }

  double number(const std::string& key) const {
    const Json& v = need(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  double positive(const std::string& key, double fallback) const {
    const double v = number(key, fallback);
    if (!(v > 0.0)) fail(key, "must be positive");
    return v;
  }

  long long integer(const std::string& key) const {
    const Json& v = need(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<long long>();
  }
  long long integer(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }

  std::size_t count(const std::string& key, std::size_t fallback) const {
    const long long v = integer(key, static_cast<long long>(fallback));
    if (v < 0) fail(key, "must be nonnegative");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_->at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) const {
    const Json& v = need(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
  }

  std::string choice(const std::string& key, const std::string& fallback, std::initializer_list<const char*> allowed) const {
    const std::string v = string(key, fallback);
    std::string list;
    for (const char* a : allowed) {
      if (v == a) return v;
      list += list.empty() ? a : std::string("|") + a;
    }
    fail(key, "expected one of " + list + ", got '" + v + "'");
  }

  /// A number or a [re, im] pair.
  Complex complex(const std::string& key, Complex fallback) const {
    if (!has(key)) return fallback;
    return complex_value(j_->at(key), key);
  }

  std::vector<Complex> complex_list(const std::string& key, Complex fallback) const {
    if (!has(key)) return {fallback};
    const Json& v = j_->at(key);
    if (v.is_array() && !v.empty() && v[0].is_array()) {
      std::vector<Complex> out;
      for (const Json& e : v) out.push_back(complex_value(e, key));
      return out;
    }
    return {complex_value(v, key)};
  }

  std::vector<long long> integers(const std::string& key) const {
    const Json& v = need(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a nonempty array of integers");
    std::vector<long long> out;
    for (const Json& e : v) {
      if (!e.is_number_integer()) fail(key, "expected a nonempty array of integers");
      out.push_back(e.get<long long>());
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& key) const {
    const Json& v = need(key);
    if (!v.is_array() || v.empty()) fail(key, "expected a nonempty array of strings");
    std::vector<std::string> out;
    for (const Json& e : v) {
      if (!e.is_string()) fail(key, "expected a nonempty array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  Point point(const std::string& key, Point fallback) const {
    if (!has(key)) return fallback;
    try {
      return io::point_from_json(j_->at(key));
    } catch (const Error&) {
      fail(key, "expected [x, y]");
    }
  }

  /// An array of [x, y] vertices or {"rectangle": [[x0, y0], [x1, y1]]}.
  Polygon polygon(const std::string& key) const {
    const Json& v = need(key);
    try {
      if (v.is_object()) {
        Section s(v, field(key));
        const Json& r = s.need("rectangle");
        s.done();
        if (!r.is_array() || r.size() != 2) s.fail("rectangle", "expected [[x0, y0], [x1, y1]]");
        return Polygon::rectangle(io::point_from_json(r[0]), io::point_from_json(r[1]));
      }
      return io::polygon_from_json(v);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }

  Section object(const std::string& key) const { return Section(need(key), field(key)); }
  std::optional<Section> optional_object(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return object(key);
  }

  const Json& need(const std::string& key) const {
    used_.insert(key);
    if (!j_->contains(key)) throw ConfigError("config field '" + field(key) + "': missing");
    return j_->at(key);
  }

  void done() const {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("config field '" + field(it.key()) + "': unknown field");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError("config field '" + field(key) + "': " + why);
  }

  std::string field(const std::string& key) const { return path_.empty() || key.empty() ? path_ + key : path_ + "." + key; }

 private:
  Complex complex_value(const Json& v, const std::string& key) const {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      return {v[0].get<double>(), v[1].get<double>()};
    }
    fail(key, "expected a number or [re, im]");
  }

  const Json* j_;
  std::string path_;
  mutable std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Geometry specs.

struct GeometrySpec {
  std::string family;  ///< square | disc | koch | strip | file
  double side = 1.0, radius = 1.0, angle = std::numbers::pi / 3.0;
  long long level = 0;
  std::size_t n = 64;
  Point origin{0.0, 0.0};
  BoundaryLabel label = BoundaryLabel::Robin;
  fs::path file, measure_file;
};

GeometrySpec parse_geometry(const Section& s, const fs::path& base) {
  GeometrySpec g;
  g.family = s.choice("family", "", {"square", "disc", "koch", "strip", "file"});
  if (g.family == "square") {
    g.side = s.positive("side", 1.0);
    g.origin = s.point("origin", {0.0, 0.0});
  } else if (g.family == "disc") {
    g.radius = s.positive("radius", 1.0);
    g.n = s.count("n", 64);
    if (g.n < 3) s.fail("n", "needs at least 3 vertices");
    g.origin = s.point("center", {0.0, 0.0});
  } else if (g.family == "koch") {
    g.level = s.integer("level");
    if (g.level < 0 || g.level > 7) s.fail("level", "expected 0..7");
    g.side = s.positive("side", 1.0);
    g.origin = s.point("center", {0.0, 0.0});
    g.angle = s.positive("angle", g.angle);
  } else if (g.family == "file") {
    g.file = base / s.string("domain");
    if (s.has("measure")) g.measure_file = base / s.string("measure");
  }
  if (g.family != "strip" && g.family != "file") {
    try {
      g.label = parse_label(s.string("label", "rob"));
    } catch (const Error& e) {
      s.fail("label", e.what());
    }
  }
  s.done();
  return g;
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input file '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("input file '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

DomainWithMeasure build_geometry(const GeometrySpec& g) {
  if (g.family == "square") {
    const Polygon p = Polygon::rectangle(g.origin, g.origin + Point{g.side, g.side});
    return {PolygonalDomain::uniform(p, g.label), BoundaryMeasure::on_boundary(p)};
  }
  if (g.family == "disc") {
    const Polygon p = Polygon::regular(g.origin, g.radius, g.n);
    return {PolygonalDomain::uniform(p, g.label), BoundaryMeasure::on_boundary(p)};
  }
  if (g.family == "koch") {
    const int level = static_cast<int>(g.level);
    const Polygon p = koch_snowflake(level, g.side, g.origin, g.angle);
    return {PolygonalDomain::uniform(p, g.label), koch_snowflake_measure(level, g.side, g.origin)};
  }
  if (g.family == "strip") {
    // Left edge first: (0,1) -> (0,0) Dirichlet, bottom Neumann, right Robin, top Neumann.
    const Polygon p({{0.0, 1.0}, {0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}});
    return {PolygonalDomain(p, {BoundaryLabel::Dirichlet, BoundaryLabel::Neumann, BoundaryLabel::Robin,
                                BoundaryLabel::Neumann}),
            BoundaryMeasure::on_boundary(p)};
  }
  PolygonalDomain domain = io::domain_from_json(read_json_file(g.file));
  BoundaryMeasure mu = g.measure_file.empty() ? BoundaryMeasure::on_boundary(domain.outer())
                                              : io::measure_from_json(read_json_file(g.measure_file));
  return {std::move(domain), std::move(mu)};
}

ShapeClassParams parse_class(const Section& s, std::optional<Polygon> holdall, std::optional<Polygon> kernel) {
  ShapeClassParams p{holdall ? *holdall : s.polygon("holdall"), kernel ? *kernel : s.polygon("kernel")};
  p.epsilon = s.positive("epsilon", 0.05);
  p.s = s.number("s", 1.0);
  p.d = s.number("d", 1.0);
  p.lower_constant = s.number("lower", 0.0);
  p.upper_constant = s.number("upper", 0.0);
  s.done();
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError("config field '" + s.field("") + "': " + e.what());
  }
  return p;
}

void parse_sampling(const Section& s, SamplingGrid& g) {
  g.centers = s.count("centers", g.centers);
  g.radii = s.count("radii", g.radii);
  g.r_min_factor = s.positive("r_min_factor", g.r_min_factor);
  g.r_max = s.positive("r_max", g.r_max);
  g.k_max_exponent = static_cast<int>(s.integer("k_max_exponent", g.k_max_exponent));
  s.done();
}

void parse_epsilon(const Section& s, EpsilonOptions& e) {
  e.pair_grid = s.count("pair_grid", e.pair_grid);
  e.n_samples = s.count("n_samples", e.n_samples);
  e.path_resolution = s.count("path_resolution", e.path_resolution);
  e.epsilon_grid = s.count("epsilon_grid", e.epsilon_grid);
  e.epsilon_min = s.positive("epsilon_min", e.epsilon_min);
  e.epsilon_max = s.positive("epsilon_max", e.epsilon_max);
  e.refine_evaluations = s.count("refine_evaluations", e.refine_evaluations);
  const std::string fam = s.choice("curves", "both", {"segment", "path", "both"});
  e.family = fam == "segment" ? CurveFamily::Segment : fam == "path" ? CurveFamily::GridShortestPath : CurveFamily::Both;
  s.done();
}

// ---------------------------------------------------------------------------
// Output helpers.

class Writer {
 public:
  Writer(fs::path dir, CommandResult& result) : dir_(std::move(dir)), result_(result) { fs::create_directories(dir_); }

  /// The stream stays open until the writer goes out of scope.
  std::ofstream& open(const std::string& name) {
    const fs::path p = dir_ / name;
    std::ofstream& out = streams_.emplace_back(p);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    result_.written.push_back(p);
    return out;
  }
  void json(const std::string& name, const Json& j) { open(name) << io::dump(j); }

 private:
  fs::path dir_;
  CommandResult& result_;
  std::deque<std::ofstream> streams_;
};

void add_check(CommandResult& r, std::string name, bool pass, std::string detail) {
  r.checks.push_back({std::move(name), pass, std::move(detail)});
}

std::string describe(const std::string& what, double value, const std::string& rel, double bound) {
  return what + " = " + io::format_double(value) + " " + rel + " " + io::format_double(bound);
}

Json checks_json(const CommandResult& r) {
  Json a = Json::array();
  for (const Check& c : r.checks) a.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return a;
}

// ---------------------------------------------------------------------------
// gen

CommandResult cmd_gen(const Section& cfg, const fs::path& base, const fs::path& out_dir) {
  const GeometrySpec spec = parse_geometry(cfg.object("geometry"), base);
  const bool meshed = cfg.has("h");
  const double h = meshed ? cfg.positive("h", 0.1) : 0.0;
  MeshOptions mesh_options;
  if (auto m = cfg.optional_object("mesh")) {
    mesh_options.min_angle_deg = m->positive("min_angle_deg", mesh_options.min_angle_deg);
    mesh_options.size_factor = m->positive("size_factor", mesh_options.size_factor);
    m->done();
  }
  cfg.done();

  CommandResult result;
  Writer w(out_dir, result);
  const DomainWithMeasure dm = build_geometry(spec);
  w.json("domain.json", io::to_json(dm.domain));
  w.json("measure.json", io::to_json(dm.measure));

  if (spec.family == "koch") {
    const std::size_t per_side = std::size_t{1} << (2 * spec.level);
    const auto& v = dm.domain.outer().vertices();
    Json sides = Json::array();
    bool ok = v.size() == 3 * per_side;
    for (std::size_t s = 0; s < 3 && ok; ++s) {
      std::vector<Point> pts;
      for (std::size_t i = 0; i <= per_side; ++i) pts.push_back(v[(s * per_side + i) % v.size()]);
      ok = pts.size() == per_side + 1;
      sides.push_back(io::to_json(Polyline(std::move(pts))));
    }
    w.json("sides.json", sides);
    add_check(result, "koch_side_points", ok, "each side has 4^level + 1 = " + std::to_string(per_side + 1) + " points");
  }

  if (meshed) {
    const Mesh mesh = triangulate(dm.domain, h, mesh_options);
    std::string detail = std::to_string(mesh.vertices.size()) + " vertices, " +
                         std::to_string(mesh.triangles.size()) + " triangles, min angle " +
                         io::format_double(mesh.min_angle_deg());
    bool ok = true;
    try {
      check_mesh(mesh, dm.domain.outer());
    } catch (const Error& e) {
      ok = false;
      detail = e.what();
    }
    add_check(result, "mesh_invariants", ok, detail);
    write_mesh_text(w.open("mesh.txt"), mesh);
    w.json("mesh.json", io::to_json(mesh));
  }
  w.json("checks.json", checks_json(result));
  return result;
}

// ---------------------------------------------------------------------------
// verify

CommandResult cmd_verify(const Section& cfg, const fs::path& base, const fs::path& out_dir) {
  const GeometrySpec spec = parse_geometry(cfg.object("geometry"), base);
  AdmissibilityOptions options;
  if (auto s = cfg.optional_object("sampling")) parse_sampling(*s, options.grid);
  if (auto s = cfg.optional_object("epsilon")) parse_epsilon(*s, options.epsilon);
  std::optional<ShapeClassParams> params;
  if (auto s = cfg.optional_object("class")) params = parse_class(*s, std::nullopt, std::nullopt);
  std::optional<JonssonParams> jonsson;
  if (auto s = cfg.optional_object("jonsson")) {
    jonsson = JonssonParams{s->number("c_s"), s->number("c_d"), s->number("c1_lower"), s->number("c2_upper")};
    s->done();
    if (!params) cfg.fail("jonsson", "requires a 'class' section");
  }
  const bool expect_admissible = cfg.boolean("expect_admissible", true);
  struct ScalingRequest {
    ScalingCondition condition;
    double exponent;
    std::optional<double> threshold;
  };
  std::vector<ScalingRequest> scaling;
  if (auto s = cfg.optional_object("scaling")) {
    const double sx = s->number("s", 1.0), dx = s->number("d", 1.0);
    auto threshold = [&](const char* key) {
      return s->has(key) ? std::optional(s->number(key)) : std::nullopt;
    };
    for (const std::string& c : s->strings("conditions")) {
      if (c == "lower") scaling.push_back({ScalingCondition::LowerAhlfors, sx, threshold("lower_threshold")});
      else if (c == "upper") scaling.push_back({ScalingCondition::UpperAhlfors, dx, threshold("upper_threshold")});
      else if (c == "ds") scaling.push_back({ScalingCondition::Ds, sx, threshold("ds_threshold")});
      else if (c == "ld") scaling.push_back({ScalingCondition::Ld, dx, threshold("ld_threshold")});
      else s->fail("conditions", "expected entries lower|upper|ds|ld, got '" + c + "'");
    }
    s->done();
  }
  cfg.done();

  CommandResult result;
  Writer w(out_dir, result);
  const DomainWithMeasure dm = build_geometry(spec);
  Json report;
  if (params) {
    const AdmissibilityReport a = jonsson ? check_jonsson_admissible(dm.domain, dm.measure, *params, *jonsson, options)
                                          : check_shape_admissible(dm.domain, dm.measure, *params, options);
    report["admissibility"] = io::to_json(a);
    add_check(result, "admissible", a.verdict == expect_admissible,
              std::string("verdict ") + (a.verdict ? "admissible" : "not admissible") + ", expected " +
                  (expect_admissible ? "admissible" : "not admissible"));
  }
  std::vector<ScalingReport> sweeps;
  for (const ScalingRequest& r : scaling) {
    switch (r.condition) {
      case ScalingCondition::LowerAhlfors:
        sweeps.push_back(verify_lower_ahlfors(dm.measure, r.exponent, false, options.grid, r.threshold));
        break;
      case ScalingCondition::UpperAhlfors:
        sweeps.push_back(verify_upper_ahlfors(dm.measure, r.exponent, options.grid, r.threshold));
        break;
      case ScalingCondition::Ds:
        sweeps.push_back(verify_Ds(dm.measure, r.exponent, options.grid, r.threshold));
        break;
      default:
        sweeps.push_back(verify_Ld(dm.measure, r.exponent, options.grid, r.threshold));
        break;
    }
    if (r.threshold) {
      const ScalingReport& s = sweeps.back();
      add_check(result, "scaling." + std::string(condition_name(s.condition)), s.pass,
                "empirical constant " + io::format_double(s.best_constant) + " against threshold " +
                    io::format_double(*r.threshold));
    }
  }
  Json sj = Json::array();
  for (const ScalingReport& s : sweeps) sj.push_back(io::to_json(s));
  report["scaling"] = sj;
  report["checks"] = checks_json(result);
  w.json("verify.json", report);
  io::write_scaling_csv(w.open("scaling.csv"), sweeps);
  return result;
}

// ---------------------------------------------------------------------------
// solve

struct ConstantData {
  Complex f{0.0, 0.0}, g{0.0, 0.0}, h{0.0, 0.0};
};

ConstantData parse_data(const Section& s) {
  ConstantData d{s.complex("f", 0.0), s.complex("g", 0.0), s.complex("h", 0.0)};
  s.done();
  return d;
}

struct StripOracle {
  double omega;
  Complex alpha, A;
  explicit StripOracle(double w, Complex a) : omega(w), alpha(a) {
    A = (w * std::sin(w) - a * std::cos(w)) / (w * std::cos(w) + a * std::sin(w));
  }
  Complex operator()(Point p) const { return std::cos(omega * p.x) + A * std::sin(omega * p.x); }
};

CommandResult cmd_solve(const Section& cfg, const fs::path& base, const fs::path& out_dir) {
  const GeometrySpec spec = parse_geometry(cfg.object("geometry"), base);
  const double h = cfg.positive("h", 1.0 / 32.0);
  const double omega = cfg.positive("omega", 1.0);
  const std::vector<Complex> alpha = cfg.complex_list("alpha", {1.0, -1.0});
  ConstantData data = cfg.has("data") ? parse_data(cfg.object("data")) : ConstantData{};
  const SolveMode mode =
      cfg.choice("mode", "lifted", {"lifted", "superposition"}) == "lifted" ? SolveMode::Lifted : SolveMode::Superposition;
  const bool strip_oracle = cfg.choice("oracle", "none", {"none", "strip"}) == "strip";
  std::vector<long long> sweep;
  if (cfg.has("sweep")) {
    sweep = cfg.integers("sweep");
    for (long long n : sweep) {
      if (n < 1) cfg.fail("sweep", "entries are subdivisions per unit length and must be positive");
    }
    if (!strip_oracle) cfg.fail("sweep", "needs \"oracle\": \"strip\"");
  }
  std::optional<std::pair<std::size_t, std::uint64_t>> trace_request;
  if (auto t = cfg.optional_object("trace")) {
    const std::size_t samples = t->count("samples", 32);
    if (!t->has("seed")) t->fail("seed", "missing; randomized sweeps need a seed");
    trace_request = {samples, static_cast<std::uint64_t>(t->integer("seed"))};
    t->done();
  }
  std::optional<double> max_error;
  std::optional<std::pair<double, double>> rate_window;
  if (auto c = cfg.optional_object("checks")) {
    if (c->has("max_l2_error")) max_error = c->positive("max_l2_error", 1.0);
    if (c->has("rate_window")) {
      const Json& r = c->need("rate_window");
      if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number()) {
        c->fail("rate_window", "expected [low, high]");
      }
      rate_window = {r[0].get<double>(), r[1].get<double>()};
    }
    c->done();
  }
  cfg.done();
  if ((max_error || rate_window) && !strip_oracle) {
    throw ConfigError("config field 'checks': error and rate checks need \"oracle\": \"strip\"");
  }
  if (strip_oracle) {
    // The closed form solves the strip problem with unit Dirichlet data and nothing else.
    if (spec.family != "strip") throw ConfigError("config field 'oracle': the strip oracle needs the strip geometry");
    if (!cfg.has("data")) data.g = 1.0;
    if (data.f != Complex{} || data.g != Complex{1.0} || data.h != Complex{}) {
      throw ConfigError("config field 'data': the strip oracle needs f = 0, g = 1, h = 0");
    }
  }

  CommandResult result;
  Writer w(out_dir, result);
  const DomainWithMeasure dm = build_geometry(spec);
  const StripOracle oracle(omega, alpha.front());

  struct Run {
    double h;
    std::size_t vertices;
    SolveReport report;
    std::optional<double> error;
  };
  auto run = [&](double mesh_h) {
    const Mesh mesh = triangulate(dm.domain, mesh_h);
    HelmholtzData hd(omega, alpha);
    const auto nv = static_cast<Eigen::Index>(mesh.vertices.size());
    if (data.f != Complex{}) hd.f = Eigen::VectorXcd::Constant(nv, data.f);
    if (data.g != Complex{}) hd.g = Eigen::VectorXcd::Constant(nv, data.g);
    if (data.h != Complex{}) hd.h = Eigen::VectorXcd::Constant(nv, data.h);
    Run r{mesh_h, mesh.vertices.size(), solve_helmholtz(mesh, hd, dm.measure, mode), std::nullopt};
    if (strip_oracle) {
      const P1Matrices p1 = assemble_p1(mesh);
      const ComplexField exact = ComplexField::interpolate(mesh, oracle);
      r.error = l2_norm(p1, r.report.solution.values - exact.values) / l2_norm(p1, exact.values);
    }
    return std::pair<Run, Mesh>{std::move(r), mesh};
  };

  auto [main_run, mesh] = run(h);
  // The report's field points at the mesh copy returned from run; rebind it.
  main_run.report.solution.mesh = &mesh;
  add_check(result, "linear_residual", main_run.report.linear_residual <= kSolverTolerance,
            describe("relative residual", main_run.report.linear_residual, "<=", kSolverTolerance));
  add_check(result, "galerkin_identity", main_run.report.energy_defect() <= 1e-10,
            describe("relative defect", main_run.report.energy_defect(), "<=", 1e-10));
  if (max_error) {
    add_check(result, "oracle_l2_error", *main_run.error <= *max_error,
              describe("relative L2 error", *main_run.error, "<=", *max_error));
  }

  Json report = io::to_json(main_run.report);
  report["h"] = h;
  if (main_run.error) report["oracle_l2_error"] = *main_run.error;
  if (trace_request) {
    report["trace_inequality_ratio"] = trace_inequality_ratio(trace_request->first, mesh, BoundaryLabel::Robin,
                                                              dm.measure, trace_request->second);
  }

  if (!sweep.empty()) {
    std::ofstream& csv = w.open("convergence.csv");
    csv << "n,h,vertices,l2_error,rate,linear_residual,energy_defect\n";
    std::optional<double> prev;
    std::vector<double> rates;
    bool identity_ok = true;
    for (long long n : sweep) {
      const double hn = 1.0 / static_cast<double>(n);
      const Run r = run(hn).first;
      const double rate = prev ? std::log2(*prev / *r.error) : std::nan("");
      if (prev) rates.push_back(rate);
      identity_ok = identity_ok && r.report.energy_defect() <= 1e-10 && r.report.linear_residual <= kSolverTolerance;
      csv << n << ',' << io::format_double(hn) << ',' << r.vertices << ',' << io::format_double(*r.error) << ','
          << (prev ? io::format_double(rate) : std::string()) << ',' << io::format_double(r.report.linear_residual)
          << ',' << io::format_double(r.report.energy_defect()) << '\n';
      prev = r.error;
    }
    add_check(result, "sweep_galerkin_identity", identity_ok, "every sweep solve has residual and defect <= 1e-10");
    if (rate_window && !rates.empty()) {
      const auto [lo, hi] = std::minmax_element(rates.begin(), rates.end());
      const bool ok = *lo >= rate_window->first && *hi <= rate_window->second;
      add_check(result, "convergence_rate", ok,
                "observed rates in [" + io::format_double(*lo) + ", " + io::format_double(*hi) + "], window [" +
                    io::format_double(rate_window->first) + ", " + io::format_double(rate_window->second) + "]");
    }
  }
  report["checks"] = checks_json(result);
  w.json("solve.json", report);
  w.json("field.json", io::to_json(main_run.report.solution));
  io::write_field_table(w.open("field.txt"), main_run.report.solution);
  return result;
}

// ---------------------------------------------------------------------------
// mosco

CommandResult cmd_mosco(const Section& cfg, const fs::path& base, const fs::path& out_dir) {
  const Section seq = cfg.object("sequence");
  const std::string family = seq.choice("family", "", {"koch", "shrinking_squares", "constant"});
  std::vector<DomainWithMeasure> members;
  std::optional<DomainWithMeasure> proxy;
  if (family == "koch") {
    const double side = seq.positive("side", 1.0);
    const long long proxy_level = seq.integer("proxy_level");
    auto build = [&](long long level) {
      if (level < 0 || level > 7) seq.fail("levels", "levels must lie in 0..7");
      const int m = static_cast<int>(level);
      return DomainWithMeasure{PolygonalDomain::uniform(koch_snowflake(m, side), BoundaryLabel::Robin),
                               koch_snowflake_measure(m, side)};
    };
    for (long long level : seq.integers("levels")) members.push_back(build(level));
    proxy = build(proxy_level);
  } else if (family == "shrinking_squares") {
    for (long long m : seq.integers("m")) {
      if (m < 2) seq.fail("m", "entries must be at least 2");
      const double s = 1.0 - 1.0 / static_cast<double>(m);
      const Polygon p = Polygon::rectangle({0.0, 0.0}, {s, s});
      members.push_back({PolygonalDomain::uniform(p, BoundaryLabel::Robin), BoundaryMeasure::on_boundary(p)});
    }
    const Polygon unit = Polygon::rectangle({0.0, 0.0}, {1.0, 1.0});
    proxy = DomainWithMeasure{PolygonalDomain::uniform(unit, BoundaryLabel::Robin), BoundaryMeasure::on_boundary(unit)};
  } else {
    const GeometrySpec g = parse_geometry(seq.object("geometry"), base);
    const std::size_t count = seq.count("count", 3);
    if (count == 0) seq.fail("count", "must be positive");
    const DomainWithMeasure dm = build_geometry(g);
    members.assign(count, dm);
    proxy = dm;
  }
  seq.done();

  const Polygon holdall = cfg.polygon("holdall");
  MoscoOptions options;
  if (auto wgt = cfg.optional_object("weights")) {
    options.A = wgt->number("A", 1.0);
    options.B = wgt->number("B", 1.0);
    options.C = wgt->number("C", 1.0);
    wgt->done();
  }
  const Complex load = cfg.complex("load", 1.0);
  options.load = [load](Point) { return load; };
  options.h = cfg.positive("h", 0.05);
  bool check_decreasing = false;
  std::optional<double> max_recovery, max_relative;
  if (auto c = cfg.optional_object("checks")) {
    check_decreasing = c->boolean("min_gap_decreasing", false);
    if (c->has("max_final_recovery_gap")) max_recovery = c->positive("max_final_recovery_gap", 1.0);
    if (c->has("max_final_relative_gap")) max_relative = c->positive("max_final_relative_gap", 1.0);
    c->done();
  }
  cfg.done();

  CommandResult result;
  Writer w(out_dir, result);
  const MoscoReport rep = mosco_experiment(members, *proxy, holdall, options);
  if (check_decreasing) {
    bool ok = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) ok = ok && rep.rows[i].min_gap < rep.rows[i - 1].min_gap;
    add_check(result, "min_gap_decreasing", ok, "|min_m - min_proxy| strictly decreasing along the sequence");
  }
  if (max_recovery) {
    add_check(result, "final_recovery_gap", rep.final_recovery_gap < *max_recovery,
              describe("relative recovery gap", rep.final_recovery_gap, "<", *max_recovery));
  }
  if (max_relative) {
    const double rel = rep.rows.empty() ? 0.0 : rep.rows.back().relative_min_gap;
    add_check(result, "final_relative_gap", rel < *max_relative, describe("relative min gap", rel, "<", *max_relative));
  }
  Json j = io::to_json(rep);
  j["checks"] = checks_json(result);
  w.json("mosco.json", j);
  io::write_mosco_csv(w.open("mosco.csv"), rep);
  return result;
}

// ---------------------------------------------------------------------------
// optimize

CommandResult cmd_optimize(const Section& cfg, const fs::path&, const fs::path& out_dir) {
  const Section fam = cfg.object("family");
  std::unique_ptr<ShapeFamily> family;
  const std::string name = fam.choice("name", "", {"bump", "koch"});
  double default_s = 1.0;
  if (name == "bump") {
    family = std::make_unique<BumpWallFamily>(fam.positive("amplitude", 0.3));
  } else {
    const long long max_level = fam.integer("max_level", 3);
    if (max_level < 0 || max_level > 6) fam.fail("max_level", "expected 0..6");
    family = std::make_unique<KochWallFamily>(static_cast<int>(max_level), fam.positive("min_angle", std::numbers::pi / 12.0),
                                              fam.positive("max_angle", std::numbers::pi / 3.0));
    default_s = std::log(4.0) / std::log(3.0);
  }
  fam.done();

  const SearchStrategy strategy = cfg.choice("strategy", "grid", {"grid", "coordinate_descent"}) == "grid"
                                      ? SearchStrategy::Grid
                                      : SearchStrategy::CoordinateDescent;
  const std::size_t budget = cfg.count("budget", 0);
  ShapeSearchOptions options =
      cfg.choice("sampling", "fast", {"fast", "full"}) == "fast" ? ShapeSearchOptions::fast() : ShapeSearchOptions{};
  options.lattice = cfg.count("lattice", options.lattice);
  if (options.lattice < 1) cfg.fail("lattice", "must be positive");
  options.h = cfg.positive("h", options.h);
  options.pitch = cfg.positive("pitch", options.pitch);
  options.distance_pitch = cfg.positive("distance_pitch", options.distance_pitch);

  ShapeData data;
  if (auto d = cfg.optional_object("data")) {
    data.omega = d->positive("omega", data.omega);
    data.alpha = d->complex("alpha", data.alpha);
    for (const char* key : {"f", "g", "h"}) {
      if (!d->has(key)) continue;
      const Complex c = d->complex(key, 0.0);
      auto fn = [c](Point) { return c; };
      (key[0] == 'f' ? data.f : key[0] == 'g' ? data.g : data.h) = fn;
    }
    d->done();
  }
  ObjectiveWeights weights;
  if (auto wgt = cfg.optional_object("weights")) {
    weights.A = wgt->number("A", 1.0);
    weights.B = wgt->number("B", 1.0);
    weights.C = wgt->number("C", 1.0);
    wgt->done();
  }
  const Section cls = cfg.object("class");
  ShapeClassParams params{ShapeFamily::holdall(), ShapeFamily::kernel()};
  params.epsilon = cls.positive("epsilon", 0.05);
  params.s = cls.number("s", default_s);
  params.d = cls.number("d", 1.0);
  params.lower_constant = cls.number("lower", 0.0);
  params.upper_constant = cls.number("upper", 0.0);
  cls.done();
  try {
    params.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("config field 'class': ") + e.what());
  }
  bool check_descent = false, check_distances = false;
  if (auto c = cfg.optional_object("checks")) {
    check_descent = c->boolean("descent_not_worse", false);
    check_distances = c->boolean("iterate_distances_below_pitch", false);
    c->done();
  }
  cfg.done();

  CommandResult result;
  Writer w(out_dir, result);
  const SearchReport rep = minimize_shape(*family, data, weights, params, strategy, budget, options);
  if (check_descent) {
    const double grid_best = rep.iterates.empty() ? rep.best_J : *rep.log[rep.iterates.front()].J;
    add_check(result, "descent_not_worse", rep.best_J <= grid_best, describe("best J", rep.best_J, "<=", grid_best));
  }
  if (check_distances) {
    const double last = rep.iterate_distances.empty() ? 0.0 : rep.iterate_distances.back();
    add_check(result, "iterate_distances_below_pitch", last < options.pitch,
              describe("last iterate distance", last, "<", options.pitch));
  }
  Json j = io::to_json(rep);
  j["family"] = family->name();
  j["checks"] = checks_json(result);
  w.json("search.json", j);
  io::write_search_csv(w.open("search_log.csv"), rep);
  io::write_diagnostics_csv(w.open("diagnostics.csv"), rep.diagnostics);
  return result;
}

// ---------------------------------------------------------------------------
// plot: CSV files to whitespace tables with a '#' header.

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

CommandResult cmd_plot(const Section& cfg, const fs::path& base, const fs::path& out_dir) {
  const std::vector<std::string> inputs = cfg.strings("inputs");
  cfg.done();
  CommandResult result;
  Writer w(out_dir, result);
  for (const std::string& name : inputs) {
    const fs::path path = base / name;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open input file '" + path.string() + "'");
    std::ofstream& out = w.open(path.stem().string() + ".dat");
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      const std::vector<std::string> cells = split_csv(line);
      if (header) out << "# ";
      for (std::size_t i = 0; i < cells.size(); ++i) {
        std::string c = cells[i];
        if (!header) {
          // Non-numeric cells become NaN so gnuplot skips them without shifting columns.
          char* end = nullptr;
          std::strtod(c.c_str(), &end);
          if (c.empty() || end != c.c_str() + c.size()) c = "nan";
        }
        out << (i ? " " : "") << c;
      }
      out << '\n';
      header = false;
    }
  }
  return result;
}

}  // namespace

CommandResult run_command(const std::string& command, const Json& config, const fs::path& base_dir,
                          const fs::path& out_dir) {
  const Section cfg(config, "");
  if (command == "gen") return cmd_gen(cfg, base_dir, out_dir);
  if (command == "verify") return cmd_verify(cfg, base_dir, out_dir);
  if (command == "solve") return cmd_solve(cfg, base_dir, out_dir);
  if (command == "mosco") return cmd_mosco(cfg, base_dir, out_dir);
  if (command == "optimize") return cmd_optimize(cfg, base_dir, out_dir);
  if (command == "plot") return cmd_plot(cfg, base_dir, out_dir);
  throw ConfigError("unknown command '" + command + "'");
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shape optimization of fractal-boundary absorbers: experiments"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  int threads = 0;
  for (const char* name : {"gen", "verify", "solve", "mosco", "optimize", "plot"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--threads", threads, "OpenMP threads (0 keeps the default)")->check(CLI::NonNegativeNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  kernels::set_threads(threads);
  try {
    const fs::path cfg_path(config_path);
    const Json config = read_json_file(cfg_path);
    const CommandResult r = run_command(command, config, cfg_path.parent_path(), out_dir);
    for (const fs::path& p : r.written) out << "wrote " << p.string() << '\n';
    for (const Check& c : r.checks) {
      if (!c.pass) err << c.name << ": " << c.detail << '\n';
    }
    return r.all_pass() ? 0 : 1;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace fracshape::cli
