#include "fracshape/io.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace fracshape::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Json points_json(const std::vector<Point>& pts) {
  Json a = Json::array();
  for (Point p : pts) a.push_back(to_json(p));
  return a;
}

Json witness_json(const Witness& w) {
  return {{"center", to_json(w.center)}, {"radius", w.radius}, {"k", w.k}};
}

Json grid_json(const SamplingGrid& g) {
  return {{"centers", g.centers},
          {"radii", g.radii},
          {"r_min_factor", g.r_min_factor},
          {"r_max", g.r_max},
          {"k_max_exponent", g.k_max_exponent}};
}

Json optional_index(const std::optional<std::size_t>& v) { return v ? Json(*v) : Json(nullptr); }

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw Error(where + ": missing field '" + key + "'");
  return j.at(key);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

}  // namespace

Json to_json(Point p) { return Json::array({p.x, p.y}); }
Json to_json(const Polygon& polygon) { return points_json(polygon.vertices()); }
Json to_json(const Polyline& polyline) { return points_json(polyline.points()); }

Json to_json(const PolygonalDomain& domain) {
  Json labels = Json::array();
  for (BoundaryLabel l : domain.labels()) labels.push_back(std::string(label_tag(l)));
  Json j = {{"vertices", to_json(domain.outer())}, {"labels", labels}};
  if (domain.design_region()) j["design_region"] = to_json(*domain.design_region());
  return j;
}

Json to_json(const BoundaryMeasure& measure) {
  auto piece = [](const MeasurePiece& p) {
    return Json{{"carrier", to_json(p.carrier)}, {"densities", p.densities}};
  };
  if (measure.pieces().size() == 1) return piece(measure.pieces().front());
  Json pieces = Json::array();
  for (const MeasurePiece& p : measure.pieces()) pieces.push_back(piece(p));
  return {{"pieces", pieces}};
}

Json to_json(const Mesh& mesh) {
  Json tris = Json::array();
  for (const auto& t : mesh.triangles) tris.push_back(Json::array({t[0], t[1], t[2]}));
  Json edges = Json::array();
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    edges.push_back({{"a", e.a}, {"b", e.b}, {"label", std::string(label_tag(e.label))}, {"parent", e.parent}});
  }
  return {{"vertices", points_json(mesh.vertices)},
          {"triangles", tris},
          {"boundary_edges", edges},
          {"h", mesh.h},
          {"min_angle_deg", mesh.min_angle_deg()}};
}

Json to_json(const ComplexField& field) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index i = 0; i < field.values.size(); ++i) {
    re.push_back(field.values[i].real());
    im.push_back(field.values[i].imag());
  }
  return {{"re", re}, {"im", im}};
}

Json to_json(const ScalingReport& r) {
  Json j = {{"condition", std::string(condition_name(r.condition))},
            {"exponent", r.exponent},
            {"best_constant", r.best_constant},
            {"witness", witness_json(r.witness)},
            {"pass", r.pass},
            {"grid", grid_json(r.grid)}};
  if (r.upper_constant) j["upper_constant"] = *r.upper_constant;
  if (r.upper_witness) j["upper_witness"] = witness_json(*r.upper_witness);
  return j;
}

Json to_json(const AdmissibilityReport& r) {
  Json j = {{"contains_kernel", r.contains_kernel},
            {"inside_holdall", r.inside_holdall},
            {"epsilon_certified", r.epsilon_certified},
            {"lower_ok", r.lower_ok},
            {"upper_ok", r.upper_ok},
            {"epsilon_estimate", r.epsilon_estimate},
            {"lower_constant", r.lower_constant},
            {"upper_constant", r.upper_constant},
            {"verdict", r.verdict}};
  if (r.ds) j["ds"] = to_json(*r.ds);
  if (r.ld) j["ld"] = to_json(*r.ld);
  if (r.normalized) j["normalized"] = to_json(*r.normalized);
  return j;
}

Json to_json(const EpsilonEstimate& e) {
  Json pairs = Json::array();
  for (const PairCertificate& p : e.pairs) {
    pairs.push_back({{"x", to_json(p.x)}, {"y", to_json(p.y)}, {"epsilon", p.epsilon}, {"curve_points", p.curve.size()}});
  }
  Json j = {{"value", e.value}, {"worst_pair", e.worst_pair}, {"pairs", pairs}};
  if (!e.pairs.empty()) j["worst_curve"] = to_json(e.pairs[e.worst_pair].curve);
  return j;
}

Json to_json(const SolveReport& r) {
  return {{"linear_residual", r.linear_residual},
          {"energy_defect_re", r.energy_defect_re},
          {"energy_defect_im", r.energy_defect_im},
          {"apriori_ratio", r.apriori_ratio},
          {"acoustic_energy", r.acoustic_energy},
          {"gradient_energy", r.gradient_energy},
          {"robin_trace_energy", r.robin_trace_energy},
          {"robin_absorption", r.robin_absorption},
          {"dirichlet_work", complex_json(r.dirichlet_work)},
          {"vertices", r.solution.values.size()}};
}

Json to_json(const MoscoReport& r) {
  Json rows = Json::array();
  for (const MoscoRow& m : r.rows) {
    rows.push_back({{"index", m.index},
                    {"min_value", m.min_value},
                    {"minimizer_norm", m.minimizer_norm},
                    {"recovery_value", m.recovery_value},
                    {"liminf_value", m.liminf_value},
                    {"min_gap", m.min_gap},
                    {"relative_min_gap", m.relative_min_gap},
                    {"recovery_gap", m.recovery_gap},
                    {"liminf_gap", m.liminf_gap}});
  }
  return {{"rows", rows},
          {"proxy_min", r.proxy_min},
          {"proxy_norm", r.proxy_norm},
          {"final_min_gap", r.final_min_gap},
          {"final_recovery_gap", r.final_recovery_gap},
          {"final_liminf_gap", r.final_liminf_gap},
          {"scope", r.scope}};
}

Json to_json(const CompactsReport& r) {
  Json in = Json::array(), out = Json::array();
  for (const auto& v : r.inside) in.push_back(optional_index(v));
  for (const auto& v : r.outside) out.push_back(optional_index(v));
  return {{"inside", in}, {"outside", out}, {"all_pass", r.all_pass()}};
}

Json to_json(const ConvergenceDiagnostics& d) {
  Json rows = Json::array();
  for (const ConvergenceRow& r : d.rows) {
    rows.push_back({{"hausdorff_to_limit", r.hausdorff_to_limit},
                    {"charfn_p1", r.charfn_p1},
                    {"charfn_p2", r.charfn_p2},
                    {"measure_gap", r.measure_gap},
                    {"carrier_hausdorff", r.carrier_hausdorff}});
  }
  Json in = Json::array(), out = Json::array();
  for (const Polygon& p : d.probes_in) in.push_back(to_json(p));
  for (const Polygon& p : d.probes_out) out.push_back(to_json(p));
  return {{"rows", rows}, {"compacts", to_json(d.compacts)}, {"probes_in", in}, {"probes_out", out}, {"pitch", d.pitch}};
}

Json to_json(const ShapeEvaluation& e) {
  return {{"theta", e.theta},
          {"J", e.J ? Json(*e.J) : Json(nullptr)},
          {"admissible", e.admissible},
          {"admissibility", to_json(e.admissibility)},
          {"linear_residual", e.linear_residual},
          {"energy_defect", e.energy_defect},
          {"apriori_ratio", e.apriori_ratio},
          {"error", e.error}};
}

Json to_json(const SearchReport& r) {
  Json log = Json::array();
  for (const ShapeEvaluation& e : r.log) log.push_back(to_json(e));
  return {{"best_theta", r.best_theta},
          {"best_J", r.best_J},
          {"grid_evaluations", r.grid_evaluations},
          {"iterates", r.iterates},
          {"iterate_distances", r.iterate_distances},
          {"diagnostics", to_json(r.diagnostics)},
          {"log", log}};
}

Point point_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error("point: expected [x, y], got " + j.dump());
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

namespace {

std::vector<Point> points_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(where + ": expected an array of [x, y] pairs");
  std::vector<Point> pts;
  pts.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    try {
      pts.push_back(point_from_json(j[i]));
    } catch (const Error& e) {
      throw Error(where + "[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return pts;
}

MeasurePiece piece_from_json(const Json& j, const std::string& where) {
  MeasurePiece p;
  p.carrier = Polyline(points_from_json(field(j, "carrier", where), where + ".carrier"));
  const Json& d = field(j, "densities", where);
  if (!d.is_array()) throw Error(where + ".densities: expected an array of numbers");
  for (const Json& v : d) {
    if (!v.is_number()) throw Error(where + ".densities: expected an array of numbers");
    p.densities.push_back(v.get<double>());
  }
  return p;
}

}  // namespace

Polygon polygon_from_json(const Json& j) { return Polygon(points_from_json(j, "polygon")); }
Polyline polyline_from_json(const Json& j) { return Polyline(points_from_json(j, "polyline")); }

PolygonalDomain domain_from_json(const Json& j) {
  Polygon outer(points_from_json(field(j, "vertices", "domain"), "domain.vertices"));
  const Json& l = field(j, "labels", "domain");
  if (!l.is_array()) throw Error("domain.labels: expected an array of \"dir\" | \"neu\" | \"rob\"");
  std::vector<BoundaryLabel> labels;
  for (const Json& t : l) {
    if (!t.is_string()) throw Error("domain.labels: expected an array of \"dir\" | \"neu\" | \"rob\"");
    labels.push_back(parse_label(t.get<std::string>()));
  }
  std::optional<Polygon> design;
  if (j.contains("design_region")) design = Polygon(points_from_json(j.at("design_region"), "domain.design_region"));
  return PolygonalDomain(std::move(outer), std::move(labels), std::move(design));
}

BoundaryMeasure measure_from_json(const Json& j) {
  if (j.is_object() && j.contains("pieces")) {
    const Json& ps = j.at("pieces");
    if (!ps.is_array()) throw Error("measure.pieces: expected an array");
    std::vector<MeasurePiece> pieces;
    for (std::size_t i = 0; i < ps.size(); ++i) pieces.push_back(piece_from_json(ps[i], "measure.pieces[" + std::to_string(i) + "]"));
    return BoundaryMeasure(std::move(pieces));
  }
  MeasurePiece p = piece_from_json(j, "measure");
  return BoundaryMeasure(std::move(p.carrier), std::move(p.densities));
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_field_table(std::ostream& out, const ComplexField& u) {
  out << "# vertex x y re im\n";
  for (Eigen::Index i = 0; i < u.values.size(); ++i) {
    const Point p = u.mesh->vertices[static_cast<std::size_t>(i)];
    out << i << ' ' << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(u.values[i].real())
        << ' ' << format_double(u.values[i].imag()) << '\n';
  }
}

void write_mosco_csv(std::ostream& out, const MoscoReport& report) {
  out << "index,min_value,minimizer_norm,recovery_value,liminf_value,min_gap,relative_min_gap,recovery_gap,liminf_gap\n";
  for (const MoscoRow& r : report.rows) {
    out << r.index << ',' << format_double(r.min_value) << ',' << format_double(r.minimizer_norm) << ','
        << format_double(r.recovery_value) << ',' << format_double(r.liminf_value) << ',' << format_double(r.min_gap)
        << ',' << format_double(r.relative_min_gap) << ',' << format_double(r.recovery_gap) << ','
        << format_double(r.liminf_gap) << '\n';
  }
}

void write_search_csv(std::ostream& out, const SearchReport& report) {
  const std::size_t k = report.log.empty() ? report.best_theta.size() : report.log.front().theta.size();
  for (std::size_t i = 0; i < k; ++i) out << "theta_" << i + 1 << ',';
  out << "J,admissible,epsilon,lower_constant,upper_constant,linear_residual,energy_defect,apriori_ratio,error\n";
  for (const ShapeEvaluation& e : report.log) {
    for (double t : e.theta) out << format_double(t) << ',';
    out << (e.J ? format_double(*e.J) : std::string()) << ',' << (e.admissible ? 1 : 0) << ','
        << format_double(e.admissibility.epsilon_estimate) << ',' << format_double(e.admissibility.lower_constant)
        << ',' << format_double(e.admissibility.upper_constant) << ',' << format_double(e.linear_residual) << ','
        << format_double(e.energy_defect) << ',' << format_double(e.apriori_ratio) << ',' << csv_quote(e.error)
        << '\n';
  }
}

void write_diagnostics_csv(std::ostream& out, const ConvergenceDiagnostics& d) {
  out << "member,hausdorff_to_limit,charfn_p1,charfn_p2,measure_gap,carrier_hausdorff\n";
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    const ConvergenceRow& r = d.rows[i];
    out << i << ',' << format_double(r.hausdorff_to_limit) << ',' << format_double(r.charfn_p1) << ','
        << format_double(r.charfn_p2) << ',' << format_double(r.measure_gap) << ','
        << format_double(r.carrier_hausdorff) << '\n';
  }
}

void write_scaling_csv(std::ostream& out, const std::vector<ScalingReport>& reports) {
  out << "condition,exponent,best_constant,pass,center_x,center_y,radius,k\n";
  for (const ScalingReport& r : reports) {
    out << condition_name(r.condition) << ',' << format_double(r.exponent) << ',' << format_double(r.best_constant)
        << ',' << (r.pass ? 1 : 0) << ',' << format_double(r.witness.center.x) << ','
        << format_double(r.witness.center.y) << ',' << format_double(r.witness.radius) << ','
        << format_double(r.witness.k) << '\n';
  }
}

}  // namespace fracshape::io
