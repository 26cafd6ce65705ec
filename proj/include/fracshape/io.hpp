#pragma once

// JSON and CSV serialization of domains, measures, fields and reports.
// Objects serialize with sorted keys and shortest round-trip doubles, so equal
// inputs give byte-identical files.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "fracshape/admissibility.hpp"
#include "fracshape/helmholtz.hpp"
#include "fracshape/mesh.hpp"
#include "fracshape/shape_search.hpp"
#include "fracshape/variational.hpp"

namespace fracshape::io {

using Json = nlohmann::json;

Json to_json(Point p);
Json to_json(const Polygon& polygon);
Json to_json(const Polyline& polyline);
Json to_json(const PolygonalDomain& domain);
Json to_json(const BoundaryMeasure& measure);
Json to_json(const Mesh& mesh);
Json to_json(const ComplexField& field);
Json to_json(const ScalingReport& report);
Json to_json(const AdmissibilityReport& report);
Json to_json(const EpsilonEstimate& estimate);
Json to_json(const SolveReport& report);
Json to_json(const MoscoReport& report);
Json to_json(const ConvergenceDiagnostics& diagnostics);
Json to_json(const CompactsReport& report);
Json to_json(const ShapeEvaluation& evaluation);
Json to_json(const SearchReport& report);

/// Inverse readers; throw Error naming the offending field.
Point point_from_json(const Json& j);
Polygon polygon_from_json(const Json& j);
Polyline polyline_from_json(const Json& j);
PolygonalDomain domain_from_json(const Json& j);
BoundaryMeasure measure_from_json(const Json& j);

/// Two-space indented dump with a trailing newline.
std::string dump(const Json& j);

/// "vertex x y re im" rows with a header line.
void write_field_table(std::ostream& out, const ComplexField& u);

/// index,min_value,minimizer_norm,recovery_value,liminf_value,min_gap,relative_min_gap,recovery_gap,liminf_gap
void write_mosco_csv(std::ostream& out, const MoscoReport& report);

/// theta_1..theta_k,J,admissible,epsilon,lower_constant,upper_constant,linear_residual,energy_defect,apriori_ratio,error
void write_search_csv(std::ostream& out, const SearchReport& report);

/// member,hausdorff_to_limit,charfn_p1,charfn_p2,measure_gap,carrier_hausdorff
void write_diagnostics_csv(std::ostream& out, const ConvergenceDiagnostics& diagnostics);

/// condition,exponent,best_constant,pass,center_x,center_y,radius,k
void write_scaling_csv(std::ostream& out, const std::vector<ScalingReport>& reports);

/// Shortest round-trip text of a double.
std::string format_double(double v);

}  // namespace fracshape::io
