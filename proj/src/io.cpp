#include "regop/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace regop {

namespace {

const Json& field(const Json& j, const char* name, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  auto it = j.find(name);
  if (it == j.end()) throw FormatError(where + ": missing field \"" + name + "\"");
  return *it;
}

int positive_int(const Json& j, const char* name, const std::string& where) {
  const Json& v = field(j, name, where);
  if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 100000) {
    throw FormatError(where + "." + name + ": expected a positive integer");
  }
  return v.get<int>();
}

}  // namespace

Json matrix_to_json(const CMatrix& m) {
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  Json data = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) data.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
  }
  j["data"] = std::move(data);
  return j;
}

CMatrix matrix_from_json(const Json& j, const std::string& where) {
  const int rows = positive_int(j, "rows", where);
  const int cols = positive_int(j, "cols", where);
  const Json& data = field(j, "data", where);
  if (!data.is_array()) throw FormatError(where + ".data: expected an array");
  if (data.size() != static_cast<std::size_t>(rows) * cols) {
    throw FormatError(where + ".data: expected " + std::to_string(rows * cols) + " entries, found " +
                      std::to_string(data.size()));
  }
  CMatrix m(rows, cols);
  for (int k = 0; k < rows * cols; ++k) {
    const Json& e = data[k];
    const std::string loc = where + ".data[" + std::to_string(k) + "]";
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw FormatError(loc + ": expected [re, im]");
    }
    m(k / cols, k % cols) = Complex(e[0].get<double>(), e[1].get<double>());
  }
  return m;
}

Json block_to_json(const BlockMatrix& x) {
  Json j;
  j["outer_dim"] = x.outer;
  j["inner_dim"] = x.inner;
  j["factor_order"] = x.order == FactorOrder::kOuterInner ? "outer_inner" : "inner_outer";
  const Json body = matrix_to_json(x.body);
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  return j;
}

BlockMatrix block_from_json(const Json& j, const std::string& where) {
  const int outer = positive_int(j, "outer_dim", where);
  const int inner = positive_int(j, "inner_dim", where);
  FactorOrder order = FactorOrder::kOuterInner;
  if (j.contains("factor_order")) {
    const Json& o = j["factor_order"];
    if (o == "outer_inner") {
      order = FactorOrder::kOuterInner;
    } else if (o == "inner_outer") {
      order = FactorOrder::kInnerOuter;
    } else {
      throw FormatError(where + ".factor_order: expected \"outer_inner\" or \"inner_outer\"");
    }
  }
  const CMatrix body = matrix_from_json(j, where);
  if (body.rows() != outer * inner || body.cols() != outer * inner) {
    throw FormatError(where + ": body is " + std::to_string(body.rows()) + "x" + std::to_string(body.cols()) +
                      " but outer_dim * inner_dim = " + std::to_string(outer * inner));
  }
  return BlockMatrix(outer, inner, body, order);
}

Json map_to_json(const LinearMap& u) {
  Json j;
  j["in_dim"] = u.in_dim();
  j["out_dim"] = u.out_dim();
  j["choi"] = matrix_to_json(u.choi());
  return j;
}

LinearMap map_from_json(const Json& j, const std::string& where) {
  const int in = positive_int(j, "in_dim", where);
  const int out = positive_int(j, "out_dim", where);
  const CMatrix c = matrix_from_json(field(j, "choi", where), where + ".choi");
  if (c.rows() != in * out || c.cols() != in * out) {
    throw FormatError(where + ".choi: expected a " + std::to_string(in * out) + "x" + std::to_string(in * out) +
                      " matrix");
  }
  return LinearMap(in, out, c);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write file");
  out << dump(j);
}

Json report_number(double v) {
  if (!std::isfinite(v)) return v > 0 ? Json("inf") : (v < 0 ? Json("-inf") : Json("nan"));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

Json report_complex(Complex z) { return Json::array({report_number(z.real()), report_number(z.imag())}); }

Json report_exponent(const PExponent& p) {
  if (p.is_infinite()) return "inf";
  return report_number(p.value());
}

Json report_header(const std::string& command) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["command"] = command;
  return j;
}

Json bracket_report(const NormBracket& b) {
  Json j;
  j["lower"] = report_number(b.lower);
  j["upper"] = report_number(b.upper);
  j["width"] = report_number(b.width());
  j["lower_witness"] = b.lower_witness;
  j["upper_witness"] = b.upper_witness;
  return j;
}

Json decomposition_report(const Decomposition& d) {
  Json j;
  j["certificate"] = report_number(d.certificate);
  j["max_objective"] = report_number(d.max_objective);
  j["solver_status"] = to_string(d.status);
  Json parts = Json::array();
  for (const LinearMap& part : d.parts) {
    Json pj;
    pj["image_of_identity_norm"] = report_number(operator_norm(part.image_of_identity()));
    pj["adjoint_image_of_identity_norm"] = report_number(operator_norm(part.adjoint_image_of_identity()));
    pj["cp_margin"] = report_number(is_cp(part).margin);
    parts.push_back(pj);
  }
  j["parts"] = parts;
  return j;
}

Json regular_report(const RegularReport& r) {
  Json j;
  j["p"] = report_exponent(r.p);
  j["lower"] = report_number(r.lower.value);
  j["upper"] = report_number(r.upper.value);
  Json levels = Json::array();
  for (double v : r.lower.levels) levels.push_back(report_number(v));
  j["levels"] = levels;
  j["lower_level"] = r.lower.level;
  Json cert;
  cert["kind"] = r.upper.certificate;
  if (r.upper.decomposition) {
    cert["decomposition"] = decomposition_report(*r.upper.decomposition);
    cert["decomposition_value"] = report_number(r.upper.decomposition_value);
  }
  cert["interpolation_value"] = report_number(r.upper.interpolation_value);
  if (r.upper.weighted_value > 0.0) cert["weighted_value"] = report_number(r.upper.weighted_value);
  j["certificate"] = cert;
  return j;
}

Json rho_report(const RhoWitness& w) {
  Json j;
  j["value"] = report_number(w.value);
  Json f;
  f["gamma"] = matrix_to_json(w.gamma);
  f["alpha"] = matrix_to_json(w.alpha);
  f["g"] = block_to_json(w.g);
  f["beta"] = matrix_to_json(w.beta);
  f["delta"] = matrix_to_json(w.delta);
  j["witness"] = f;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace regop
