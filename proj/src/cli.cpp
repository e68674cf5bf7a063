#include "regop/cli.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "regop/acceptance.hpp"
#include "regop/io.hpp"

namespace regop {

namespace {

// Bad flag values or inputs that do not fit together.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation ran but could not produce the requested object.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunSpec {
  std::vector<std::string> inputs;
  std::string p = "2";
  int levels = 2;
  int restarts = 3;
  std::uint64_t seed = 0;
  double tol = 1e-9;
  std::string output;
  bool trace_class = false;
  // gen
  std::string kind;
  int in_dim = 2;
  int out_dim = 2;
  int rank = 0;
  // verify
  std::vector<int> only;
};

PExponent exponent_of(const RunSpec& s) {
  try {
    return parse_exponent(s.p);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--p: ") + e.what());
  }
}

RegularOptions regular_options(const RunSpec& s) {
  if (s.levels < 1 || s.levels > 4) throw UsageError("--levels must be in 1..4");
  RegularOptions o;
  o.levels = s.levels;
  o.restarts = s.restarts;
  o.seed = s.seed;
  return o;
}

Json header(const std::string& command, const RunSpec& s) {
  Json j = report_header(command);
  if (!s.inputs.empty()) j["inputs"] = s.inputs;
  return j;
}

LinearMap read_map(const std::string& path) { return map_from_json(read_json_file(path), path + ":$"); }
BlockMatrix read_block(const std::string& path) { return block_from_json(read_json_file(path), path + ":$"); }

Json cmd_vnorm(const RunSpec& s) {
  const BlockMatrix x = read_block(s.inputs.at(0));
  VNormOptions o;
  o.restarts = s.restarts;
  o.seed = s.seed;
  const VNormResult r = vnorm(x, exponent_of(s), o);
  Json j = header("vnorm", s);
  j["p"] = report_exponent(exponent_of(s));
  j["seed"] = s.seed;
  j["bracket"] = bracket_report(r.bracket);
  Json f;
  f["a"] = matrix_to_json(r.factorization.a);
  f["y"] = block_to_json(r.factorization.y);
  f["b"] = matrix_to_json(r.factorization.b);
  f["value"] = report_number(r.factorization.value);
  j["factorization"] = f;
  return j;
}

Json cmd_rho(const RunSpec& s) {
  const PairingElement a{read_block(s.inputs.at(0)), exponent_of(s)};
  Json j = header("rho", s);
  j["p"] = report_exponent(a.p);
  j["seed"] = s.seed;
  j["rho_upper"] = rho_report(rho_upper(a, s.restarts, s.seed));
  return j;
}

Json cmd_cbnorm(const RunSpec& s) {
  const LinearMap u = read_map(s.inputs.at(0));
  const CbNormResult r = s.trace_class ? cb_norm_trace_class(u) : cb_norm(u);
  if (r.status != SolveStatus::kOptimal) throw ComputationError("cb norm solve ended with status " + to_string(r.status));
  Json j = header("cbnorm", s);
  j["spaces"] = s.trace_class ? "trace_class" : "operator";
  j["value"] = report_number(r.value);
  j["solver_status"] = to_string(r.status);
  return j;
}

Json cmd_cpcheck(const RunSpec& s) {
  const LinearMap u = read_map(s.inputs.at(0));
  const CpCheck c = is_cp(u, s.tol);
  Json j = header("cpcheck", s);
  j["completely_positive"] = c.completely_positive;
  j["margin"] = report_number(c.margin);
  char margin[32];
  std::snprintf(margin, sizeof margin, "%.12g", report_number(c.margin).get<double>());
  j["verdict"] = std::string(c.completely_positive ? "CP" : "not CP") + ", margin " + margin;
  return j;
}

Json cmd_kraus(const RunSpec& s) {
  const LinearMap u = read_map(s.inputs.at(0));
  const CpCheck c = is_cp(u, s.tol);
  if (!c.completely_positive) {
    throw ComputationError("map is not completely positive (margin " + report_number(c.margin).dump() + ")");
  }
  const KrausSet k = kraus(u, s.tol);
  Json ops = Json::array();
  for (const CMatrix& y : k.ops) ops.push_back(matrix_to_json(y));
  double residual = 0.0;
  for (int i = 0; i < u.in_dim(); ++i) {
    for (int l = 0; l < u.in_dim(); ++l) {
      const CMatrix e = unit(u.in_dim(), i, l);
      residual = std::max(residual, (k.apply(e) - u.apply(e)).cwiseAbs().maxCoeff());
    }
  }
  Json j = header("kraus", s);
  j["rank"] = k.ops.size();
  j["reconstruction_residual"] = report_number(residual);
  j["operators"] = ops;
  return j;
}

Json cmd_spnorm(const RunSpec& s) {
  const LinearMap u = read_map(s.inputs.at(0));
  SchattenSearchOptions o;
  o.restarts = s.restarts;
  o.seed = s.seed;
  Json j = header("spnorm", s);
  j["p"] = report_exponent(exponent_of(s));
  j["seed"] = s.seed;
  j["bracket"] = bracket_report(sp_op_norm(u, exponent_of(s), o));
  return j;
}

Json cmd_regnorm(const RunSpec& s) {
  const LinearMap u = read_map(s.inputs.at(0));
  Json j = header("regnorm", s);
  j["seed"] = s.seed;
  j["regular"] = regular_report(regular_bracket(u, exponent_of(s), regular_options(s)));
  return j;
}

Json cmd_decompose(const RunSpec& s) {
  const LinearMap u = read_map(s.inputs.at(0));
  const Decomposition d = decompose_cp(u, exponent_of(s), regular_options(s));
  Json j = header("decompose", s);
  j["p"] = report_exponent(exponent_of(s));
  j["seed"] = s.seed;
  j["decomposition"] = decomposition_report(d);
  j["recombination_residual"] = report_number((d.recombine().choi() - u.choi()).cwiseAbs().maxCoeff());
  Json parts = Json::array();
  for (const LinearMap& part : d.parts) parts.push_back(map_to_json(part));
  j["parts"] = parts;
  return j;
}

Json cmd_pair(const RunSpec& s) {
  if (s.inputs.size() != 2) throw UsageError("pair expects a map file and an element file");
  const LinearMap u = read_map(s.inputs[0]);
  const PairingElement a{read_block(s.inputs[1]), exponent_of(s)};
  if (a.n() != u.in_dim() || a.m() != u.out_dim()) {
    throw UsageError("element dimensions do not match the map (outer = in_dim, inner = out_dim)");
  }
  const DualityCheck c = duality_check(u, a, regular_options(s), 1e-5);
  Json j = header("pair", s);
  j["p"] = report_exponent(a.p);
  j["seed"] = s.seed;
  j["pairing"] = report_complex(c.direct);
  j["pairing_factored"] = report_complex(c.factored);
  j["rho_upper"] = report_number(c.rho);
  j["regular_upper"] = report_number(c.regular);
  j["duality_holds"] = c.holds;
  return j;
}

// {"n", "out_dim", "basis": [matrix], "images": [matrix], optional "reference": map}
Json cmd_extend(const RunSpec& s) {
  const std::string& path = s.inputs.at(0);
  const Json in = read_json_file(path);
  const std::string root = path + ":$";
  auto require = [&](const char* key) -> const Json& {
    if (!in.is_object() || !in.contains(key)) throw FormatError(root + ": missing field '" + key + "'");
    return in.at(key);
  };
  const Json& n = require("n");
  const Json& out_dim = require("out_dim");
  if (!n.is_number_integer() || n.get<int>() < 1) throw FormatError(root + ".n: expected a positive integer");
  if (!out_dim.is_number_integer() || out_dim.get<int>() < 1) {
    throw FormatError(root + ".out_dim: expected a positive integer");
  }
  auto matrices = [&](const char* key) {
    const Json& arr = require(key);
    if (!arr.is_array()) throw FormatError(root + "." + key + ": expected an array");
    std::vector<CMatrix> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(matrix_from_json(arr[i], root + "." + key + "[" + std::to_string(i) + "]"));
    }
    return out;
  };
  SubspaceBasis basis{n.get<int>(), matrices("basis")};
  const std::vector<CMatrix> images = matrices("images");
  if (images.size() != basis.elements.size()) throw UsageError("basis and images differ in length");
  try {
    basis.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("basis: ") + e.what());
  }
  std::optional<LinearMap> reference;
  if (in.contains("reference")) reference = map_from_json(in.at("reference"), root + ".reference");

  const ExtensionResult r = extend(basis, images, out_dim.get<int>(), exponent_of(s), regular_options(s),
                                   reference ? &*reference : nullptr);
  Json j = header("extend", s);
  j["p"] = report_exponent(exponent_of(s));
  j["seed"] = s.seed;
  j["method"] = r.method;
  j["restriction_residual"] = report_number(r.restriction_residual);
  j["upper"] = report_number(r.upper.value);
  j["subspace_lower"] = report_number(r.subspace_lower.value);
  j["gap"] = report_number(r.gap());
  j["extension"] = map_to_json(r.extension);
  return j;
}

Json cmd_gen(const RunSpec& s) {
  Rng rng(s.seed);
  if (s.in_dim < 1 || s.out_dim < 1) throw UsageError("dimensions must be positive");
  if (s.kind == "map") return map_to_json(random_map(rng, s.in_dim, s.out_dim));
  if (s.kind == "cp") return map_to_json(random_cp_map(rng, s.in_dim, s.out_dim, s.rank));
  if (s.kind == "block") {
    const int d = s.in_dim * s.out_dim;
    return block_to_json(BlockMatrix(s.in_dim, s.out_dim, rng.gaussian(d, d)));
  }
  throw UsageError("unknown kind '" + s.kind + "' (map, cp, block)");
}

Json cmd_verify(const RunSpec& s, std::ostream& err, bool& all_passed) {
  AcceptanceOptions o;
  o.seed = s.seed;
  o.only = s.only;
  const auto results = run_acceptance(o, [&](const CriterionResult& r) { err << format_result(r, false) << "\n"; });
  Json j = report_header("verify");
  j["seed"] = s.seed;
  Json list = Json::array();
  int passed = 0;
  for (const CriterionResult& r : results) {
    Json c;
    c["id"] = r.id;
    c["name"] = r.name;
    c["passed"] = r.passed;
    c["detail"] = r.detail;
    list.push_back(c);
    if (r.passed) ++passed;
  }
  j["criteria"] = list;
  j["passed"] = passed;
  j["total"] = results.size();
  all_passed = passed == static_cast<int>(results.size());
  return j;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regular operator norms between Schatten classes"};
  app.require_subcommand(1);
  RunSpec spec;

  auto add_input = [&](CLI::App* sub, const char* what) {
    sub->add_option("input", spec.inputs, what)->required()->check(CLI::ExistingFile);
  };
  auto add_p = [&](CLI::App* sub) { sub->add_option("--p", spec.p, "exponent in [1, inf]; accepts 'inf'")->required(); };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", spec.seed, "seed for all random choices")->required(); };
  auto add_restarts = [&](CLI::App* sub) { sub->add_option("--restarts", spec.restarts, "random restarts")->check(CLI::Range(1, 1000)); };
  auto add_levels = [&](CLI::App* sub) { sub->add_option("-K,--levels", spec.levels, "amplification levels (1..4)"); };
  auto add_tol = [&](CLI::App* sub) { sub->add_option("--tol", spec.tol, "tolerance")->check(CLI::PositiveNumber); };

  CLI::App* vn = app.add_subcommand("vnorm", "bracket for |x| in S_p[M_m]");
  add_input(vn, "BlockMatrix file");
  add_p(vn);
  add_seed(vn);
  add_restarts(vn);

  CLI::App* rho = app.add_subcommand("rho", "upper bound for rho_p with its factorization witness");
  add_input(rho, "BlockMatrix file");
  add_p(rho);
  add_seed(rho);
  add_restarts(rho);

  CLI::App* cb = app.add_subcommand("cbnorm", "completely bounded norm");
  add_input(cb, "map file");
  cb->add_flag("--trace-class", spec.trace_class, "cb norm on S_1 (diamond norm)");

  CLI::App* cpc = app.add_subcommand("cpcheck", "complete positivity test");
  add_input(cpc, "map file");
  add_tol(cpc);

  CLI::App* kr = app.add_subcommand("kraus", "Kraus operators of a CP map");
  add_input(kr, "map file");
  add_tol(kr);

  CLI::App* sp = app.add_subcommand("spnorm", "bracket for the S_p -> S_p operator norm");
  add_input(sp, "map file");
  add_p(sp);
  add_seed(sp);
  add_restarts(sp);

  CLI::App* reg = app.add_subcommand("regnorm", "regular norm bracket");
  add_input(reg, "map file");
  add_p(reg);
  add_seed(reg);
  add_restarts(reg);
  add_levels(reg);

  CLI::App* dec = app.add_subcommand("decompose", "decomposition into CP parts");
  add_input(dec, "map file");
  add_p(dec);
  add_seed(dec);

  CLI::App* pair = app.add_subcommand("pair", "pairing <u, a> against rho_p(a) |u|_r");
  add_input(pair, "map file and element file");
  add_p(pair);
  add_seed(pair);
  add_restarts(pair);
  add_levels(pair);

  CLI::App* ext = app.add_subcommand("extend", "regular extension from a subspace");
  add_input(ext, "subspace file");
  add_p(ext);
  add_seed(ext);
  add_restarts(ext);
  add_levels(ext);

  CLI::App* gen = app.add_subcommand("gen", "random instance");
  gen->add_option("kind", spec.kind, "map, cp or block")->required();
  gen->add_option("--in", spec.in_dim, "input dimension (outer for block)");
  gen->add_option("--out", spec.out_dim, "output dimension (inner for block)");
  gen->add_option("--rank", spec.rank, "Kraus rank for cp (0: full)")->check(CLI::NonNegativeNumber);
  add_seed(gen);

  CLI::App* ver = app.add_subcommand("verify", "run the acceptance suite");
  add_seed(ver);
  ver->add_option("--only", spec.only, "criterion ids");

  for (CLI::App* sub : app.get_subcommands({})) {
    sub->add_option("-o,--output", spec.output, "write the report here instead of stdout");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  int status = kExitOk;
  try {
    Json report;
    if (name == "vnorm") report = cmd_vnorm(spec);
    else if (name == "rho") report = cmd_rho(spec);
    else if (name == "cbnorm") report = cmd_cbnorm(spec);
    else if (name == "cpcheck") report = cmd_cpcheck(spec);
    else if (name == "kraus") report = cmd_kraus(spec);
    else if (name == "spnorm") report = cmd_spnorm(spec);
    else if (name == "regnorm") report = cmd_regnorm(spec);
    else if (name == "decompose") report = cmd_decompose(spec);
    else if (name == "pair") report = cmd_pair(spec);
    else if (name == "extend") report = cmd_extend(spec);
    else if (name == "gen") report = cmd_gen(spec);
    else if (name == "verify") {
      bool all = false;
      report = cmd_verify(spec, err, all);
      if (!all) status = kExitFailure;
    }
    if (spec.output.empty()) {
      out << dump(report);
    } else {
      write_json_file(spec.output, report);
    }
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    // Inputs that parse but do not fit the operation (dimension mismatches).
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return status;
}

}  // namespace regop
