#ifndef REGOP_IO_HPP_
#define REGOP_IO_HPP_

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "regop/cp.hpp"
#include "regop/linalg.hpp"
#include "regop/regular.hpp"
#include "regop/vnorm.hpp"

namespace regop {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

/// Malformed input; the message names the offending location.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {"rows", "cols", "data": [[re, im], ...]} in row-major order.
Json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const Json& j, const std::string& where = "$");

/// Matrix fields plus outer_dim, inner_dim and factor_order.
Json block_to_json(const BlockMatrix& x);
BlockMatrix block_from_json(const Json& j, const std::string& where = "$");

/// {"in_dim", "out_dim", "choi": matrix}.
Json map_to_json(const LinearMap& u);
LinearMap map_from_json(const Json& j, const std::string& where = "$");

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// Number rounded to 12 significant digits for reports.
Json report_number(double v);
Json report_complex(Complex z);
/// "inf" or the decimal value.
Json report_exponent(const PExponent& p);
/// Report skeleton with the schema version and the command name.
Json report_header(const std::string& command);

Json bracket_report(const NormBracket& b);
Json regular_report(const RegularReport& r);
Json decomposition_report(const Decomposition& d);
Json rho_report(const RhoWitness& w);

/// Pretty-printed text with a trailing newline.
std::string dump(const Json& j);

}  // namespace regop

#endif  // REGOP_IO_HPP_
