#ifndef REGOP_VNORM_HPP_
#define REGOP_VNORM_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "regop/linalg.hpp"

namespace regop {

/// x = (a (x) I) y (b (x) I) with value |a|_{2p} |y|_{M_n(M_m)} |b|_{2p}.
struct Factorization {
  CMatrix a;
  BlockMatrix y;
  CMatrix b;
  double value = 0.0;

  /// (a (x) I) y (b (x) I), canonical storage.
  CMatrix reconstruct() const;
};

/// Certified interval for a norm with no finite exact algorithm.
struct NormBracket {
  double lower = 0.0;
  double upper = 0.0;
  std::string lower_witness;
  std::string upper_witness;
  std::optional<Factorization> factorization;

  double width() const { return upper - lower; }
};

struct VNormOptions {
  int restarts = 4;            // random starts for the contraction-witness chain
  std::uint64_t seed = 0;
  int max_iter = 20000;        // splitting iterations
  double rel_gap = 1e-9;       // stop once (upper - lower) <= rel_gap * upper
  double step = 1.0;
  int check_every = 25;
  int witness_sweeps = 25;
};

struct VNormResult {
  NormBracket bracket;
  Factorization factorization;
  /// G with Re tr(G^* x) = bracket.lower and unit dual norm up to solver
  /// accuracy; a subgradient of the norm at x.
  CMatrix subgradient;
  int iterations = 0;
};

/// Bracket for |x| in S_p^n[M_m] (n = outer, m = inner).
///
/// The upper bound is an explicit factorization built from the optimum of the
/// convex program
///   minimize tr A^p + tr B^p  s.t.  [[A (x) I, x], [x^*, B (x) I]] >= 0,
/// whose value is 2 |x|^p, solved by operator splitting. The lower bound is
/// the best of the dimension-scaled flat Schatten norm, contraction witnesses
/// w: M_m -> C, and the weak-duality value of the splitting's dual iterate.
VNormResult vnorm(const BlockMatrix& x, const PExponent& p, const VNormOptions& options = {});

std::pair<double, Factorization> vnorm_upper(const BlockMatrix& x, const PExponent& p,
                                             int restarts = 4, std::uint64_t seed = 0);
double vnorm_lower(const BlockMatrix& x, const PExponent& p);

/// Lower bound sup_w |(I (x) w)(x)|_{S_p^n} over functionals w(e) = <xi, e eta>
/// with unit vectors; a starting pair may be supplied.
double contraction_witness_lower(const CMatrix& body, int outer, int inner, const PExponent& p,
                                 int restarts, std::uint64_t seed, CMatrix* subgradient = nullptr);

/// Reindexes the outer factor H (x) K of x as K (x) H (dims h, k); the inner
/// factor is untouched. Applying it with (k, h) undoes it.
BlockMatrix fubini_reshuffle(const BlockMatrix& x, int h, int k);

}  // namespace regop

#endif  // REGOP_VNORM_HPP_
