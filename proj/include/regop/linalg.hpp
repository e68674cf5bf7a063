#ifndef REGOP_LINALG_HPP_
#define REGOP_LINALG_HPP_

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace regop {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Tolerance (max-entry norm, relative to max(1, |A|max)) for Hermitian checks.
inline constexpr double kHermitianTol = 1e-12;
/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kRankCutoff = 1e-12;

/// Exponent p in [1, inf]. Infinity is a distinguished value, never a large float.
class PExponent {
 public:
  explicit PExponent(double p);
  static PExponent infinity() { return PExponent(Infinite{}); }

  bool is_infinite() const { return infinite_; }
  bool is_one() const { return !infinite_ && p_ == 1.0; }
  /// p itself; +inf for the infinite exponent.
  double value() const;
  /// Conjugate exponent p' with 1/p + 1/p' = 1.
  PExponent conjugate() const;
  /// theta = 1/p (0 at infinity).
  double theta() const { return infinite_ ? 0.0 : 1.0 / p_; }
  /// The exponent c*p, used for the 2p / 2p' factor norms.
  PExponent times(double c) const;
  std::string to_string() const;

  friend bool operator==(const PExponent& a, const PExponent& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.p_ == b.p_);
  }

 private:
  struct Infinite {};
  explicit PExponent(Infinite) : p_(0.0), infinite_(true) {}
  double p_;
  bool infinite_;
};

/// Parses "inf"/"infinity" or a decimal >= 1.
PExponent parse_exponent(const std::string& text);

/// Storage convention of a two-factor tensor body.
enum class FactorOrder { kOuterInner, kInnerOuter };

/// Element of M_outer (x) M_inner stored as an (outer*inner)^2 body. With
/// kOuterInner the body index of (o, i) is o*inner + i; kInnerOuter stores
/// i*outer + o.
struct BlockMatrix {
  int outer = 1;
  int inner = 1;
  CMatrix body;
  FactorOrder order = FactorOrder::kOuterInner;

  BlockMatrix() = default;
  BlockMatrix(int outer_dim, int inner_dim, CMatrix b,
              FactorOrder o = FactorOrder::kOuterInner);

  static BlockMatrix zero(int outer_dim, int inner_dim);
  /// a (x) e with a in M_outer, e in M_inner.
  static BlockMatrix elementary(const CMatrix& a, const CMatrix& e);

  /// Body in kOuterInner storage.
  CMatrix canonical() const;
  /// Block (i, j) in M_inner of the canonical body.
  CMatrix block(int i, int j) const;
  int dim() const { return outer * inner; }
};

/// Shuffle x (x) y -> y (x) x of the stored body; toggles the order flag.
BlockMatrix flip_factors(const BlockMatrix& x);
/// Same tensor, reinterpreted so that the old inner factor is the new outer.
BlockMatrix exchange_roles(const BlockMatrix& x);

struct HermitianEig {
  RVector values;   // descending
  CMatrix vectors;  // columns, unitary
};

bool is_hermitian(const CMatrix& a, double tol = kHermitianTol);
CMatrix hermitian_part(const CMatrix& a);

/// Spectral decomposition of a Hermitian matrix; throws std::invalid_argument
/// when the input is not Hermitian to tolerance.
HermitianEig hermitian_eig(const CMatrix& a);
/// Same as hermitian_eig after symmetrizing the input (no check).
HermitianEig hermitian_eig_unchecked(const CMatrix& a);

/// Singular values, descending.
RVector singular_values(const CMatrix& a);
double schatten_norm(const CMatrix& a, const PExponent& p);
double operator_norm(const CMatrix& a);
double frobenius_norm(const CMatrix& a);

/// Unit-dual-norm element g with Re tr(g^* a) = |a|_p (a subgradient of the
/// Schatten p-norm at a). Zero for a = 0.
CMatrix schatten_norming(const CMatrix& a, const PExponent& p);

CMatrix kron(const CMatrix& a, const CMatrix& b);
CMatrix identity(int n);
/// Matrix unit e_ij of size n.
CMatrix unit(int n, int i, int j);

/// Sum over the inner index: result is outer x outer.
CMatrix partial_trace_inner(const CMatrix& m, int outer, int inner);
/// Sum over the outer index: result is inner x inner.
CMatrix partial_trace_outer(const CMatrix& m, int outer, int inner);

/// Permutation-similarity that swaps the two tensor factors of a
/// (first*second)-dimensional body.
CMatrix swap_factors(const CMatrix& m, int first, int second);

/// sum_ij <e_i, z_ij e_j> for z in M_m (x) M_m.
Complex trace_pair(const BlockMatrix& z);

/// f applied to the spectrum of a Hermitian matrix.
CMatrix hermitian_function(const CMatrix& a, const std::function<double(double)>& f);
/// Power s of a PSD matrix; eigenvalues below kRankCutoff * max are zeroed
/// when s <= 0.
CMatrix psd_power(const CMatrix& a, double s);
CMatrix project_psd(const CMatrix& a);
double lambda_min(const CMatrix& a);
double lambda_max(const CMatrix& a);

/// Deterministic random source for instance generation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  CMatrix gaussian(int rows, int cols);
  CMatrix hermitian(int n);
  CMatrix unitary(int n);
  /// G G^* + eps I with G Gaussian.
  CMatrix positive_definite(int n, double eps = 1e-2);
  std::uint64_t next_seed() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace regop

#endif  // REGOP_LINALG_HPP_
