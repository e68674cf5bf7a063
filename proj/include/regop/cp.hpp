#ifndef REGOP_CP_HPP_
#define REGOP_CP_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "regop/conic.hpp"
#include "regop/linalg.hpp"
#include "regop/vnorm.hpp"

namespace regop {

/// y_1..y_k (out_dim x in_dim) with u(x) = sum_i y_i x y_i^*.
struct KrausSet {
  std::vector<CMatrix> ops;

  CMatrix apply(const CMatrix& x) const;
};

/// Linear map M_in -> M_out stored by its Choi matrix: block (i, j) of the
/// (in*out)-square Choi matrix is u(e_ij).
class LinearMap {
 public:
  LinearMap(int in_dim, int out_dim, CMatrix choi);

  static LinearMap from_action(int in_dim, int out_dim,
                               const std::function<CMatrix(const CMatrix&)>& action);
  static LinearMap identity(int n);
  static LinearMap transpose(int n);
  /// x -> v x v^*.
  static LinearMap conjugation(const CMatrix& v);
  /// x -> a x b.
  static LinearMap two_sided(const CMatrix& a, const CMatrix& b);
  static LinearMap zero(int in_dim, int out_dim);
  /// x -> sum_ab m_ab x_bb e_aa (the classical map of the matrix m on diagonals).
  static LinearMap diagonal(const CMatrix& m);

  int in_dim() const { return in_; }
  int out_dim() const { return out_; }
  const CMatrix& choi() const { return choi_; }

  CMatrix apply(const CMatrix& x) const;
  /// Hilbert-Schmidt adjoint action: <y, u(x)> = <u^dagger(y), x>.
  CMatrix apply_hs_adjoint(const CMatrix& y) const;

  /// u(I) and u^*(I) (the latter for the transpose-pairing adjoint).
  CMatrix image_of_identity() const;
  CMatrix adjoint_image_of_identity() const;

  const std::optional<KrausSet>& cached_kraus() const { return kraus_; }
  void cache_kraus(KrausSet k) { kraus_ = std::move(k); }

  LinearMap operator+(const LinearMap& other) const;
  LinearMap operator-(const LinearMap& other) const;
  LinearMap operator*(Complex s) const;

 private:
  int in_;
  int out_;
  CMatrix choi_;
  std::optional<KrausSet> kraus_;
};

/// u o v.
LinearMap compose(const LinearMap& u, const LinearMap& v);
/// u (x) id_{M_k}: acts on the outer factor of M_n (x) M_k.
LinearMap tensor_identity(const LinearMap& u, int k);
/// id_{M_k} (x) u: acts on the inner factor of M_k (x) M_n.
LinearMap identity_tensor(int k, const LinearMap& u);
/// (u (x) I)(x) for x in M_n(M_k) with n = u.in_dim().
BlockMatrix apply_outer(const LinearMap& u, const BlockMatrix& x);
/// (I (x) w)(x) for x in M_n(M_m) with m = w.in_dim().
BlockMatrix apply_inner(const LinearMap& w, const BlockMatrix& x);
/// x -> lo u(li x ri) ro.
LinearMap sandwich(const CMatrix& lo, const LinearMap& u, const CMatrix& li, const CMatrix& ri,
                   const CMatrix& ro);

CMatrix choi(const LinearMap& u);

struct CpCheck {
  bool completely_positive = false;
  double margin = 0.0;  // lambda_min of the Choi matrix
};

CpCheck is_cp(const LinearMap& u, double tol = 1e-9);

/// Kraus operators from the spectral decomposition of the Choi matrix,
/// ordered by descending eigenvalue. Throws std::invalid_argument for non-CP
/// input.
KrausSet kraus(const LinearMap& u, double tol = 1e-9);

/// Adjoint for the bilinear pairing tr(u(x) y^t) = tr(x u^*(y)^t).
LinearMap adjoint_map(const LinearMap& u);

/// u + sum_r t_r d_r with real coefficients t_r.
struct AffineMapFamily {
  LinearMap base;
  std::vector<LinearMap> directions;

  LinearMap at(const std::vector<double>& t) const;
};

struct CbNormResult {
  double value = 0.0;              // certified upper bound, accurate to solver tolerance
  double solver_value = 0.0;       // objective reported by the solver
  SolveStatus status = SolveStatus::kMaxIter;
  int iterations = 0;
  std::vector<double> coefficients;  // minimizer within an affine family
};

/// Completely bounded norm of u: M_n -> M_m with operator norms.
CbNormResult cb_norm(const LinearMap& u, const SolveOptions& options = {});
/// Completely bounded norm of u on trace-class (S_1) spaces (diamond norm).
CbNormResult cb_norm_trace_class(const LinearMap& u, const SolveOptions& options = {});
/// Minimum over an affine family of the cb norm on S_1.
CbNormResult min_cb_norm_trace_class(const AffineMapFamily& family, const SolveOptions& options = {});
/// Minimum over an affine family of the cb norm on operator spaces.
CbNormResult min_cb_norm(const AffineMapFamily& family, const SolveOptions& options = {});

struct SchattenSearchOptions {
  int restarts = 8;
  int max_steps = 200;
  std::uint64_t seed = 0;
};

/// Sound lower bound sup |u(x)|_q / |x|_p by projected gradient ascent on the
/// unit Schatten sphere with step halving. Extra starting points are optional.
double schatten_ratio_lower(const LinearMap& u, const PExponent& p_in, const PExponent& p_out,
                            const SchattenSearchOptions& options,
                            const std::vector<CMatrix>& extra_starts = {},
                            CMatrix* best_input = nullptr);

/// Bracket for the S_p -> S_p operator norm.
NormBracket sp_op_norm(const LinearMap& u, const PExponent& p,
                       const SchattenSearchOptions& options = {});

/// Seeded instance generators.
LinearMap random_map(Rng& rng, int in_dim, int out_dim);
LinearMap random_cp_map(Rng& rng, int in_dim, int out_dim, int kraus_rank = 0);

}  // namespace regop

#endif  // REGOP_CP_HPP_
