#ifndef REGOP_REGULAR_HPP_
#define REGOP_REGULAR_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "regop/cp.hpp"
#include "regop/vnorm.hpp"

namespace regop {

struct RegularOptions {
  int levels = 3;        // amplification levels k = 1..levels (at most 4)
  int restarts = 3;      // random starts per level
  int max_steps = 40;    // ascent steps per start
  std::uint64_t seed = 0;
  double search_gap = 1e-4;  // vnorm relative gap while searching
  double final_gap = 1e-9;   // vnorm relative gap for reported values
  int refine_budget = 60;    // evaluations spent refining the weighted family bound
  SolveOptions sdp;
};

/// u = u_1 - u_2 + i (u_3 - u_4) with completely positive parts.
struct Decomposition {
  std::array<LinearMap, 4> parts;
  /// sum_j |u_j(I)|^{1-theta} |u_j^*(I)|^theta
  double certificate = 0.0;
  /// sum_j max(|u_j(I)|, |u_j^*(I)|)
  double max_objective = 0.0;
  SolveStatus status = SolveStatus::kOptimal;

  LinearMap recombine() const;
};

struct RegularUpper {
  double value = 0.0;
  std::string certificate;            // which bound attained the minimum
  std::optional<Decomposition> decomposition;
  double decomposition_value = 0.0;   // certificate of the decomposition alone
  double interpolation_value = 0.0;   // cb_inf^{1-theta} cb_1^theta
  double weighted_value = 0.0;        // weighted analytic-family bound
};

struct RegularLower {
  std::vector<double> levels;  // monotone envelope, index k-1
  double value = 0.0;
  int level = 1;
  BlockMatrix witness;
};

struct RegularReport {
  PExponent p{1.0};
  RegularLower lower;
  RegularUpper upper;
};

/// Sound lower bounds on |u (x) I_{M_k}| between vector-valued Schatten
/// spaces. When `subspace` is given, inputs are restricted to S (x) M_k.
RegularLower regular_lower(const LinearMap& u, const PExponent& p, const RegularOptions& options = {},
                           const std::vector<CMatrix>* subspace = nullptr);

/// Certified upper bound: the cb norm at p = inf, otherwise the minimum of
/// the CP-decomposition certificate, the endpoint interpolation bound and the
/// weighted analytic-family bound.
RegularUpper regular_upper(const LinearMap& u, const PExponent& p, const RegularOptions& options = {});

RegularReport regular_bracket(const LinearMap& u, const PExponent& p, const RegularOptions& options = {});

/// CP decomposition minimizing sum_j max(|u_j(I)|, |u_j^*(I)|), then reweighted
/// towards the product certificate at exponent p.
Decomposition decompose_cp(const LinearMap& u, const PExponent& p, const RegularOptions& options = {});

/// cb_inf(u_0)^{1-theta} cb_1(u_1)^theta for the family
/// u_0 = lo^{-theta} u(li^theta . ri^theta) ro^{-theta},
/// u_1 = lo^{1-theta} u(li^{theta-1} . ri^{theta-1}) ro^{1-theta}
/// with positive definite weights.
double weighted_family_bound(const LinearMap& u, const PExponent& p, const CMatrix& lo,
                             const CMatrix& li, const CMatrix& ri, const CMatrix& ro,
                             const SolveOptions& options = {});

/// Weighted bound from the heuristic start followed by a derivative-free search.
double weighted_family_upper(const LinearMap& u, const PExponent& p, int budget,
                             const SolveOptions& options = {});

/// Element a of S_p^n (x) S_{p'}^m stored with outer n, inner m.
struct PairingElement {
  BlockMatrix body;
  PExponent p{2.0};

  int n() const { return body.outer; }
  int m() const { return body.inner; }
};

/// a = (gamma (x) alpha) g (delta (x) beta).
struct RhoWitness {
  CMatrix gamma, alpha, beta, delta;
  BlockMatrix g;
  double value = 0.0;

  CMatrix reconstruct() const;
};

/// Upper bound for rho_p(a) by alternating convex vnorm solves over the
/// outer (gamma, delta) and inner (alpha, beta) weights. Optional starting
/// inner weights (alpha, beta) supplement the identity and random starts.
RhoWitness rho_upper(const PairingElement& a, int restarts = 2, std::uint64_t seed = 0,
                     const std::vector<std::pair<CMatrix, CMatrix>>& inner_starts = {});

/// Direct coefficient pairing <u, a> = sum choi(u) o a.
Complex pairing_value(const LinearMap& u, const PairingElement& a);
/// The same pairing via trace_pair of (t alpha (x) I)(u (x) I)(y)(t beta (x) I),
/// where a = (I (x) alpha) y (I (x) beta) comes from the witness.
Complex pairing_value_factored(const LinearMap& u, const RhoWitness& w);

struct DualityCheck {
  Complex direct = 0.0;
  Complex factored = 0.0;
  double rho = 0.0;
  double regular = 0.0;
  bool holds = false;  // |<u, a>| <= rho * regular + tol
};

DualityCheck duality_check(const LinearMap& u, const PairingElement& a, const RegularOptions& options = {},
                           double tol = 1e-6);

/// Basis of a subspace S of M_n.
struct SubspaceBasis {
  int n = 1;
  std::vector<CMatrix> elements;

  /// Throws std::invalid_argument unless the basis is well conditioned.
  void validate() const;
  /// Hilbert-Schmidt orthogonal projection onto S as a map on M_n.
  LinearMap projection() const;
  /// Basis of the trace-orthogonal complement.
  std::vector<CMatrix> complement() const;
  std::vector<CMatrix> orthonormal() const;

  static SubspaceBasis full(int n);
  static SubspaceBasis upper_triangular(int n);
};

struct ExtensionResult {
  LinearMap extension;
  double restriction_residual = 0.0;
  RegularUpper upper;
  RegularLower subspace_lower;
  std::string method;

  double gap() const { return upper.value - subspace_lower.value; }
};

/// Regular extension of the map given by its values on a basis of S. When a
/// reference map on M_n is known it is offered as an extra candidate.
ExtensionResult extend(const SubspaceBasis& s, const std::vector<CMatrix>& images, int out_dim,
                       const PExponent& p, const RegularOptions& options = {},
                       const LinearMap* reference = nullptr);

/// | |M| |_{l_p -> l_p} for the diagonal-preserving map x -> sum m_ab x_bb e_aa.
/// Throws std::invalid_argument if u does not preserve diagonals.
double lattice_regular_oracle(const LinearMap& u, const PExponent& p);

}  // namespace regop

#endif  // REGOP_REGULAR_HPP_
