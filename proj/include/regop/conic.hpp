#ifndef REGOP_CONIC_HPP_
#define REGOP_CONIC_HPP_

#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "regop/linalg.hpp"

namespace regop {

using SparseRMatrix = Eigen::SparseMatrix<double>;

enum class ConeKind { kPsd, kFree };

/// Real linear functional over the stacked real coordinates of all blocks.
struct LinearForm {
  std::vector<std::pair<int, double>> terms;

  LinearForm& add(int coordinate, double coef) {
    terms.emplace_back(coordinate, coef);
    return *this;
  }
  LinearForm& add(const LinearForm& other, double scale = 1.0);
};

/// minimize <c, x> subject to A x = b, each block in its cone.
///
/// Every block is a d x d Hermitian matrix stored by d^2 real coordinates:
/// the d diagonal entries, then sqrt(2) Re X_ab and sqrt(2) Im X_ab for
/// a < b. The Frobenius inner product is the Euclidean one on coordinates.
class ConicProgram {
 public:
  int add_block(int dim, ConeKind cone);

  int num_blocks() const { return static_cast<int>(dims_.size()); }
  int num_vars() const { return num_vars_; }
  int num_constraints() const { return static_cast<int>(rhs_.size()); }
  int block_dim(int block) const { return dims_.at(block); }
  ConeKind block_cone(int block) const { return cones_.at(block); }

  /// Re X_ab and Im X_ab of a block as linear forms.
  LinearForm re(int block, int a, int b) const;
  LinearForm im(int block, int a, int b) const;
  /// Re tr(C X) for Hermitian C.
  LinearForm trace_with(int block, const CMatrix& c) const;

  void add_objective(const LinearForm& form, double weight = 1.0);
  void add_equality(const LinearForm& form, double rhs);
  /// Adds Re and Im equations expr_ab = target_ab for every entry, where the
  /// expression is given per entry by a callback.
  template <typename EntryExpr>
  void add_matrix_equality(int rows, int cols, EntryExpr&& expr, const CMatrix& target) {
    for (int a = 0; a < rows; ++a) {
      for (int b = 0; b < cols; ++b) {
        auto [re_form, im_form] = expr(a, b);
        add_equality(re_form, target(a, b).real());
        add_equality(im_form, target(a, b).imag());
      }
    }
  }

  const RVector& objective() const { return objective_dense_; }
  RMatrix constraint_matrix() const;
  SparseRMatrix sparse_constraint_matrix() const;
  RVector rhs() const { return Eigen::Map<const RVector>(rhs_.data(), rhs_.size()); }

  /// Hermitian value of a block from a coordinate vector.
  CMatrix block_value(const RVector& x, int block) const;
  void set_block_value(RVector& x, int block, const CMatrix& value) const;
  /// Projection of a coordinate vector onto the product cone.
  RVector project_cone(const RVector& x) const;

 private:
  int offset(int block) const { return offsets_.at(block); }

  std::vector<int> dims_;
  std::vector<ConeKind> cones_;
  std::vector<int> offsets_;
  int num_vars_ = 0;
  RVector objective_dense_;
  std::vector<LinearForm> rows_;
  std::vector<double> rhs_;
};

enum class SolveStatus { kOptimal, kMaxIter, kInfeasibleSuspected };

std::string to_string(SolveStatus status);

struct SolveReport {
  double primal_value = 0.0;
  double dual_value = 0.0;
  double primal_residual = 0.0;  // max of |Ax - b| and |x - cone(x)|, relative
  double dual_residual = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::kMaxIter;
  RVector x;       // affine iterate
  RVector x_cone;  // cone iterate
};

struct SolveOptions {
  double tol = 1e-7;
  int max_iter = 50000;
  double step = 1.0;        // ADMM penalty, fixed
  double relaxation = 1.5;  // over-relaxation
  int check_every = 10;
};

/// Operator-splitting (ADMM) solve with fixed step and over-relaxation.
/// Deterministic for identical inputs.
SolveReport solve(const ConicProgram& program, const SolveOptions& options = {});

}  // namespace regop

#endif  // REGOP_CONIC_HPP_
