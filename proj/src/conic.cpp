#include "regop/conic.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseCholesky>

namespace regop {

namespace {

const double kSqrt2 = std::sqrt(2.0);

// Coordinate of (a, b), a < b, among the off-diagonal pairs of a d x d block.
int pair_index(int d, int a, int b) {
  // Pairs are enumerated row by row: (0,1), (0,2), ..., (1,2), ...
  return a * d - a * (a + 1) / 2 + (b - a - 1);
}

}  // namespace

LinearForm& LinearForm::add(const LinearForm& other, double scale) {
  for (const auto& [k, v] : other.terms) terms.emplace_back(k, scale * v);
  return *this;
}

int ConicProgram::add_block(int dim, ConeKind cone) {
  if (dim < 1) throw std::invalid_argument("block dimension must be positive");
  dims_.push_back(dim);
  cones_.push_back(cone);
  offsets_.push_back(num_vars_);
  num_vars_ += dim * dim;
  RVector grown = RVector::Zero(num_vars_);
  grown.head(objective_dense_.size()) = objective_dense_;
  objective_dense_ = grown;
  return num_blocks() - 1;
}

LinearForm ConicProgram::re(int block, int a, int b) const {
  const int d = block_dim(block);
  LinearForm f;
  if (a == b) {
    f.add(offset(block) + a, 1.0);
  } else {
    const int lo = std::min(a, b), hi = std::max(a, b);
    f.add(offset(block) + d + 2 * pair_index(d, lo, hi), 1.0 / kSqrt2);
  }
  return f;
}

LinearForm ConicProgram::im(int block, int a, int b) const {
  const int d = block_dim(block);
  LinearForm f;
  if (a == b) return f;
  const int lo = std::min(a, b), hi = std::max(a, b);
  f.add(offset(block) + d + 2 * pair_index(d, lo, hi) + 1, (a < b ? 1.0 : -1.0) / kSqrt2);
  return f;
}

LinearForm ConicProgram::trace_with(int block, const CMatrix& c) const {
  const int d = block_dim(block);
  LinearForm f;
  for (int a = 0; a < d; ++a) {
    if (c(a, a).real() != 0.0) f.add(offset(block) + a, c(a, a).real());
    for (int b = a + 1; b < d; ++b) {
      const Complex cab = 0.5 * (c(a, b) + std::conj(c(b, a)));
      const int k = offset(block) + d + 2 * pair_index(d, a, b);
      if (cab.real() != 0.0) f.add(k, kSqrt2 * cab.real());
      if (cab.imag() != 0.0) f.add(k + 1, kSqrt2 * cab.imag());
    }
  }
  return f;
}

void ConicProgram::add_objective(const LinearForm& form, double weight) {
  for (const auto& [k, v] : form.terms) objective_dense_(k) += weight * v;
}

void ConicProgram::add_equality(const LinearForm& form, double rhs) {
  rows_.push_back(form);
  rhs_.push_back(rhs);
}

SparseRMatrix ConicProgram::sparse_constraint_matrix() const {
  std::vector<Eigen::Triplet<double>> triplets;
  for (int r = 0; r < num_constraints(); ++r) {
    for (const auto& [k, v] : rows_[r].terms) triplets.emplace_back(r, k, v);
  }
  SparseRMatrix a(num_constraints(), num_vars_);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

RMatrix ConicProgram::constraint_matrix() const {
  RMatrix a = RMatrix::Zero(num_constraints(), num_vars_);
  for (int r = 0; r < num_constraints(); ++r) {
    for (const auto& [k, v] : rows_[r].terms) a(r, k) += v;
  }
  return a;
}

CMatrix ConicProgram::block_value(const RVector& x, int block) const {
  const int d = block_dim(block);
  const int off = offset(block);
  CMatrix m(d, d);
  for (int a = 0; a < d; ++a) {
    m(a, a) = x(off + a);
    for (int b = a + 1; b < d; ++b) {
      const int k = off + d + 2 * pair_index(d, a, b);
      const Complex v(x(k) / kSqrt2, x(k + 1) / kSqrt2);
      m(a, b) = v;
      m(b, a) = std::conj(v);
    }
  }
  return m;
}

void ConicProgram::set_block_value(RVector& x, int block, const CMatrix& value) const {
  const int d = block_dim(block);
  const int off = offset(block);
  for (int a = 0; a < d; ++a) {
    x(off + a) = value(a, a).real();
    for (int b = a + 1; b < d; ++b) {
      const Complex v = 0.5 * (value(a, b) + std::conj(value(b, a)));
      const int k = off + d + 2 * pair_index(d, a, b);
      x(k) = kSqrt2 * v.real();
      x(k + 1) = kSqrt2 * v.imag();
    }
  }
}

RVector ConicProgram::project_cone(const RVector& x) const {
  RVector out = x;
  for (int blk = 0; blk < num_blocks(); ++blk) {
    if (cones_[blk] != ConeKind::kPsd) continue;
    if (dims_[blk] == 1) {
      out(offset(blk)) = std::max(0.0, x(offset(blk)));
      continue;
    }
    set_block_value(out, blk, project_psd(block_value(x, blk)));
  }
  return out;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kMaxIter: return "max-iter";
    case SolveStatus::kInfeasibleSuspected: return "infeasible-suspected";
  }
  return "unknown";
}

namespace {

// Projection onto {x : A x = b}. Uses a sparse factorization of A A^T when A
// has full row rank and a dense pseudo-inverse otherwise.
class AffineProjector {
 public:
  AffineProjector(const SparseRMatrix& a, const RVector& b) : a_(a), b_(b) {
    if (a.rows() == 0) return;
    const SparseRMatrix k = a * a.transpose();
    ldlt_.compute(k);
    bool ok = ldlt_.info() == Eigen::Success;
    if (ok) {
      const RVector diag = ldlt_.vectorD();
      const double top = diag.cwiseAbs().maxCoeff();
      ok = top > 0.0 && diag.minCoeff() > 1e-11 * top;
    }
    if (!ok) {
      dense_ = true;
      Eigen::CompleteOrthogonalDecomposition<RMatrix> cod{RMatrix(a)};
      cod.setThreshold(1e-12);
      pinv_ = cod.pseudoInverse();
    }
  }

  /// Minimum-norm solution of A y = r in the row space: A^+ r.
  RVector pinv(const RVector& r) const {
    if (dense_) return pinv_ * r;
    return a_.transpose() * ldlt_.solve(r);
  }
  /// (A^+)^T v.
  RVector pinv_transpose(const RVector& v) const {
    if (dense_) return pinv_.transpose() * v;
    return ldlt_.solve(a_ * v);
  }
  RVector project(const RVector& v) const {
    if (a_.rows() == 0) return v;
    return v - pinv(a_ * v - b_);
  }

 private:
  const SparseRMatrix& a_;
  const RVector& b_;
  Eigen::SimplicialLDLT<SparseRMatrix> ldlt_;
  bool dense_ = false;
  RMatrix pinv_;
};

}  // namespace

SolveReport solve(const ConicProgram& program, const SolveOptions& options) {
  const int n = program.num_vars();
  const int m = program.num_constraints();
  SolveReport report;
  report.x = RVector::Zero(n);
  report.x_cone = RVector::Zero(n);
  if (n == 0) {
    report.status = SolveStatus::kOptimal;
    return report;
  }

  SparseRMatrix a = program.sparse_constraint_matrix();
  RVector b = program.rhs();
  RVector c = program.objective();

  // Row equilibration, then objective and right-hand-side scaling.
  RVector row_norm = RVector::Zero(m);
  for (int k = 0; k < a.outerSize(); ++k) {
    for (SparseRMatrix::InnerIterator it(a, k); it; ++it) row_norm(it.row()) += it.value() * it.value();
  }
  for (int r = 0; r < m; ++r) row_norm(r) = row_norm(r) > 0.0 ? 1.0 / std::sqrt(row_norm(r)) : 1.0;
  a = row_norm.asDiagonal() * a;
  b = row_norm.cwiseProduct(b);
  const double c_scale = c.size() && c.cwiseAbs().maxCoeff() > 0.0 ? c.cwiseAbs().maxCoeff() : 1.0;
  const double b_scale = std::max(1.0, m ? b.cwiseAbs().maxCoeff() : 0.0);
  c /= c_scale;
  b /= b_scale;

  const AffineProjector proj(a, b);
  RVector x0 = RVector::Zero(n);
  if (m > 0) {
    x0 = proj.pinv(b);
    if ((a * x0 - b).norm() > 1e-8 * (1.0 + b.norm())) {
      report.status = SolveStatus::kInfeasibleSuspected;
      report.primal_residual = (a * x0 - b).norm();
      return report;
    }
  }
  auto project_affine = [&](const RVector& v) -> RVector { return proj.project(v); };

  const double rho = options.step;
  const double alpha = options.relaxation;
  RVector z = RVector::Zero(n);
  RVector u = RVector::Zero(n);
  RVector x = x0;
  int it = 0;
  bool done = false;
  for (it = 1; it <= options.max_iter && !done; ++it) {
    x = project_affine(z - u - c / rho);
    const RVector xh = alpha * x + (1.0 - alpha) * z;
    z = program.project_cone(xh + u);
    u += xh - z;

    if (it % options.check_every != 0 && it != options.max_iter) continue;
    const RVector s = -rho * u;
    RVector y = RVector::Zero(m);
    RVector dual_gap_vec = c - s;
    if (m > 0) {
      y = proj.pinv_transpose(c - s);
      dual_gap_vec -= a.transpose() * y;
    }
    const double pval = c.dot(x);
    const double dval = m > 0 ? b.dot(y) : 0.0;
    const double rp = (x - z).norm() / (1.0 + std::max(x.norm(), z.norm()));
    const double rd = dual_gap_vec.norm() / (1.0 + c.norm());
    const double gap = std::abs(pval - dval) / (1.0 + std::abs(pval) + std::abs(dval));
    report.primal_value = pval * c_scale * b_scale;
    report.dual_value = dval * c_scale * b_scale;
    report.primal_residual = rp;
    report.dual_residual = rd;
    if (rp <= options.tol && rd <= options.tol && gap <= options.tol) {
      report.status = SolveStatus::kOptimal;
      done = true;
    } else if (u.norm() > 1e12 || !std::isfinite(u.norm())) {
      report.status = SolveStatus::kInfeasibleSuspected;
      done = true;
    }
  }
  report.iterations = it - 1;
  report.x = x * b_scale;
  report.x_cone = z * b_scale;
  return report;
}

}  // namespace regop
