#include "regop/linalg.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace regop {

PExponent::PExponent(double p) : p_(p), infinite_(false) {
  if (std::isnan(p) || p < 1.0) {
    throw std::invalid_argument("exponent must lie in [1, inf], got " + std::to_string(p));
  }
  if (std::isinf(p)) {
    p_ = 0.0;
    infinite_ = true;
  }
}

double PExponent::value() const {
  return infinite_ ? std::numeric_limits<double>::infinity() : p_;
}

PExponent PExponent::conjugate() const {
  if (infinite_) return PExponent(1.0);
  if (p_ == 1.0) return infinity();
  return PExponent(p_ / (p_ - 1.0));
}

PExponent PExponent::times(double c) const {
  if (infinite_) return infinity();
  return PExponent(c * p_);
}

std::string PExponent::to_string() const {
  if (infinite_) return "inf";
  std::ostringstream os;
  os.precision(12);
  os << p_;
  return os.str();
}

PExponent parse_exponent(const std::string& text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "inf" || lower == "infinity") return PExponent::infinity();
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse exponent '" + text + "'");
  }
  if (used != text.size()) throw std::invalid_argument("cannot parse exponent '" + text + "'");
  return PExponent(value);
}

BlockMatrix::BlockMatrix(int outer_dim, int inner_dim, CMatrix b, FactorOrder o)
    : outer(outer_dim), inner(inner_dim), body(std::move(b)), order(o) {
  if (outer < 1 || inner < 1) throw std::invalid_argument("block dimensions must be positive");
  if (body.rows() != outer * inner || body.cols() != outer * inner) {
    throw std::invalid_argument("block body must be (outer*inner) square");
  }
}

BlockMatrix BlockMatrix::zero(int outer_dim, int inner_dim) {
  const int d = outer_dim * inner_dim;
  return BlockMatrix(outer_dim, inner_dim, CMatrix::Zero(d, d));
}

BlockMatrix BlockMatrix::elementary(const CMatrix& a, const CMatrix& e) {
  return BlockMatrix(static_cast<int>(a.rows()), static_cast<int>(e.rows()), kron(a, e));
}

CMatrix BlockMatrix::canonical() const {
  if (order == FactorOrder::kOuterInner) return body;
  return swap_factors(body, inner, outer);
}

CMatrix BlockMatrix::block(int i, int j) const {
  const CMatrix c = canonical();
  return c.block(i * inner, j * inner, inner, inner);
}

BlockMatrix flip_factors(const BlockMatrix& x) {
  BlockMatrix out = x;
  if (x.order == FactorOrder::kOuterInner) {
    out.body = swap_factors(x.body, x.outer, x.inner);
    out.order = FactorOrder::kInnerOuter;
  } else {
    out.body = swap_factors(x.body, x.inner, x.outer);
    out.order = FactorOrder::kOuterInner;
  }
  return out;
}

BlockMatrix exchange_roles(const BlockMatrix& x) {
  return BlockMatrix(x.inner, x.outer, swap_factors(x.canonical(), x.outer, x.inner));
}

bool is_hermitian(const CMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

CMatrix hermitian_part(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

HermitianEig hermitian_eig_unchecked(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(a));
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");
  const int n = static_cast<int>(a.rows());
  HermitianEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  // Eigen returns ascending order.
  for (int k = 0; k < n; ++k) {
    out.values(k) = solver.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

HermitianEig hermitian_eig(const CMatrix& a) {
  if (!is_hermitian(a)) {
    const double dev = a.rows() == a.cols() ? (a - a.adjoint()).cwiseAbs().maxCoeff() : -1.0;
    throw std::invalid_argument("hermitian_eig: input is not Hermitian (max |A - A*| = " +
                                std::to_string(dev) + ")");
  }
  return hermitian_eig_unchecked(a);
}

RVector singular_values(const CMatrix& a) {
  if (a.size() == 0) return RVector();
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues();
}

double schatten_norm(const CMatrix& a, const PExponent& p) {
  const RVector s = singular_values(a);
  if (s.size() == 0) return 0.0;
  const double top = s.maxCoeff();
  if (top == 0.0) return 0.0;
  if (p.is_infinite()) return top;
  const double q = p.value();
  double acc = 0.0;
  for (int i = 0; i < s.size(); ++i) acc += std::pow(s(i) / top, q);
  return top * std::pow(acc, 1.0 / q);
}

double operator_norm(const CMatrix& a) { return schatten_norm(a, PExponent::infinity()); }

double frobenius_norm(const CMatrix& a) { return a.norm(); }

CMatrix schatten_norming(const CMatrix& a, const PExponent& p) {
  CMatrix g = CMatrix::Zero(a.rows(), a.cols());
  if (a.size() == 0) return g;
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& s = svd.singularValues();
  const double top = s.size() ? s(0) : 0.0;
  if (top == 0.0) return g;
  if (p.is_infinite()) {
    return svd.matrixU().col(0) * svd.matrixV().col(0).adjoint();
  }
  const double q = p.value();
  RVector w(s.size());
  double norm_q = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    const double r = s(i) / top;
    if (s(i) <= kRankCutoff * top) {
      w(i) = 0.0;
    } else {
      w(i) = (q == 1.0) ? 1.0 : std::pow(r, q - 1.0);
    }
    norm_q += std::pow(r, q);
  }
  // g = U diag(s^{q-1}) V^* / |s|_q^{q-1}, computed in units of top.
  const double denom = (q == 1.0) ? 1.0 : std::pow(norm_q, (q - 1.0) / q);
  g = svd.matrixU() * (w / denom).cast<Complex>().asDiagonal() * svd.matrixV().adjoint();
  return g;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CMatrix identity(int n) { return CMatrix::Identity(n, n); }

CMatrix unit(int n, int i, int j) {
  CMatrix e = CMatrix::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

CMatrix partial_trace_inner(const CMatrix& m, int outer, int inner) {
  CMatrix out = CMatrix::Zero(outer, outer);
  for (int i = 0; i < outer; ++i) {
    for (int j = 0; j < outer; ++j) {
      Complex acc = 0.0;
      for (int s = 0; s < inner; ++s) acc += m(i * inner + s, j * inner + s);
      out(i, j) = acc;
    }
  }
  return out;
}

CMatrix partial_trace_outer(const CMatrix& m, int outer, int inner) {
  CMatrix out = CMatrix::Zero(inner, inner);
  for (int i = 0; i < outer; ++i) out += m.block(i * inner, i * inner, inner, inner);
  return out;
}

CMatrix swap_factors(const CMatrix& m, int first, int second) {
  const int d = first * second;
  std::vector<int> perm(d);
  for (int a = 0; a < first; ++a) {
    for (int b = 0; b < second; ++b) perm[b * first + a] = a * second + b;
  }
  CMatrix out(d, d);
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) out(r, c) = m(perm[r], perm[c]);
  }
  return out;
}

Complex trace_pair(const BlockMatrix& z) {
  if (z.outer != z.inner) {
    throw std::invalid_argument("trace_pair requires equal outer and inner dimensions");
  }
  const CMatrix c = z.canonical();
  const int m = z.inner;
  Complex acc = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) acc += c(i * m + i, j * m + j);
  }
  return acc;
}

CMatrix hermitian_function(const CMatrix& a, const std::function<double(double)>& f) {
  const HermitianEig e = hermitian_eig_unchecked(a);
  RVector v(e.values.size());
  for (int i = 0; i < v.size(); ++i) v(i) = f(e.values(i));
  return e.vectors * v.cast<Complex>().asDiagonal() * e.vectors.adjoint();
}

CMatrix psd_power(const CMatrix& a, double s) {
  const HermitianEig e = hermitian_eig_unchecked(a);
  const double top = std::max(0.0, e.values.size() ? e.values(0) : 0.0);
  RVector v(e.values.size());
  for (int i = 0; i < v.size(); ++i) {
    const double lam = e.values(i);
    if (lam <= kRankCutoff * top || lam <= 0.0) {
      v(i) = (s == 0.0 && lam > 0.0) ? 1.0 : 0.0;
    } else {
      v(i) = std::pow(lam, s);
    }
  }
  return e.vectors * v.cast<Complex>().asDiagonal() * e.vectors.adjoint();
}

CMatrix project_psd(const CMatrix& a) {
  return hermitian_function(a, [](double x) { return std::max(x, 0.0); });
}

double lambda_min(const CMatrix& a) {
  const HermitianEig e = hermitian_eig_unchecked(a);
  return e.values(e.values.size() - 1);
}

double lambda_max(const CMatrix& a) { return hermitian_eig_unchecked(a).values(0); }

CMatrix Rng::gaussian(int rows, int cols) {
  CMatrix g(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) g(i, j) = Complex(normal(), normal()) / std::sqrt(2.0);
  }
  return g;
}

CMatrix Rng::hermitian(int n) { return hermitian_part(gaussian(n, n)); }

CMatrix Rng::unitary(int n) {
  const CMatrix g = gaussian(n, n);
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k) {
    const double mag = std::abs(r(k, k));
    if (mag > 0.0) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

CMatrix Rng::positive_definite(int n, double eps) {
  const CMatrix g = gaussian(n, n);
  return g * g.adjoint() + eps * identity(n);
}

}  // namespace regop
