#include "regop/vnorm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace regop {

namespace {

// argmin_{l >= 0} l^p + (c/2)(l - v)^2
double prox_power(double v, double p, double c) {
  if (v <= 0.0) return 0.0;
  if (p == 1.0) return std::max(v - 1.0 / c, 0.0);
  double lo = 0.0, hi = v;
  for (int it = 0; it < 100 && hi - lo > 1e-16 * v; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double h = p * std::pow(mid, p - 1.0) + c * (mid - v);
    (h > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

CMatrix prox_schatten_power(const CMatrix& v, double p, double c) {
  return hermitian_function(v, [p, c](double x) { return prox_power(x, p, c); });
}

// Builds an exact factorization x = (a (x) I) y (b (x) I) with a = A^{1/2},
// b = B^{1/2} after a relative ridge on A and B.
Factorization factor_from_weights(const CMatrix& x, int n, int m, const CMatrix& a_weight,
                                  const CMatrix& b_weight, double ridge, const PExponent& p) {
  auto regularize = [&](const CMatrix& w) {
    CMatrix h = project_psd(w);
    const double top = std::max(lambda_max(h), 0.0);
    if (top <= 0.0) return identity(n);
    return CMatrix(h + ridge * top * identity(n));
  };
  const CMatrix aw = regularize(a_weight);
  const CMatrix bw = regularize(b_weight);
  Factorization f;
  f.a = psd_power(aw, 0.5);
  f.b = psd_power(bw, 0.5);
  const CMatrix ainv = psd_power(aw, -0.5);
  const CMatrix binv = psd_power(bw, -0.5);
  const CMatrix eye = identity(m);
  f.y = BlockMatrix(n, m, kron(ainv, eye) * x * kron(binv, eye));
  f.value = schatten_norm(f.a, p.times(2.0)) * operator_norm(f.y.body) *
            schatten_norm(f.b, p.times(2.0));
  return f;
}

struct DualBound {
  double lower = 0.0;
  CMatrix subgradient;
};

// Weak-duality bound from a PSD multiplier of the block LMI.
DualBound dual_lower(const CMatrix& multiplier, const CMatrix& x, int n, int m, const PExponent& p) {
  const int d = n * m;
  DualBound out;
  out.subgradient = CMatrix::Zero(d, d);
  const CMatrix z = project_psd(multiplier);
  const CMatrix z21 = z.block(d, 0, d, d);
  const Complex t21 = (z21 * x).trace();
  const double pair = 2.0 * std::abs(t21);
  if (pair <= 0.0) return out;
  const CMatrix p1 = partial_trace_inner(z.block(0, 0, d, d), n, m);
  const CMatrix p2 = partial_trace_inner(z.block(d, d, d, d), n, m);
  if (p.is_one()) {
    const double lam = std::max(lambda_max(p1), lambda_max(p2));
    if (lam <= 0.0) return out;
    out.lower = pair / (2.0 * lam);
  } else {
    const double q = p.value();
    const double qc = p.conjugate().value();
    double c = 0.0;
    for (const CMatrix* pm : {&p1, &p2}) {
      const RVector ev = hermitian_eig_unchecked(*pm).values;
      for (int i = 0; i < ev.size(); ++i) c += std::pow(std::max(ev(i), 0.0) / q, qc);
    }
    if (c <= 0.0) return out;
    const double g = std::pow(pair / (q * c), q - 1.0) * pair / q;
    out.lower = std::pow(g / 2.0, 1.0 / q);
  }
  const Complex phase = std::conj(t21) / std::abs(t21);
  out.subgradient = (z21 * phase * (out.lower / std::abs(t21))).adjoint();
  return out;
}

CMatrix lmi(const CMatrix& a, const CMatrix& b, const CMatrix& x, int m) {
  const int d = static_cast<int>(x.rows());
  CMatrix out(2 * d, 2 * d);
  const CMatrix eye = identity(m);
  out.block(0, 0, d, d) = kron(a, eye);
  out.block(0, d, d, d) = x;
  out.block(d, 0, d, d) = x.adjoint();
  out.block(d, d, d, d) = kron(b, eye);
  return out;
}

CVector random_unit(Rng& rng, int m) {
  CVector v = rng.gaussian(m, 1).col(0);
  return v / v.norm();
}

}  // namespace

CMatrix Factorization::reconstruct() const {
  const CMatrix eye = identity(y.inner);
  return kron(a, eye) * y.canonical() * kron(b, eye);
}

double contraction_witness_lower(const CMatrix& body, int outer, int inner, const PExponent& p,
                                 int restarts, std::uint64_t seed, CMatrix* subgradient) {
  const int n = outer, m = inner;
  auto block = [&](int i, int j) { return body.block(i * m, j * m, m, m); };
  auto collapse = [&](const CVector& xi, const CVector& eta) {
    CMatrix w(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) w(i, j) = xi.dot(block(i, j) * eta);
    }
    return w;
  };

  std::vector<std::pair<CVector, CVector>> starts;
  {
    // Top singular pair of the largest block.
    int bi = 0, bj = 0;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double v = block(i, j).norm();
        if (v > best) best = v, bi = i, bj = j;
      }
    }
    Eigen::JacobiSVD<CMatrix> svd(block(bi, bj), Eigen::ComputeFullU | Eigen::ComputeFullV);
    starts.emplace_back(svd.matrixU().col(0), svd.matrixV().col(0));
  }
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (int r = 0; r < restarts; ++r) starts.emplace_back(random_unit(rng, m), random_unit(rng, m));

  double best = 0.0;
  for (auto [xi, eta] : starts) {
    double value = 0.0;
    for (int sweep = 0; sweep < 25; ++sweep) {
      const CMatrix w = collapse(xi, eta);
      const double cur = schatten_norm(w, p);
      if (cur > best) {
        best = cur;
        if (subgradient) {
          const CMatrix g = schatten_norming(w, p);
          CMatrix gb = CMatrix::Zero(n * m, n * m);
          for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) gb.block(i * m, j * m, m, m) = g(i, j) * xi * eta.adjoint();
          }
          *subgradient = gb;
        }
      }
      if (sweep > 0 && cur <= value * (1.0 + 1e-14)) break;
      value = cur;
      const CMatrix g = schatten_norming(w, p);
      CMatrix acc = CMatrix::Zero(m, m);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) acc += std::conj(g(i, j)) * block(i, j);
      }
      if (acc.norm() == 0.0) break;
      Eigen::JacobiSVD<CMatrix> svd(acc, Eigen::ComputeFullU | Eigen::ComputeFullV);
      xi = svd.matrixU().col(0);
      eta = svd.matrixV().col(0);
    }
  }
  return best;
}

VNormResult vnorm(const BlockMatrix& xin, const PExponent& p, const VNormOptions& options) {
  const int n = xin.outer, m = xin.inner, d = n * m;
  const CMatrix x = xin.canonical();
  VNormResult result;
  result.subgradient = CMatrix::Zero(d, d);
  result.factorization = Factorization{identity(n), BlockMatrix(n, m, x), identity(n), 0.0};

  const double opnorm = operator_norm(x);
  if (opnorm == 0.0) {
    result.bracket.lower_witness = "zero";
    result.bracket.upper_witness = "zero";
    result.bracket.factorization = result.factorization;
    return result;
  }
  if (p.is_infinite()) {
    result.factorization.value = opnorm;
    result.bracket.lower = result.bracket.upper = opnorm;
    result.bracket.lower_witness = "operator norm";
    result.bracket.upper_witness = "trivial factorization a = b = I";
    result.bracket.factorization = result.factorization;
    result.subgradient = schatten_norming(x, p);
    return result;
  }

  // Lower bounds (i) and (ii).
  double lower = std::pow(static_cast<double>(m), -p.theta()) * schatten_norm(x, p);
  std::string lower_witness = "flat Schatten bound";
  CMatrix subgradient = schatten_norming(x, p) * std::pow(static_cast<double>(m), -p.theta());
  {
    CMatrix g;
    const double w = contraction_witness_lower(x, n, m, p, options.restarts, options.seed, &g);
    if (w > lower) {
      lower = w;
      lower_witness = "contraction witness M_m -> C";
      subgradient = g;
    }
  }

  // Upper bound candidates: trivial and polar-type weights.
  Factorization best = result.factorization;
  best.value = std::pow(static_cast<double>(n), p.theta()) * opnorm;
  std::string upper_witness = "trivial factorization a = b = I";
  const double scale = x.norm();
  const CMatrix xn = x / scale;
  CMatrix a_init = psd_power(partial_trace_inner(xn * xn.adjoint(), n, m), 0.5);
  CMatrix b_init = psd_power(partial_trace_inner(xn.adjoint() * xn, n, m), 0.5);
  {
    const Factorization f = factor_from_weights(xn, n, m, a_init, b_init, 1e-10, p);
    if (f.value * scale < best.value) {
      best = f;
      best.value *= scale;
      best.y.body *= scale;
      upper_witness = "polar-type factorization";
    }
    // Scale the start so the LMI holds.
    const double k = operator_norm(f.y.body);
    a_init = (k * f.a * f.a).eval();
    b_init = (k * f.b * f.b).eval();
  }

  // Splitting on the convex reformulation.
  const double rho = options.step;
  const double alpha = 1.5;
  const double q = p.value();
  CMatrix a = a_init, b = b_init;
  CMatrix z = lmi(a, b, xn, m);
  CMatrix u = CMatrix::Zero(2 * d, 2 * d);
  int it = 0;
  for (it = 1; it <= options.max_iter; ++it) {
    const CMatrix v = z - u;
    a = prox_schatten_power(partial_trace_inner(v.block(0, 0, d, d), n, m) / double(m), q, rho * m);
    b = prox_schatten_power(partial_trace_inner(v.block(d, d, d, d), n, m) / double(m), q, rho * m);
    const CMatrix mh = alpha * lmi(a, b, xn, m) + (1.0 - alpha) * z;
    z = project_psd(mh + u);
    u += mh - z;
    if (it % options.check_every != 0 && it != options.max_iter) continue;

    for (double ridge : {1e-10, 1e-8, 1e-6, 1e-4}) {
      Factorization f = factor_from_weights(xn, n, m, a, b, ridge, p);
      if (f.value * scale < best.value) {
        best = f;
        best.value *= scale;
        best.y.body *= scale;
        upper_witness = "factorization from splitting iterate";
      }
    }
    const DualBound db = dual_lower(-rho * u, xn, n, m, p);
    if (db.lower * scale > lower) {
      lower = db.lower * scale;
      lower_witness = "dual certificate";
      subgradient = db.subgradient;
    }
    if (best.value - lower <= options.rel_gap * best.value) break;
  }
  result.iterations = std::min(it, options.max_iter);
  result.factorization = best;
  result.subgradient = subgradient;
  result.bracket.lower = lower;
  result.bracket.upper = best.value;
  result.bracket.lower_witness = lower_witness;
  result.bracket.upper_witness = upper_witness;
  result.bracket.factorization = best;
  return result;
}

std::pair<double, Factorization> vnorm_upper(const BlockMatrix& x, const PExponent& p, int restarts,
                                             std::uint64_t seed) {
  VNormOptions opt;
  opt.restarts = restarts;
  opt.seed = seed;
  const VNormResult r = vnorm(x, p, opt);
  return {r.bracket.upper, r.factorization};
}

double vnorm_lower(const BlockMatrix& x, const PExponent& p) { return vnorm(x, p).bracket.lower; }

BlockMatrix fubini_reshuffle(const BlockMatrix& x, int h, int k) {
  if (h < 1 || k < 1 || h * k != x.outer) {
    throw std::invalid_argument("fubini_reshuffle: outer dimension " + std::to_string(x.outer) +
                                " does not factor as " + std::to_string(h) + " x " +
                                std::to_string(k));
  }
  const int e = x.inner;
  const int d = x.dim();
  const CMatrix c = x.canonical();
  // New index (kk, hh, s) reads old index (hh, kk, s).
  std::vector<int> perm(d);
  for (int hh = 0; hh < h; ++hh) {
    for (int kk = 0; kk < k; ++kk) {
      for (int s = 0; s < e; ++s) perm[(kk * h + hh) * e + s] = (hh * k + kk) * e + s;
    }
  }
  CMatrix out(d, d);
  for (int r = 0; r < d; ++r) {
    for (int col = 0; col < d; ++col) out(r, col) = c(perm[r], perm[col]);
  }
  return BlockMatrix(x.outer, e, out);
}

}  // namespace regop
