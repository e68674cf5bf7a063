#include "regop/cp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace regop {

CMatrix KrausSet::apply(const CMatrix& x) const {
  if (ops.empty()) throw std::invalid_argument("empty Kraus set");
  CMatrix out = CMatrix::Zero(ops.front().rows(), ops.front().rows());
  for (const CMatrix& y : ops) out += y * x * y.adjoint();
  return out;
}

LinearMap::LinearMap(int in_dim, int out_dim, CMatrix choi)
    : in_(in_dim), out_(out_dim), choi_(std::move(choi)) {
  if (in_dim < 1 || out_dim < 1) throw std::invalid_argument("map dimensions must be positive");
  if (choi_.rows() != in_dim * out_dim || choi_.cols() != in_dim * out_dim) {
    throw std::invalid_argument("Choi matrix has size " + std::to_string(choi_.rows()) + "x" +
                                std::to_string(choi_.cols()) + ", expected " +
                                std::to_string(in_dim * out_dim));
  }
}

LinearMap LinearMap::from_action(int in_dim, int out_dim,
                                 const std::function<CMatrix(const CMatrix&)>& action) {
  CMatrix c(in_dim * out_dim, in_dim * out_dim);
  for (int i = 0; i < in_dim; ++i) {
    for (int j = 0; j < in_dim; ++j) {
      const CMatrix img = action(unit(in_dim, i, j));
      if (img.rows() != out_dim || img.cols() != out_dim) {
        throw std::invalid_argument("action returned a matrix of the wrong size");
      }
      c.block(i * out_dim, j * out_dim, out_dim, out_dim) = img;
    }
  }
  return LinearMap(in_dim, out_dim, std::move(c));
}

LinearMap LinearMap::identity(int n) {
  return from_action(n, n, [](const CMatrix& x) { return x; });
}

LinearMap LinearMap::transpose(int n) {
  return from_action(n, n, [](const CMatrix& x) { return CMatrix(x.transpose()); });
}

LinearMap LinearMap::conjugation(const CMatrix& v) {
  LinearMap u = two_sided(v, v.adjoint());
  u.cache_kraus(KrausSet{{v}});
  return u;
}

LinearMap LinearMap::two_sided(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.cols() || a.cols() != b.rows()) {
    throw std::invalid_argument("two_sided: incompatible factor shapes");
  }
  return from_action(static_cast<int>(a.cols()), static_cast<int>(a.rows()),
                     [&](const CMatrix& x) { return CMatrix(a * x * b); });
}

LinearMap LinearMap::zero(int in_dim, int out_dim) {
  return LinearMap(in_dim, out_dim, CMatrix::Zero(in_dim * out_dim, in_dim * out_dim));
}

LinearMap LinearMap::diagonal(const CMatrix& m) {
  const int out = static_cast<int>(m.rows()), in = static_cast<int>(m.cols());
  return from_action(in, out, [&](const CMatrix& x) {
    CMatrix y = CMatrix::Zero(out, out);
    for (int a = 0; a < out; ++a) {
      for (int b = 0; b < in; ++b) y(a, a) += m(a, b) * x(b, b);
    }
    return y;
  });
}

CMatrix LinearMap::apply(const CMatrix& x) const {
  if (x.rows() != in_ || x.cols() != in_) throw std::invalid_argument("input has the wrong size");
  CMatrix out = CMatrix::Zero(out_, out_);
  for (int i = 0; i < in_; ++i) {
    for (int j = 0; j < in_; ++j) {
      if (x(i, j) != 0.0) out += x(i, j) * choi_.block(i * out_, j * out_, out_, out_);
    }
  }
  return out;
}

CMatrix LinearMap::apply_hs_adjoint(const CMatrix& y) const {
  if (y.rows() != out_ || y.cols() != out_) throw std::invalid_argument("input has the wrong size");
  CMatrix out(in_, in_);
  for (int i = 0; i < in_; ++i) {
    for (int j = 0; j < in_; ++j) {
      out(i, j) = choi_.block(i * out_, j * out_, out_, out_).cwiseProduct(y.conjugate()).sum();
      out(i, j) = std::conj(out(i, j));
    }
  }
  return out;
}

CMatrix LinearMap::image_of_identity() const { return partial_trace_outer(choi_, in_, out_); }

CMatrix LinearMap::adjoint_image_of_identity() const {
  return partial_trace_inner(choi_, in_, out_);
}

LinearMap LinearMap::operator+(const LinearMap& other) const {
  if (in_ != other.in_ || out_ != other.out_) throw std::invalid_argument("map shapes differ");
  return LinearMap(in_, out_, choi_ + other.choi_);
}

LinearMap LinearMap::operator-(const LinearMap& other) const {
  if (in_ != other.in_ || out_ != other.out_) throw std::invalid_argument("map shapes differ");
  return LinearMap(in_, out_, choi_ - other.choi_);
}

LinearMap LinearMap::operator*(Complex s) const { return LinearMap(in_, out_, choi_ * s); }

LinearMap compose(const LinearMap& u, const LinearMap& v) {
  if (v.out_dim() != u.in_dim()) throw std::invalid_argument("compose: dimension mismatch");
  return LinearMap::from_action(v.in_dim(), u.out_dim(),
                                [&](const CMatrix& x) { return u.apply(v.apply(x)); });
}

BlockMatrix apply_outer(const LinearMap& u, const BlockMatrix& x) {
  const int n = u.in_dim(), m = u.out_dim(), k = x.inner;
  if (x.outer != n) throw std::invalid_argument("apply_outer: outer dimension mismatch");
  const CMatrix body = x.canonical();
  CMatrix out(m * k, m * k);
  CMatrix slice(n, n);
  for (int s = 0; s < k; ++s) {
    for (int t = 0; t < k; ++t) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) slice(i, j) = body(i * k + s, j * k + t);
      }
      const CMatrix img = u.apply(slice);
      for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) out(a * k + s, b * k + t) = img(a, b);
      }
    }
  }
  return BlockMatrix(m, k, out);
}

BlockMatrix apply_inner(const LinearMap& w, const BlockMatrix& x) {
  const int n = x.outer, m = w.in_dim(), k = w.out_dim();
  if (x.inner != m) throw std::invalid_argument("apply_inner: inner dimension mismatch");
  const CMatrix body = x.canonical();
  CMatrix out(n * k, n * k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out.block(i * k, j * k, k, k) = w.apply(body.block(i * m, j * m, m, m));
  }
  return BlockMatrix(n, k, out);
}

LinearMap tensor_identity(const LinearMap& u, int k) {
  const int n = u.in_dim(), m = u.out_dim();
  return LinearMap::from_action(n * k, m * k, [&](const CMatrix& x) {
    return apply_outer(u, BlockMatrix(n, k, x)).body;
  });
}

LinearMap identity_tensor(int k, const LinearMap& u) {
  const int n = u.in_dim(), m = u.out_dim();
  return LinearMap::from_action(k * n, k * m, [&](const CMatrix& x) {
    return apply_inner(u, BlockMatrix(k, n, x)).body;
  });
}

LinearMap sandwich(const CMatrix& lo, const LinearMap& u, const CMatrix& li, const CMatrix& ri,
                   const CMatrix& ro) {
  return LinearMap::from_action(static_cast<int>(li.cols()), static_cast<int>(lo.rows()),
                                [&](const CMatrix& x) {
                                  return CMatrix(lo * u.apply(li * x * ri) * ro);
                                });
}

CMatrix choi(const LinearMap& u) { return u.choi(); }

CpCheck is_cp(const LinearMap& u, double tol) {
  CpCheck out;
  out.margin = lambda_min(hermitian_part(u.choi()));
  out.completely_positive = out.margin >= -tol && is_hermitian(u.choi(), std::max(tol, kHermitianTol));
  return out;
}

KrausSet kraus(const LinearMap& u, double tol) {
  const CpCheck check = is_cp(u, tol);
  if (!check.completely_positive) {
    throw std::invalid_argument("map is not completely positive (Choi margin " +
                                std::to_string(check.margin) + ")");
  }
  const int n = u.in_dim(), m = u.out_dim();
  const HermitianEig e = hermitian_eig_unchecked(u.choi());
  const double top = std::max(e.values(0), 0.0);
  KrausSet out;
  for (int k = 0; k < e.values.size(); ++k) {
    const double lam = e.values(k);
    if (lam <= 0.0 || lam < tol || lam < 1e-10 * top) break;
    CMatrix y(m, n);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < m; ++a) y(a, i) = std::sqrt(lam) * e.vectors(i * m + a, k);
    }
    out.ops.push_back(std::move(y));
  }
  if (out.ops.empty()) out.ops.push_back(CMatrix::Zero(m, n));
  return out;
}

LinearMap adjoint_map(const LinearMap& u) {
  return LinearMap(u.out_dim(), u.in_dim(), swap_factors(u.choi(), u.in_dim(), u.out_dim()));
}

LinearMap AffineMapFamily::at(const std::vector<double>& t) const {
  if (t.size() != directions.size()) throw std::invalid_argument("coefficient count mismatch");
  CMatrix c = base.choi();
  for (std::size_t r = 0; r < t.size(); ++r) c += t[r] * directions[r].choi();
  return LinearMap(base.in_dim(), base.out_dim(), std::move(c));
}

namespace {

// Minimizes the S_1 cb norm over base + sum_r t_r d_r by the block-matrix
// characterization: t >= |Tr_out Y0|, |Tr_out Y1| with [[Y0, -J], [-J^*, Y1]] >= 0.
CbNormResult diamond_family(const AffineMapFamily& family, const SolveOptions& options) {
  const int n = family.base.in_dim(), m = family.base.out_dim(), d = n * m;
  const int nr = static_cast<int>(family.directions.size());
  CbNormResult result;
  if (family.base.choi().norm() == 0.0 && nr == 0) {
    result.status = SolveStatus::kOptimal;
    return result;
  }

  ConicProgram prog;
  const int z = prog.add_block(2 * d, ConeKind::kPsd);
  const int s0 = prog.add_block(n, ConeKind::kPsd);
  const int s1 = prog.add_block(n, ConeKind::kPsd);
  const int tb = prog.add_block(1, ConeKind::kFree);
  std::vector<int> coef;
  for (int r = 0; r < nr; ++r) coef.push_back(prog.add_block(1, ConeKind::kFree));
  prog.add_objective(prog.re(tb, 0, 0));

  const CMatrix& j0 = family.base.choi();
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      LinearForm re = prog.re(z, a, d + b), im = prog.im(z, a, d + b);
      for (int r = 0; r < nr; ++r) {
        const Complex v = family.directions[r].choi()(a, b);
        if (v.real() != 0.0) re.add(prog.re(coef[r], 0, 0), v.real());
        if (v.imag() != 0.0) im.add(prog.re(coef[r], 0, 0), v.imag());
      }
      prog.add_equality(re, -j0(a, b).real());
      prog.add_equality(im, -j0(a, b).imag());
    }
  }
  for (int k = 0; k < 2; ++k) {
    const int s = k == 0 ? s0 : s1;
    const int off = k * d;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        LinearForm re = prog.re(s, i, j);
        for (int c = 0; c < m; ++c) re.add(prog.re(z, off + i * m + c, off + j * m + c));
        if (i == j) re.add(prog.re(tb, 0, 0), -1.0);
        prog.add_equality(re, 0.0);
        if (i != j) {
          LinearForm im = prog.im(s, i, j);
          for (int c = 0; c < m; ++c) im.add(prog.im(z, off + i * m + c, off + j * m + c));
          prog.add_equality(im, 0.0);
        }
      }
    }
  }

  const SolveReport rep = solve(prog, options);
  result.status = rep.status;
  result.iterations = rep.iterations;
  result.solver_value = rep.primal_value;
  for (int r = 0; r < nr; ++r) result.coefficients.push_back(prog.block_value(rep.x, coef[r])(0, 0).real());

  // Certificate: exact off-diagonal block, diagonal blocks shifted into the cone.
  const CMatrix j = family.at(result.coefficients).choi();
  CMatrix zz = prog.block_value(rep.x_cone, z);
  zz.block(0, d, d, d) = -j;
  zz.block(d, 0, d, d) = -j.adjoint();
  const double shift = std::max(0.0, -lambda_min(zz));
  const CMatrix y0 = zz.block(0, 0, d, d) + shift * identity(d);
  const CMatrix y1 = zz.block(d, d, d, d) + shift * identity(d);
  const double a = std::max(0.0, lambda_max(partial_trace_inner(y0, n, m)));
  const double b = std::max(0.0, lambda_max(partial_trace_inner(y1, n, m)));
  result.value = std::sqrt(a * b);
  return result;
}

AffineMapFamily adjoint_family(const AffineMapFamily& family) {
  AffineMapFamily out{adjoint_map(family.base), {}};
  for (const LinearMap& d : family.directions) out.directions.push_back(adjoint_map(d));
  return out;
}

}  // namespace

CbNormResult cb_norm_trace_class(const LinearMap& u, const SolveOptions& options) {
  return diamond_family(AffineMapFamily{u, {}}, options);
}

CbNormResult cb_norm(const LinearMap& u, const SolveOptions& options) {
  return cb_norm_trace_class(adjoint_map(u), options);
}

CbNormResult min_cb_norm_trace_class(const AffineMapFamily& family, const SolveOptions& options) {
  return diamond_family(family, options);
}

CbNormResult min_cb_norm(const AffineMapFamily& family, const SolveOptions& options) {
  return diamond_family(adjoint_family(family), options);
}

double schatten_ratio_lower(const LinearMap& u, const PExponent& p_in, const PExponent& p_out,
                            const SchattenSearchOptions& options,
                            const std::vector<CMatrix>& extra_starts, CMatrix* best_input) {
  const int n = u.in_dim();
  auto ratio = [&](const CMatrix& x) {
    const double den = schatten_norm(x, p_in);
    return den > 0.0 ? schatten_norm(u.apply(x), p_out) / den : 0.0;
  };
  auto normalize = [&](const CMatrix& x) {
    const double s = schatten_norm(x, p_in);
    return s > 0.0 ? CMatrix(x / s) : x;
  };

  std::vector<CMatrix> starts = extra_starts;
  starts.push_back(identity(n));
  Rng rng(options.seed ^ 0x5851f42d4c957f2dULL);
  for (int r = 0; r < options.restarts; ++r) starts.push_back(rng.gaussian(n, n));

  double best = 0.0;
  if (best_input) *best_input = identity(n);
  for (const CMatrix& s0 : starts) {
    if (s0.rows() != n || s0.cols() != n || s0.norm() == 0.0) continue;
    CMatrix x = normalize(s0);
    double value = ratio(x);
    for (int step = 0; step < options.max_steps; ++step) {
      const CMatrix fx = u.apply(x);
      if (fx.norm() == 0.0) break;
      // Ascent direction: the HS-adjoint image of the norming element.
      const CMatrix h = u.apply_hs_adjoint(schatten_norming(fx, p_out));
      // Maximizer of the linearization on the unit ball; monotone for convex objectives.
      CMatrix cand = schatten_norming(h, p_in.conjugate());
      double cv = ratio(cand);
      if (cv <= value * (1.0 + 1e-13)) {
        cv = value;
        for (double eta = 1.0; eta > 1e-6; eta *= 0.5) {
          const CMatrix trial = normalize(x + eta * h);
          const double tv = ratio(trial);
          if (tv > value * (1.0 + 1e-13)) {
            cand = trial;
            cv = tv;
            break;
          }
        }
        if (cv <= value) break;
      }
      x = cand;
      value = cv;
    }
    if (value > best) {
      best = value;
      if (best_input) *best_input = x;
    }
  }
  return best;
}

NormBracket sp_op_norm(const LinearMap& u, const PExponent& p, const SchattenSearchOptions& options) {
  NormBracket out;
  out.lower = schatten_ratio_lower(u, p, p, options);
  out.lower_witness = "optimized input ratio";
  const double th = p.theta();
  if (is_cp(u).completely_positive) {
    const double a = operator_norm(u.image_of_identity());
    const double b = operator_norm(u.adjoint_image_of_identity());
    out.upper = std::pow(a, 1.0 - th) * std::pow(b, th);
    out.upper_witness = "interpolation of the CP endpoint norms";
  } else {
    const double a = th < 1.0 ? cb_norm(u).value : 1.0;
    const double b = th > 0.0 ? cb_norm_trace_class(u).value : 1.0;
    out.upper = std::pow(a, 1.0 - th) * std::pow(b, th);
    out.upper_witness = "interpolation of the cb endpoint norms";
  }
  return out;
}

LinearMap random_map(Rng& rng, int in_dim, int out_dim) {
  const int d = in_dim * out_dim;
  return LinearMap(in_dim, out_dim, rng.gaussian(d, d) / std::sqrt(static_cast<double>(d)));
}

LinearMap random_cp_map(Rng& rng, int in_dim, int out_dim, int kraus_rank) {
  const int d = in_dim * out_dim;
  const int r = kraus_rank > 0 ? kraus_rank : d;
  const CMatrix w = rng.gaussian(d, r) / std::sqrt(static_cast<double>(d));
  return LinearMap(in_dim, out_dim, w * w.adjoint());
}

}  // namespace regop
