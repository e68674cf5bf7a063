#include "regop/regular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace regop {

namespace {

LinearMap hs_adjoint_map(const LinearMap& u) {
  return LinearMap(u.out_dim(), u.in_dim(),
                   swap_factors(u.choi(), u.in_dim(), u.out_dim()).conjugate());
}

double product_bound(const LinearMap& part, double theta) {
  const double a = operator_norm(part.image_of_identity());
  const double b = operator_norm(part.adjoint_image_of_identity());
  if (theta == 0.0) return a;
  if (theta == 1.0) return b;
  return std::pow(a, 1.0 - theta) * std::pow(b, theta);
}

double max_bound(const LinearMap& part) {
  return std::max(operator_norm(part.image_of_identity()),
                  operator_norm(part.adjoint_image_of_identity()));
}

// Splits a Hermitian matrix into positive and negative parts.
std::pair<CMatrix, CMatrix> jordan(const CMatrix& h) {
  const CMatrix pos = project_psd(h);
  return {pos, pos - hermitian_part(h)};
}

Decomposition make_decomposition(int n, int m, const std::array<CMatrix, 4>& c, double theta) {
  Decomposition d{{LinearMap(n, m, c[0]), LinearMap(n, m, c[1]), LinearMap(n, m, c[2]),
                   LinearMap(n, m, c[3])}};
  for (const LinearMap& part : d.parts) {
    d.certificate += product_bound(part, theta);
    d.max_objective += max_bound(part);
  }
  return d;
}

// Exact decomposition of a target Choi matrix from approximate PSD parts.
Decomposition repair(int n, int m, const CMatrix& target, std::array<CMatrix, 4> c, double theta) {
  const CMatrix h = hermitian_part(target);
  const CMatrix k = hermitian_part(Complex(0.0, -1.0) * (target - target.adjoint()) * 0.5);
  for (CMatrix& cj : c) cj = project_psd(cj);
  for (int s = 0; s < 2; ++s) {
    const CMatrix& want = s == 0 ? h : k;
    const auto [pos, neg] = jordan(want - (c[2 * s] - c[2 * s + 1]));
    c[2 * s] += pos;
    c[2 * s + 1] += neg;
  }
  return make_decomposition(n, m, c, theta);
}

Decomposition jordan_decomposition(const LinearMap& u, double theta) {
  const int n = u.in_dim(), m = u.out_dim(), d = n * m;
  std::array<CMatrix, 4> zero;
  for (CMatrix& c : zero) c = CMatrix::Zero(d, d);
  return repair(n, m, u.choi(), zero, theta);
}

struct FamilyDecomposition {
  std::vector<double> coefficients;
  std::array<CMatrix, 4> parts;
  SolveStatus status = SolveStatus::kOptimal;
};

// Decomposition program over an affine family. With empty weights the
// objective is sum_j max(|u_j(I)|, |u_j^*(I)|); otherwise
// sum_j wa_j |u_j(I)| + wb_j |u_j^*(I)|. A small trace term breaks ties.
FamilyDecomposition decomposition_program(const AffineMapFamily& family,
                                          const std::vector<std::pair<double, double>>& weights,
                                          const SolveOptions& options) {
  const int n = family.base.in_dim(), m = family.base.out_dim(), d = n * m;
  const int nr = static_cast<int>(family.directions.size());
  const bool max_mode = weights.empty();
  ConicProgram prog;
  std::array<int, 4> cb{};
  for (int& b : cb) b = prog.add_block(d, ConeKind::kPsd);
  std::vector<int> coef;
  for (int r = 0; r < nr; ++r) coef.push_back(prog.add_block(1, ConeKind::kFree));

  const double base_norm = operator_norm(family.base.choi());
  const double scale = base_norm > 0.0 ? base_norm : 1.0;
  for (int j = 0; j < 4; ++j) {
    const int so = prog.add_block(m, ConeKind::kPsd);
    const int si = prog.add_block(n, ConeKind::kPsd);
    const int ta = prog.add_block(1, ConeKind::kFree);
    const int tb = max_mode ? ta : prog.add_block(1, ConeKind::kFree);
    if (max_mode) {
      prog.add_objective(prog.re(ta, 0, 0));
    } else {
      prog.add_objective(prog.re(ta, 0, 0), weights[j].first);
      prog.add_objective(prog.re(tb, 0, 0), weights[j].second);
    }
    prog.add_objective(prog.trace_with(cb[j], identity(d)), 1e-6);
    // so = ta I - sum_i C_j[(i, .), (i, .)]
    for (int a = 0; a < m; ++a) {
      for (int b = a; b < m; ++b) {
        LinearForm re = prog.re(so, a, b);
        for (int i = 0; i < n; ++i) re.add(prog.re(cb[j], i * m + a, i * m + b));
        if (a == b) re.add(prog.re(ta, 0, 0), -1.0);
        prog.add_equality(re, 0.0);
        if (a != b) {
          LinearForm im = prog.im(so, a, b);
          for (int i = 0; i < n; ++i) im.add(prog.im(cb[j], i * m + a, i * m + b));
          prog.add_equality(im, 0.0);
        }
      }
    }
    // si = tb I - sum_a C_j[(., a), (., a)]
    for (int i = 0; i < n; ++i) {
      for (int k = i; k < n; ++k) {
        LinearForm re = prog.re(si, i, k);
        for (int a = 0; a < m; ++a) re.add(prog.re(cb[j], i * m + a, k * m + a));
        if (i == k) re.add(prog.re(tb, 0, 0), -1.0);
        prog.add_equality(re, 0.0);
        if (i != k) {
          LinearForm im = prog.im(si, i, k);
          for (int a = 0; a < m; ++a) im.add(prog.im(cb[j], i * m + a, k * m + a));
          prog.add_equality(im, 0.0);
        }
      }
    }
  }

  const CMatrix& c0 = family.base.choi();
  if (nr == 0) {
    // C_1 - C_2 = H and C_3 - C_4 = K separately, upper triangle only.
    const CMatrix h = hermitian_part(c0);
    const CMatrix k = hermitian_part(Complex(0.0, -1.0) * (c0 - c0.adjoint()) * 0.5);
    for (int s = 0; s < 2; ++s) {
      const CMatrix& want = s == 0 ? h : k;
      for (int a = 0; a < d; ++a) {
        for (int b = a; b < d; ++b) {
          LinearForm re = prog.re(cb[2 * s], a, b);
          re.add(prog.re(cb[2 * s + 1], a, b), -1.0);
          prog.add_equality(re, want(a, b).real() / scale);
          if (a != b) {
            LinearForm im = prog.im(cb[2 * s], a, b);
            im.add(prog.im(cb[2 * s + 1], a, b), -1.0);
            prog.add_equality(im, want(a, b).imag() / scale);
          }
        }
      }
    }
  } else {
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        LinearForm re = prog.re(cb[0], a, b);
        re.add(prog.re(cb[1], a, b), -1.0);
        re.add(prog.im(cb[2], a, b), -1.0);
        re.add(prog.im(cb[3], a, b), 1.0);
        LinearForm im = prog.im(cb[0], a, b);
        im.add(prog.im(cb[1], a, b), -1.0);
        im.add(prog.re(cb[2], a, b), 1.0);
        im.add(prog.re(cb[3], a, b), -1.0);
        for (int r = 0; r < nr; ++r) {
          const Complex v = family.directions[r].choi()(a, b) / scale;
          if (v.real() != 0.0) re.add(prog.re(coef[r], 0, 0), -v.real());
          if (v.imag() != 0.0) im.add(prog.re(coef[r], 0, 0), -v.imag());
        }
        prog.add_equality(re, c0(a, b).real() / scale);
        prog.add_equality(im, c0(a, b).imag() / scale);
      }
    }
  }

  const SolveReport rep = solve(prog, options);
  FamilyDecomposition out;
  out.status = rep.status;
  for (int r = 0; r < nr; ++r) out.coefficients.push_back(prog.block_value(rep.x, coef[r])(0, 0).real());
  for (int j = 0; j < 4; ++j) out.parts[j] = prog.block_value(rep.x_cone, cb[j]) * scale;
  return out;
}

// Minimizes the decomposition certificate over a family: a max-objective pass
// followed by reweighted passes towards the product certificate.
std::pair<std::vector<double>, Decomposition> best_family_decomposition(
    const AffineMapFamily& family, double theta, const SolveOptions& options, int passes) {
  const int n = family.base.in_dim(), m = family.base.out_dim();
  FamilyDecomposition fd = decomposition_program(family, {}, options);
  std::vector<double> best_t = fd.coefficients;
  Decomposition best = repair(n, m, family.at(fd.coefficients).choi(), fd.parts, theta);
  best.status = fd.status;
  Decomposition cur = best;
  if (theta == 0.0 || theta == 1.0) passes = std::max(passes, 1);
  for (int pass = 0; pass < passes; ++pass) {
    std::vector<std::pair<double, double>> w;
    for (const LinearMap& part : cur.parts) {
      const double a = operator_norm(part.image_of_identity());
      const double b = operator_norm(part.adjoint_image_of_identity());
      if (a <= 1e-12 || b <= 1e-12) {
        w.emplace_back(1.0 - theta + 1e-3, theta + 1e-3);
      } else {
        const double kappa = b / a;
        w.emplace_back((1.0 - theta) * std::pow(kappa, theta) + 1e-9,
                       theta * std::pow(kappa, theta - 1.0) + 1e-9);
      }
    }
    fd = decomposition_program(family, w, options);
    cur = repair(n, m, family.at(fd.coefficients).choi(), fd.parts, theta);
    cur.status = fd.status;
    if (cur.certificate < best.certificate) {
      best = cur;
      best_t = fd.coefficients;
    }
  }
  return {best_t, best};
}

CMatrix exp_hermitian(const CMatrix& h) {
  return hermitian_function(h, [](double x) { return std::exp(x); });
}

std::vector<CMatrix> hermitian_basis(int n) {
  std::vector<CMatrix> out;
  for (int a = 0; a < n; ++a) out.push_back(unit(n, a, a));
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      CMatrix re = CMatrix::Zero(n, n), im = CMatrix::Zero(n, n);
      re(a, b) = re(b, a) = 1.0 / std::sqrt(2.0);
      im(a, b) = Complex(0.0, 1.0 / std::sqrt(2.0));
      im(b, a) = Complex(0.0, -1.0 / std::sqrt(2.0));
      out.push_back(re);
      out.push_back(im);
    }
  }
  return out;
}

}  // namespace

LinearMap Decomposition::recombine() const {
  return parts[0] - parts[1] + (parts[2] - parts[3]) * Complex(0.0, 1.0);
}

Decomposition decompose_cp(const LinearMap& u, const PExponent& p, const RegularOptions& options) {
  const double theta = p.theta();
  if (u.choi().norm() == 0.0) return jordan_decomposition(u, theta);
  Decomposition best = best_family_decomposition(AffineMapFamily{u, {}}, theta, options.sdp, 3).second;
  const Decomposition jd = jordan_decomposition(u, theta);
  if (jd.certificate < best.certificate) {
    const SolveStatus status = best.status;
    best = jd;
    best.status = status;
  }
  return best;
}

double weighted_family_bound(const LinearMap& u, const PExponent& p, const CMatrix& lo,
                             const CMatrix& li, const CMatrix& ri, const CMatrix& ro,
                             const SolveOptions& options) {
  const double th = p.theta();
  const LinearMap u0 = sandwich(psd_power(lo, -th), u, psd_power(li, th), psd_power(ri, th),
                                psd_power(ro, -th));
  const LinearMap u1 = sandwich(psd_power(lo, 1.0 - th), u, psd_power(li, th - 1.0),
                                psd_power(ri, th - 1.0), psd_power(ro, 1.0 - th));
  const double a = th < 1.0 ? cb_norm(u0, options).value : 1.0;
  const double b = th > 0.0 ? cb_norm_trace_class(u1, options).value : 1.0;
  return std::pow(a, 1.0 - th) * std::pow(b, th);
}

double weighted_family_upper(const LinearMap& u, const PExponent& p, int budget,
                             const SolveOptions& options) {
  const int n = u.in_dim(), m = u.out_dim();
  const double th = p.theta();
  if (th == 0.0) return cb_norm(u, options).value;
  if (th == 1.0) return cb_norm_trace_class(u, options).value;
  const double q = p.value();
  const CMatrix ui = u.image_of_identity();
  const double s = std::max(operator_norm(ui), 1e-300);
  auto weight = [&](const CMatrix& g) {
    return psd_power(hermitian_part(g) / (s * s) + 1e-8 * identity(m), q / 4.0);
  };
  // Logarithms of the four weights, as the search variables.
  std::array<CMatrix, 4> logs = {
      hermitian_function(weight(ui * ui.adjoint()), [](double x) { return std::log(x); }),
      CMatrix::Zero(n, n), CMatrix::Zero(n, n),
      hermitian_function(weight(ui.adjoint() * ui), [](double x) { return std::log(x); })};
  auto eval = [&](const std::array<CMatrix, 4>& l) {
    return weighted_family_bound(u, p, exp_hermitian(l[0]), exp_hermitian(l[1]),
                                 exp_hermitian(l[2]), exp_hermitian(l[3]), options);
  };
  double best = eval(logs);
  int used = 1;
  const std::array<std::vector<CMatrix>, 4> bases = {hermitian_basis(m), hermitian_basis(n),
                                                     hermitian_basis(n), hermitian_basis(m)};
  double step = 0.5;
  while (used < budget && step > 1e-3) {
    bool improved = false;
    for (int w = 0; w < 4 && used < budget; ++w) {
      for (const CMatrix& dir : bases[w]) {
        for (double sign : {1.0, -1.0}) {
          if (used >= budget) break;
          std::array<CMatrix, 4> trial = logs;
          trial[w] += sign * step * dir;
          const double v = eval(trial);
          ++used;
          if (v < best * (1.0 - 1e-9)) {
            best = v;
            logs = trial;
            improved = true;
            break;
          }
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

RegularUpper regular_upper(const LinearMap& u, const PExponent& p, const RegularOptions& options) {
  RegularUpper out;
  if (p.is_infinite()) {
    out.value = cb_norm(u, options.sdp).value;
    out.interpolation_value = out.value;
    out.certificate = "cb norm";
    return out;
  }
  const double th = p.theta();
  out.decomposition = decompose_cp(u, p, options);
  out.decomposition_value = out.decomposition->certificate;
  out.value = out.decomposition_value;
  out.certificate = "CP decomposition";

  const double a = cb_norm(u, options.sdp).value;
  const double b = cb_norm_trace_class(u, options.sdp).value;
  out.interpolation_value = std::pow(a, 1.0 - th) * std::pow(b, th);
  if (out.interpolation_value < out.value) {
    out.value = out.interpolation_value;
    out.certificate = p.is_one() ? "cb norm on S_1" : "endpoint interpolation";
  }
  if (!p.is_one() && options.refine_budget > 0) {
    out.weighted_value = weighted_family_upper(u, p, options.refine_budget, options.sdp);
    if (out.weighted_value < out.value) {
      out.value = out.weighted_value;
      out.certificate = "weighted interpolation family";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lower bounds.

namespace {

struct LevelEval {
  double ratio = 0.0;
  CMatrix grad;  // ascent direction for the ratio
};

class LevelSearch {
 public:
  LevelSearch(const LinearMap& u, const PExponent& p, int k, const RegularOptions& options,
              const LinearMap* projection)
      : u_(u), adj_(hs_adjoint_map(u)), p_(p), k_(k), options_(options), projection_(projection) {}

  CMatrix project(const CMatrix& x) const {
    if (!projection_) return x;
    return apply_outer(*projection_, BlockMatrix(u_.in_dim(), k_, x)).body;
  }

  LevelEval eval(const CMatrix& x, double gap, bool with_grad) const {
    LevelEval out;
    VNormOptions vo;
    vo.rel_gap = gap;
    vo.seed = options_.seed;
    vo.restarts = 2;
    const BlockMatrix xb(u_.in_dim(), k_, x);
    const BlockMatrix zb = apply_outer(u_, xb);
    const VNormResult rx = vnorm(xb, p_, vo);
    const VNormResult rz = vnorm(zb, p_, vo);
    if (rx.bracket.upper <= 0.0) return out;
    out.ratio = rz.bracket.lower / rx.bracket.upper;
    if (with_grad) {
      const CMatrix h = apply_outer(adj_, BlockMatrix(u_.out_dim(), k_, rz.subgradient)).body;
      const double d = rx.bracket.upper;
      out.grad = project(h / d - (out.ratio / d) * rx.subgradient);
    }
    return out;
  }

  // Step-halving ascent; returns the final iterate.
  CMatrix ascend(CMatrix x, double* value) const {
    x = project(x);
    LevelEval cur = eval(x, options_.search_gap, true);
    double eta = 0.5;
    for (int step = 0; step < options_.max_steps && eta > 1e-4; ++step) {
      const double gn = cur.grad.norm();
      if (gn == 0.0) break;
      const CMatrix trial = x + (eta * x.norm() / gn) * cur.grad;
      const LevelEval next = eval(trial, options_.search_gap, true);
      if (next.ratio > cur.ratio * (1.0 + 1e-10)) {
        x = trial / trial.norm();
        cur = next;
        eta = std::min(1.0, eta * 1.5);
      } else {
        eta *= 0.5;
      }
    }
    *value = cur.ratio;
    return x;
  }

  // p = inf: alternate between top singular vectors and the unitary polar part.
  CMatrix unitary_ascent(CMatrix x, double* value) const {
    const int n = u_.in_dim(), m = u_.out_dim();
    double best = 0.0;
    for (int it = 0; it < options_.max_steps * 5; ++it) {
      const CMatrix z = apply_outer(u_, BlockMatrix(n, k_, x)).body;
      Eigen::JacobiSVD<CMatrix> svd(z, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const double v = svd.singularValues()(0);
      if (it > 0 && v <= best * (1.0 + 1e-13)) {
        best = std::max(best, v);
        break;
      }
      best = v;
      const CMatrix g = svd.matrixU().col(0) * svd.matrixV().col(0).adjoint();
      const CMatrix h = apply_outer(adj_, BlockMatrix(m, k_, g)).body;
      Eigen::JacobiSVD<CMatrix> hs(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
      x = hs.matrixU() * hs.matrixV().adjoint();
    }
    *value = best;
    return x;
  }

 private:
  const LinearMap& u_;
  LinearMap adj_;
  PExponent p_;
  int k_;
  const RegularOptions& options_;
  const LinearMap* projection_;
};

CMatrix pad_inner(const CMatrix& x, int n, int k) {
  CMatrix out = CMatrix::Zero(n * (k + 1), n * (k + 1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out.block(i * (k + 1), j * (k + 1), k, k) = x.block(i * k, j * k, k, k);
  }
  return out;
}

}  // namespace

RegularLower regular_lower(const LinearMap& u, const PExponent& p, const RegularOptions& options,
                           const std::vector<CMatrix>* subspace) {
  const int n = u.in_dim();
  const int levels = std::clamp(options.levels, 1, 4);
  std::optional<LinearMap> proj;
  if (subspace && static_cast<int>(subspace->size()) < n * n) proj = SubspaceBasis{n, *subspace}.projection();
  Rng rng(options.seed ^ 0x2545f4914f6cdd1dULL);

  RegularLower out;
  CMatrix carried;  // best witness of the previous level
  for (int k = 1; k <= levels; ++k) {
    const LevelSearch search(u, p, k, options, proj ? &*proj : nullptr);
    CMatrix best_x;
    double best = -1.0;
    if (p.is_infinite() && !proj) {
      for (int r = 0; r < options.restarts + 2; ++r) {
        double v = 0.0;
        const CMatrix x = search.unitary_ascent(r == 0 ? identity(n * k) : rng.unitary(n * k), &v);
        if (v > best) best = v, best_x = x;
      }
      if (carried.size()) {
        CMatrix padded = pad_inner(carried, n, k - 1);
        padded += kron(identity(n), unit(k, k - 1, k - 1));  // unitary completion of the pad
        const double v0 = operator_norm(apply_outer(u, BlockMatrix(n, k, padded)).body);
        if (v0 > best) best = v0, best_x = padded;
      }
    } else {
      std::vector<CMatrix> starts;
      if (carried.size()) starts.push_back(pad_inner(carried, n, k - 1));
      starts.push_back(identity(n * k));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) starts.push_back(kron(unit(n, i, j), unit(k, 0, 0)));
      }
      if (!proj) {
        // Unitary optimum of the operator-norm problem.
        double v = 0.0;
        starts.push_back(search.unitary_ascent(rng.unitary(n * k), &v));
        starts.push_back(search.unitary_ascent(identity(n * k), &v));
      }
      for (int r = 0; r < options.restarts; ++r) starts.push_back(rng.gaussian(n * k, n * k));
      // Screen all starts, then ascend from the most promising ones.
      std::vector<std::pair<double, CMatrix>> screened;
      for (const CMatrix& s : starts) {
        const CMatrix x = search.project(s);
        if (x.norm() < 1e-12) continue;
        screened.emplace_back(search.eval(x / x.norm(), options.search_gap, false).ratio, x / x.norm());
      }
      std::stable_sort(screened.begin(), screened.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      const int count = std::min<int>(static_cast<int>(screened.size()), std::max(1, options.restarts));
      for (int r = 0; r < count; ++r) {
        double v = 0.0;
        const CMatrix x = search.ascend(screened[r].second, &v);
        if (v > best) best = v, best_x = x;
      }
    }
    // Certified value with tight brackets.
    const double value = search.eval(best_x, options.final_gap, false).ratio;
    const double prev = out.levels.empty() ? 0.0 : out.levels.back();
    if (value > prev) {
      out.value = value;
      out.level = k;
      out.witness = BlockMatrix(n, k, best_x);
    }
    out.levels.push_back(std::max(prev, value));
    carried = best_x;
  }
  out.value = out.levels.back();
  return out;
}

RegularReport regular_bracket(const LinearMap& u, const PExponent& p, const RegularOptions& options) {
  RegularReport r;
  r.p = p;
  r.lower = regular_lower(u, p, options);
  r.upper = regular_upper(u, p, options);
  return r;
}

// ---------------------------------------------------------------------------
// Pairing and rho.

CMatrix RhoWitness::reconstruct() const {
  return kron(gamma, alpha) * g.canonical() * kron(delta, beta);
}

namespace {

CMatrix safe_inverse(const CMatrix& a) { return psd_power(a, -1.0); }

RhoWitness make_witness(const CMatrix& a, int n, int m, const PExponent& p, const CMatrix& gamma,
                        const CMatrix& alpha, const CMatrix& beta, const CMatrix& delta) {
  RhoWitness w;
  w.gamma = gamma;
  w.alpha = alpha;
  w.beta = beta;
  w.delta = delta;
  w.g = BlockMatrix(n, m, kron(safe_inverse(gamma), safe_inverse(alpha)) * a *
                              kron(safe_inverse(delta), safe_inverse(beta)));
  const PExponent pc = p.conjugate();
  w.value = schatten_norm(gamma, p.times(2.0)) * schatten_norm(alpha, pc.times(2.0)) *
            operator_norm(w.g.body) * schatten_norm(beta, pc.times(2.0)) *
            schatten_norm(delta, p.times(2.0));
  return w;
}

CMatrix normalized_weight(const CMatrix& w, const PExponent& e) {
  const double s = schatten_norm(w, e);
  return s > 0.0 ? CMatrix(w / s) : w;
}

}  // namespace

RhoWitness rho_upper(const PairingElement& elem, int restarts, std::uint64_t seed,
                     const std::vector<std::pair<CMatrix, CMatrix>>& inner_starts) {
  const int n = elem.n(), m = elem.m();
  const PExponent p = elem.p, pc = p.conjugate();
  const CMatrix raw = elem.body.canonical();
  RhoWitness best = make_witness(raw, n, m, p, identity(n), identity(m), identity(m), identity(n));
  const double scale = raw.norm();
  if (scale == 0.0) {
    best.value = 0.0;
    return best;
  }
  // Canonical phase and scale make the result exactly homogeneous.
  Eigen::Index ri = 0, ci = 0;
  raw.cwiseAbs().maxCoeff(&ri, &ci);
  const Complex phase = raw(ri, ci) / std::abs(raw(ri, ci));
  const CMatrix a = raw / (scale * phase);

  std::vector<std::pair<CMatrix, CMatrix>> starts = {{identity(m), identity(m)}};
  for (const auto& s : inner_starts) starts.push_back(s);
  Rng rng(seed ^ 0x94d049bb133111ebULL);
  for (int r = 0; r < restarts; ++r) starts.emplace_back(rng.positive_definite(m, 0.1), rng.positive_definite(m, 0.1));

  VNormOptions vo;
  vo.seed = seed;
  RhoWitness local_best;
  local_best.value = std::numeric_limits<double>::infinity();
  for (auto [alpha, beta] : starts) {
    alpha = hermitian_part(alpha);
    beta = hermitian_part(beta);
    double prev = std::numeric_limits<double>::infinity();
    for (int round = 0; round < 8; ++round) {
      // Outer weights for fixed inner ones.
      const BlockMatrix y(n, m, kron(identity(n), safe_inverse(alpha)) * a *
                                    kron(identity(n), safe_inverse(beta)));
      const VNormResult ry = vnorm(y, p, vo);
      const CMatrix gamma = ry.factorization.a, delta = ry.factorization.b;
      RhoWitness w = make_witness(a, n, m, p, gamma, alpha, beta, delta);
      if (w.value < local_best.value) local_best = w;
      // Inner weights for fixed outer ones.
      const BlockMatrix x(n, m, kron(safe_inverse(gamma), identity(m)) * a *
                                    kron(safe_inverse(delta), identity(m)));
      const VNormResult rx = vnorm(exchange_roles(x), pc, vo);
      alpha = rx.factorization.a;
      beta = rx.factorization.b;
      w = make_witness(a, n, m, p, gamma, alpha, beta, delta);
      if (w.value < local_best.value) local_best = w;
      if (local_best.value >= prev * (1.0 - 1e-10)) break;
      prev = local_best.value;
    }
  }
  // Undo the normalization on the outer left factor.
  local_best.gamma *= scale;
  local_best.g.body *= phase;
  local_best.value *= scale;
  local_best.alpha = normalized_weight(local_best.alpha, pc.times(2.0));
  local_best.beta = normalized_weight(local_best.beta, pc.times(2.0));
  const RhoWitness exact = make_witness(raw, n, m, p, local_best.gamma, local_best.alpha,
                                        local_best.beta, local_best.delta);
  return exact.value < best.value ? exact : best;
}

Complex pairing_value(const LinearMap& u, const PairingElement& a) {
  if (u.in_dim() != a.n() || u.out_dim() != a.m()) {
    throw std::invalid_argument("pairing: map is M_" + std::to_string(u.in_dim()) + " -> M_" +
                                std::to_string(u.out_dim()) + " but element lives in S^" +
                                std::to_string(a.n()) + " (x) S^" + std::to_string(a.m()));
  }
  return u.choi().cwiseProduct(a.body.canonical()).sum();
}

Complex pairing_value_factored(const LinearMap& u, const RhoWitness& w) {
  const int n = w.g.outer, m = w.g.inner;
  if (u.in_dim() != n || u.out_dim() != m) throw std::invalid_argument("pairing: dimension mismatch");
  const BlockMatrix y(n, m, kron(w.gamma, identity(m)) * w.g.canonical() * kron(w.delta, identity(m)));
  const BlockMatrix z = apply_outer(u, y);
  const CMatrix eye = identity(m);
  return trace_pair(BlockMatrix(m, m, kron(w.alpha.transpose(), eye) * z.canonical() *
                                          kron(w.beta.transpose(), eye)));
}

DualityCheck duality_check(const LinearMap& u, const PairingElement& a, const RegularOptions& options,
                           double tol) {
  DualityCheck out;
  out.direct = pairing_value(u, a);
  const RhoWitness w = rho_upper(a, options.restarts, options.seed);
  out.factored = pairing_value_factored(u, w);
  out.rho = w.value;
  out.regular = regular_upper(u, a.p, options).value;
  out.holds = std::abs(out.direct) <= out.rho * out.regular + tol;
  return out;
}

// ---------------------------------------------------------------------------
// Subspaces and extension.

namespace {

CMatrix columns_of(const std::vector<CMatrix>& elems, int n) {
  CMatrix v(n * n, static_cast<int>(elems.size()));
  for (std::size_t i = 0; i < elems.size(); ++i) {
    v.col(static_cast<int>(i)) = Eigen::Map<const CVector>(elems[i].data(), n * n);
  }
  return v;
}

CMatrix as_matrix(const CVector& v, int n) { return Eigen::Map<const CMatrix>(v.data(), n, n); }

}  // namespace

void SubspaceBasis::validate() const {
  if (elements.empty()) throw std::invalid_argument("subspace basis is empty");
  for (const CMatrix& e : elements) {
    if (e.rows() != n || e.cols() != n) throw std::invalid_argument("basis element has the wrong size");
  }
  const CMatrix v = columns_of(elements, n);
  const RVector ev = hermitian_eig_unchecked(v.adjoint() * v).values;
  if (ev(ev.size() - 1) <= 0.0 || ev(0) / ev(ev.size() - 1) >= 1e8) {
    throw std::invalid_argument("subspace basis is dependent or ill-conditioned");
  }
}

std::vector<CMatrix> SubspaceBasis::orthonormal() const {
  const CMatrix v = columns_of(elements, n);
  Eigen::HouseholderQR<CMatrix> qr(v);
  const CMatrix q = qr.householderQ() * CMatrix::Identity(n * n, n * n);
  std::vector<CMatrix> out;
  for (std::size_t i = 0; i < elements.size(); ++i) out.push_back(as_matrix(q.col(static_cast<int>(i)), n));
  return out;
}

std::vector<CMatrix> SubspaceBasis::complement() const {
  const CMatrix v = columns_of(elements, n);
  Eigen::HouseholderQR<CMatrix> qr(v);
  const CMatrix q = qr.householderQ() * CMatrix::Identity(n * n, n * n);
  std::vector<CMatrix> out;
  for (int i = static_cast<int>(elements.size()); i < n * n; ++i) out.push_back(as_matrix(q.col(i), n));
  return out;
}

LinearMap SubspaceBasis::projection() const {
  const std::vector<CMatrix> q = orthonormal();
  return LinearMap::from_action(n, n, [&](const CMatrix& x) {
    CMatrix out = CMatrix::Zero(n, n);
    for (const CMatrix& e : q) out += (e.adjoint() * x).trace() * e;
    return out;
  });
}

SubspaceBasis SubspaceBasis::full(int n) {
  SubspaceBasis s{n, {}};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s.elements.push_back(unit(n, i, j));
  }
  return s;
}

SubspaceBasis SubspaceBasis::upper_triangular(int n) {
  SubspaceBasis s{n, {}};
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) s.elements.push_back(unit(n, i, j));
  }
  return s;
}

ExtensionResult extend(const SubspaceBasis& s, const std::vector<CMatrix>& images, int out_dim,
                       const PExponent& p, const RegularOptions& options, const LinearMap* reference) {
  s.validate();
  const int n = s.n, m = out_dim, k = static_cast<int>(s.elements.size());
  if (static_cast<int>(images.size()) != k) throw std::invalid_argument("one image per basis element required");
  for (const CMatrix& y : images) {
    if (y.rows() != m || y.cols() != m) throw std::invalid_argument("image has the wrong size");
  }
  // Baseline: extend by zero on the trace-orthogonal complement.
  const CMatrix v = columns_of(s.elements, n);
  const CMatrix gram_inv = (v.adjoint() * v).inverse();
  const LinearMap baseline = LinearMap::from_action(n, m, [&](const CMatrix& x) {
    const CVector coeffs = gram_inv * (v.adjoint() * Eigen::Map<const CVector>(x.data(), n * n));
    CMatrix out = CMatrix::Zero(m, m);
    for (int i = 0; i < k; ++i) out += coeffs(i) * images[i];
    return out;
  });

  AffineMapFamily family{baseline, {}};
  for (const CMatrix& q : s.complement()) {
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        for (const Complex scale : {Complex(1.0, 0.0), Complex(0.0, 1.0)}) {
          family.directions.push_back(LinearMap::from_action(
              n, m, [&](const CMatrix& x) { return CMatrix((q.adjoint() * x).trace() * scale * unit(m, a, b)); }));
        }
      }
    }
  }

  std::vector<std::pair<std::string, LinearMap>> candidates = {{"zero extension", baseline}};
  if (reference) candidates.emplace_back("reference map", *reference);
  if (!family.directions.empty()) {
    std::vector<double> t;
    if (p.is_infinite()) {
      t = min_cb_norm(family, options.sdp).coefficients;
    } else if (p.is_one()) {
      t = min_cb_norm_trace_class(family, options.sdp).coefficients;
    } else {
      t = best_family_decomposition(family, p.theta(), options.sdp, 3).first;
    }
    candidates.emplace_back("convex program over the complement", family.at(t));
  }

  ExtensionResult best{baseline, 0.0, {}, {}, {}};
  best.upper.value = std::numeric_limits<double>::infinity();
  for (auto& [name, cand] : candidates) {
    // Values on S are fixed; only the complement part of the candidate is used.
    const LinearMap adjusted = baseline + compose(cand, LinearMap::identity(n) - s.projection());
    const RegularUpper up = regular_upper(adjusted, p, options);
    if (up.value < best.upper.value) {
      best.extension = adjusted;
      best.upper = up;
      best.method = name;
    }
  }
  double residual = 0.0;
  for (int i = 0; i < k; ++i) residual = std::max(residual, (best.extension.apply(s.elements[i]) - images[i]).norm());
  best.restriction_residual = residual;
  best.subspace_lower = regular_lower(best.extension, p, options, &s.elements);
  return best;
}

// ---------------------------------------------------------------------------

double lattice_regular_oracle(const LinearMap& u, const PExponent& p) {
  const int n = u.in_dim(), m = u.out_dim();
  RMatrix a(m, n);
  for (int b = 0; b < n; ++b) {
    const CMatrix img = u.apply(unit(n, b, b));
    if ((img - CMatrix(img.diagonal().asDiagonal())).norm() > 1e-10 * std::max(1.0, img.norm())) {
      throw std::invalid_argument("map does not send diagonal matrices to diagonal matrices");
    }
    for (int r = 0; r < m; ++r) a(r, b) = std::abs(img(r, r));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && u.apply(unit(n, i, j)).norm() > 1e-10) {
        throw std::invalid_argument("map is not supported on the diagonal");
      }
    }
  }
  if (p.is_infinite()) {
    // Brute force over sign patterns.
    double best = 0.0;
    for (int mask = 0; mask < (1 << n); ++mask) {
      RVector s(n);
      for (int j = 0; j < n; ++j) s(j) = (mask >> j) & 1 ? -1.0 : 1.0;
      best = std::max(best, (a * s).cwiseAbs().maxCoeff());
    }
    return best;
  }
  if (p.is_one()) {
    double best = 0.0;
    for (int j = 0; j < n; ++j) best = std::max(best, a.col(j).cwiseAbs().sum());
    return best;
  }
  // Nonnegative power iteration for the l_p -> l_p norm of a nonnegative matrix.
  const double q = p.value(), qc = p.conjugate().value();
  RVector x = RVector::Constant(n, std::pow(static_cast<double>(n), -1.0 / q));
  double value = 0.0;
  for (int it = 0; it < 2000; ++it) {
    const RVector y = a * x;
    const double ny = std::pow(y.array().pow(q).sum(), 1.0 / q);
    if (ny == 0.0) break;
    RVector g = a.transpose() * (y / ny).array().pow(q - 1.0).matrix();
    g = g.array().pow(qc - 1.0).matrix();
    const double ng = std::pow(g.array().pow(q).sum(), 1.0 / q);
    if (ng == 0.0) break;
    x = g / ng;
    if (std::abs(ny - value) <= 1e-15 * ny) {
      value = ny;
      break;
    }
    value = ny;
  }
  return value;
}

}  // namespace regop
