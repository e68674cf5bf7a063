#include "regop/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>

#include "regop/regular.hpp"

namespace regop {

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;
};

// Records the worst violation seen for one sub-check.
class Tally {
 public:
  explicit Tally(std::string label) : label_(std::move(label)) {}

  // value <= limit is a pass; margin is limit - value.
  void require_le(double value, double limit) {
    ++count_;
    worst_ = std::min(worst_, limit - value);
    if (!(value <= limit)) ++failures_;
  }
  // |error| <= tol, reported as the largest error seen.
  void require_close(double error, double tol) {
    ++count_;
    max_error_ = std::max(max_error_, error);
    if (!(error <= tol)) ++failures_;
  }
  void require(bool ok) {
    ++count_;
    if (!ok) ++failures_;
  }

  bool ok() const { return failures_ == 0; }
  std::string summary() const {
    std::ostringstream s;
    s << label_ << " " << (count_ - failures_) << "/" << count_;
    if (worst_ < kNone) s << " (min margin " << format(worst_) << ")";
    if (max_error_ >= 0.0) s << " (max error " << format(max_error_) << ")";
    return s.str();
  }

  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }

 private:
  static constexpr double kNone = 1e300;
  std::string label_;
  int count_ = 0;
  int failures_ = 0;
  double worst_ = kNone;
  double max_error_ = -1.0;
};

Outcome combine(const std::vector<Tally>& parts, const std::string& extra = {}) {
  Outcome o;
  std::string sep;
  for (const Tally& t : parts) {
    o.passed = o.passed && t.ok();
    o.detail += sep + t.summary();
    sep = "; ";
  }
  if (!extra.empty()) o.detail += sep + extra;
  return o;
}

RegularOptions suite_options(std::uint64_t seed, int levels = 2) {
  RegularOptions o;
  o.levels = levels;
  o.restarts = 2;
  o.max_steps = 25;
  o.refine_budget = 30;
  o.seed = seed;
  return o;
}

bool overlap(double l1, double u1, double l2, double u2, double widen) {
  return std::max(l1, l2) - widen <= std::min(u1, u2) + widen;
}

double rel_scale(double v) { return std::max(1.0, std::abs(v)); }

Outcome endpoint_collapse(std::uint64_t seed) {
  Rng rng(seed);
  Tally upper("upper = cb"), lower("lower >= 0.99 cb");
  const PExponent inf = PExponent::infinity();
  for (int i = 0; i < 20; ++i) {
    const LinearMap u = random_map(rng, 2, 2);
    const RegularOptions opts = suite_options(rng.next_seed());
    const double cb = cb_norm(u, opts.sdp).value;
    const double up = regular_upper(u, inf, opts).value;
    upper.require_close(std::abs(up - cb) / cb, 1e-4);
    lower.require_le(0.99 * cb, regular_lower(u, inf, opts).value);
  }
  return combine({upper, lower});
}

Outcome transpose_benchmark(std::uint64_t seed) {
  const LinearMap t = LinearMap::transpose(2);
  Tally cp("not CP, margin -1"), cb("cb = 2"), bracket("bracket contains 2");
  const CpCheck c = is_cp(t);
  cp.require(!c.completely_positive);
  cp.require_close(std::abs(c.margin + 1.0), 1e-9);
  const RegularOptions opts = suite_options(seed);
  const double value = cb_norm(t, opts.sdp).value;
  cb.require_close(std::abs(value - 2.0), 1e-4);
  const RegularReport r = regular_bracket(t, PExponent::infinity(), opts);
  // The SDP value is only accurate to the cb tolerance.
  bracket.require_le(r.lower.value, 2.0 + 1e-4);
  bracket.require_le(2.0, r.upper.value + 1e-4);
  return combine({cp, cb, bracket},
                 "bracket [" + Tally::format(r.lower.value) + ", " + Tally::format(r.upper.value) + "]");
}

Outcome cp_bound(std::uint64_t seed) {
  Rng rng(seed);
  Tally upper("upper <= max(|u(I)|, |u*(I)|)"), order("lower <= upper");
  for (int i = 0; i < 20; ++i) {
    const int n = i < 10 ? 2 : 3;
    const LinearMap u = random_cp_map(rng, n, n);
    const double bound = std::max(operator_norm(u.image_of_identity()),
                                  operator_norm(u.adjoint_image_of_identity()));
    const RegularOptions opts = suite_options(rng.next_seed());
    for (const PExponent p : {PExponent(1), PExponent(2), PExponent(4), PExponent::infinity()}) {
      const RegularReport r = regular_bracket(u, p, opts);
      upper.require_le(r.upper.value, bound + 1e-4);
      order.require_le(r.lower.value, r.upper.value + 1e-5);
    }
  }
  return combine({upper, order});
}

const std::vector<PExponent>& symmetry_exponents() {
  static const std::vector<PExponent> ps{PExponent(4.0 / 3.0), PExponent(2), PExponent(4)};
  return ps;
}

// Instances shared by the adjoint-symmetry and ordering criteria.
struct SymmetryCase {
  LinearMap u;
  RegularOptions opts;
  std::vector<RegularReport> reports;  // one per exponent
};

std::vector<SymmetryCase> symmetry_cases(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SymmetryCase> out;
  for (int i = 0; i < 10; ++i) {
    LinearMap u = random_map(rng, 2, 2);
    out.push_back({std::move(u), suite_options(rng.next_seed()), {}});
  }
  return out;
}

Outcome adjoint_symmetry(std::vector<SymmetryCase>& cases) {
  Tally t("brackets overlap");
  for (SymmetryCase& c : cases) {
    const LinearMap adj = adjoint_map(c.u);
    c.reports.clear();
    for (const PExponent& p : symmetry_exponents()) {
      c.reports.push_back(regular_bracket(c.u, p, c.opts));
      const RegularReport a = regular_bracket(adj, p.conjugate(), c.opts);
      const RegularReport& r = c.reports.back();
      t.require(overlap(r.lower.value, r.upper.value, a.lower.value, a.upper.value, 1e-4));
    }
  }
  return combine({t});
}

Outcome amplification_ordering(std::vector<SymmetryCase>& cases) {
  Tally t("cb-on-S_p lower <= regular upper");
  for (SymmetryCase& c : cases) {
    const auto& ps = symmetry_exponents();
    for (std::size_t j = 0; j < ps.size(); ++j) {
      const double upper = j < c.reports.size() ? c.reports[j].upper.value
                                                : regular_upper(c.u, ps[j], c.opts).value;
      SchattenSearchOptions so;
      so.restarts = 4;
      so.max_steps = 100;
      so.seed = c.opts.seed;
      double lower = 0.0;
      for (int k = 1; k <= 2; ++k) {
        lower = std::max(lower, schatten_ratio_lower(identity_tensor(k, c.u), ps[j], ps[j], so));
      }
      t.require_le(lower, upper + 1e-4);
    }
  }
  return combine({t});
}

Outcome vnorm_endpoint(std::uint64_t seed) {
  Rng rng(seed);
  Tally up("upper = |x|"), lo("lower = |x|");
  const PExponent inf = PExponent::infinity();
  for (int i = 0; i < 50; ++i) {
    const int n = 1 + static_cast<int>(rng.uniform() * 3.0);
    const int m = 1 + static_cast<int>(rng.uniform() * 3.0);
    const BlockMatrix x(n, m, rng.gaussian(n * m, n * m));
    const double exact = operator_norm(x.body);
    const double tol = 1e-6 * rel_scale(exact);
    up.require_close(std::abs(vnorm_upper(x, inf, 2, rng.next_seed()).first - exact), tol);
    lo.require_close(std::abs(vnorm_lower(x, inf) - exact), tol);
  }
  return combine({up, lo});
}

Outcome crossnorm(std::uint64_t seed) {
  Rng rng(seed);
  Tally up("upper <= |a|_p |e|"), lo("lower >= 0.9 |a|_p |e|");
  for (const PExponent p : {PExponent(1), PExponent(2), PExponent(3)}) {
    for (int i = 0; i < 10; ++i) {
      const CMatrix a = rng.gaussian(2, 2), e = rng.gaussian(2, 2);
      const BlockMatrix x = BlockMatrix::elementary(a, e);
      const double target = schatten_norm(a, p) * operator_norm(e);
      up.require_le(vnorm_upper(x, p, 4, rng.next_seed()).first, target + 1e-4);
      lo.require_le(0.9 * target, vnorm_lower(x, p));
    }
  }
  return combine({up, lo});
}

Outcome fubini(std::uint64_t seed) {
  Rng rng(seed);
  Tally t("brackets overlap");
  const PExponent p(2);
  for (int i = 0; i < 10; ++i) {
    const BlockMatrix x(4, 2, rng.gaussian(8, 8));
    VNormOptions o;
    o.seed = rng.next_seed();
    const NormBracket before = vnorm(x, p, o).bracket;
    const NormBracket after = vnorm(fubini_reshuffle(x, 2, 2), p, o).bracket;
    t.require(overlap(before.lower, before.upper, after.lower, after.upper, 1e-4));
  }
  return combine({t});
}

Outcome pairing_identities(std::uint64_t seed) {
  Rng rng(seed);
  Tally ineq("|tr z| <= |z|_1"), routes("routes agree"), elem("elementary = tr(a^t b)");
  for (int i = 0; i < 50; ++i) {
    const int m = i % 2 == 0 ? 2 : 3;
    const BlockMatrix z(m, m, rng.gaussian(m * m, m * m));
    ineq.require_le(std::abs(trace_pair(z)), vnorm_upper(z, PExponent(1), 2, rng.next_seed()).first + 1e-6);

    const CMatrix al = rng.gaussian(m, m), be = rng.gaussian(m, m);
    const CMatrix outer = kron(al, identity(m)) * z.body * kron(be, identity(m));
    const CMatrix inner = kron(identity(m), al.transpose()) * z.body * kron(identity(m), be.transpose());
    const Complex l = trace_pair(BlockMatrix(m, m, outer)), r = trace_pair(BlockMatrix(m, m, inner));
    routes.require_close(std::abs(l - r) / rel_scale(std::abs(l)), 1e-9);

    const CMatrix a = rng.gaussian(m, m), b = rng.gaussian(m, m);
    const Complex expected = (a.transpose() * b).trace();
    elem.require_close(std::abs(trace_pair(BlockMatrix::elementary(a, b)) - expected) / rel_scale(std::abs(expected)), 1e-10);
  }
  return combine({ineq, routes, elem});
}

// Best |<u, a>| over two-sided maps x -> v x w with contractions v, w, found by
// alternating polar steps: the pairing is linear in each of v and w.
struct TwoSided {
  CMatrix v, w;
  double value = 0.0;
};

CMatrix polar_maximizer(const std::function<Complex(const CMatrix&)>& linear, int rows, int cols) {
  CMatrix f(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      CMatrix e = CMatrix::Zero(rows, cols);
      e(i, j) = 1.0;
      f(i, j) = linear(e);
    }
  }
  // sum_ij v_ij f_ij = tr(v^t f) is maximized at v^t = V U^* for f = U S V^*.
  Eigen::JacobiSVD<CMatrix> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const CMatrix vt = svd.matrixV().leftCols(std::min(rows, cols)) *
                     svd.matrixU().leftCols(std::min(rows, cols)).adjoint();
  return vt.transpose();
}

TwoSided best_two_sided(const PairingElement& a, int starts, Rng& rng) {
  const int n = a.n(), m = a.m();
  TwoSided best;
  for (int s = 0; s < starts; ++s) {
    CMatrix w = rng.unitary(n);
    CMatrix v;
    double value = 0.0;
    for (int it = 0; it < 30; ++it) {
      v = polar_maximizer([&](const CMatrix& e) { return pairing_value(LinearMap::two_sided(e, w), a); }, m, n);
      w = polar_maximizer([&](const CMatrix& e) { return pairing_value(LinearMap::two_sided(v, e), a); }, n, n);
      const double next = std::abs(pairing_value(LinearMap::two_sided(v, w), a));
      if (next <= value * (1.0 + 1e-12)) {
        value = std::max(value, next);
        break;
      }
      value = next;
    }
    if (value > best.value) best = {v, w, value};
  }
  return best;
}

Outcome duality(std::uint64_t seed) {
  Rng rng(seed);
  Tally hard("|<u,a>| <= rho * upper"), routes("pairing routes agree");
  int soft_hits = 0, soft_total = 0;
  double soft_min = 1e300;
  for (int i = 0; i < 20; ++i) {
    const PExponent p(i < 10 ? 2.0 : 3.0);
    const LinearMap u = random_map(rng, 2, 2);
    const PairingElement a{BlockMatrix(2, 2, rng.gaussian(4, 4)), p};
    const RegularOptions opts = suite_options(rng.next_seed());
    const DualityCheck c = duality_check(u, a, opts, 1e-5);
    hard.require(c.holds);
    hard.require_le(std::abs(c.direct), c.rho * c.regular + 1e-5);
    routes.require_close(std::abs(c.direct - c.factored) / rel_scale(std::abs(c.direct)), 1e-9);

    // Soft measurement: optimized two-sided maps have |v x w|_r <= |v| |w|.
    const TwoSided t = best_two_sided(a, 200, rng);
    const LinearMap best = LinearMap::two_sided(t.v, t.w);
    const double norm = std::min(operator_norm(t.v) * operator_norm(t.w), regular_upper(best, p, opts).value);
    const double ratio = t.value / (c.rho * norm);
    soft_min = std::min(soft_min, ratio);
    ++soft_total;
    if (ratio > 0.5) ++soft_hits;
  }
  std::ostringstream soft;
  soft << "soft ratio > 0.5 on " << soft_hits << "/" << soft_total << " (min " << Tally::format(soft_min) << ")";
  Outcome o = combine({hard, routes}, soft.str());
  o.passed = o.passed && 2 * soft_hits >= soft_total;
  return o;
}

Outcome decomposition(std::uint64_t seed) {
  Rng rng(seed);
  Tally cp("parts CP"), rec("recombination"), cert("certificate = upper component");
  for (int i = 0; i < 20; ++i) {
    const LinearMap u = random_map(rng, 2, 2);
    const PExponent p = i % 3 == 0 ? PExponent(4.0 / 3.0) : (i % 3 == 1 ? PExponent(2) : PExponent(4));
    const RegularOptions opts = suite_options(rng.next_seed());
    const Decomposition d = decompose_cp(u, p, opts);
    for (const LinearMap& part : d.parts) cp.require(is_cp(part, 1e-7).completely_positive);
    rec.require_close((d.recombine().choi() - u.choi()).norm(), 1e-7);
    const RegularUpper r = regular_upper(u, p, opts);
    cert.require_close(std::abs(d.certificate - r.decomposition_value), 1e-6);
    cert.require_le(r.value, d.certificate + 1e-6);
  }
  return combine({cp, rec, cert});
}

Outcome extension(std::uint64_t seed) {
  Rng rng(seed);
  Tally res("residual"), gap("gap <= 0.15 lower"), corner("e11 gap <= 1e-3");
  double worst_ratio = 0.0;
  const SubspaceBasis e11{2, {unit(2, 0, 0)}};
  const SubspaceBasis t2 = SubspaceBasis::upper_triangular(2);
  for (const PExponent p : {PExponent(1), PExponent(2), PExponent::infinity()}) {
    for (int family = 0; family < 2; ++family) {
      const SubspaceBasis& s = family == 0 ? e11 : t2;
      for (int i = 0; i < 5; ++i) {
        const LinearMap v = family == 0 ? random_map(rng, 2, 2) : random_cp_map(rng, 2, 2);
        std::vector<CMatrix> images;
        for (const CMatrix& e : s.elements) images.push_back(v.apply(e));
        const ExtensionResult r = extend(s, images, 2, p, suite_options(rng.next_seed()), &v);
        res.require_close(r.restriction_residual, 1e-8);
        gap.require_le(r.gap(), 0.15 * r.subspace_lower.value);
        if (family == 0) corner.require_le(r.gap(), 1e-3);
        worst_ratio = std::max(worst_ratio, r.gap() / r.subspace_lower.value);
      }
    }
  }
  return combine({res, gap, corner}, "worst gap/lower " + Tally::format(worst_ratio));
}

Outcome lattice(std::uint64_t seed) {
  Rng rng(seed);
  Tally t("bracket contains lattice value");
  for (int i = 0; i < 10; ++i) {
    const int n = i < 5 ? 2 : 3;
    const LinearMap u = LinearMap::diagonal(rng.gaussian(n, n));
    const RegularOptions opts = suite_options(rng.next_seed());
    for (const PExponent p : {PExponent(1), PExponent::infinity()}) {
      const double exact = lattice_regular_oracle(u, p);
      const RegularReport r = regular_bracket(u, p, opts);
      t.require_le(r.lower.value, exact + 1e-3);
      t.require_le(exact, r.upper.value + 1e-3);
    }
  }
  return combine({t});
}

Outcome rho_axioms(std::uint64_t seed) {
  Rng rng(seed);
  Tally hom("homogeneity"), tri("triangle");
  for (int i = 0; i < 20; ++i) {
    const PExponent p(i % 2 == 0 ? 2.0 : 3.0);
    const PairingElement a{BlockMatrix(2, 2, rng.gaussian(4, 4)), p};
    const PairingElement b{BlockMatrix(2, 2, rng.gaussian(4, 4)), p};
    const Complex lambda(rng.normal(), rng.normal());
    const std::uint64_t s = rng.next_seed();
    const RhoWitness wa = rho_upper(a, 2, s), wb = rho_upper(b, 2, s);
    const PairingElement la{BlockMatrix(2, 2, lambda * a.body.body), p};
    hom.require_close(std::abs(rho_upper(la, 2, s).value - std::abs(lambda) * wa.value), 1e-6);

    const PairingElement sum{BlockMatrix(2, 2, a.body.body + b.body.body), p};
    const RhoWitness ws = rho_upper(sum, 2, s, {{wa.alpha, wa.beta}, {wb.alpha, wb.beta}});
    tri.require_le(ws.value, wa.value + wb.value + 1e-5);
  }
  return combine({hom, tri});
}

const char* const kNames[] = {
    "endpoint collapse",     "transpose benchmark",  "CP bound",          "adjoint symmetry",
    "amplification ordering", "vnorm endpoint",      "crossnorm",         "Fubini invariance",
    "trace pairing",          "duality inequality",  "decomposition",     "extension",
    "lattice reduction",      "rho norm axioms",
};

}  // namespace

int acceptance_criterion_count() { return static_cast<int>(std::size(kNames)); }

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  const int count = acceptance_criterion_count();
  auto selected = [&](int id) {
    return options.only.empty() || std::find(options.only.begin(), options.only.end(), id) != options.only.end();
  };
  auto seed_for = [&](int id) { return options.seed * 1000003ULL + static_cast<std::uint64_t>(id); };

  std::vector<SymmetryCase> symmetry = symmetry_cases(seed_for(4));
  std::vector<CriterionResult> results;
  for (int id = 1; id <= count; ++id) {
    if (!selected(id)) continue;
    CriterionResult r;
    r.id = id;
    r.name = kNames[id - 1];
    const auto start = std::chrono::steady_clock::now();
    try {
      const std::uint64_t s = seed_for(id);
      Outcome o;
      switch (id) {
        case 1: o = endpoint_collapse(s); break;
        case 2: o = transpose_benchmark(s); break;
        case 3: o = cp_bound(s); break;
        case 4: o = adjoint_symmetry(symmetry); break;
        case 5: o = amplification_ordering(symmetry); break;
        case 6: o = vnorm_endpoint(s); break;
        case 7: o = crossnorm(s); break;
        case 8: o = fubini(s); break;
        case 9: o = pairing_identities(s); break;
        case 10: o = duality(s); break;
        case 11: o = decomposition(s); break;
        case 12: o = extension(s); break;
        case 13: o = lattice(s); break;
        case 14: o = rho_axioms(s); break;
        default: break;
      }
      r.passed = o.passed;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_result(const CriterionResult& r, bool with_time) {
  char head[64];
  std::snprintf(head, sizeof head, "%s %02d ", r.passed ? "PASS" : "FAIL", r.id);
  std::string line = head + r.name + ": " + r.detail;
  if (with_time) {
    char t[32];
    std::snprintf(t, sizeof t, " [%.1fs]", r.seconds);
    line += t;
  }
  return line;
}

}  // namespace regop
