#include <doctest.h>

#include <cmath>

#include "regop/cp.hpp"

using namespace regop;

namespace {

CMatrix sorted_eigenvalues(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  return es.eigenvalues().cast<Complex>();
}

// Largest |(I_k (x) u)(x)| over unitaries x, by random sampling.
double amplified_unitary_search(const LinearMap& u, int k, int samples, Rng& rng) {
  const LinearMap amp = identity_tensor(k, u);
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    best = std::max(best, operator_norm(amp.apply(rng.unitary(k * u.in_dim()))));
  }
  return best;
}

}  // namespace

TEST_CASE("choi matrices of basic maps") {
  const CMatrix ci = choi(LinearMap::identity(2));
  const CMatrix ei = sorted_eigenvalues(ci);
  CHECK(std::abs(ei(3) - 2.0) < 1e-12);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(ei(i)) < 1e-12);

  const CMatrix ct = choi(LinearMap::transpose(2));
  CHECK((ct.real() - ct.real().transpose()).norm() == 0.0);
  for (int r = 0; r < 4; ++r) CHECK(ct.row(r).cwiseAbs().sum() == 1.0);
  const CMatrix et = sorted_eigenvalues(ct);
  CHECK(std::abs(et(0) + 1.0) < 1e-12);
  for (int i = 1; i < 4; ++i) CHECK(std::abs(et(i) - 1.0) < 1e-12);

  CMatrix m(2, 2);
  m << 1.0, 2.0, 0.5, 3.0;
  const CMatrix cd = choi(LinearMap::diagonal(m));
  CHECK((cd - CMatrix(cd.diagonal().asDiagonal())).norm() == 0.0);
  CHECK(is_cp(LinearMap::diagonal(m)).completely_positive);
}

TEST_CASE("action reconstructs from the Choi matrix and is linear") {
  Rng rng(3);
  const LinearMap u = random_map(rng, 3, 2), v = random_map(rng, 3, 2);
  const CMatrix x = rng.gaussian(3, 3);
  CMatrix expected = CMatrix::Zero(2, 2);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) expected += x(i, j) * u.choi().block(2 * i, 2 * j, 2, 2);
  }
  CHECK((u.apply(x) - expected).norm() < 1e-10);
  const Complex al(0.3, -1.2), be(2.0, 0.5);
  CHECK((choi(u * al + v * be) - (al * choi(u) + be * choi(v))).norm() < 1e-12);

  // Hilbert-Schmidt adjoint against the defining identity.
  const CMatrix y = rng.gaussian(2, 2);
  const Complex lhs = (y.adjoint() * u.apply(x)).trace();
  const Complex rhs = (u.apply_hs_adjoint(y).adjoint() * x).trace();
  CHECK(std::abs(lhs - rhs) < 1e-10);
}

TEST_CASE("complete positivity") {
  const CpCheck id = is_cp(LinearMap::identity(2));
  CHECK(id.completely_positive);
  CHECK(std::abs(id.margin) < 1e-12);
  const CpCheck tr = is_cp(LinearMap::transpose(2));
  CHECK_FALSE(tr.completely_positive);
  CHECK(tr.margin == doctest::Approx(-1.0));
  Rng rng(5);
  const CMatrix v = rng.gaussian(3, 2);
  CHECK(is_cp(LinearMap::conjugation(v)).completely_positive);

  SUBCASE("closed under composition") {
    for (int trial = 0; trial < 5; ++trial) {
      const LinearMap a = random_cp_map(rng, 2, 3, 2), b = random_cp_map(rng, 3, 2, 1);
      CHECK(is_cp(compose(b, a)).margin >= -2e-9);
    }
  }
  SUBCASE("adjoint preserves the margin") {
    const LinearMap a = random_cp_map(rng, 2, 3, 3);
    CHECK(std::abs(is_cp(adjoint_map(a)).margin - is_cp(a).margin) < 1e-10);
    const LinearMap w = random_map(rng, 2, 2) + adjoint_map(random_map(rng, 2, 2));
    const LinearMap h = LinearMap(2, 2, hermitian_part(w.choi()));
    CHECK(std::abs(is_cp(adjoint_map(h)).margin - is_cp(h).margin) < 1e-10);
  }
}

TEST_CASE("kraus decomposition") {
  Rng rng(7);
  SUBCASE("identity has a single operator proportional to I") {
    const KrausSet k = kraus(LinearMap::identity(2));
    REQUIRE(k.ops.size() == 1);
    const Complex phase = k.ops[0](0, 0);
    CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
    CHECK((k.ops[0] / phase - identity(2)).norm() < 1e-12);
  }
  SUBCASE("conjugation recovers v up to phase") {
    const CMatrix v = rng.gaussian(3, 2);
    const KrausSet k = kraus(LinearMap(2, 3, LinearMap::conjugation(v).choi()));
    REQUIRE(k.ops.size() == 1);
    const Complex ph = (v.adjoint() * k.ops[0]).trace();
    CHECK((k.ops[0] - v * (ph / std::abs(ph))).norm() < 1e-10);
  }
  SUBCASE("random CP reconstruction") {
    for (int trial = 0; trial < 5; ++trial) {
      const LinearMap u = random_cp_map(rng, 3, 2);
      const KrausSet k = kraus(u);
      for (int s = 0; s < 3; ++s) {
        const CMatrix x = rng.gaussian(3, 3);
        CHECK((k.apply(x) - u.apply(x)).norm() < 1e-8);
      }
      for (std::size_t i = 1; i < k.ops.size(); ++i) {
        CHECK(k.ops[i].norm() <= k.ops[i - 1].norm() + 1e-12);
      }
    }
  }
  SUBCASE("non-CP input rejected") {
    CHECK_THROWS_AS(kraus(LinearMap::transpose(2)), std::invalid_argument);
  }
}

TEST_CASE("bilinear adjoint") {
  Rng rng(9);
  const LinearMap u = random_map(rng, 3, 2);
  const LinearMap us = adjoint_map(u);
  // tr(u(x) y^t) = tr(x u*(y)^t) on basis elements.
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const CMatrix x = unit(3, i, j), y = unit(2, a, b);
          const Complex lhs = (u.apply(x) * y.transpose()).trace();
          const Complex rhs = (x * us.apply(y).transpose()).trace();
          CHECK(std::abs(lhs - rhs) < 1e-10);
        }
      }
    }
  }
  CHECK((adjoint_map(us).choi() - u.choi()).norm() == 0.0);
  CHECK((adjoint_map(LinearMap::identity(3)).choi() - LinearMap::identity(3).choi()).norm() == 0.0);

  const CMatrix a = rng.gaussian(2, 3), b = rng.gaussian(3, 2);
  const LinearMap expected = LinearMap::two_sided(a.transpose(), b.transpose());
  CHECK((adjoint_map(LinearMap::two_sided(a, b)).choi() - expected.choi()).norm() < 1e-12);
  CHECK((us.image_of_identity() - u.adjoint_image_of_identity()).norm() < 1e-12);
}

TEST_CASE("tensor amplification helpers") {
  Rng rng(10);
  const LinearMap u = random_map(rng, 2, 3);
  const CMatrix a = rng.gaussian(2, 2), e = rng.gaussian(4, 4);
  const BlockMatrix x = BlockMatrix::elementary(a, e);
  CHECK((apply_outer(u, x).canonical() - kron(u.apply(a), e)).norm() < 1e-10);
  const CMatrix f = rng.gaussian(2, 2);
  const BlockMatrix z = BlockMatrix::elementary(e, f);
  CHECK((apply_inner(u, z).canonical() - kron(e, u.apply(f))).norm() < 1e-10);
  CHECK((tensor_identity(u, 4).apply(kron(a, e)) - kron(u.apply(a), e)).norm() < 1e-10);
  CHECK((identity_tensor(4, u).apply(kron(e, f)) - kron(e, u.apply(f))).norm() < 1e-10);
}

TEST_CASE("cb norm") {
  CHECK(cb_norm(LinearMap::identity(2)).value == doctest::Approx(1.0).epsilon(1e-5));
  const CbNormResult t = cb_norm(LinearMap::transpose(2));
  CHECK(t.status == SolveStatus::kOptimal);
  CHECK(t.value == doctest::Approx(2.0).epsilon(1e-5));
  Rng rng(11);
  // Level-2 amplification of the transpose reaches 2 at the swap unitary.
  CHECK(operator_norm(identity_tensor(2, LinearMap::transpose(2)).apply(LinearMap::transpose(2).choi())) ==
        doctest::Approx(2.0));
  CHECK(amplified_unitary_search(LinearMap::transpose(2), 2, 50, rng) <= t.value + 1e-6);

  SUBCASE("CP maps attain the norm at the identity") {
    for (int trial = 0; trial < 3; ++trial) {
      const LinearMap u = random_cp_map(rng, 2, 3);
      CHECK(cb_norm(u).value == doctest::Approx(operator_norm(u.image_of_identity())).epsilon(1e-5));
    }
  }
  SUBCASE("trace-class cb norm of a CP map is |u*(I)|") {
    const LinearMap u = random_cp_map(rng, 3, 2);
    CHECK(cb_norm_trace_class(u).value ==
          doctest::Approx(operator_norm(u.adjoint_image_of_identity())).epsilon(1e-5));
  }
  SUBCASE("stable under u (x) id_k") {
    const LinearMap u = random_map(rng, 2, 2);
    const double base = cb_norm(u).value;
    for (int k = 2; k <= 3; ++k) {
      CHECK(std::abs(cb_norm(tensor_identity(u, k)).value - base) <= 1e-5 * std::max(1.0, base));
    }
    CHECK(amplified_unitary_search(u, 2, 30, rng) <= base + 1e-6);
  }
  SUBCASE("minimum over a family") {
    // u = transpose + t * identity; the minimum cb norm is at most the value at t = 0.
    const AffineMapFamily fam{LinearMap::transpose(2), {LinearMap::identity(2)}};
    const CbNormResult r = min_cb_norm(fam);
    CHECK(r.value <= 2.0 + 1e-5);
    REQUIRE(r.coefficients.size() == 1);
    CHECK(cb_norm(fam.at(r.coefficients)).value == doctest::Approx(r.value).epsilon(1e-4));
  }
}

TEST_CASE("S_p operator norm brackets") {
  Rng rng(13);
  for (const PExponent p : {PExponent(1), PExponent(1.5), PExponent(2), PExponent(3), PExponent::infinity()}) {
    const NormBracket id = sp_op_norm(LinearMap::identity(3), p);
    CHECK(id.lower == doctest::Approx(1.0));
    CHECK(id.upper == doctest::Approx(1.0));
    const NormBracket un = sp_op_norm(LinearMap::conjugation(rng.unitary(3)), p);
    CHECK(un.lower == doctest::Approx(1.0));
    CHECK(un.upper == doctest::Approx(1.0));
  }
  SUBCASE("random CP map at p = 2") {
    const LinearMap u = random_cp_map(rng, 3, 3);
    const NormBracket b = sp_op_norm(u, PExponent(2));
    CHECK(b.lower <= b.upper + 1e-12);
    const double at_identity = schatten_norm(u.image_of_identity(), PExponent(2)) /
                               schatten_norm(identity(3), PExponent(2));
    CHECK(b.lower >= at_identity - 1e-12);
  }
  SUBCASE("non-CP map stays ordered") {
    const LinearMap u = random_map(rng, 2, 2);
    for (const PExponent p : {PExponent(1), PExponent(2), PExponent::infinity()}) {
      const NormBracket b = sp_op_norm(u, p);
      CHECK(b.lower <= b.upper * (1 + 1e-6));
    }
  }
}
