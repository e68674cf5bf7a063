#include <doctest.h>

#include <cmath>

#include "regop/cp.hpp"
#include "regop/vnorm.hpp"

using namespace regop;

namespace {

BlockMatrix random_block(Rng& rng, int n, int m) { return BlockMatrix(n, m, rng.gaussian(n * m, n * m)); }

// Polar factorization of a0 (x) e: a = u|a0|^{1/2}, b = |a0|^{1/2}, y = I (x) e.
double polar_oracle(const CMatrix& a0, const CMatrix& e, const PExponent& p) {
  Eigen::JacobiSVD<CMatrix> svd(a0, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const CMatrix w = svd.matrixU() * svd.matrixV().adjoint();
  const CMatrix h = svd.matrixV() * svd.singularValues().cast<Complex>().asDiagonal() *
                    svd.matrixV().adjoint();
  const CMatrix root = psd_power(h, 0.5);
  const CMatrix a = w * root;
  const int n = static_cast<int>(a0.rows());
  const CMatrix rec = kron(a, identity(static_cast<int>(e.rows()))) * kron(identity(n), e) *
                      kron(root, identity(static_cast<int>(e.rows())));
  REQUIRE((rec - kron(a0, e)).norm() < 1e-10);
  return schatten_norm(a, p.times(2.0)) * operator_norm(e) * schatten_norm(root, p.times(2.0));
}

const PExponent kExponents[] = {PExponent(1), PExponent(1.5), PExponent(2), PExponent(3),
                                PExponent::infinity()};

}  // namespace

TEST_CASE("scalar outer factor gives the operator norm") {
  Rng rng(1);
  const CMatrix e = rng.gaussian(3, 3);
  for (const PExponent& p : kExponents) {
    const VNormResult r = vnorm(BlockMatrix(1, 3, e), p);
    CHECK(r.bracket.lower == doctest::Approx(operator_norm(e)).epsilon(1e-9));
    CHECK(r.bracket.upper == doctest::Approx(operator_norm(e)).epsilon(1e-9));
  }
}

TEST_CASE("scalar inner factor gives the Schatten norm") {
  Rng rng(2);
  const CMatrix a = rng.gaussian(3, 3);
  for (const PExponent& p : kExponents) {
    const VNormResult r = vnorm(BlockMatrix(3, 1, a), p);
    CHECK(r.bracket.lower == doctest::Approx(schatten_norm(a, p)).epsilon(1e-7));
    CHECK(r.bracket.upper == doctest::Approx(schatten_norm(a, p)).epsilon(1e-7));
  }
}

TEST_CASE("elementary tensors") {
  Rng rng(3);
  for (const PExponent& p : kExponents) {
    const CMatrix a0 = rng.gaussian(2, 2), e = rng.gaussian(2, 2);
    const double oracle = polar_oracle(a0, e, p);
    CHECK(oracle == doctest::Approx(schatten_norm(a0, p) * operator_norm(e)).epsilon(1e-10));
    const VNormResult r = vnorm(BlockMatrix::elementary(a0, e), p);
    CHECK(r.bracket.upper <= oracle + 1e-6);
    CHECK(r.bracket.lower >= 0.95 * oracle);
  }
}

TEST_CASE("infinite exponent is exact") {
  Rng rng(4);
  const BlockMatrix x = random_block(rng, 3, 2);
  const VNormResult r = vnorm(x, PExponent::infinity());
  CHECK(std::abs(r.bracket.lower - operator_norm(x.body)) < 1e-9);
  CHECK(std::abs(r.bracket.upper - operator_norm(x.body)) < 1e-9);
  CHECK((r.factorization.a - identity(3)).norm() == 0.0);
  CHECK((r.factorization.b - identity(3)).norm() == 0.0);
}

TEST_CASE("bracket soundness, factorization and subgradient") {
  Rng rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    const BlockMatrix x = random_block(rng, 2, 2);
    for (const PExponent& p : kExponents) {
      const VNormResult r = vnorm(x, p);
      CHECK(r.bracket.lower <= r.bracket.upper + 1e-9);
      CHECK(r.bracket.lower > 0.0);
      const Factorization& f = r.factorization;
      CHECK((f.reconstruct() - x.body).norm() <= 1e-8 * x.body.norm());
      const double recomputed = schatten_norm(f.a, p.times(2.0)) * operator_norm(f.y.body) *
                                schatten_norm(f.b, p.times(2.0));
      CHECK(recomputed == doctest::Approx(r.bracket.upper).epsilon(1e-10));
      CHECK((r.subgradient.adjoint() * x.body).trace().real() ==
            doctest::Approx(r.bracket.lower).epsilon(1e-6));
    }
  }
}

TEST_CASE("unitary invariance") {
  Rng rng(6);
  const BlockMatrix x = random_block(rng, 2, 2);
  const CMatrix u = kron(rng.unitary(2), identity(2)), v = kron(rng.unitary(2), identity(2));
  const BlockMatrix y(2, 2, u * x.body * v);
  for (const PExponent& p : {PExponent(1), PExponent(2), PExponent(3)}) {
    const VNormResult rx = vnorm(x, p), ry = vnorm(y, p);
    CHECK(std::abs(rx.bracket.upper - ry.bracket.upper) < 1e-8);
    CHECK(std::abs(rx.bracket.lower - ry.bracket.lower) < 1e-8);
  }
}

TEST_CASE("contraction monotonicity") {
  Rng rng(7);
  const BlockMatrix x = random_block(rng, 2, 3);
  for (int trial = 0; trial < 3; ++trial) {
    CMatrix v = rng.gaussian(2, 3);
    v /= operator_norm(v);
    const LinearMap w = LinearMap::conjugation(v);
    REQUIRE(cb_norm(w).value <= 1.0 + 1e-6);
    const BlockMatrix wx = apply_inner(w, x);
    for (const PExponent& p : {PExponent(1), PExponent(2), PExponent(4)}) {
      CHECK(vnorm(wx, p).bracket.upper <= vnorm(x, p).bracket.upper + 1e-6);
    }
  }
}

TEST_CASE("triangle inequality of upper bounds") {
  Rng rng(8);
  for (int trial = 0; trial < 3; ++trial) {
    const BlockMatrix x = random_block(rng, 2, 2), y = random_block(rng, 2, 2);
    const BlockMatrix s(2, 2, x.body + y.body);
    for (const PExponent& p : {PExponent(1), PExponent(2), PExponent(3)}) {
      const double us = vnorm_upper(s, p, 4, 11).first;
      CHECK(us <= vnorm_upper(x, p, 4, 11).first + vnorm_upper(y, p, 4, 11).first + 1e-6);
    }
  }
}

TEST_CASE("fubini reshuffle") {
  CHECK((fubini_reshuffle(BlockMatrix(4, 2, identity(8)), 2, 2).body - identity(8)).norm() == 0.0);
  Rng rng(9);
  const CMatrix a = rng.gaussian(2, 2), b = rng.gaussian(3, 3), e = rng.gaussian(2, 2);
  const BlockMatrix x(6, 2, kron(kron(a, b), e));
  const BlockMatrix r = fubini_reshuffle(x, 2, 3);
  CHECK((r.body - kron(kron(b, a), e)).norm() < 1e-12);
  CHECK((fubini_reshuffle(r, 3, 2).body - x.body).norm() == 0.0);
  CHECK_THROWS_AS(fubini_reshuffle(x, 4, 2), std::invalid_argument);

  const BlockMatrix z(4, 2, rng.gaussian(8, 8));
  const NormBracket before = vnorm(z, PExponent(2)).bracket;
  const NormBracket after = vnorm(fubini_reshuffle(z, 2, 2), PExponent(2)).bracket;
  CHECK(before.lower <= after.upper + 1e-9);
  CHECK(after.lower <= before.upper + 1e-9);
}
