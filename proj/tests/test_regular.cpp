#include <doctest.h>

#include <cmath>

#include "regop/regular.hpp"

using namespace regop;

namespace {

RegularOptions quick(int levels = 2) {
  RegularOptions o;
  o.levels = levels;
  o.restarts = 2;
  o.max_steps = 25;
  o.refine_budget = 30;
  return o;
}

bool is_zero_map(const LinearMap& u, double tol) { return u.choi().norm() <= tol; }

}  // namespace

TEST_CASE("regular lower bounds on simple maps") {
  for (const PExponent p : {PExponent(1), PExponent(2), PExponent::infinity()}) {
    const RegularLower id = regular_lower(LinearMap::identity(2), p, quick(3));
    REQUIRE(id.levels.size() == 3);
    for (double v : id.levels) {
      CHECK(v >= 1.0 - 1e-6);
      CHECK(v <= 1.0 + 1e-6);
    }
    Rng rng(1);
    const RegularLower un = regular_lower(LinearMap::conjugation(rng.unitary(2)), p, quick(2));
    for (double v : un.levels) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
  }
  const RegularLower t = regular_lower(LinearMap::transpose(2), PExponent::infinity(), quick(2));
  CHECK(t.value >= 1.99);
  CHECK(t.levels[0] <= 1.0 + 1e-9);  // transpose is an isometry at level 1
}

TEST_CASE("regular upper bounds") {
  for (const PExponent p : {PExponent(1), PExponent(2), PExponent(4)}) {
    CHECK(regular_upper(LinearMap::identity(2), p, quick()).value <= 1.0 + 1e-5);
  }
  CHECK(regular_upper(LinearMap::transpose(2), PExponent::infinity()).value ==
        doctest::Approx(2.0).epsilon(1e-4));
  Rng rng(2);
  for (int trial = 0; trial < 3; ++trial) {
    const LinearMap u = random_cp_map(rng, 2, 2);
    const double bound = std::max(operator_norm(u.image_of_identity()),
                                  operator_norm(u.adjoint_image_of_identity()));
    for (const PExponent p : {PExponent(1), PExponent(3), PExponent::infinity()}) {
      CHECK(regular_upper(u, p, quick()).value <= bound + 1e-5);
    }
  }
  SUBCASE("CP contractions") {
    const LinearMap u = random_cp_map(rng, 3, 3, 2);
    const double s = std::max(operator_norm(u.image_of_identity()),
                              operator_norm(u.adjoint_image_of_identity()));
    const LinearMap c = u * Complex(1.0 / s, 0.0);
    CHECK(regular_upper(c, PExponent(2), quick()).value <= 1.0 + 1e-5);
  }
}

TEST_CASE("brackets are sound and levels monotone") {
  Rng rng(3);
  for (int trial = 0; trial < 2; ++trial) {
    const LinearMap u = random_map(rng, 2, 2);
    for (const PExponent p : {PExponent(1), PExponent(1.5), PExponent(3), PExponent::infinity()}) {
      const RegularReport r = regular_bracket(u, p, quick());
      CHECK(r.lower.value <= r.upper.value + 1e-5);
      for (std::size_t k = 1; k < r.lower.levels.size(); ++k) {
        CHECK(r.lower.levels[k] >= r.lower.levels[k - 1]);
      }
    }
  }
}

TEST_CASE("endpoint collapse and adjoint symmetry") {
  Rng rng(4);
  const LinearMap u = random_map(rng, 2, 2);
  const double cb = cb_norm(u).value;
  CHECK(regular_upper(u, PExponent::infinity()).value == doctest::Approx(cb).epsilon(1e-9));
  CHECK(regular_lower(u, PExponent::infinity(), quick(4)).value >= 0.99 * cb);

  const PExponent p(4.0 / 3.0);
  const RegularReport a = regular_bracket(u, p, quick());
  const RegularReport b = regular_bracket(adjoint_map(u), p.conjugate(), quick());
  CHECK(a.lower.value <= b.upper.value + 1e-5);
  CHECK(b.lower.value <= a.upper.value + 1e-5);
}

TEST_CASE("amplified Schatten norms stay below the regular upper bound") {
  Rng rng(5);
  const LinearMap u = random_map(rng, 2, 2);
  for (const PExponent p : {PExponent(1.5), PExponent(3)}) {
    const double up = regular_upper(u, p, quick()).value;
    for (int k = 1; k <= 2; ++k) {
      SchattenSearchOptions so;
      so.restarts = 3;
      const double lower = schatten_ratio_lower(identity_tensor(k, u), p, p, so);
      CHECK(lower <= up + 1e-5);
    }
  }
}

TEST_CASE("CP decomposition") {
  Rng rng(6);
  SUBCASE("random maps recombine exactly") {
    for (int trial = 0; trial < 3; ++trial) {
      const LinearMap u = random_map(rng, 2, 3);
      const Decomposition d = decompose_cp(u, PExponent(2));
      for (const LinearMap& part : d.parts) CHECK(is_cp(part, 1e-7).completely_positive);
      CHECK((d.recombine().choi() - u.choi()).norm() <= 1e-7);
      CHECK(d.certificate >= regular_lower(u, PExponent(2), quick(1)).value - 1e-6);
      CHECK(regular_upper(u, PExponent(2), quick()).decomposition_value ==
            doctest::Approx(d.certificate).epsilon(1e-9));
    }
  }
  SUBCASE("Hermitian-preserving difference of CP maps") {
    // Choi with eigenvalues +1 and -1: transpose on M_2.
    const Decomposition d = decompose_cp(LinearMap::transpose(2), PExponent(2));
    CHECK(is_zero_map(d.parts[2], 1e-6));
    CHECK(is_zero_map(d.parts[3], 1e-6));
    const CMatrix h = LinearMap::transpose(2).choi();
    const auto [pos, neg] = std::pair{project_psd(h), CMatrix(project_psd(h) - h)};
    CHECK((d.parts[0].choi() - d.parts[1].choi() - (pos - neg)).norm() < 1e-7);
  }
  SUBCASE("CP input") {
    const LinearMap u = random_cp_map(rng, 2, 2);
    const Decomposition d = decompose_cp(u, PExponent(3));
    CHECK(is_zero_map(d.parts[1], 1e-6));
    CHECK(is_zero_map(d.parts[2], 1e-6));
    CHECK(is_zero_map(d.parts[3], 1e-6));
    const Decomposition di = decompose_cp(u * Complex(0.0, 1.0), PExponent(3));
    CHECK(is_zero_map(di.parts[0], 1e-6));
    CHECK(is_zero_map(di.parts[1], 1e-6));
    CHECK(is_zero_map(di.parts[3], 1e-6));
  }
}

TEST_CASE("rho norm") {
  const PairingElement scalar{BlockMatrix(1, 1, CMatrix::Constant(1, 1, Complex(-3.0, 4.0))), PExponent(2)};
  CHECK(rho_upper(scalar).value == doctest::Approx(5.0).epsilon(1e-9));
  for (const PExponent p : {PExponent(1), PExponent(1.5), PExponent(2), PExponent(3), PExponent::infinity()}) {
    const PairingElement e{BlockMatrix::elementary(unit(2, 0, 0), unit(2, 0, 0)), p};
    CHECK(rho_upper(e).value == doctest::Approx(1.0).epsilon(1e-7));
  }
  Rng rng(7);
  SUBCASE("infinite exponent matches the exchanged S_1 norm") {
    const PairingElement a{BlockMatrix(2, 2, rng.gaussian(4, 4)), PExponent::infinity()};
    const double expected = vnorm_upper(exchange_roles(a.body), PExponent(1)).first;
    CHECK(std::abs(rho_upper(a).value - expected) <= 1e-4 * expected);
  }
  SUBCASE("witness reconstructs and the norm axioms hold") {
    for (const PExponent p : {PExponent(2), PExponent(3)}) {
      const PairingElement a{BlockMatrix(2, 2, rng.gaussian(4, 4)), p};
      const PairingElement b{BlockMatrix(2, 2, rng.gaussian(4, 4)), p};
      const RhoWitness wa = rho_upper(a, 2, 3), wb = rho_upper(b, 2, 3);
      CHECK((wa.reconstruct() - a.body.body).norm() <= 1e-8 * a.body.body.norm());
      const PairingElement s{BlockMatrix(2, 2, a.body.body + b.body.body), p};
      CHECK(rho_upper(s, 2, 3, {{wa.alpha, wa.beta}, {wb.alpha, wb.beta}}).value <= wa.value + wb.value + 1e-5);
      const Complex lambda(0.6, -2.0);
      const PairingElement l{BlockMatrix(2, 2, lambda * a.body.body), p};
      CHECK(std::abs(rho_upper(l, 2, 3).value - std::abs(lambda) * wa.value) <= 1e-6);
    }
  }
}

TEST_CASE("pairing and duality") {
  const PairingElement e{BlockMatrix::elementary(unit(2, 0, 0), unit(2, 0, 0)), PExponent(2)};
  CHECK(std::abs(pairing_value(LinearMap::identity(2), e) - 1.0) < 1e-14);
  const DualityCheck id = duality_check(LinearMap::identity(2), e, quick());
  CHECK(id.holds);
  CHECK(id.rho * id.regular == doctest::Approx(1.0).epsilon(1e-5));

  Rng rng(8);
  const LinearMap u = random_map(rng, 2, 2);
  CHECK(std::abs(pairing_value(u, PairingElement{BlockMatrix::zero(2, 2), PExponent(2)})) == 0.0);
  CHECK_THROWS_AS(pairing_value(u, PairingElement{BlockMatrix::zero(3, 2), PExponent(2)}), std::invalid_argument);
  for (int trial = 0; trial < 2; ++trial) {
    const PairingElement a{BlockMatrix(2, 2, rng.gaussian(4, 4)), PExponent(2)};
    const DualityCheck c = duality_check(u, a, quick());
    CHECK(std::abs(c.direct - c.factored) <= 1e-9 * std::max(1.0, std::abs(c.direct)));
    CHECK(c.holds);
  }
  SUBCASE("trace pairing is dominated by the S_1 norm") {
    for (int trial = 0; trial < 5; ++trial) {
      const BlockMatrix z(2, 2, rng.gaussian(4, 4));
      CHECK(std::abs(trace_pair(z)) <= vnorm_upper(z, PExponent(1)).first + 1e-6);
    }
  }
}

TEST_CASE("subspace bases") {
  const SubspaceBasis t = SubspaceBasis::upper_triangular(2);
  CHECK(t.elements.size() == 3);
  CHECK(t.complement().size() == 1);
  const CMatrix c = t.complement()[0];
  CHECK(std::abs(std::abs(c(1, 0)) - 1.0) < 1e-12);
  const LinearMap pr = t.projection();
  CHECK((pr.apply(unit(2, 1, 0))).norm() < 1e-12);
  CHECK((pr.apply(unit(2, 0, 1)) - unit(2, 0, 1)).norm() < 1e-12);
  SubspaceBasis bad{2, {unit(2, 0, 0), unit(2, 0, 0) * 2.0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("regular extension") {
  Rng rng(9);
  SUBCASE("full space returns the map") {
    const LinearMap u = random_map(rng, 2, 2);
    const SubspaceBasis f = SubspaceBasis::full(2);
    std::vector<CMatrix> imgs;
    for (const CMatrix& e : f.elements) imgs.push_back(u.apply(e));
    const ExtensionResult r = extend(f, imgs, 2, PExponent::infinity(), quick());
    CHECK((r.extension.choi() - u.choi()).norm() < 1e-10);
    CHECK(std::abs(r.gap()) <= 1e-5 * r.upper.value);
  }
  SUBCASE("corner entry") {
    const ExtensionResult r = extend(SubspaceBasis{2, {unit(2, 0, 0)}}, {unit(2, 0, 0)}, 2, PExponent(2), quick());
    CHECK(r.restriction_residual <= 1e-8);
    CHECK(r.upper.value <= 1.0 + 1e-4);
    CHECK(r.subspace_lower.value == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("upper triangular subspace") {
    const LinearMap v = random_cp_map(rng, 2, 2);
    const SubspaceBasis t = SubspaceBasis::upper_triangular(2);
    std::vector<CMatrix> imgs;
    for (const CMatrix& e : t.elements) imgs.push_back(v.apply(e));
    for (const PExponent p : {PExponent(1), PExponent(2)}) {
      const ExtensionResult r = extend(t, imgs, 2, p, quick(), &v);
      CHECK(r.restriction_residual <= 1e-8);
      CHECK(r.upper.value <= regular_upper(v, p, quick()).value + 1e-9);
      CHECK(r.gap() >= -1e-5);
      CHECK(r.gap() <= 0.15 * r.subspace_lower.value);
    }
  }
}

TEST_CASE("lattice oracle") {
  CHECK(lattice_regular_oracle(LinearMap::diagonal(CMatrix::Identity(3, 3)), PExponent(2)) ==
        doctest::Approx(1.0));
  CMatrix m(2, 2);
  m << 1.0, -1.0, 0.0, 1.0;
  CHECK(lattice_regular_oracle(LinearMap::diagonal(m), PExponent::infinity()) == doctest::Approx(2.0));
  Rng rng(10);
  const CMatrix pos = rng.gaussian(3, 3).cwiseAbs().cast<Complex>();
  double col = 0.0;
  for (int j = 0; j < 3; ++j) col = std::max(col, pos.col(j).cwiseAbs().sum());
  CHECK(lattice_regular_oracle(LinearMap::diagonal(pos), PExponent(1)) == doctest::Approx(col));
  // At p = 2 the value is the largest singular value of |M|.
  const CMatrix g = rng.gaussian(3, 3);
  const double sv = operator_norm(g.cwiseAbs().cast<Complex>());
  CHECK(lattice_regular_oracle(LinearMap::diagonal(g), PExponent(2)) == doctest::Approx(sv).epsilon(1e-9));
  CHECK_THROWS_AS(lattice_regular_oracle(LinearMap::identity(2), PExponent(2)), std::invalid_argument);

  SUBCASE("regular bracket of the embedded map contains the lattice value") {
    const LinearMap u = LinearMap::diagonal(rng.gaussian(2, 2));
    for (const PExponent p : {PExponent(1), PExponent::infinity()}) {
      const RegularReport r = regular_bracket(u, p, quick(1));
      const double v = lattice_regular_oracle(u, p);
      CHECK(r.lower.value <= v + 1e-3);
      CHECK(r.upper.value >= v - 1e-3);
      CHECK(r.upper.value - r.lower.value <= 1e-3);
    }
  }
}
