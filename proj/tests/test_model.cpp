#include <catch2/catch_amalgamated.hpp>

#include "sfent/model.hpp"
#include "sfent/validate.hpp"
#include "test_helpers.hpp"

using namespace sfent;
using namespace testutil;
using Catch::Approx;

TEST_CASE("system rejects non-Hermitian Hamiltonians", "[model]") {
  Matrix bad(2, 2);
  bad << 1, Complex(0, 1), Complex(0, 1), -1;  // (0,1) entry != conj of (1,0)
  REQUIRE_THROWS_AS(SmallSystem(bad), std::invalid_argument);
}

TEST_CASE("eigenprojections resolve the identity", "[model]") {
  for (unsigned seed : {1u, 2u, 3u}) {
    SmallSystem sys(random_hermitian(4, seed));
    Matrix sum = Matrix::Zero(4, 4);
    for (size_t a = 0; a < sys.num_levels(); ++a) {
      sum += sys.projector(a);
      for (size_t b = 0; b < sys.num_levels(); ++b) {
        const Matrix prod = sys.projector(a) * sys.projector(b);
        if (a == b)
          REQUIRE((prod - sys.projector(a)).cwiseAbs().maxCoeff() < 1e-10);
        else
          REQUIRE(prod.cwiseAbs().maxCoeff() < 1e-10);
      }
    }
    REQUIRE((sum - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("bohr frequencies of the two-level splitting", "[model]") {
  SmallSystem sys(pauli_z());
  const auto f = bohr_frequencies(sys, 1e-9);
  REQUIRE(f == std::vector<double>{-2.0, 0.0, 2.0});
}

TEST_CASE("bohr frequencies of a fully degenerate Hamiltonian", "[model]") {
  SmallSystem sys(Matrix::Zero(3, 3));
  REQUIRE(bohr_frequencies(sys) == std::vector<double>{0.0});
}

TEST_CASE("bohr frequencies of a three-level ladder", "[model]") {
  Matrix h = Matrix::Zero(3, 3);
  h(1, 1) = 1.0;
  h(2, 2) = 3.0;
  const auto f = bohr_frequencies(SmallSystem(h));
  REQUIRE(f == std::vector<double>{-3, -2, -1, 0, 1, 2, 3});
}

TEST_CASE("bohr frequency set contains 0 and is closed under negation", "[model]") {
  for (unsigned seed : {5u, 6u, 7u, 8u}) {
    SmallSystem sys(random_hermitian(5, seed));
    const auto f = bohr_frequencies(sys);
    REQUIRE(std::find(f.begin(), f.end(), 0.0) != f.end());
    for (double u : f)
      REQUIRE(std::find_if(f.begin(), f.end(), [&](double v) {
                return std::abs(v + u) < 1e-12;
              }) != f.end());
  }
}

TEST_CASE("jump components of sigma_x under sigma_z", "[model]") {
  SmallSystem sys(pauli_z());
  const Matrix q2 = jump_component(pauli_x(), sys, 2.0);
  // E' - E = 2 picks the component mapping the lower level to the upper one
  const Matrix up = sys.projector(1) * pauli_x() * sys.projector(0);
  REQUIRE((q2 - up).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((q2.adjoint() - jump_component(pauli_x(), sys, -2.0)).cwiseAbs().maxCoeff() <
          1e-12);
  REQUIRE(jump_component(pauli_x(), sys, 0.0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero-frequency component is the diagonal part", "[model]") {
  Matrix h = Matrix::Zero(3, 3);
  h(1, 1) = 1.0;
  h(2, 2) = 3.0;  // nondegenerate, eigenbasis = computational basis
  SmallSystem sys(h);
  const Matrix q = random_hermitian(3, 11);
  const Matrix q0 = jump_component(q, sys, 0.0);
  REQUIRE((q0 - Matrix(q.diagonal().asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("jump components reconstruct the coupling operator", "[model]") {
  SmallSystem sys(pauli_z());
  const Matrix q = pauli_x() + pauli_z();
  Matrix sum = Matrix::Zero(2, 2);
  for (double u : {-2.0, 0.0, 2.0}) sum += jump_component(q, sys, u);
  REQUIRE((sum - q).cwiseAbs().maxCoeff() < 1e-12);

  for (unsigned seed : {21u, 22u}) {
    SmallSystem rsys(random_hermitian(4, seed));
    const Matrix rq = random_hermitian(4, seed + 100);
    Matrix rsum = Matrix::Zero(4, 4);
    for (double u : bohr_frequencies(rsys)) rsum += jump_component(rq, rsys, u);
    REQUIRE((rsum - rq).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("jump component errors off resonance", "[model]") {
  SmallSystem sys(pauli_z());
  REQUIRE_THROWS_WITH(jump_component(pauli_x(), sys, 1.0),
                      Catch::Matchers::ContainsSubstring("no resonant transition"));
}

TEST_CASE("validation passes on the two-level two-bath model", "[model]") {
  const auto model = simplest_model(1.0, 2.0, 0.2, unit_at_two_density());
  const auto report = validate(model);
  for (const auto& c : report.checks) {
    INFO(c.name << " measured " << c.measured);
    CHECK(c.passed);
  }
  REQUIRE(report.all_passed());
  REQUIRE(report.time_reversal_invariant);
  REQUIRE_FALSE(report.equal_temperatures);
}

TEST_CASE("identity coupling fails the commutant check", "[model]") {
  std::vector<ReservoirSpec> res;
  res.push_back(ReservoirSpec(
      1.0, {CouplingChannel(Matrix::Identity(2, 2), {unit_at_two_density()})}));
  ModelSpec model(SmallSystem(pauli_z()), std::move(res), 0.1);
  const auto report = validate(model);
  REQUIRE_FALSE(report.all_passed());
  REQUIRE_FALSE(report.find("commutant-trivial")->passed);
}

TEST_CASE("vanishing density fails the golden-rule check", "[model]") {
  const auto model =
      simplest_model(1.0, 2.0, 0.2, SpectralDensity::flat_exp(0.0, 1.0));
  const auto report = validate(model);
  REQUIRE_FALSE(report.find("golden-rule-rates")->passed);
}

TEST_CASE("equal temperatures are flagged", "[model]") {
  const auto model = simplest_model(1.3, 1.3, 0.2, unit_at_two_density());
  REQUIRE(validate(model).equal_temperatures);
}

TEST_CASE("complex couplings are not time-reversal invariant", "[model]") {
  const auto model = three_level_model();
  const auto report = validate(model);
  REQUIRE_FALSE(report.time_reversal_invariant);
  REQUIRE_FALSE(report.find("time-reversal-reality")->passed);
  REQUIRE(report.find("commutant-trivial")->passed);
}

TEST_CASE("validation is deterministic", "[model]") {
  const auto model = simplest_model(1.0, 2.0, 0.2, unit_at_two_density());
  const auto r1 = validate(model);
  const auto r2 = validate(model);
  REQUIRE(r1.checks.size() == r2.checks.size());
  for (size_t i = 0; i < r1.checks.size(); ++i) {
    REQUIRE(r1.checks[i].passed == r2.checks[i].passed);
    REQUIRE(r1.checks[i].measured == r2.checks[i].measured);
  }
}

TEST_CASE("dimension mismatch is a structural error", "[model]") {
  std::vector<ReservoirSpec> res;
  res.push_back(
      ReservoirSpec(1.0, {CouplingChannel(random_hermitian(3, 1), {unit_at_two_density()})}));
  REQUIRE_THROWS_AS(ModelSpec(SmallSystem(pauli_z()), std::move(res), 0.1),
                    std::invalid_argument);
}

TEST_CASE("tabulated densities interpolate and validate", "[model]") {
  std::vector<double> us, js;
  for (int i = -40; i <= 40; ++i) {
    us.push_back(0.25 * i);
    js.push_back(std::exp(-std::abs(0.25 * i)));
  }
  auto d = SpectralDensity::tabulated(us, js, {1.0, 1.0, 0.0});
  REQUIRE(d.symmetric());
  REQUIRE(d(0.125) == Approx(0.5 * (1.0 + std::exp(-0.25))).epsilon(1e-12));
  REQUIRE(d(11.0) == 0.0);
  REQUIRE_THROWS(SpectralDensity::tabulated({0.0, 0.0}, {1.0, 1.0}, {1, 1, 0}));
  REQUIRE_THROWS(SpectralDensity::tabulated({0.0, 1.0}, {1.0, -1.0}, {1, 1, 0}));
}
