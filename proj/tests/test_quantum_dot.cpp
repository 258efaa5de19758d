#include <doctest.h>

#include <random>

#include "ncdel/quantum_dot.hpp"

using namespace ncdel;

namespace {

ModelParams model(double phi, double E = 0.0, double gamma = 1.0) {
  ModelParams p;
  p.phi = phi;
  p.E = E;
  p.gamma = gamma;
  return p;
}

}  // namespace

TEST_CASE("phi = 0 closed form") {
  CHECK(density_phi0(0.0, 1.0, 0.5) == doctest::Approx(2.0 / M_PI).epsilon(1e-14));
  for (double l : {0.05, 0.3, 0.77})
    CHECK(density_phi0(0.0, 1.0, l) == doctest::Approx(1.0 / (M_PI * std::sqrt(l * (1.0 - l)))).epsilon(1e-12));
  CHECK(density_phi0(0.7, 1.5, 0.3) == doctest::Approx(density_phi0(-0.7, 1.5, 0.3)).epsilon(1e-14));
  CHECK(density_point(model(0.0), 0.5).rho == doctest::Approx(2.0 / M_PI).epsilon(1e-12));
}

TEST_CASE("Fano factor at phi = 0") {
  CHECK(std::abs(fano_phi0(0.0, 1.0) - 0.25) <= 1e-12);
  CHECK(fano_phi0(1.0, 2.0) == doctest::Approx(5.0 / (10.0 + 4.0 * std::sqrt(3.0))).epsilon(1e-12));
  CHECK(std::abs(fano(model(0.0)) - 0.25) <= 1e-12);
}

TEST_CASE("frozen numerical values") {
  CHECK(fano(model(0.5)) == doctest::Approx(0.25315088632738214).epsilon(1e-8));
  CHECK(fano(model(1.0)) == doctest::Approx(0.25281285638293238).epsilon(1e-8));
  CHECK(density_point(model(1.0), 0.5).rho == doctest::Approx(0.57764921286332216).epsilon(1e-7));
  CHECK(density_point(model(1.0), 0.1).rho == doctest::Approx(1.0467615331310256).epsilon(1e-7));
  const Moments mo = moments(model(1.0));
  CHECK(mo.m0 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mo.m1 == doctest::Approx(0.45631098730766817).epsilon(1e-8));
  CHECK(mo.m2 == doctest::Approx(0.34094970320750057).epsilon(1e-8));
  const Moments half = moments(model(0.5));
  CHECK(half.m1 == doctest::Approx(0.49024466750637491).epsilon(1e-8));
  CHECK(half.m2 == doctest::Approx(0.36613879540986333).epsilon(1e-8));
}

TEST_CASE("contour and split moments agree") {
  const Moments a = moments(model(1.0));
  const Moments b = moments_split(model(1.0));
  CHECK(std::abs(a.m1 - b.m1) <= 1e-4);
  CHECK(std::abs(a.m2 - b.m2) <= 1e-4);
}

TEST_CASE("reduced solution identities at phi = 1") {
  for (double gamma : {0.5, 2.0})
    for (double E : {-0.5, 1.0})
      for (cplx z : {cplx(0.3, 0.01), cplx(1.2, 0.5)}) {
        const ModelParams p = model(1.0, E, gamma);
        const ReducedSolution s = solve_reduced(p, z);
        const IdentityResiduals r = identity_residuals(p, s);
        CHECK(r.m22_relation <= 1e-8);
        CHECK(r.m21_relation <= 1e-8);
        CHECK(r.det_m1 <= 1e-8);
        CHECK(r.det_m2 <= 1e-8);
        CHECK(r.det_m3_quadratic <= 1e-8);
        CHECK(r.m1_corner <= 1e-8);
        CHECK(min_imag_eigenvalue(s.M3) >= -1e-10);
      }
}

TEST_CASE("local slope near 0 at phi = 1") {
  const ModelParams p = model(1.0);
  const double a = density_point(p, 1e-4).rho, b = density_point(p, 1e-5).rho;
  const double slope = std::log(a / b) / std::log(10.0);
  CHECK(slope > -0.70);
  CHECK(slope < -0.63);
}

TEST_CASE("E parity") {
  for (double phi : {0.5, 1.0})
    for (double l : {0.2, 0.6}) {
      const double a = density_point(model(phi, 0.7), l).rho;
      const double b = density_point(model(phi, -0.7), l).rho;
      CHECK(std::abs(a - b) <= 1e-9);
    }
}

TEST_CASE("support") {
  for (double phi : {0.5, 1.0})
    for (double l : {-0.05, 1.05}) CHECK(density_point(model(phi), l).rho <= 1e-6);
}

TEST_CASE("edge asymptotics") {
  const EdgeAsymptotics a1 = edge_asymptotics(model(1.0));
  CHECK(std::abs(a1.xi0_at_1 + std::sqrt(2.0 * std::sqrt(8.0) - 4.0)) <= 1e-10);
  CHECK(a1.exponent_at_0 == doctest::Approx(-2.0 / 3.0));
  CHECK(a1.prefactor_at_0 == doctest::Approx(std::cbrt(0.25) / M_PI).epsilon(1e-12));
  CHECK(a1.branch_factor_at_0 == doctest::Approx(std::sqrt(3.0) / 2.0));
  const EdgeAsymptotics a5 = edge_asymptotics(model(0.5));
  CHECK(a5.exponent_at_0 == doctest::Approx(-0.5));
  CHECK(a5.prefactor_at_0 == doctest::Approx(0.3376186185589148).epsilon(1e-10));

  const EdgeAsymptotics tiny = edge_asymptotics(model(1e-4));
  CHECK(std::abs(tiny.prefactor_at_0 - 1.0 / M_PI) * M_PI <= 1e-3);

  CHECK_FALSE(edge_asymptotics(model(1.0, 5.0)).edge_at_1_valid);
}

TEST_CASE("sextic roots") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> ue(-2.0, 2.0), up(0.01, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double E = ue(rng), phi = up(rng);
    const double u = sextic_root(E, phi);
    CHECK(u > 0.0);
    CHECK(std::abs(sextic_residual(E, phi, std::sqrt(u))) <= 1e-10);
  }
}

TEST_CASE("coefficient at 0 matches the prefactor") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ue(-1.5, 1.5), up(0.05, 0.95), ug(0.5, 2.5);
  for (int i = 0; i < 10; ++i) {
    const EdgeAsymptotics a = edge_asymptotics(model(up(rng), ue(rng), ug(rng)));
    CHECK(std::abs(a.coefficient_at_0.imag() - M_PI * a.prefactor_at_0) <= 1e-9);
  }
}

TEST_CASE("edge amplitude at phi = 1/2") {
  const ModelParams p = model(0.5);
  const double pref = edge_asymptotics(p).prefactor_at_0;
  const double l = 1e-6;
  CHECK(density_point(p, l).rho * std::sqrt(l) == doctest::Approx(pref).epsilon(0.01));
}

TEST_CASE("ideal coupling mean") {
  CHECK(std::abs(scattering_mean_phi0(0.0, 1.0)) <= 1e-14);
  CHECK(std::abs(scattering_mean_phi0(0.0, 2.0) - cplx(-1.0 / 3.0, 0.0)) <= 1e-14);
  CHECK(std::abs(scattering_mean_phi0(0.3, 1.0)) > 1e-3);
}

TEST_CASE("regularized path") {
  ModelParams p = model(0.3, 0.5, 2.0);
  p.kappa = 1e-3;
  const DensityCurve c = density(p, {0.2, 0.5, 0.8});
  CHECK(c.invalid_count() == 0);
  for (double r : c.rho) CHECK(r > 0.0);
}

TEST_CASE("invalid parameters") {
  CHECK_THROWS_AS(model(1.5).validate(), InvalidParams);
  CHECK_THROWS_AS(model(0.5, 0.0, -1.0).validate(), InvalidParams);
}
