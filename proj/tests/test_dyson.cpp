#include <doctest.h>

#include "ncdel/dyson.hpp"
#include "ncdel/quantum_dot.hpp"

using namespace ncdel;

namespace {

DysonProblem semicircle() {
  DysonProblem pb;
  pb.m = 1;
  pb.k = 1;
  pb.K0 = MatrixXc::Zero(1, 1);
  SparseXc one(1, 1);
  one.insert(0, 0) = 1.0;
  pb.K.push_back(one);
  return pb;
}

cplx m_sc(cplx z) {
  cplx s = std::sqrt(z * z - 4.0);
  if (s.imag() * z.imag() < 0.0) s = -s;
  return (-z + s) / 2.0;
}

}  // namespace

TEST_CASE("semicircle at z = i") {
  const DysonSolution s = solve_del(semicircle(), {0.0, 1.0});
  CHECK(std::abs(s.M(0, 0) - cplx(0.0, (std::sqrt(5.0) - 1.0) / 2.0)) <= 1e-10);
  CHECK(s.residual <= 1e-11);
  CHECK(s.min_im_eig > 0.0);
}

TEST_CASE("exact solution has vanishing residual") {
  const cplx z(0.3, 0.7);
  MatrixXc M(1, 1);
  M(0, 0) = m_sc(z);
  CHECK(del_residual(semicircle(), z, M) < 1e-14);
}

TEST_CASE("self-energy") {
  const DysonProblem pb = DysonProblem::from_pencil(quantum_dot_pencil(1.0, {0.0, 0.0}));
  CHECK(apply_self_energy(pb, MatrixXc::Zero(pb.m, pb.m)).norm() == 0.0);

  const MatrixXc S = apply_self_energy(pb, MatrixXc::Identity(pb.m, pb.m));
  CHECK((S - S.adjoint()).norm() <= 1e-14);
  const QuantumDotLayout lay{1, 1};
  for (int a = 0; a < pb.m; ++a)
    for (int b = 0; b < pb.m; ++b) {
      const int ga = a < 3 ? 0 : (a < 6 ? 1 : 2);
      const int gb = b < 3 ? 0 : (b < 6 ? 1 : 2);
      if (ga != gb) CHECK(std::abs(S(a, b)) == 0.0);
    }
  CHECK(lay.group3(0, 0) == 6);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  MatrixXc A(pb.m, pb.m);
  for (int i = 0; i < pb.m; ++i)
    for (int j = 0; j < pb.m; ++j) A(i, j) = cplx(g(rng), g(rng));
  const MatrixXc P = A * A.adjoint();
  const MatrixXc SP = apply_self_energy(pb, P);
  Eigen::SelfAdjointEigenSolver<MatrixXc> es((SP + SP.adjoint()) / 2.0);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("stability operator") {
  const DysonProblem pb = semicircle();
  const double far = stability_operator_inverse_norm(pb, solve_del(pb, {0.0, 3.0}));
  CHECK(std::isfinite(far));
  CHECK(far < 2.0);
  CHECK(stability_operator_inverse_norm(pb, solve_del(pb, {0.0, 10.0})) == doctest::Approx(1.0).epsilon(0.1));
  double prev = 0.0;
  for (double eta : {1.0, 0.1, 0.01}) {
    const double v = stability_operator_inverse_norm(pb, solve_del(pb, {2.0, eta}));
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("stability matrix is the linearized defect") {
  const DysonProblem pb = DysonProblem::from_pencil(quantum_dot_pencil(1.2, {0.3, 0.0}));
  const cplx z(0.4, 0.2);
  const DysonSolution s = solve_del(pb, z);
  CHECK(s.residual <= 1e-11);
  const MatrixXc B = stability_matrix(pb, s.M);
  CHECK(B.rows() == pb.m * pb.m);
  MatrixXc R = MatrixXc::Zero(pb.m, pb.m);
  R(0, 1) = 1.0;
  R(6, 7) = cplx(0.0, 2.0);
  const MatrixXc direct = R - s.M * apply_self_energy(pb, R) * s.M;
  const Eigen::Map<const Eigen::VectorXcd> vr(R.data(), R.size());
  const Eigen::VectorXcd out = B * vr;
  const Eigen::Map<const MatrixXc> mapped(out.data(), pb.m, pb.m);
  CHECK((mapped - direct).norm() <= 1e-12);
}

TEST_CASE("continuation") {
  const DysonProblem pb = semicircle();
  const DysonSolution a = solve_del(pb, {0.5, 1.0});
  const DysonSolution b = continue_del(pb, a.z, a.M, {0.5, 0.01});
  CHECK(std::abs(b.M(0, 0) - m_sc({0.5, 0.01})) <= 1e-10);
}

TEST_CASE("extrapolation to eta = 0") {
  const std::vector<double> eta = {0.4, 0.2, 0.1};
  std::vector<double> v;
  for (double e : eta) v.push_back(2.0 - 3.0 * e + 5.0 * e * e);
  CHECK(extrapolate_to_zero(eta, v) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("Stieltjes inversion on the semicircle") {
  const DysonProblem pb = semicircle();
  const MatrixXc w = MatrixXc::Identity(1, 1);
  const DensityCurve c = stieltjes_invert(pb, w, {0.0, 1.0, 3.0}, {4e-4, 2e-4, 1e-4});
  CHECK(c.rho[0] == doctest::Approx(1.0 / M_PI).epsilon(1e-4));
  CHECK(c.rho[1] == doctest::Approx(std::sqrt(3.0) / (2.0 * M_PI)).epsilon(1e-4));
  CHECK(c.rho[2] <= 1e-6);
  CHECK(c.invalid_count() == 0);
}

TEST_CASE("full pencil DEL is Herglotz") {
  const DysonProblem pb = DysonProblem::from_pencil(quantum_dot_pencil(1.0, {0.0, 0.0}, 1, 2));
  for (double re : {0.1, 0.5, 0.9})
    for (double im : {1e-3, 0.1}) {
      const DysonSolution s = solve_del(pb, {re, im});
      CHECK(s.residual <= 1e-11);
      CHECK(s.min_im_eig >= -1e-10);
    }
}
