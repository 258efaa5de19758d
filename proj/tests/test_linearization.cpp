#include <doctest.h>

#include "ncdel/linearization.hpp"

using namespace ncdel;

namespace {

double reconstruction_error(const Expr& e, const Pencil& p, int n, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const EvalContext ctx = random_context(variables(e), n, rng);
    const MatrixXc direct = evaluate(e, ctx);
    const MatrixXc rec = schur_reconstruct(p, ctx);
    worst = std::max(worst, (rec - direct).cwiseAbs().maxCoeff() / (1.0 + direct.cwiseAbs().maxCoeff()));
  }
  return worst;
}

}  // namespace

TEST_CASE("single variable") {
  const Pencil p = linearize(x(1));
  CHECK(is_hermitian(p));
  CHECK(reconstruction_error(x(1), p, 4, 5, 1) <= 1e-12);
}

TEST_CASE("square") {
  const Expr e = x(1) * x(1);
  CHECK(reconstruction_error(e, linearize(e), 4, 10, 2) <= 1e-10);
}

TEST_CASE("rational expressions") {
  for (const char* text : {"x1*x1 + inv(2 - x1)", "y1*y1* + y2*y2*", "x1*x2 + x2*x1",
                           "inv(3 - x1 + inv(4 - x2))", "y1*inv(2 + y2*y2*)*y1*"}) {
    CAPTURE(text);
    const Expr e = parse(text);
    const Pencil p = linearize(e);
    CHECK(is_hermitian(p, 1e-12));
    CHECK(reconstruction_error(e, p, 5, 5, 3) <= 1e-10);
  }
}

TEST_CASE("non self-adjoint input") { CHECK_THROWS_AS(linearize(x(1) * x(2)), NotSelfAdjoint); }

TEST_CASE("quantum-dot pencil") {
  const double gamma = 1.3;
  const cplx Y(0.4, 0.2);
  const Pencil p = quantum_dot_pencil(gamma, Y);
  CHECK(p.m == 8);
  CHECK(p.k == 1);
  CHECK(is_hermitian(p, 1e-13));
  CHECK(quantum_dot_pencil(1.0, {0.0, 0.0}, 1, 2).m == 10);
  CHECK(quantum_dot_pencil(1.0, {0.0, 0.0}, 2, 3).m == 18);
  const Expr e = quantum_dot_expression(gamma, Y);
  CHECK(reconstruction_error(e, p, 6, 10, 4) <= 1e-9);
  CHECK(reconstruction_error(e, linearize(e), 6, 10, 5) <= 1e-9);
}

TEST_CASE("quantum-dot pencil at gamma = 1, Y = 0") {
  const Pencil p = quantum_dot_pencil(1.0, {0.0, 0.0});
  CHECK(p.m == 8);
  CHECK(p.K.size() == 1);
  CHECK(p.L.size() == 2);
  CHECK(p.J()(0, 0) == cplx(1.0));
  CHECK(p.J().sum() == cplx(1.0));
  const Expr e = quantum_dot_expression(1.0, {0.0, 0.0});
  CHECK(reconstruction_error(e, p, 6, 5, 6) <= 1e-9);
}

TEST_CASE("singular Lhat") {
  const Pencil p = quantum_dot_pencil(1.0, {0.0, 0.0});
  EvalContext ctx;
  ctx.assign(Variable{VarKind::self_adjoint, 1}, MatrixXc::Zero(3, 3));
  ctx.assign(Variable{VarKind::general, 1}, MatrixXc::Zero(3, 3));
  ctx.assign(Variable{VarKind::general, 2}, MatrixXc::Zero(3, 3));
  CHECK_THROWS_AS(schur_reconstruct(p, ctx), SingularLhat);
}

TEST_CASE("generalized resolvent") {
  EvalContext ctx;
  MatrixXc X = MatrixXc::Zero(2, 2);
  X(0, 0) = 1.0;
  X(1, 1) = -1.0;
  ctx.assign(Variable{VarKind::self_adjoint, 1}, X);
  const Pencil p = linearize(x(1));
  const MatrixXc G = generalized_resolvent(p, ctx, {0.0, 1.0});
  const Eigen::Index n = 2;
  MatrixXc upper = G.topLeftCorner(p.k * n, p.k * n);
  CHECK(std::abs(upper(0, 0) - 1.0 / cplx(1.0, -1.0)) <= 1e-12);
  CHECK(std::abs(upper(1, 1) - 1.0 / cplx(-1.0, -1.0)) <= 1e-12);
  CHECK(std::abs(upper(0, 1)) <= 1e-12);
}

TEST_CASE("generalized resolvent of the quantum-dot pencil") {
  const double gamma = 0.9;
  const cplx Y(0.2, 0.0);
  const Expr e = quantum_dot_expression(gamma, Y);
  const Pencil p = quantum_dot_pencil(gamma, Y);
  std::mt19937_64 rng(11);
  const int n = 6;
  const EvalContext ctx = random_context(variables(e), n, rng);
  const cplx z(0.5, 0.1);
  const MatrixXc TT = evaluate(e, ctx);
  const MatrixXc direct = (TT - z * MatrixXc::Identity(n, n)).inverse();
  const MatrixXc G = generalized_resolvent(p, ctx, z);
  CHECK((G.topLeftCorner(n, n) - direct).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + direct.cwiseAbs().maxCoeff()));
}

TEST_CASE("hermitization") {
  const Pencil p = linearize(parse("x1*x1 + inv(2 - x1)"));
  std::mt19937_64 rng(5);
  const EvalContext ctx = random_context({Variable{VarKind::self_adjoint, 1}}, 3, rng);
  const HermitizedPencil h = hermitize(p, {0.0, 0.0});
  const MatrixXc big = evaluate(h, ctx);
  const Eigen::Index half = big.rows() / 2;
  CHECK(big.topLeftCorner(half, half).norm() == doctest::Approx(0.0));
  CHECK(big.bottomRightCorner(half, half).norm() == doctest::Approx(0.0));
  CHECK((unhermitize(big) - evaluate(p, ctx)).norm() <= 1e-12);
  CHECK((big - big.adjoint()).norm() <= 1e-12);
}

TEST_CASE("congruence preserves the reconstruction") {
  const Expr e = parse("x1*x1 + inv(2 - x1)");
  const Pencil p = linearize(e);
  MatrixXc t = MatrixXc::Identity(p.m, p.m);
  for (Eigen::Index i = p.k; i + 1 < p.m; ++i) t(i, i + 1) = 0.3;
  const Pencil q = congruence(p, t);
  CHECK(is_hermitian(q, 1e-12));
  CHECK(reconstruction_error(e, q, 4, 5, 9) <= 1e-10);
}
