#include <doctest.h>

#include "ncdel/linearization.hpp"
#include "ncdel/nc_rational.hpp"

using namespace ncdel;

namespace {

MatrixXc hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MatrixXc a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng)) / std::sqrt(2.0 * n);
  return (a + a.adjoint()) / std::sqrt(2.0);
}

MatrixXc ginibre(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MatrixXc a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng)) / std::sqrt(2.0 * n);
  return a;
}

}  // namespace

TEST_CASE("height") {
  CHECK(height(x(1)) == 0);
  CHECK(height(inv(scalar(1.0) - x(1))) == 1);
  CHECK(height(quantum_dot_expression(1.0, {0.0, 0.0})) == 1);
  CHECK(height(inv(scalar(3.0) - inv(scalar(2.0) - x(1)))) == 2);
}

TEST_CASE("self-adjointness") {
  CHECK(is_self_adjoint(x(1)));
  CHECK_FALSE(is_self_adjoint(y(1)));
  CHECK(is_self_adjoint(y(1) * adj(y(1)) + y(2) * adj(y(2))));
  CHECK(is_self_adjoint(x(1) * x(2) + x(2) * x(1)));
  CHECK_FALSE(is_self_adjoint(x(1) * x(2)));
  CHECK(is_self_adjoint(quantum_dot_expression(2.0, {0.3, 0.1})));
}

TEST_CASE("evaluate") {
  EvalContext ctx;
  MatrixXc s(2, 2);
  s << 0, 1, 1, 0;
  ctx.assign(Variable{VarKind::self_adjoint, 1}, s);
  CHECK((evaluate(x(1), ctx) - s).norm() == doctest::Approx(0.0));

  EvalContext zero;
  zero.assign(Variable{VarKind::self_adjoint, 1}, MatrixXc::Zero(3, 3));
  CHECK((evaluate(inv(scalar(1.0) - x(1)), zero) - MatrixXc::Identity(3, 3)).norm() == doctest::Approx(0.0));
}

TEST_CASE("quantum-dot expression against direct composition") {
  std::mt19937_64 rng(7);
  const int n = 8;
  const double gamma = M_PI;
  const cplx Y(0.0, 1.0);
  const MatrixXc H = hermitian(n, rng), W1 = ginibre(n, rng), W2 = ginibre(n, rng);
  EvalContext ctx;
  ctx.assign(Variable{VarKind::self_adjoint, 1}, H);
  ctx.assign(Variable{VarKind::general, 1}, W1);
  ctx.assign(Variable{VarKind::general, 2}, W2);
  const MatrixXc I = MatrixXc::Identity(n, n);
  const MatrixXc WW = W1 * W1.adjoint() + W2 * W2.adjoint();
  const MatrixXc G = (Y * I - H + cplx(0.0, gamma) * WW).inverse();
  const MatrixXc Gs = (std::conj(Y) * I - H - cplx(0.0, gamma) * WW).inverse();
  const MatrixXc direct = 4.0 * gamma * gamma * W2.adjoint() * G * W1 * W1.adjoint() * Gs * W2;
  const MatrixXc ast = evaluate(quantum_dot_expression(gamma, Y), ctx);
  CHECK((ast - direct).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("domain violation") {
  EvalContext ctx;
  ctx.assign(Variable{VarKind::self_adjoint, 1}, (1.0 - 1e-8) * MatrixXc::Identity(2, 2));
  CHECK_THROWS_AS(evaluate(inv(scalar(1.0) - x(1)), ctx), DomainViolation);
  ctx.assign(Variable{VarKind::self_adjoint, 1}, MatrixXc::Identity(2, 2));
  CHECK_THROWS_AS(evaluate(inv(scalar(1.0) - x(1)), ctx), SingularDenominator);
}

TEST_CASE("denominators") {
  CHECK(denominators(x(1) * x(1)).empty());
  const Expr r = inv(scalar(1.0) - x(1));
  CHECK(denominators(r * x(1) * r).size() == 1);
  CHECK(denominators(quantum_dot_expression(1.0, {0.5, 0.0})).size() == 2);
}

TEST_CASE("parser") {
  const Expr e = parse("x1*x1 + inv(2 - x1)");
  CHECK(height(e) == 1);
  CHECK(is_self_adjoint(e));
  CHECK(is_self_adjoint(parse("y1*y1* + y2*y2*")));
  CHECK(variables(parse("y1*y1* + y2*y2*")).size() == 2);
  CHECK(equal(normal_form(parse("x1^2")), normal_form(x(1) * x(1))));
  CHECK(equal(normal_form(parse("(1+2i)*x1")), normal_form(cplx(1.0, 2.0) * x(1))));
  CHECK_THROWS_AS(parse("x1 +"), ParseError);
  CHECK_THROWS_AS(parse("inv(x1"), ParseError);
  CHECK_THROWS_AS(parse("z1"), ParseError);
}

TEST_CASE("normal form identities") {
  CHECK(equal(normal_form(x(1) + x(2)), normal_form(x(2) + x(1))));
  CHECK(equal(adjoint(normal_form(y(1) * x(1))), normal_form(x(1) * adj(y(1)))));
  CHECK(equal(normal_form(x(1) - x(1)), normal_form(scalar(0.0))));
}
