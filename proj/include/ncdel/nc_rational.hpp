#pragma once

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ncdel/errors.hpp"

namespace ncdel {

using cplx = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;

enum class VarKind { self_adjoint, general };

struct Variable {
  VarKind kind = VarKind::self_adjoint;
  int index = 1;

  auto operator<=>(const Variable&) const = default;
};

std::string to_string(const Variable& v);

// Node of a noncommutative rational expression. Immutable, shared between
// expressions; height is cached at construction.
struct Node {
  enum class Op { scalar, var, adjoint, sum, product, scale, inverse };

  Op op = Op::scalar;
  cplx value{0.0, 0.0};
  Variable var{};
  std::vector<std::shared_ptr<const Node>> children;
  int height = 0;
};

class Expr {
 public:
  Expr();
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  const Node& node() const { return *node_; }
  Node::Op op() const { return node_->op; }
  int height() const { return node_->height; }
  const std::shared_ptr<const Node>& ptr() const { return node_; }

  std::vector<Expr> children() const;

 private:
  std::shared_ptr<const Node> node_;
};

Expr scalar(cplx c);
Expr x(int index);
Expr y(int index);
Expr variable(const Variable& v);
Expr adj(const Expr& e);
Expr inv(const Expr& e);
Expr sum(const std::vector<Expr>& terms);
Expr product(const std::vector<Expr>& factors);
Expr scale(cplx c, const Expr& e);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator*(cplx c, const Expr& e);
Expr operator+(cplx c, const Expr& e);
Expr operator+(const Expr& e, cplx c);
Expr operator-(cplx c, const Expr& e);
Expr operator-(const Expr& e, cplx c);

int height(const Expr& e);

// Structural self-adjointness after canonical normalization.
bool is_self_adjoint(const Expr& e);

// Distinct inverse arguments, lowest height first.
std::vector<Expr> denominators(const Expr& e);

// Variables occurring in the expression, sorted.
std::vector<Variable> variables(const Expr& e);

std::string to_string(const Expr& e);

// Parse the textual form: x1.., y1.., y1*.., + - * ^n, inv( ), adj( ),
// complex scalars such as 2, 0.5i, 1+2i, i.
Expr parse(const std::string& text);

struct EvalContext {
  std::map<Variable, MatrixXc> assignments;
  double domain_bound = 1e6;

  void assign(const Variable& v, MatrixXc value);
  Eigen::Index size() const;
};

MatrixXc evaluate(const Expr& e, const EvalContext& ctx);

// Gaussian assignments of size n: Hermitian for x's, iid complex for y's, entries of variance scale^2 / n.
EvalContext random_context(const std::vector<Variable>& vars, int n, std::mt19937_64& rng, double scale = 1.0);

// Operator norm estimate by power iteration on A^* A.
template <typename Derived>
double op_norm(const Eigen::MatrixBase<Derived>& a, double tol = 1e-10, int max_iter = 500) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = a.cols();
  if (a.rows() == 0 || n == 0) return 0.0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = Scalar(1.0 + 0.1 * std::sin(1.0 + double(i)));
  v.normalize();
  double s = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w = a.adjoint() * (a * v);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    const double s_new = std::sqrt(wn);
    v = w / wn;
    if (std::abs(s_new - s) <= tol * s_new) return s_new;
    s = s_new;
  }
  return s;
}

// Reciprocal condition estimate that stays at 0 for exactly singular factors.
inline double safe_rcond(const Eigen::PartialPivLU<MatrixXc>& lu) {
  const auto piv = lu.matrixLU().diagonal().cwiseAbs();
  if (piv.size() == 0) return 1.0;
  const double hi = piv.maxCoeff();
  if (!(hi > 0.0)) return 0.0;
  const double rc = lu.rcond();
  const double ratio = piv.minCoeff() / hi;
  if (!std::isfinite(rc)) return 0.0;
  return std::min(rc, ratio);
}

// Canonical polynomial form over letters {x, y, y*, inv(.)}; used for
// structural equality, adjoints and linearization.
struct Poly;

struct Letter {
  enum class Kind { x, y, ystar, inv };
  Kind kind = Kind::x;
  int index = 1;
  std::shared_ptr<const Poly> den;  // for Kind::inv
  std::string key;
};

using Word = std::vector<Letter>;

struct Poly {
  // key of the word -> (word, coefficient)
  std::map<std::string, std::pair<Word, cplx>> terms;

  std::string key() const;
  bool is_scalar() const;
  cplx scalar_value() const;
};

Poly normal_form(const Expr& e);
Poly adjoint(const Poly& p);
bool equal(const Poly& a, const Poly& b, double tol = 1e-12);

}  // namespace ncdel
