#include "ncdel/nc_rational.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>

#include <Eigen/LU>

namespace ncdel {

namespace {

std::shared_ptr<const Node> make(Node n) {
  int h = 0;
  for (const auto& c : n.children) h = std::max(h, c->height);
  if (n.op == Node::Op::inverse) h += 1;
  n.height = h;
  return std::make_shared<const Node>(std::move(n));
}

bool is_scalar_node(const Expr& e) { return e.op() == Node::Op::scalar; }

std::string format_cplx(cplx c, int digits) {
  char buf[96];
  const double re = c.real() + 0.0;
  const double im = c.imag() + 0.0;
  std::snprintf(buf, sizeof buf, "(%.*g%+.*gi)", digits, re, digits, im);
  return buf;
}

}  // namespace

std::string to_string(const Variable& v) {
  return (v.kind == VarKind::self_adjoint ? "x" : "y") + std::to_string(v.index);
}

Expr::Expr() : node_(make(Node{})) {}

std::vector<Expr> Expr::children() const {
  std::vector<Expr> out;
  out.reserve(node_->children.size());
  for (const auto& c : node_->children) out.emplace_back(c);
  return out;
}

Expr scalar(cplx c) {
  Node n;
  n.op = Node::Op::scalar;
  n.value = c;
  return Expr(make(std::move(n)));
}

Expr variable(const Variable& v) {
  if (v.index < 1) throw InvalidParams("variable index must be positive");
  Node n;
  n.op = Node::Op::var;
  n.var = v;
  return Expr(make(std::move(n)));
}

Expr x(int index) { return variable({VarKind::self_adjoint, index}); }
Expr y(int index) { return variable({VarKind::general, index}); }

Expr adj(const Expr& e) {
  if (is_scalar_node(e)) return scalar(std::conj(e.node().value));
  if (e.op() == Node::Op::var && e.node().var.kind == VarKind::self_adjoint) return e;
  if (e.op() == Node::Op::adjoint) return Expr(e.node().children.front());
  Node n;
  n.op = Node::Op::adjoint;
  n.children = {e.ptr()};
  return Expr(make(std::move(n)));
}

Expr inv(const Expr& e) {
  Node n;
  n.op = Node::Op::inverse;
  n.children = {e.ptr()};
  return Expr(make(std::move(n)));
}

Expr sum(const std::vector<Expr>& terms) {
  if (terms.empty()) return scalar(0.0);
  if (terms.size() == 1) return terms.front();
  Node n;
  n.op = Node::Op::sum;
  cplx folded = 0.0;
  bool any_scalar = false;
  for (const auto& t : terms) {
    if (is_scalar_node(t)) {
      folded += t.node().value;
      any_scalar = true;
    } else if (t.op() == Node::Op::sum) {
      for (const auto& c : t.node().children) n.children.push_back(c);
    } else {
      n.children.push_back(t.ptr());
    }
  }
  if (any_scalar && (folded != cplx(0.0) || n.children.empty())) n.children.push_back(scalar(folded).ptr());
  if (n.children.size() == 1) return Expr(n.children.front());
  return Expr(make(std::move(n)));
}

Expr product(const std::vector<Expr>& factors) {
  if (factors.empty()) return scalar(1.0);
  if (factors.size() == 1) return factors.front();
  Node n;
  n.op = Node::Op::product;
  for (const auto& f : factors) {
    if (f.op() == Node::Op::product) {
      for (const auto& c : f.node().children) n.children.push_back(c);
    } else {
      n.children.push_back(f.ptr());
    }
  }
  return Expr(make(std::move(n)));
}

Expr scale(cplx c, const Expr& e) {
  if (is_scalar_node(e)) return scalar(c * e.node().value);
  if (c == cplx(1.0)) return e;
  Node n;
  n.op = Node::Op::scale;
  n.value = c;
  n.children = {e.ptr()};
  return Expr(make(std::move(n)));
}

Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
Expr operator-(const Expr& a) { return scale(-1.0, a); }
Expr operator-(const Expr& a, const Expr& b) { return sum({a, -b}); }
Expr operator*(const Expr& a, const Expr& b) {
  if (is_scalar_node(a)) return scale(a.node().value, b);
  if (is_scalar_node(b)) return scale(b.node().value, a);
  return product({a, b});
}
Expr operator*(cplx c, const Expr& e) { return scale(c, e); }
Expr operator+(cplx c, const Expr& e) { return sum({scalar(c), e}); }
Expr operator+(const Expr& e, cplx c) { return sum({e, scalar(c)}); }
Expr operator-(cplx c, const Expr& e) { return sum({scalar(c), -e}); }
Expr operator-(const Expr& e, cplx c) { return sum({e, scalar(-c)}); }

int height(const Expr& e) { return e.height(); }

std::string to_string(const Expr& e) {
  const Node& n = e.node();
  switch (n.op) {
    case Node::Op::scalar:
      return format_cplx(n.value, 17);
    case Node::Op::var:
      return to_string(n.var);
    case Node::Op::adjoint: {
      const Expr c(n.children.front());
      if (c.op() == Node::Op::var) return to_string(c) + "*";
      return "adj(" + to_string(c) + ")";
    }
    case Node::Op::sum: {
      std::string s = "(";
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) s += " + ";
        s += to_string(Expr(n.children[i]));
      }
      return s + ")";
    }
    case Node::Op::product: {
      std::string s;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) s += " * ";
        s += to_string(Expr(n.children[i]));
      }
      return s;
    }
    case Node::Op::scale:
      return format_cplx(n.value, 17) + " * (" + to_string(Expr(n.children.front())) + ")";
    case Node::Op::inverse:
      return "inv(" + to_string(Expr(n.children.front())) + ")";
  }
  return {};
}

// ---------------------------------------------------------------- normal form

namespace {

std::string word_key(const Word& w) {
  if (w.empty()) return "1";
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += " ";
    s += w[i].key;
  }
  return s;
}

Letter make_letter(Letter::Kind kind, int index) {
  Letter l;
  l.kind = kind;
  l.index = index;
  switch (kind) {
    case Letter::Kind::x: l.key = "x" + std::to_string(index); break;
    case Letter::Kind::y: l.key = "y" + std::to_string(index); break;
    case Letter::Kind::ystar: l.key = "y" + std::to_string(index) + "*"; break;
    case Letter::Kind::inv: break;
  }
  return l;
}

Letter make_inverse_letter(Poly den) {
  Letter l;
  l.kind = Letter::Kind::inv;
  l.index = 0;
  l.key = "inv[" + den.key() + "]";
  l.den = std::make_shared<const Poly>(std::move(den));
  return l;
}

void add_term(Poly& p, const Word& w, cplx c) {
  if (c == cplx(0.0)) return;
  const std::string k = word_key(w);
  auto it = p.terms.find(k);
  if (it == p.terms.end()) {
    p.terms.emplace(k, std::make_pair(w, c));
  } else {
    it->second.second += c;
  }
}

void prune(Poly& p) {
  double mx = 0.0;
  for (const auto& [k, t] : p.terms) mx = std::max(mx, std::abs(t.second));
  for (auto it = p.terms.begin(); it != p.terms.end();) {
    if (std::abs(it->second.second) <= 1e-13 * mx) {
      it = p.terms.erase(it);
    } else {
      ++it;
    }
  }
}

Poly add(const Poly& a, const Poly& b, cplx sb = 1.0) {
  Poly out = a;
  for (const auto& [k, t] : b.terms) add_term(out, t.first, sb * t.second);
  prune(out);
  return out;
}

Poly multiply(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ka, ta] : a.terms) {
    for (const auto& [kb, tb] : b.terms) {
      Word w = ta.first;
      w.insert(w.end(), tb.first.begin(), tb.first.end());
      add_term(out, w, ta.second * tb.second);
    }
  }
  prune(out);
  return out;
}

Poly constant(cplx c) {
  Poly p;
  add_term(p, {}, c);
  return p;
}

Letter adjoint_letter(const Letter& l) {
  switch (l.kind) {
    case Letter::Kind::x: return l;
    case Letter::Kind::y: return make_letter(Letter::Kind::ystar, l.index);
    case Letter::Kind::ystar: return make_letter(Letter::Kind::y, l.index);
    case Letter::Kind::inv: return make_inverse_letter(adjoint(*l.den));
  }
  return l;
}

Poly normal_form_node(const Node& n) {
  switch (n.op) {
    case Node::Op::scalar:
      return constant(n.value);
    case Node::Op::var: {
      Poly p;
      add_term(p, {make_letter(n.var.kind == VarKind::self_adjoint ? Letter::Kind::x : Letter::Kind::y, n.var.index)},
               1.0);
      return p;
    }
    case Node::Op::adjoint:
      return adjoint(normal_form_node(*n.children.front()));
    case Node::Op::sum: {
      Poly p;
      for (const auto& c : n.children) p = add(p, normal_form_node(*c));
      return p;
    }
    case Node::Op::product: {
      Poly p = constant(1.0);
      for (const auto& c : n.children) p = multiply(p, normal_form_node(*c));
      return p;
    }
    case Node::Op::scale: {
      Poly p = normal_form_node(*n.children.front());
      for (auto& [k, t] : p.terms) t.second *= n.value;
      prune(p);
      return p;
    }
    case Node::Op::inverse: {
      Poly d = normal_form_node(*n.children.front());
      if (d.terms.empty()) throw SingularDenominator("inverse of the zero expression");
      if (d.is_scalar()) return constant(1.0 / d.scalar_value());
      Poly p;
      add_term(p, {make_inverse_letter(std::move(d))}, 1.0);
      return p;
    }
  }
  return {};
}

}  // namespace

std::string Poly::key() const {
  if (terms.empty()) return "0";
  std::string s;
  bool first = true;
  for (const auto& [k, t] : terms) {
    if (!first) s += " + ";
    first = false;
    s += format_cplx(t.second, 12) + "*" + k;
  }
  return s;
}

bool Poly::is_scalar() const { return terms.empty() || (terms.size() == 1 && terms.begin()->second.first.empty()); }

cplx Poly::scalar_value() const {
  if (terms.empty()) return 0.0;
  return terms.begin()->second.second;
}

Poly normal_form(const Expr& e) { return normal_form_node(e.node()); }

Poly adjoint(const Poly& p) {
  Poly out;
  for (const auto& [k, t] : p.terms) {
    Word w;
    w.reserve(t.first.size());
    for (auto it = t.first.rbegin(); it != t.first.rend(); ++it) w.push_back(adjoint_letter(*it));
    add_term(out, w, std::conj(t.second));
  }
  return out;
}

bool equal(const Poly& a, const Poly& b, double tol) {
  if (a.terms.size() != b.terms.size()) return false;
  double mx = 1.0;
  for (const auto& [k, t] : a.terms) mx = std::max(mx, std::abs(t.second));
  for (const auto& [k, t] : a.terms) {
    auto it = b.terms.find(k);
    if (it == b.terms.end()) return false;
    if (std::abs(it->second.second - t.second) > tol * mx) return false;
  }
  return true;
}

bool is_self_adjoint(const Expr& e) {
  const Poly p = normal_form(e);
  return equal(p, adjoint(p));
}

std::vector<Expr> denominators(const Expr& e) {
  struct Item {
    Expr den;
    int height;
    std::size_t order;
  };
  std::vector<Item> items;
  std::set<std::string> seen;
  std::function<void(const Expr&)> walk = [&](const Expr& cur) {
    for (const auto& c : cur.children()) walk(c);
    if (cur.op() == Node::Op::inverse) {
      const Expr d(cur.node().children.front());
      const std::string k = normal_form(d).key();
      if (seen.insert(k).second) items.push_back({d, cur.height(), items.size()});
    }
  };
  walk(e);
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.height < b.height; });
  std::vector<Expr> out;
  out.reserve(items.size());
  for (auto& it : items) out.push_back(it.den);
  return out;
}

std::vector<Variable> variables(const Expr& e) {
  std::set<Variable> vars;
  std::function<void(const Node&)> walk = [&](const Node& n) {
    if (n.op == Node::Op::var) vars.insert(n.var);
    for (const auto& c : n.children) walk(*c);
  };
  walk(e.node());
  return {vars.begin(), vars.end()};
}

// ----------------------------------------------------------------- evaluation

void EvalContext::assign(const Variable& v, MatrixXc value) {
  if (value.rows() != value.cols()) throw SizeMismatch("assignment for " + to_string(v) + " is not square");
  if (!assignments.empty() && assignments.begin()->second.rows() != value.rows())
    throw SizeMismatch("assignment for " + to_string(v) + " has a different size");
  if (v.kind == VarKind::self_adjoint) {
    const double nrm = op_norm(value);
    const double asym = op_norm(MatrixXc(value - value.adjoint()));
    if (asym > 1e-12 * std::max(nrm, 1e-300)) throw InvalidParams("assignment for " + to_string(v) + " is not Hermitian");
  }
  assignments[v] = std::move(value);
}

Eigen::Index EvalContext::size() const {
  if (assignments.empty()) return 1;
  return assignments.begin()->second.rows();
}

namespace {

MatrixXc eval_node(const Node& n, const EvalContext& ctx, Eigen::Index dim) {
  switch (n.op) {
    case Node::Op::scalar:
      return n.value * MatrixXc::Identity(dim, dim);
    case Node::Op::var: {
      auto it = ctx.assignments.find(n.var);
      if (it == ctx.assignments.end()) throw InvalidParams("no assignment for " + to_string(n.var));
      if (it->second.rows() != dim || it->second.cols() != dim)
        throw SizeMismatch("assignment for " + to_string(n.var) + " has the wrong size");
      return it->second;
    }
    case Node::Op::adjoint:
      return eval_node(*n.children.front(), ctx, dim).adjoint();
    case Node::Op::sum: {
      MatrixXc acc = MatrixXc::Zero(dim, dim);
      for (const auto& c : n.children) acc += eval_node(*c, ctx, dim);
      return acc;
    }
    case Node::Op::product: {
      MatrixXc acc = eval_node(*n.children.front(), ctx, dim);
      for (std::size_t i = 1; i < n.children.size(); ++i) acc = acc * eval_node(*n.children[i], ctx, dim);
      return acc;
    }
    case Node::Op::scale:
      return n.value * eval_node(*n.children.front(), ctx, dim);
    case Node::Op::inverse: {
      const MatrixXc a = eval_node(*n.children.front(), ctx, dim);
      Eigen::PartialPivLU<MatrixXc> lu(a);
      const double rc = safe_rcond(lu);
      if (!(rc > std::numeric_limits<double>::epsilon()))
        throw SingularDenominator("denominator is numerically singular: " + to_string(Expr(n.children.front())));
      MatrixXc ai = lu.inverse();
      const double nrm = op_norm(ai);
      if (nrm > ctx.domain_bound)
        throw DomainViolation("inverse norm exceeds the domain bound", nrm, ctx.domain_bound);
      return ai;
    }
  }
  return {};
}

}  // namespace

MatrixXc evaluate(const Expr& e, const EvalContext& ctx) {
  return eval_node(e.node(), ctx, ctx.size());
}

EvalContext random_context(const std::vector<Variable>& vars, int n, std::mt19937_64& rng, double scale) {
  if (n < 1) throw InvalidParams("context size must be positive");
  std::normal_distribution<double> nd(0.0, scale / std::sqrt(2.0 * n));
  EvalContext ctx;
  for (const Variable& v : vars) {
    MatrixXc a(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double re = nd(rng);
        a(i, j) = cplx(re, nd(rng));
      }
    if (v.kind == VarKind::self_adjoint) a = ((a + a.adjoint()) / std::sqrt(2.0)).eval();
    ctx.assign(v, a);
  }
  return ctx;
}

}  // namespace ncdel
