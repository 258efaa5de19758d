#include "ncdel/linearization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

#include <Eigen/LU>

namespace ncdel {

namespace {

// Matrix whose entries are affine in x_a, y_b, y_b^*.
struct Affine {
  Eigen::Index m = 0;
  MatrixXc c0;
  std::map<int, MatrixXc> x, y, ys;

  explicit Affine(Eigen::Index size = 0) : m(size), c0(MatrixXc::Zero(size, size)) {}

  MatrixXc& slot(std::map<int, MatrixXc>& mp, int idx) {
    auto it = mp.find(idx);
    if (it == mp.end()) it = mp.emplace(idx, MatrixXc::Zero(m, m)).first;
    return it->second;
  }

  void add_letter(Eigen::Index r, Eigen::Index c, const Letter* l, cplx coef) {
    if (l == nullptr) {
      c0(r, c) += coef;
      return;
    }
    switch (l->kind) {
      case Letter::Kind::x: slot(x, l->index)(r, c) += coef; break;
      case Letter::Kind::y: slot(y, l->index)(r, c) += coef; break;
      case Letter::Kind::ystar: slot(ys, l->index)(r, c) += coef; break;
      case Letter::Kind::inv: throw Error("inverse letter inside an affine entry");
    }
  }

  void place(const Affine& src, Eigen::Index r0, Eigen::Index c0_, cplx s = 1.0) {
    c0.block(r0, c0_, src.m, src.m) += s * src.c0;
    for (const auto& [i, a] : src.x) slot(x, i).block(r0, c0_, src.m, src.m) += s * a;
    for (const auto& [i, a] : src.y) slot(y, i).block(r0, c0_, src.m, src.m) += s * a;
    for (const auto& [i, a] : src.ys) slot(ys, i).block(r0, c0_, src.m, src.m) += s * a;
  }
};

Affine adjoint(const Affine& a) {
  Affine out(a.m);
  out.c0 = a.c0.adjoint();
  for (const auto& [i, c] : a.x) out.x[i] = c.adjoint();
  for (const auto& [i, c] : a.y) out.ys[i] = c.adjoint();
  for (const auto& [i, c] : a.ys) out.y[i] = c.adjoint();
  return out;
}

bool same(const std::map<int, MatrixXc>& a, const std::map<int, MatrixXc>& b, Eigen::Index m, double tol) {
  std::set<int> keys;
  for (const auto& [i, c] : a) keys.insert(i);
  for (const auto& [i, c] : b) keys.insert(i);
  for (int i : keys) {
    const MatrixXc za = a.count(i) ? a.at(i) : MatrixXc::Zero(m, m);
    const MatrixXc zb = b.count(i) ? b.at(i) : MatrixXc::Zero(m, m);
    if ((za - zb).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

bool is_symbolically_hermitian(const Affine& a, double tol = 1e-14) {
  const Affine h = adjoint(a);
  if ((a.c0 - h.c0).cwiseAbs().maxCoeff() > tol) return false;
  return same(a.x, h.x, a.m, tol) && same(a.y, h.y, a.m, tol) && same(a.ys, h.ys, a.m, tol);
}

// Entry (r, c) of a as a 1 x 1 affine matrix.
Affine entry(const Affine& a, Eigen::Index r, Eigen::Index c) {
  Affine out(1);
  out.c0(0, 0) = a.c0(r, c);
  for (const auto& [i, m] : a.x) out.x[i] = m.block(r, c, 1, 1);
  for (const auto& [i, m] : a.y) out.y[i] = m.block(r, c, 1, 1);
  for (const auto& [i, m] : a.ys) out.ys[i] = m.block(r, c, 1, 1);
  return out;
}

Affine sub(const Affine& a, Eigen::Index r0, Eigen::Index c0, Eigen::Index n) {
  Affine out(n);
  out.c0 = a.c0.block(r0, c0, n, n);
  for (const auto& [i, m] : a.x) out.x[i] = m.block(r0, c0, n, n);
  for (const auto& [i, m] : a.y) out.y[i] = m.block(r0, c0, n, n);
  for (const auto& [i, m] : a.ys) out.ys[i] = m.block(r0, c0, n, n);
  return out;
}

struct Monomial {
  cplx coef;
  std::vector<std::optional<Letter>> w;          // w_0 .. w_k, empty means 1
  std::vector<std::shared_ptr<const Poly>> q;    // q_1 .. q_k, null means 1
};

// Left-to-right split w0 q1^{-1} w1 ... qk^{-1} wk, padding with 1 and 1/1.
Monomial split(const Word& word, cplx coef) {
  Monomial mono{coef, {}, {}};
  std::optional<Letter> cur;
  for (const Letter& l : word) {
    if (l.kind == Letter::Kind::inv) {
      mono.w.push_back(cur);
      mono.q.push_back(l.den);
      cur.reset();
    } else if (!cur) {
      cur = l;
    } else {
      mono.w.push_back(cur);
      mono.q.push_back(nullptr);
      cur = l;
    }
  }
  mono.w.push_back(cur);
  return mono;
}

const Letter* as_ptr(const std::optional<Letter>& l) { return l ? &*l : nullptr; }

// Non-symmetric linearization: A = [[lambda, u], [v, Lhat]] with
// lambda - u Lhat^{-1} v = p, hence (A^{-1})_{11} = p^{-1}.
Affine linearize_general(const Poly& p) {
  struct Block {
    Monomial mono;
    std::vector<Affine> a;
    Eigen::Index dim = 0;
  };
  Affine lam(1);
  std::vector<Block> blocks;
  for (const auto& [key, term] : p.terms) {
    Monomial mono = split(term.first, term.second);
    if (mono.q.empty()) {
      lam.add_letter(0, 0, as_ptr(mono.w.front()), mono.coef);
      continue;
    }
    Block b{std::move(mono), {}, 0};
    for (const auto& q : b.mono.q) {
      if (q) {
        b.a.push_back(linearize_general(*q));
      } else {
        Affine one(1);
        one.c0(0, 0) = 1.0;
        b.a.push_back(std::move(one));
      }
      b.dim += b.a.back().m;
    }
    blocks.push_back(std::move(b));
  }

  Eigen::Index total = 1;
  for (const auto& b : blocks) total += b.dim;
  Affine out(total);
  out.place(lam, 0, 0);

  Eigen::Index off = 1;
  for (const auto& b : blocks) {
    const std::size_t k = b.a.size();
    std::vector<Eigen::Index> start(k);
    Eigen::Index s = off;
    for (std::size_t i = 0; i < k; ++i) {
      start[i] = s;
      s += b.a[i].m;
    }
    for (std::size_t i = 0; i < k; ++i) out.place(b.a[i], start[i], start[i], -1.0);
    for (std::size_t i = 0; i + 1 < k; ++i) out.add_letter(start[i], start[i + 1], as_ptr(b.mono.w[i + 1]), 1.0);
    out.add_letter(0, start.front(), as_ptr(b.mono.w.front()), b.mono.coef);
    out.add_letter(start.back(), 0, as_ptr(b.mono.w.back()), 1.0);
    off = s;
  }
  return out;
}

// [[ (lam + lam^*)/2, u/sqrt2, v^*/sqrt2 ], [u^*/sqrt2, 0, Lhat^*], [v/sqrt2, Lhat, 0]]
Affine symmetrize(const Affine& a) {
  const Eigen::Index d = a.m - 1;
  Affine out(1 + 2 * d);
  const Affine lam = entry(a, 0, 0);
  out.place(lam, 0, 0, 0.5);
  out.place(adjoint(lam), 0, 0, 0.5);
  const double r = 1.0 / std::sqrt(2.0);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Affine u = entry(a, 0, 1 + j);
    const Affine v = entry(a, 1 + j, 0);
    out.place(u, 0, 1 + j, r);
    out.place(adjoint(u), 1 + j, 0, r);
    out.place(v, 1 + d + j, 0, r);
    out.place(adjoint(v), 0, 1 + d + j, r);
  }
  const Affine lhat = sub(a, 1, 1, d);
  out.place(adjoint(lhat), 1, 1 + d);
  out.place(lhat, 1 + d, 1);
  return out;
}

Pencil to_pencil(const Affine& a) {
  Pencil p;
  p.m = a.m;
  p.k = 1;
  p.K0 = a.c0;
  int nx = 0, ny = 0;
  for (const auto& [i, c] : a.x) nx = std::max(nx, i);
  for (const auto& [i, c] : a.y) ny = std::max(ny, i);
  for (const auto& [i, c] : a.ys) ny = std::max(ny, i);
  p.K.assign(nx, MatrixXc::Zero(a.m, a.m));
  p.L.assign(ny, MatrixXc::Zero(a.m, a.m));
  for (const auto& [i, c] : a.x) p.K[i - 1] = -c;
  for (const auto& [i, c] : a.y) p.L[i - 1] = -c;
  return p;
}

MatrixXc kron_add(const MatrixXc& coef, const MatrixXc& x, MatrixXc& out, cplx s) {
  const Eigen::Index n = x.rows();
  for (Eigen::Index i = 0; i < coef.rows(); ++i)
    for (Eigen::Index j = 0; j < coef.cols(); ++j)
      if (coef(i, j) != cplx(0.0)) out.block(i * n, j * n, n, n) += (s * coef(i, j)) * x;
  return out;
}

const MatrixXc* lookup(const EvalContext& ctx, VarKind kind, int index) {
  auto it = ctx.assignments.find(Variable{kind, index});
  return it == ctx.assignments.end() ? nullptr : &it->second;
}

}  // namespace

MatrixXc Pencil::J() const {
  MatrixXc j = MatrixXc::Zero(m, m);
  for (Eigen::Index i = 0; i < k; ++i) j(i, i) = 1.0;
  return j;
}

void Pencil::validate() const {
  auto check = [&](const MatrixXc& a, const char* name) {
    if (a.rows() != m || a.cols() != m) throw SizeMismatch(std::string("pencil coefficient ") + name + " has the wrong size");
  };
  check(K0, "K0");
  for (const auto& a : K) check(a, "K");
  for (const auto& a : L) check(a, "L");
  if (k < 1 || k > m) throw InvalidParams("pencil projector rank out of range");
}

bool is_hermitian(const Pencil& p, double tol) {
  if ((p.K0 - p.K0.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  for (const auto& a : p.K)
    if ((a - a.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

Pencil linearize(const Expr& e) {
  if (!is_self_adjoint(e)) throw NotSelfAdjoint("expression is not self-adjoint: " + to_string(e));
  const Affine a = linearize_general(normal_form(e));
  if (is_symbolically_hermitian(a)) return to_pencil(a);
  Pencil p = to_pencil(symmetrize(a));
  p.K0 = 0.5 * (p.K0 + p.K0.adjoint()).eval();
  for (auto& c : p.K) c = 0.5 * (c + c.adjoint()).eval();
  return p;
}

MatrixXc evaluate(const Pencil& p, const EvalContext& ctx) {
  p.validate();
  const Eigen::Index n = ctx.size();
  MatrixXc out = MatrixXc::Zero(p.m * n, p.m * n);
  kron_add(p.K0, MatrixXc::Identity(n, n), out, 1.0);
  for (std::size_t a = 0; a < p.K.size(); ++a) {
    if (p.K[a].isZero(0.0)) continue;
    const MatrixXc* xa = lookup(ctx, VarKind::self_adjoint, int(a) + 1);
    if (!xa) throw InvalidParams("no assignment for x" + std::to_string(a + 1));
    kron_add(p.K[a], *xa, out, -1.0);
  }
  for (std::size_t b = 0; b < p.L.size(); ++b) {
    if (p.L[b].isZero(0.0)) continue;
    const MatrixXc* yb = lookup(ctx, VarKind::general, int(b) + 1);
    if (!yb) throw InvalidParams("no assignment for y" + std::to_string(b + 1));
    kron_add(p.L[b], *yb, out, -1.0);
    kron_add(MatrixXc(p.L[b].adjoint()), MatrixXc(yb->adjoint()), out, -1.0);
  }
  return out;
}

MatrixXc schur_reconstruct(const Pencil& p, const EvalContext& ctx, double lhat_cap) {
  const MatrixXc a = evaluate(p, ctx);
  const Eigen::Index s = p.k * ctx.size();
  const Eigen::Index r = a.rows() - s;
  if (r == 0) return a;
  Eigen::PartialPivLU<MatrixXc> lu(a.bottomRightCorner(r, r));
  const double rc = safe_rcond(lu);
  if (!(rc > std::numeric_limits<double>::epsilon())) throw SingularLhat("Lhat is numerically singular");
  const MatrixXc sol = lu.solve(a.bottomLeftCorner(r, s));
  const double inv_norm = op_norm(MatrixXc(lu.inverse()));
  if (inv_norm > lhat_cap) throw SingularLhat("norm of Lhat^{-1} exceeds the cap");
  return a.topLeftCorner(s, s) - a.topRightCorner(s, r) * sol;
}

MatrixXc generalized_resolvent(const Pencil& p, const EvalContext& ctx, cplx z) {
  MatrixXc a = evaluate(p, ctx);
  const Eigen::Index s = p.k * ctx.size();
  a.topLeftCorner(s, s).diagonal().array() -= z;
  Eigen::PartialPivLU<MatrixXc> lu(a);
  if (!(safe_rcond(lu) > std::numeric_limits<double>::epsilon())) throw SingularPencil("shifted pencil is numerically singular");
  return lu.inverse();
}

HermitizedPencil hermitize(const Pencil& p, cplx z) { return {p, z}; }

MatrixXc evaluate(const HermitizedPencil& h, const EvalContext& ctx) {
  MatrixXc a = evaluate(h.base, ctx);
  const Eigen::Index s = h.base.k * ctx.size();
  a.topLeftCorner(s, s).diagonal().array() -= h.z;
  const Eigen::Index n = a.rows();
  MatrixXc out = MatrixXc::Zero(2 * n, 2 * n);
  out.topRightCorner(n, n) = a;
  out.bottomLeftCorner(n, n) = a.adjoint();
  return out;
}

MatrixXc unhermitize(const MatrixXc& h) {
  const Eigen::Index n = h.rows() / 2;
  return h.topRightCorner(n, n);
}

Pencil congruence(const Pencil& p, const MatrixXc& t) {
  if (t.rows() != p.m || t.cols() != p.m) throw SizeMismatch("congruence matrix has the wrong size");
  Pencil out = p;
  out.K0 = t.adjoint() * p.K0 * t;
  for (auto& a : out.K) a = t.adjoint() * a * t;
  for (auto& a : out.L) a = t.adjoint() * a * t;
  return out;
}

Expr quantum_dot_expression(double gamma, cplx Y) {
  const cplx ig(0.0, gamma);
  const Expr ww = y(1) * adj(y(1)) + y(2) * adj(y(2));
  const Expr g_plus = inv(Y - x(1) + ig * ww);
  const Expr g_minus = inv(std::conj(Y) - x(1) - ig * ww);
  return (4.0 * gamma * gamma) * (adj(y(2)) * g_plus * y(1) * adj(y(1)) * g_minus * y(2));
}

}  // namespace ncdel
