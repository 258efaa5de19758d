#pragma once

#include <vector>

#include "ncdel/nc_rational.hpp"

namespace ncdel {

// Self-adjoint linear pencil
//   Lambda = K0 (x) 1 - sum_a K[a] (x) x_{a+1} - sum_b (L[b] (x) y_{b+1} + L[b]^* (x) y_{b+1}^*).
// The distinguished block is the leading k x k corner.
struct Pencil {
  Eigen::Index m = 1;
  Eigen::Index k = 1;
  MatrixXc K0;
  std::vector<MatrixXc> K;
  std::vector<MatrixXc> L;

  MatrixXc J() const;
  void validate() const;
};

struct HermitizedPencil {
  Pencil base;
  cplx z{0.0, 0.0};
};

// Recursive linearization of a self-adjoint rational expression.
Pencil linearize(const Expr& e);

// Lambda(ctx) as an (m n) x (m n) matrix, block (i, j) of size n x n.
MatrixXc evaluate(const Pencil& p, const EvalContext& ctx);

// lambda - l^* Lhat^{-1} l for the k n + rest split of the evaluated pencil.
MatrixXc schur_reconstruct(const Pencil& p, const EvalContext& ctx, double lhat_cap = 1e12);

// (Lambda(ctx) - z J (x) I)^{-1}.
MatrixXc generalized_resolvent(const Pencil& p, const EvalContext& ctx, cplx z);

HermitizedPencil hermitize(const Pencil& p, cplx z);

// [[0, A], [A^*, 0]] with A = Lambda(ctx) - z J (x) I.
MatrixXc evaluate(const HermitizedPencil& h, const EvalContext& ctx);

// Recovers A from an evaluated hermitized pencil.
MatrixXc unhermitize(const MatrixXc& h);

// T^* Lambda T, applied coefficientwise.
Pencil congruence(const Pencil& p, const MatrixXc& t);

bool is_hermitian(const Pencil& p, double tol = 1e-14);

// 4 gamma^2 y2^* (Y - x1 + i gamma (y1 y1^* + y2 y2^*))^{-1} y1 y1^*
//   (conj(Y) - x1 - i gamma (y1 y1^* + y2 y2^*))^{-1} y2
Expr quantum_dot_expression(double gamma, cplx Y);

// Hand-built pencil of the quantum-dot model for phi = k / l, dimension 6k + 2l.
// Variables: x_p (p = 1..l) are the diagonal n x n blocks of sqrt(l) H, y_1..y_{lk}
// the blocks of sqrt(l) W1, y_{lk+1}..y_{2lk} those of sqrt(l) W2, and the remaining
// y's the strictly upper blocks of sqrt(l) H (row-major).
Pencil quantum_dot_pencil(double gamma, cplx Y, int k = 1, int l = 1);

// Block index helpers for the quantum-dot pencil layout.
struct QuantumDotLayout {
  int k = 1;
  int l = 1;
  int m() const { return 6 * k + 2 * l; }
  int group1(int a, int i) const { return a * k + i; }
  int group2(int a, int i) const { return 3 * k + a * k + i; }
  int group3(int c, int p) const { return 6 * k + c * l + p; }
  int w1(int p, int i) const { return 1 + p * k + i; }
  int w2(int p, int i) const { return 1 + l * k + p * k + i; }
  int h_offdiag(int p, int q) const;
  int y_count() const { return 2 * l * k + l * (l - 1) / 2; }
};

}  // namespace ncdel
