#include <cmath>

#include "ncdel/linearization.hpp"

namespace ncdel {

int QuantumDotLayout::h_offdiag(int p, int q) const {
  // strictly upper pair (p, q), p < q, row-major
  int idx = 0;
  for (int a = 0; a < p; ++a) idx += l - 1 - a;
  return 1 + 2 * l * k + idx + (q - p - 1);
}

Pencil quantum_dot_pencil(double gamma, cplx Y, int k, int l) {
  if (!(gamma > 0.0)) throw InvalidParams("gamma must be positive");
  if (k < 1 || l < 1 || k > l) throw InvalidParams("need 1 <= k <= l");
  const QuantumDotLayout lay{k, l};
  const int m = lay.m();
  const cplx I(0.0, 1.0);
  const double s = 1.0 / std::sqrt(double(l));

  Pencil p;
  p.m = m;
  p.k = k;
  p.K0 = MatrixXc::Zero(m, m);
  p.K.assign(l, MatrixXc::Zero(m, m));
  p.L.assign(lay.y_count(), MatrixXc::Zero(m, m));

  Eigen::Matrix3cd u1 = Eigen::Matrix3cd::Zero();
  u1(1, 2) = I / gamma;
  u1(2, 1) = -I / gamma;
  Eigen::Matrix3cd u2 = Eigen::Matrix3cd::Zero();
  u2(0, 2) = I / gamma;
  u2(1, 1) = -1.0 / (4.0 * gamma * gamma);
  u2(2, 0) = -I / gamma;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int i = 0; i < k; ++i) {
        p.K0(lay.group1(a, i), lay.group1(b, i)) = u1(a, b);
        p.K0(lay.group2(a, i), lay.group2(b, i)) = u2(a, b);
      }
  for (int q = 0; q < l; ++q) {
    p.K0(lay.group3(0, q), lay.group3(1, q)) = Y;
    p.K0(lay.group3(1, q), lay.group3(0, q)) = std::conj(Y);
  }

  // W blocks: rows 7/8 of the template against group-1/group-2 columns
  struct Slot {
    int c;      // 0: template row 7, 1: row 8
    int group;  // 1 or 2
    int a;      // column inside the group
    bool w2;
  };
  const Slot slots[] = {{0, 1, 2, true}, {0, 2, 1, false}, {0, 2, 2, false},
                        {1, 1, 0, true}, {1, 1, 1, true},  {1, 2, 0, false}};
  for (const Slot& sl : slots)
    for (int q = 0; q < l; ++q)
      for (int i = 0; i < k; ++i) {
        const int r = lay.group3(sl.c, q);
        const int c = sl.group == 1 ? lay.group1(sl.a, i) : lay.group2(sl.a, i);
        const int v = sl.w2 ? lay.w2(q, i) : lay.w1(q, i);
        p.L[v - 1](r, c) -= s;
      }

  // -H in template entries (7,8) and (8,7)
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < l; ++a)
      for (int b = 0; b < l; ++b) {
        const int r = lay.group3(c, a);
        const int col = lay.group3(1 - c, b);
        if (a == b) {
          p.K[a](r, col) += s;
        } else if (a < b) {
          p.L[lay.h_offdiag(a, b) - 1](r, col) += s;
        }
      }
  return p;
}

}  // namespace ncdel
