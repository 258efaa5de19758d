#include "ncdel/dyson.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace ncdel {

namespace {

SparseXc to_sparse(const MatrixXc& a) {
  SparseXc s = a.sparseView(1.0, 0.0);
  s.makeCompressed();
  return s;
}

// z J + i delta (I - J)
MatrixXc spectral(const DysonProblem& pb, cplx z, double delta) {
  MatrixXc s = MatrixXc::Zero(pb.m, pb.m);
  for (Eigen::Index i = 0; i < pb.m; ++i) s(i, i) = i < pb.k ? z : cplx(0.0, delta);
  return s;
}

MatrixXc defect(const DysonProblem& pb, const MatrixXc& shift, const MatrixXc& M) {
  return M.inverse() + shift - pb.K0 + apply_self_energy(pb, M);
}

MatrixXc phi_map(const DysonProblem& pb, const MatrixXc& shift, const MatrixXc& M) {
  return -(shift - pb.K0 + apply_self_energy(pb, M)).inverse();
}

double herglotz_floor(const MatrixXc& M) { return -1e-10 * std::max(1.0, M.cwiseAbs().maxCoeff()); }

bool newton(const DysonProblem& pb, const MatrixXc& shift, MatrixXc& M, double tol, int max_iter = 40) {
  const Eigen::Index m = pb.m;
  double prev = std::numeric_limits<double>::infinity();
  MatrixXc cur = M;
  for (int it = 0; it < max_iter; ++it) {
    const MatrixXc f = defect(pb, shift, cur);
    const double res = f.norm();
    if (!std::isfinite(res)) return false;
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + cur.inverse().norm());
    if (res <= tol || (res <= floor && res >= 0.5 * prev)) {
      M = cur;
      return res <= std::max(tol, floor);
    }
    if (it > 3 && res > 0.5 * prev && res > 1e3 * floor) return false;
    prev = res;
    const MatrixXc rhs = cur * f * cur;
    const MatrixXc a = stability_matrix(pb, cur);
    Eigen::PartialPivLU<MatrixXc> lu(a);
    const Eigen::VectorXcd d = lu.solve(Eigen::Map<const Eigen::VectorXcd>(rhs.data(), m * m));
    if (!d.allFinite()) return false;
    cur += Eigen::Map<const MatrixXc>(d.data(), m, m);
  }
  const double res = defect(pb, shift, cur).norm();
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + cur.inverse().norm());
  if (res <= std::max(tol, floor)) {
    M = cur;
    return true;
  }
  return false;
}

// Damped fixed point M <- (1 - a) M + a Phi(M) with adaptive damping.
bool fixed_point(const DysonProblem& pb, const MatrixXc& shift, MatrixXc& M, const SolverOptions& opts, double tol,
                 double* best = nullptr) {
  double alpha = opts.damping;
  double prev = defect(pb, shift, M).norm();
  double best_res = prev;
  int decreasing = 0;
  for (int it = 0; it < opts.max_iters; ++it) {
    const MatrixXc next = (1.0 - alpha) * M + alpha * phi_map(pb, shift, M);
    const double res = defect(pb, shift, next).norm();
    if (!std::isfinite(res)) {
      alpha *= 0.5;
      if (alpha < 1e-8) break;
      continue;
    }
    M = next;
    best_res = std::min(best_res, res);
    if (res <= tol) {
      if (best) *best = res;
      return true;
    }
    if (res > prev) {
      alpha = std::max(alpha * 0.5, 1e-6);
      decreasing = 0;
    } else if (++decreasing >= 50) {
      alpha = std::min(1.0, alpha * 1.2);
      decreasing = 0;
    }
    prev = res;
  }
  if (best) *best = best_res;
  return false;
}

bool local_solve(const DysonProblem& pb, const MatrixXc& shift, MatrixXc& M, const SolverOptions& opts, double tol) {
  if (pb.m <= opts.newton_max_dim) return newton(pb, shift, M, tol);
  return fixed_point(pb, shift, M, opts, tol);
}

struct PathPoint {
  double eta;
  double delta;
};

// Geometric continuation in (eta, delta) from a solved point down to the target.
MatrixXc continue_path(const DysonProblem& pb, double re, PathPoint from, PathPoint to, MatrixXc M,
                       const SolverOptions& opts) {
  const double tol = opts.tolerance;
  double st = -std::log(std::clamp(opts.continuation_factor, 0.05, 0.99));
  PathPoint cur = from;
  auto next_value = [](double v, double target, double step) {
    if (v <= target) return target;
    const double nv = v * std::exp(-step);
    if (target == 0.0 && nv < 1e-14) return 0.0;
    return std::max(target, nv);
  };
  int guard = 0;
  while (cur.eta > to.eta || cur.delta > to.delta) {
    if (++guard > 100000) throw NonConvergence("continuation did not terminate", defect(pb, spectral(pb, {re, cur.eta}, cur.delta), M).norm());
    const PathPoint nxt{next_value(cur.eta, to.eta, st), next_value(cur.delta, to.delta, st)};
    MatrixXc trial = M;
    const MatrixXc shift = spectral(pb, {re, nxt.eta}, nxt.delta);
    if (local_solve(pb, shift, trial, opts, tol) && min_imag_eigenvalue(trial) >= herglotz_floor(trial)) {
      M = std::move(trial);
      cur = nxt;
      st = std::min(st * 1.5, 1.5);
    } else {
      st *= 0.5;
      if (st < 1e-12) {
        throw NonConvergence("continuation stalled at eta=" + std::to_string(cur.eta) +
                                 " delta=" + std::to_string(cur.delta),
                             defect(pb, spectral(pb, {re, cur.eta}, cur.delta), M).norm());
      }
    }
  }
  return M;
}

DysonSolution finish(const DysonProblem& pb, cplx z, const MatrixXc& M) {
  DysonSolution sol;
  sol.z = z;
  sol.M = M;
  sol.residual = del_residual(pb, z, M);
  sol.min_im_eig = min_imag_eigenvalue(M);
  if (sol.min_im_eig < -1e-6) throw HerglotzViolation("imaginary part of M is not positive semidefinite", sol.min_im_eig);
  return sol;
}

// Fixed-point variant for large m: regularize the non-J block, extrapolate delta -> 0.
DysonSolution solve_without_newton(const DysonProblem& pb, cplx z, const MatrixXc& M_start, PathPoint start,
                                   const SolverOptions& opts) {
  if (pb.k == pb.m) return finish(pb, z, continue_path(pb, z.real(), start, {z.imag(), 0.0}, M_start, opts));
  const MatrixXc m4 = continue_path(pb, z.real(), start, {z.imag(), 1e-4}, M_start, opts);
  const MatrixXc m6 = continue_path(pb, z.real(), {z.imag(), 1e-4}, {z.imag(), 1e-6}, m4, opts);
  MatrixXc plain = m6;
  double best = 0.0;
  if (fixed_point(pb, spectral(pb, z, 0.0), plain, opts, opts.tolerance, &best) &&
      min_imag_eigenvalue(plain) >= herglotz_floor(plain))
    return finish(pb, z, plain);
  const MatrixXc extrap = m6 + (m6 - m4) * (1e-6 / (1e-4 - 1e-6));
  DysonSolution sol = finish(pb, z, extrap);
  if (!(sol.residual <= opts.tolerance)) throw NonConvergence("regularized extrapolation above tolerance", sol.residual);
  return sol;
}

}  // namespace

DysonProblem DysonProblem::from_pencil(const Pencil& p) {
  p.validate();
  DysonProblem pb;
  pb.m = p.m;
  pb.k = p.k;
  pb.K0 = p.K0;
  for (const auto& a : p.K)
    if (!a.isZero(0.0)) pb.K.push_back(to_sparse(a));
  for (const auto& a : p.L)
    if (!a.isZero(0.0)) pb.L.push_back(to_sparse(a));
  return pb;
}

MatrixXc DysonProblem::J() const {
  MatrixXc j = MatrixXc::Zero(m, m);
  for (Eigen::Index i = 0; i < k; ++i) j(i, i) = 1.0;
  return j;
}

MatrixXc del_defect(const DysonProblem& pb, cplx z, const MatrixXc& M) { return defect(pb, spectral(pb, z, 0.0), M); }

double del_residual(const DysonProblem& pb, cplx z, const MatrixXc& M) { return del_defect(pb, z, M).norm(); }

double min_imag_eigenvalue(const MatrixXc& M) {
  const MatrixXc im = (M - M.adjoint()) / cplx(0.0, 2.0);
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(im, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

MatrixXc stability_matrix(const DysonProblem& pb, const MatrixXc& M) {
  const Eigen::Index m = pb.m;
  const Eigen::Index n2 = m * m;
  MatrixXc a = MatrixXc::Identity(n2, n2);
  auto subtract_term = [&](const MatrixXc& p, const MatrixXc& q) {
    // column (j m + i) of kron(q^t, p) is q(j, :)^t (x) p(:, i)
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index col = j * m + i;
        for (Eigen::Index b = 0; b < m; ++b) {
          const cplx qb = q(j, b);
          if (qb == cplx(0.0)) continue;
          a.col(col).segment(b * m, m) -= qb * p.col(i);
        }
      }
  };
  for (const auto& k : pb.K) subtract_term(M * k, k * M);
  for (const auto& l : pb.L) {
    const SparseXc la = l.adjoint();
    subtract_term(M * l, la * M);
    subtract_term(M * la, l * M);
  }
  return a;
}

DysonSolution solve_del(const DysonProblem& pb, cplx z, const SolverOptions& opts) {
  if (!(z.imag() > 0.0)) throw InvalidParams("solve_del needs Im z > 0");
  if (!(opts.tolerance > 0.0) || !(opts.damping > 0.0) || opts.damping > 1.0)
    throw InvalidParams("invalid solver options");
  const double eta_s = std::max(opts.eta0, z.imag());
  const PathPoint start{eta_s, pb.k < pb.m ? eta_s : 0.0};
  MatrixXc M = MatrixXc::Identity(pb.m, pb.m) * cplx(0.0, 1.0 / eta_s);
  const MatrixXc shift = spectral(pb, {z.real(), start.eta}, start.delta);
  double best = 0.0;
  if (!fixed_point(pb, shift, M, opts, opts.tolerance, &best))
    throw NonConvergence("fixed point did not converge at the starting height", best);
  if (pb.m > opts.newton_max_dim) return solve_without_newton(pb, z, M, start, opts);
  M = continue_path(pb, z.real(), start, {z.imag(), 0.0}, M, opts);
  DysonSolution sol = finish(pb, z, M);
  if (!(sol.residual <= opts.tolerance)) {
    MatrixXc polished = M;
    newton(pb, spectral(pb, z, 0.0), polished, 0.1 * opts.tolerance);
    sol = finish(pb, z, polished);
    if (!(sol.residual <= opts.tolerance)) throw NonConvergence("residual above tolerance", sol.residual);
  }
  return sol;
}

DysonSolution continue_del(const DysonProblem& pb, cplx z_from, const MatrixXc& M_from, cplx z,
                           const SolverOptions& opts) {
  if (!(z.imag() > 0.0) || !(z_from.imag() > 0.0)) throw InvalidParams("continuation needs points in the upper half-plane");
  if (std::abs(z.real() - z_from.real()) > 0.0 || z.imag() > z_from.imag()) {
    return solve_del(pb, z, opts);
  }
  if (pb.m > opts.newton_max_dim) return solve_without_newton(pb, z, M_from, {z_from.imag(), 0.0}, opts);
  const MatrixXc M = continue_path(pb, z.real(), {z_from.imag(), 0.0}, {z.imag(), 0.0}, M_from, opts);
  DysonSolution sol = finish(pb, z, M);
  if (!(sol.residual <= opts.tolerance)) throw NonConvergence("residual above tolerance", sol.residual);
  return sol;
}

double stability_operator_inverse_norm(const DysonProblem& pb, const DysonSolution& sol) {
  const MatrixXc a = stability_matrix(pb, sol.M);
  Eigen::JacobiSVD<MatrixXc> svd(a);
  const double smin = svd.singularValues().minCoeff();
  if (smin < 1e-14) throw SingularStabilityOperator("stability operator is numerically singular");
  return 1.0 / smin;
}

std::size_t DensityCurve::invalid_count() const {
  return std::size_t(std::count(quality.begin(), quality.end(), Quality::invalid));
}

double extrapolate_to_zero(const std::vector<double>& eta, const std::vector<double>& value) {
  const std::size_t n = eta.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) w *= (0.0 - eta[j]) / (eta[i] - eta[j]);
    acc += w * value[i];
  }
  return acc;
}

DensityCurve stieltjes_invert(const DysonProblem& pb, const MatrixXc& weights, const std::vector<double>& grid,
                              const std::vector<double>& eta_schedule, const SolverOptions& opts) {
  if (eta_schedule.empty() || !std::is_sorted(eta_schedule.rbegin(), eta_schedule.rend()))
    throw InvalidParams("eta schedule must be non-empty and decreasing");
  if (eta_schedule.back() < 1e-8) throw InvalidParams("smallest eta must be at least 1e-8");
  DensityCurve out;
  for (double lam : grid) {
    std::vector<double> etas, vals;
    try {
      DysonSolution sol = solve_del(pb, {lam, eta_schedule.front()}, opts);
      for (std::size_t j = 0; j < eta_schedule.size(); ++j) {
        if (j > 0) sol = continue_del(pb, sol.z, sol.M, {lam, eta_schedule[j]}, opts);
        const MatrixXc im = (sol.M - sol.M.adjoint()) / cplx(0.0, 2.0);
        etas.push_back(eta_schedule[j]);
        vals.push_back((weights.adjoint() * im).trace().real() / M_PI);
      }
    } catch (const Error&) {
      out.lambda.push_back(lam);
      out.rho.push_back(std::numeric_limits<double>::quiet_NaN());
      out.eta_used.push_back(eta_schedule.back());
      out.quality.push_back(Quality::invalid);
      continue;
    }
    const std::size_t n = std::min<std::size_t>(3, etas.size());
    const std::vector<double> e(etas.end() - long(n), etas.end());
    const std::vector<double> v(vals.end() - long(n), vals.end());
    const double extrap = extrapolate_to_zero(e, v);
    const double last = v.back();
    out.lambda.push_back(lam);
    out.eta_used.push_back(e.back());
    if (std::abs(extrap - last) > 0.05 * std::abs(extrap) + e.back()) {
      out.rho.push_back(last);
      out.quality.push_back(Quality::flagged);
    } else {
      out.rho.push_back(std::max(extrap, 0.0));
      out.quality.push_back(Quality::ok);
    }
  }
  return out;
}

}  // namespace ncdel
