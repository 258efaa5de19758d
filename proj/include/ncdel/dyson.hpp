#pragma once

#include <limits>
#include <vector>

#include <Eigen/Sparse>

#include "ncdel/linearization.hpp"

namespace ncdel {

using SparseXc = Eigen::SparseMatrix<cplx>;

// -M^{-1} = z J - K0 + S[M],  S[R] = sum K R K + sum (L R L^* + L^* R L).
// J is the projector onto the leading k coordinates.
struct DysonProblem {
  Eigen::Index m = 1;
  Eigen::Index k = 1;
  MatrixXc K0;
  std::vector<SparseXc> K;
  std::vector<SparseXc> L;

  static DysonProblem from_pencil(const Pencil& p);
  MatrixXc J() const;
};

struct SolverOptions {
  double tolerance = 1e-11;
  double damping = 0.3;
  int max_iters = 20000;
  double eta0 = 2.0;
  double continuation_factor = 0.8;
  // Newton refinement is used when m <= newton_max_dim.
  Eigen::Index newton_max_dim = 40;
};

struct DysonSolution {
  cplx z;
  MatrixXc M;
  double residual = 0.0;
  double min_im_eig = 0.0;
};

template <typename Derived>
MatrixXc apply_self_energy(const DysonProblem& pb, const Eigen::MatrixBase<Derived>& r) {
  if (r.rows() != pb.m || r.cols() != pb.m) throw SizeMismatch("self-energy argument has the wrong size");
  MatrixXc out = MatrixXc::Zero(pb.m, pb.m);
  const MatrixXc rr = r;
  for (const auto& k : pb.K) out.noalias() += k * (rr * k);
  for (const auto& l : pb.L) {
    const SparseXc la = l.adjoint();
    out.noalias() += l * (rr * la);
    out.noalias() += la * (rr * l);
  }
  return out;
}

// M^{-1} + z J - K0 + S[M]
MatrixXc del_defect(const DysonProblem& pb, cplx z, const MatrixXc& M);
double del_residual(const DysonProblem& pb, cplx z, const MatrixXc& M);

double min_imag_eigenvalue(const MatrixXc& M);

DysonSolution solve_del(const DysonProblem& pb, cplx z, const SolverOptions& opts = {});

// Continues a known solution at z_from to z (both in the upper half-plane).
DysonSolution continue_del(const DysonProblem& pb, cplx z_from, const MatrixXc& M_from, cplx z,
                           const SolverOptions& opts = {});

// R -> R - M S[R] M as an m^2 x m^2 matrix acting on column-major vec(R).
MatrixXc stability_matrix(const DysonProblem& pb, const MatrixXc& M);

double stability_operator_inverse_norm(const DysonProblem& pb, const DysonSolution& sol);

enum class Quality { ok = 0, flagged = 1, invalid = 2 };

struct DensityCurve {
  std::vector<double> lambda;
  std::vector<double> rho;
  std::vector<double> eta_used;
  std::vector<Quality> quality;
  std::vector<double> cdf;
  double moment1 = std::numeric_limits<double>::quiet_NaN();
  double moment2 = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const { return lambda.size(); }
  std::size_t invalid_count() const;
};

// Polynomial extrapolation to eta = 0 through the (eta, value) pairs.
double extrapolate_to_zero(const std::vector<double>& eta, const std::vector<double>& value);

DensityCurve stieltjes_invert(const DysonProblem& pb, const MatrixXc& weights, const std::vector<double>& grid,
                              const std::vector<double>& eta_schedule, const SolverOptions& opts = {});

}  // namespace ncdel
