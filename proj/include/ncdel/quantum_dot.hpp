#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ncdel/dyson.hpp"

namespace ncdel {

struct ModelParams {
  double gamma = 1.0;
  double phi = 1.0;
  double E = 0.0;
  double kappa = 0.0;
  // Reach kappa = 0 for phi <= 1/2 via Y = E + i phi X, X -> 0, instead of a direct solve.
  bool limit_path = false;

  cplx Y() const { return {E, kappa}; }
  void validate() const;
};

struct ReducedSolution {
  cplx z;
  Eigen::Matrix2cd M3;
  Eigen::Matrix3cd M1;
  Eigen::Matrix3cd M2;
  cplx detT1;
  double residual = 0.0;
};

// -M3^{-1} = -U3(Y) - phi (Z1 + M3)^{-1} - phi (Z2 + M3)^{-1} + s1 M3 s1
ReducedSolution solve_reduced(const ModelParams& params, cplx z, const SolverOptions& opts = {});

// Defect of the reduced equation at (z, M3).
Eigen::Matrix2cd reduced_defect(const ModelParams& params, cplx z, const Eigen::Matrix2cd& M3);

// (1/pi) Im M1(1,1) at lambda, extrapolated in eta.
struct DensityPoint {
  double rho = 0.0;
  double eta_used = 0.0;
  Quality quality = Quality::ok;
};
DensityPoint density_point(const ModelParams& params, double lambda, const SolverOptions& opts = {});

DensityCurve density(const ModelParams& params, const std::vector<double>& grid, const SolverOptions& opts = {},
                     int jobs = 1);

double density_phi0(double E, double gamma, double lambda);

// M1(1,1) at phi = 0 in closed form.
cplx m11_phi0(double E, double gamma, cplx z);

struct Moments {
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
};

// m_p = int lambda^p rho via a circular contour around [0, 1].
Moments moments(const ModelParams& params, int nodes = 32, const SolverOptions& opts = {});

// Split quadrature with power-law edge pieces and composite Simpson in the interior.
Moments moments_split(const ModelParams& params, double delta = 1e-3, int interior = 2000,
                      const SolverOptions& opts = {});

double fano(const ModelParams& params, const SolverOptions& opts = {});
double fano_phi0(double E, double gamma);

// Cumulative distribution on an edge-refined grid, normalized to total mass 1.
struct CdfTable {
  std::vector<double> lambda;
  std::vector<double> cdf;
  double mass = 0.0;
  double operator()(double x) const;
};
CdfTable cdf_table(const ModelParams& params, int nodes = 2000, const SolverOptions& opts = {});

cplx scattering_mean_phi0(double E, double gamma);

struct IdentityResiduals {
  double m22_relation = 0.0;   // m22 = 4 gamma^2 z m11
  double m21_relation = 0.0;   // m21 - m12 = (i/gamma) m22 (1 - gamma kappa detT1 / (2 phi))
  double det_m1 = 0.0;         // det M1 = -1/(z detT1)
  double det_m2_literal = 0.0; // det M2 = -gamma^2/detT1
  double det_m2 = 0.0;         // det M2 = -4 gamma^2/detT1
  double det_m3_quadratic = 0.0;
  double m1_corner = 0.0;      // M1(1,1) = -1/z - 4 m11/(z detT1)
};
IdentityResiduals identity_residuals(const ModelParams& params, const ReducedSolution& sol);

struct EdgeAsymptotics {
  double xi0_at_0 = 0.0;
  double nu0_at_0 = 0.0;
  double prefactor_at_0 = 0.0;
  double exponent_at_0 = -0.5;
  // Factor between the real-root prefactor and the amplitude of Im M1(1,1); differs from 1 only at phi = 1.
  double branch_factor_at_0 = 1.0;
  double xi0_at_1 = 0.0;
  double prefactor_at_1 = 0.0;
  double E_star = 0.0;
  bool edge_at_1_valid = true;
  // i-coefficient of z^{-1/2} in the expansion of M1(1,1) at 0 (phi < 1).
  cplx coefficient_at_0;
};

EdgeAsymptotics edge_asymptotics(const ModelParams& params);

// Positive root in u = xi^2 of the cubic behind the sextic for xi0 at 0.
double sextic_root(double E, double phi);
double sextic_residual(double E, double phi, double xi);
double e_star(double phi, double gamma);

}  // namespace ncdel
