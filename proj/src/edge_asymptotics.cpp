#include <cmath>
#include <limits>

#include "ncdel/quantum_dot.hpp"

namespace ncdel {

namespace {

// cubic in u = xi^2
double cubic(double E, double phi, double u) {
  const double a = E * E + 8.0 * phi - 4.0;
  const double b = 4.0 * phi * (E * E + 5.0 * phi - 4.0);
  const double c = 16.0 * (phi - 1.0) * phi * phi;
  return ((u + a) * u + b) * u + c;
}

double cubic_derivative(double E, double phi, double u) {
  const double a = E * E + 8.0 * phi - 4.0;
  const double b = 4.0 * phi * (E * E + 5.0 * phi - 4.0);
  return (3.0 * u + 2.0 * a) * u + b;
}

}  // namespace

double sextic_residual(double E, double phi, double xi) { return cubic(E, phi, xi * xi); }

double sextic_root(double E, double phi) {
  if (!(phi >= 0.0 && phi < 1.0)) throw InvalidParams("sextic root needs phi in [0, 1)");
  const double hi = std::max(4.0 + E * E + 8.0 * phi, 1.0);
  const double lo = phi == 0.0 ? 1e-12 : 0.0;
  // sign counting on a fine scan verifies a single positive root
  const int scan = 4000;
  int changes = 0;
  double prev = cubic(E, phi, lo);
  for (int i = 1; i <= scan; ++i) {
    const double v = cubic(E, phi, lo + (hi - lo) * i / scan);
    if ((v > 0.0) != (prev > 0.0)) ++changes;
    prev = v;
  }
  if (changes != 1 || !(cubic(E, phi, lo) < 0.0) || !(cubic(E, phi, hi) > 0.0))
    throw NoPositiveRoot("no unique positive root of the edge sextic");
  double a = lo, b = hi;
  while (b - a > 1e-12 * std::max(1.0, b)) {
    const double m = 0.5 * (a + b);
    (cubic(E, phi, m) < 0.0 ? a : b) = m;
  }
  double u = 0.5 * (a + b);
  for (int i = 0; i < 3; ++i) {
    const double d = cubic_derivative(E, phi, u);
    if (d == 0.0) break;
    const double nu = u - cubic(E, phi, u) / d;
    if (nu > a - 1e-12 && nu < b + 1e-12) u = nu;
  }
  if (!(u > 0.0)) throw NoPositiveRoot("edge sextic root is not positive");
  return u;
}

double e_star(double phi, double gamma) {
  const double g2 = gamma * gamma;
  const double s = std::sqrt(1.0 + 2.0 * (1.0 + 2.0 * phi) * g2 + (2.0 * phi - 1.0) * (2.0 * phi - 1.0) * g2 * g2);
  const double v = 2.0 * s - 2.0 * g2 * (2.0 * phi - 1.0) - 2.0;
  return std::sqrt(std::max(v, 0.0)) / gamma;
}

EdgeAsymptotics edge_asymptotics(const ModelParams& params) {
  params.validate();
  const double g = params.gamma;
  const double E = params.E;
  const double phi = params.phi;
  EdgeAsymptotics out;
  if (phi == 1.0) {
    out.xi0_at_0 = -std::cbrt(1.0 / (16.0 * g * g * g * g * (1.0 + E * E)));
    out.nu0_at_0 = -E * out.xi0_at_0 * out.xi0_at_0;
    out.prefactor_at_0 = std::cbrt((1.0 + E * E) / (4.0 * g * g)) / M_PI;
    out.exponent_at_0 = -2.0 / 3.0;
    out.branch_factor_at_0 = std::sqrt(3.0) / 2.0;
    out.coefficient_at_0 = cplx(0.0, 0.0);
  } else {
    const double u = sextic_root(E, phi);
    const double xi = std::sqrt(u);
    const double w = u + 2.0 * phi;
    out.xi0_at_0 = xi;
    out.nu0_at_0 = E * u / w;
    out.prefactor_at_0 = (g * g * E * E * u * u + w * w * (4.0 + g * g * u)) / (4.0 * g * xi * w * w) / M_PI;
    out.exponent_at_0 = -0.5;
    out.branch_factor_at_0 = 1.0;
    out.coefficient_at_0 =
        cplx(0.0, (4.0 + g * g * out.nu0_at_0 * out.nu0_at_0 + g * g * u) / (4.0 * g * xi));
  }
  out.E_star = e_star(phi, g);
  if (std::abs(E) < out.E_star) {
    const double x = -g * std::sqrt(out.E_star * out.E_star - E * E);
    out.xi0_at_1 = x;
    out.prefactor_at_1 = -4.0 * x / (x * x + g * g * E * E + 4.0) / M_PI;
    out.edge_at_1_valid = true;
  } else {
    out.xi0_at_1 = std::numeric_limits<double>::quiet_NaN();
    out.prefactor_at_1 = std::numeric_limits<double>::quiet_NaN();
    out.edge_at_1_valid = false;
  }
  return out;
}

}  // namespace ncdel
