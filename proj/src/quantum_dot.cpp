#include "ncdel/quantum_dot.hpp"

#include "ncdel/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace ncdel {

namespace {

using Mat2 = Eigen::Matrix2cd;
using Mat3 = Eigen::Matrix3cd;
const cplx I(0.0, 1.0);

Mat2 sigma1() { return (Mat2() << 0, 1, 1, 0).finished(); }
Mat2 sigma2() { return (Mat2() << 0, -I, I, 0).finished(); }
Mat2 sigma3() { return (Mat2() << 1, 0, 0, -1).finished(); }

struct Parts {
  Mat2 Z1, Z2, U3;
};

Parts parts(const ModelParams& p, cplx z, cplx Y) {
  const double g = p.gamma;
  const Mat2 id = Mat2::Identity();
  Parts out;
  out.Z1 = -(id + sigma3()) / (2.0 * g * g * z) - sigma2() / g;
  out.Z2 = -2.0 * (id - sigma3()) - sigma2() / g;
  out.U3 << 0, Y, std::conj(Y), 0;
  return out;
}

Mat2 defect(const ModelParams& p, cplx z, cplx Y, const Mat2& M) {
  const Parts q = parts(p, z, Y);
  return M.inverse() - q.U3 - p.phi * (q.Z1 + M).inverse() - p.phi * (q.Z2 + M).inverse() +
         sigma1() * M * sigma1();
}

Mat2 phi_map(const ModelParams& p, cplx z, cplx Y, const Mat2& M) {
  const Parts q = parts(p, z, Y);
  return -(-q.U3 - p.phi * (q.Z1 + M).inverse() - p.phi * (q.Z2 + M).inverse() + sigma1() * M * sigma1()).inverse();
}

double scale(const Mat2& M) { return 1.0 + M.cwiseAbs().maxCoeff() + M.inverse().cwiseAbs().maxCoeff(); }

double min_im(const Mat2& M) {
  const Mat2 im = (M - M.adjoint()) / (2.0 * I);
  Eigen::SelfAdjointEigenSolver<Mat2> es(im, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool newton(const ModelParams& p, cplx z, cplx Y, Mat2& M, double tol = 1e-13, int max_iter = 50) {
  Mat2 cur = M;
  Mat2 best = M;
  double best_rel = std::numeric_limits<double>::infinity();
  int stale = 0;
  const Mat2 s1 = sigma1();
  for (int it = 0; it < max_iter; ++it) {
    const Mat2 f = defect(p, z, Y, cur);
    if (!f.allFinite()) break;
    const double rel = f.cwiseAbs().maxCoeff() / scale(cur);
    if (rel < tol) {
      M = cur;
      return true;
    }
    if (rel < 0.5 * best_rel) {
      stale = 0;
    } else if (rel < 1e-8 && ++stale >= 4) {
      break;
    }
    if (rel < best_rel) {
      best_rel = rel;
      best = cur;
    }
    const Parts q = parts(p, z, Y);
    const Mat2 mi = cur.inverse();
    const Mat2 a = (q.Z1 + cur).inverse();
    const Mat2 b = (q.Z2 + cur).inverse();
    Eigen::Matrix4cd jac;
    for (int c = 0; c < 4; ++c) {
      Mat2 d = Mat2::Zero();
      d(c % 2, c / 2) = 1.0;
      const Mat2 df = -mi * d * mi + p.phi * a * d * a + p.phi * b * d * b + s1 * d * s1;
      jac.col(c) = Eigen::Map<const Eigen::Vector4cd>(df.data());
    }
    const Eigen::Vector4cd step = jac.partialPivLu().solve(-Eigen::Map<const Eigen::Vector4cd>(f.data()));
    if (!step.allFinite()) break;
    cur += Eigen::Map<const Mat2>(step.data());
  }
  if (best_rel < 1e-10) {
    M = best;
    return true;
  }
  return false;
}

Mat2 start_point(const ModelParams& p, double re, double eta0, cplx Y) {
  Mat2 M = I * Mat2::Identity();
  const cplx z(re, eta0);
  for (int it = 0; it < 5000; ++it) {
    const Mat2 next = phi_map(p, z, Y, M);
    const double diff = (next - M).cwiseAbs().maxCoeff();
    M = 0.5 * M + 0.5 * next;
    if (diff < 1e-13) break;
  }
  if (!newton(p, z, Y, M)) throw NonConvergence("reduced fixed point did not converge", defect(p, z, Y, M).norm());
  return M;
}

Mat2 continue_eta(const ModelParams& p, double re, double eta_from, double eta_to, Mat2 M, cplx Y) {
  double eta = eta_from;
  double st = 0.7;
  while (eta > eta_to) {
    const double en = std::max(eta_to, eta * std::exp(-st));
    Mat2 trial = M;
    if (newton(p, {re, en}, Y, trial) && min_im(trial) > -1e-12 * (1.0 + trial.cwiseAbs().maxCoeff())) {
      M = trial;
      eta = en;
      st = std::min(st * 1.5, 1.5);
    } else {
      st *= 0.5;
      if (st < 1e-10)
        throw NonConvergence("reduced continuation stalled at eta=" + std::to_string(eta),
                             defect(p, {re, eta}, Y, M).norm());
    }
  }
  return M;
}

Mat2 solve_m3(const ModelParams& p, cplx z, cplx Y, const SolverOptions& opts) {
  const double eta0 = std::max(opts.eta0, z.imag());
  Mat2 M = start_point(p, z.real(), eta0, Y);
  return continue_eta(p, z.real(), eta0, z.imag(), M, Y);
}

ReducedSolution assemble(const ModelParams& p, cplx z, const Mat2& M3) {
  const double g = p.gamma;
  Mat3 U1 = Mat3::Zero();
  U1(1, 2) = I / g;
  U1(2, 1) = -I / g;
  Mat3 U2 = Mat3::Zero();
  U2(0, 2) = I / g;
  U2(1, 1) = -1.0 / (4.0 * g * g);
  U2(2, 0) = -I / g;
  Eigen::Matrix<cplx, 2, 3> U4, U5;
  U4 << 0, 1, 1, 1, 0, 0;
  U5 << 0, 0, 1, 1, 1, 0;
  Mat3 J3 = Mat3::Zero();
  J3(0, 0) = 1.0;
  ReducedSolution s;
  s.z = z;
  s.M3 = M3;
  s.M1 = -(z * J3 - U1 + U5.transpose() * M3 * U5).inverse();
  s.M2 = -(-U2 + U4.transpose() * M3 * U4).inverse();
  Mat2 T1;
  T1 << -1.0 / (g * g * z), I / g, -I / g, 0.0;
  s.detT1 = (T1 + M3).determinant();
  s.residual = defect(p, z, p.Y(), M3).norm();
  return s;
}

double extrapolate_density(const std::vector<double>& eta, const std::vector<double>& val, Quality& q) {
  const double ex = extrapolate_to_zero(eta, val);
  if (std::abs(ex - val.back()) > 0.05 * std::abs(ex) + eta.back()) {
    q = Quality::flagged;
    return val.back();
  }
  q = Quality::ok;
  return std::max(ex, 0.0);
}

cplx m11(const ModelParams& p, cplx z, const SolverOptions& opts) {
  if (p.phi == 0.0 && p.kappa == 0.0) return m11_phi0(p.E, p.gamma, z);
  return solve_reduced(p, z, opts).M1(0, 0);
}

}  // namespace

void ModelParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidParams("gamma must be positive");
  if (!(phi >= 0.0 && phi <= 1.0)) throw InvalidParams("phi must lie in [0, 1]");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidParams("kappa must be non-negative");
  if (!std::isfinite(E)) throw InvalidParams("E must be finite");
}

Eigen::Matrix2cd reduced_defect(const ModelParams& params, cplx z, const Eigen::Matrix2cd& M3) {
  return defect(params, z, params.Y(), M3);
}

ReducedSolution solve_reduced(const ModelParams& params, cplx z, const SolverOptions& opts) {
  params.validate();
  if (!(z.imag() > 0.0)) throw InvalidParams("solve_reduced needs Im z > 0");
  Mat2 M3;
  if (params.limit_path && params.kappa == 0.0 && params.phi > 0.0 && params.phi <= 0.5) {
    const double xs[] = {1e-2, 1e-3, 1e-4};
    Mat2 sols[3];
    for (int i = 0; i < 3; ++i) sols[i] = solve_m3(params, z, {params.E, params.phi * xs[i]}, opts);
    M3 = sols[2] - xs[2] * (sols[1] - sols[2]) / (xs[1] - xs[2]);
    Mat2 polished = M3;
    if (newton(params, z, params.Y(), polished) && min_im(polished) > -1e-10) M3 = polished;
  } else {
    M3 = solve_m3(params, z, params.Y(), opts);
  }
  ReducedSolution sol = assemble(params, z, M3);
  const double mi = min_im(M3);
  if (mi < -1e-6) throw HerglotzViolation("imaginary part of M3 is not positive semidefinite", mi);
  return sol;
}

DensityPoint density_point(const ModelParams& params, double lambda, const SolverOptions& opts) {
  params.validate();
  DensityPoint out;
  if (params.phi == 0.0 && params.kappa == 0.0) {
    if (lambda <= 0.0 || lambda >= 1.0) {
      out.rho = 0.0;
      return out;
    }
    out.rho = density_phi0(params.E, params.gamma, lambda);
    return out;
  }
  if (lambda <= 0.0 || lambda >= 1.0) {
    const std::vector<double> etas = {4e-4, 2e-4, 1e-4};
    std::vector<double> vals;
    for (double eta : etas) vals.push_back(solve_reduced(params, {lambda, eta}, opts).M1(0, 0).imag() / M_PI);
    out.rho = std::max(0.0, extrapolate_to_zero(etas, vals));
    out.eta_used = etas.back();
    return out;
  }
  const double d = std::min(lambda, 1.0 - lambda);
  for (double factor : {1e-6, 1e-4, 1e-2}) {
    const double base = std::max(factor * d, 1e-14);
    const std::vector<double> etas = {4.0 * base, 2.0 * base, base};
    try {
      std::vector<double> vals;
      const double eta0 = std::max(opts.eta0, etas.front());
      Mat2 M = start_point(params, lambda, eta0, params.Y());
      double from = eta0;
      for (double eta : etas) {
        M = continue_eta(params, lambda, from, eta, M, params.Y());
        from = eta;
        const double mi = min_im(M);
        if (mi < -1e-6) throw HerglotzViolation("imaginary part of M3 is not positive semidefinite", mi);
        vals.push_back(assemble(params, {lambda, eta}, M).M1(0, 0).imag() / M_PI);
      }
      out.rho = extrapolate_density(etas, vals, out.quality);
      out.eta_used = etas.back();
      if (factor > 1e-6 && out.quality == Quality::ok) out.quality = Quality::flagged;
      return out;
    } catch (const NonConvergence&) {
      if (factor == 1e-2) throw;
    }
  }
  return out;
}

DensityCurve density(const ModelParams& params, const std::vector<double>& grid, const SolverOptions& opts, int jobs) {
  params.validate();
  const std::size_t n = grid.size();
  DensityCurve c;
  c.lambda = grid;
  c.rho.assign(n, std::numeric_limits<double>::quiet_NaN());
  c.eta_used.assign(n, 0.0);
  c.quality.assign(n, Quality::invalid);
  parallel_for(int(n), jobs, [&](int i) {
    try {
      const DensityPoint pt = density_point(params, grid[std::size_t(i)], opts);
      c.rho[std::size_t(i)] = pt.rho;
      c.eta_used[std::size_t(i)] = pt.eta_used;
      c.quality[std::size_t(i)] = pt.quality;
    } catch (const Error&) {
    }
  });
  try {
    const Moments m = moments(params, 32, opts);
    c.moment1 = m.m1;
    c.moment2 = m.m2;
  } catch (const Error&) {
  }
  return c;
}

double density_phi0(double E, double gamma, double lambda) {
  if (!(std::abs(E) < 2.0)) throw OutOfRange("closed form needs |E| < 2");
  if (!(lambda > 0.0 && lambda < 1.0)) throw OutOfRange("closed form needs lambda in (0, 1)");
  if (!(gamma > 0.0)) throw InvalidParams("gamma must be positive");
  const double g2 = gamma * gamma;
  const double a = 4.0 - E * E;
  return gamma * (1.0 + g2) / ((1.0 + g2) * (1.0 + g2) * lambda + g2 * a * (1.0 - lambda)) *
         std::sqrt(a / (lambda * (1.0 - lambda))) / M_PI;
}

cplx m11_phi0(double E, double gamma, cplx z) {
  const double g2 = gamma * gamma;
  const double a = 4.0 - E * E;
  cplx xi = std::sqrt(a / (z * (1.0 - z)));
  if (xi.real() < 0.0) xi = -xi;
  return (g2 * a - (1.0 + g2) * (1.0 + g2) + I * gamma * (1.0 + g2) * xi) /
         (g2 * a + ((1.0 + g2) * (1.0 + g2) - a * g2) * z);
}

Moments moments(const ModelParams& params, int nodes, const SolverOptions& opts) {
  params.validate();
  if (nodes < 4) throw InvalidParams("need at least 4 contour nodes");
  const double center = 0.5;
  const double radius = 0.75;
  cplx s[3] = {0.0, 0.0, 0.0};
  for (int j = 0; j < nodes; ++j) {
    const double th = M_PI * (j + 0.5) / nodes;
    const cplx e = std::polar(1.0, th);
    const cplx z = center + radius * e;
    const cplx dz = I * radius * e * (M_PI / nodes);
    const cplx v = m11(params, z, opts);
    cplx zp = 1.0;
    for (auto& acc : s) {
      acc += zp * v * dz;
      zp *= z;
    }
  }
  double m[3];
  for (int p = 0; p < 3; ++p) m[p] = (-(s[p] - std::conj(s[p])) / (2.0 * M_PI * I)).real();
  return {m[0], m[1], m[2]};
}

Moments moments_split(const ModelParams& params, double delta, int interior, const SolverOptions& opts) {
  params.validate();
  if (interior % 2) ++interior;
  auto rho = [&](double x) { return density_point(params, x, opts).rho; };
  Moments out;
  const double h = (1.0 - 2.0 * delta) / interior;
  for (int i = 0; i <= interior; ++i) {
    const double x = delta + i * h;
    const double w = (i == 0 || i == interior) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double r = rho(x) * w * h / 3.0;
    out.m0 += r;
    out.m1 += r * x;
    out.m2 += r * x * x;
  }
  // rho ~ A s^a with s the distance to the edge
  auto edge = [&](auto at) {
    const double r0 = rho(at(delta / 4.0));
    const double r1 = rho(at(delta));
    const double a = std::log(r1 / r0) / std::log(4.0);
    const double A = r1 / std::pow(delta, a);
    return std::pair{A, a};
  };
  const auto [A0, a0] = edge([](double s) { return s; });
  for (int p = 0; p < 3; ++p) {
    const double v = A0 * std::pow(delta, p + a0 + 1.0) / (p + a0 + 1.0);
    (p == 0 ? out.m0 : p == 1 ? out.m1 : out.m2) += v;
  }
  const auto [A1, a1] = edge([](double s) { return 1.0 - s; });
  // int_0^delta (1 - s)^p A s^a ds
  const double i0 = A1 * std::pow(delta, a1 + 1.0) / (a1 + 1.0);
  const double i1 = A1 * std::pow(delta, a1 + 2.0) / (a1 + 2.0);
  const double i2 = A1 * std::pow(delta, a1 + 3.0) / (a1 + 3.0);
  out.m0 += i0;
  out.m1 += i0 - i1;
  out.m2 += i0 - 2.0 * i1 + i2;
  return out;
}

double fano_phi0(double E, double gamma) {
  if (!(std::abs(E) < 2.0)) throw OutOfRange("closed form needs |E| < 2");
  if (!(gamma > 0.0)) throw InvalidParams("gamma must be positive");
  const double g2 = gamma * gamma;
  return (1.0 + g2) / (2.0 * (1.0 + g2 + gamma * std::sqrt(4.0 - E * E)));
}

double fano(const ModelParams& params, const SolverOptions& opts) {
  params.validate();
  if (params.phi == 0.0 && params.kappa == 0.0) return fano_phi0(params.E, params.gamma);
  const Moments m = moments(params, 32, opts);
  return 1.0 - m.m2 / m.m1;
}

double CdfTable::operator()(double x) const {
  if (lambda.empty()) return 0.0;
  if (x <= lambda.front()) return 0.0;
  if (x >= lambda.back()) return 1.0;
  const auto it = std::upper_bound(lambda.begin(), lambda.end(), x);
  const std::size_t j = std::size_t(it - lambda.begin());
  const double t = (x - lambda[j - 1]) / (lambda[j] - lambda[j - 1]);
  return cdf[j - 1] + t * (cdf[j] - cdf[j - 1]);
}

CdfTable cdf_table(const ModelParams& params, int nodes, const SolverOptions& opts) {
  params.validate();
  auto map = [](double t) {
    const double a = t * t * t, b = (1.0 - t) * (1.0 - t) * (1.0 - t);
    return a / (a + b);
  };
  auto dmap = [](double t) {
    const double a = t * t * t, b = (1.0 - t) * (1.0 - t) * (1.0 - t);
    return 3.0 * t * t * (1.0 - t) * (1.0 - t) / ((a + b) * (a + b));
  };
  CdfTable tab;
  tab.lambda.push_back(0.0);
  tab.cdf.push_back(0.0);
  double acc = 0.0;
  std::pair<double, double> last_valid{0.0, 0.0};
  for (int j = 0; j < nodes; ++j) {
    const double t = (j + 0.5) / nodes;
    const double x = map(t);
    double r;
    try {
      r = density_point(params, x, opts).rho;
      if (x > 0.5) last_valid = {1.0 - x, r};
    } catch (const NonConvergence&) {
      // beyond double-precision resolution of the edge at 1: inverse square-root tail
      if (!(x > 0.5) || last_valid.first <= 0.0) throw;
      r = last_valid.second * std::sqrt(last_valid.first / (1.0 - x));
    }
    acc += std::max(r, 0.0) * dmap(t) / nodes;
    tab.lambda.push_back(map(double(j + 1) / nodes));
    tab.cdf.push_back(acc);
  }
  tab.mass = acc;
  for (double& c : tab.cdf) c /= acc;
  return tab;
}

cplx scattering_mean_phi0(double E, double gamma) {
  if (!(std::abs(E) < 2.0)) throw OutOfRange("needs |E| < 2");
  const cplx msc = (-E + I * std::sqrt(4.0 - E * E)) / 2.0;
  return 1.0 - 2.0 * gamma * I / (E + I * gamma + msc);
}

IdentityResiduals identity_residuals(const ModelParams& params, const ReducedSolution& s) {
  const double g = params.gamma;
  const cplx z = s.z;
  const cplx m11 = s.M3(0, 0), m12 = s.M3(0, 1), m21 = s.M3(1, 0), m22 = s.M3(1, 1);
  const cplx dT = s.detT1;
  IdentityResiduals r;
  r.m22_relation = std::abs(m22 - 4.0 * g * g * z * m11) / (1.0 + std::abs(m22));
  const cplx corr = params.kappa > 0.0 ? 1.0 - g * params.kappa / (2.0 * params.phi) * dT : cplx(1.0);
  r.m21_relation = std::abs(m21 - m12 - I / g * m22 * corr) / (1.0 + std::abs(m22));
  const cplx d1 = s.M1.determinant();
  const cplx d2 = s.M2.determinant();
  r.det_m1 = std::abs(d1 + 1.0 / (z * dT)) / std::abs(d1);
  r.det_m2_literal = std::abs(d2 + g * g / dT) / std::abs(d2);
  r.det_m2 = std::abs(d2 + 4.0 * g * g / dT) / std::abs(d2);
  const cplx d3 = s.M3.determinant();
  const cplx b = 4.0 * (z - 1.0) * m11 + 1.0 / (g * g * z * m11) - (1.0 + 1.0 / (g * g));
  const cplx c = 4.0 * (z - 1.0) * m11 - 1.0 / (g * g);
  r.det_m3_quadratic = std::abs(d3 * d3 + d3 * b + c) / (std::abs(d3 * d3) + std::abs(d3 * b) + std::abs(c));
  r.m1_corner = std::abs(s.M1(0, 0) - (-1.0 / z - 4.0 * m11 / (z * dT))) / (1.0 + std::abs(s.M1(0, 0)));
  return r;
}

}  // namespace ncdel
