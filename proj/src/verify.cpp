#include "ncdel/verify.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>

#include "ncdel/linearization.hpp"
#include "ncdel/parallel.hpp"
#include "ncdel/rmt_lab.hpp"

namespace ncdel {

namespace {

struct Accumulator {
  std::vector<CheckResult> checks;
  std::mutex mu;

  void add(std::size_t i, double err) {
    std::lock_guard<std::mutex> lock(mu);
    CheckResult& c = checks[i];
    ++c.points;
    if (!(err <= c.max_error)) c.max_error = std::isnan(err) ? std::numeric_limits<double>::infinity() : err;
  }
};

CheckResult make(std::string name, double tol, bool info = false) {
  CheckResult c;
  c.name = std::move(name);
  c.tolerance = tol;
  c.informational = info;
  return c;
}

}  // namespace

std::vector<cplx> default_spectral_points() {
  std::vector<cplx> zs;
  for (double re : {-0.3, 0.1, 0.5, 0.9, 1.3})
    for (double im : {1e-3, 1e-2, 0.1, 1.0}) zs.emplace_back(re, im);
  return zs;
}

std::vector<CheckResult> identity_lattice(const std::vector<double>& gammas, const std::vector<double>& energies,
                                          const std::vector<cplx>& zs, int jobs) {
  Accumulator acc;
  acc.checks = {make("m22 = 4 gamma^2 z m11", 1e-8),
                make("m21 - m12 = (i/gamma) m22", 1e-8),
                make("det M1 = -1/(z detT1)", 1e-8),
                make("det M2 = -4 gamma^2/detT1", 1e-8),
                make("det M3 quadratic", 1e-8),
                make("M1(1,1) = -1/z - 4 m11/(z detT1)", 1e-8),
                make("det M2 = -gamma^2/detT1 (literal form)", 1e-8, true),
                make("reduced residual", 1e-9),
                make("Im M3 >= 0", 1e-10)};
  const int total = int(gammas.size() * energies.size() * zs.size());
  parallel_for(total, jobs, [&](int idx) {
    const std::size_t zi = std::size_t(idx) % zs.size();
    const std::size_t ei = (std::size_t(idx) / zs.size()) % energies.size();
    const std::size_t gi = std::size_t(idx) / (zs.size() * energies.size());
    ModelParams p;
    p.phi = 1.0;
    p.gamma = gammas[gi];
    p.E = energies[ei];
    try {
      const ReducedSolution s = solve_reduced(p, zs[zi]);
      const IdentityResiduals r = identity_residuals(p, s);
      acc.add(0, r.m22_relation);
      acc.add(1, r.m21_relation);
      acc.add(2, r.det_m1);
      acc.add(3, r.det_m2);
      acc.add(4, r.det_m3_quadratic);
      acc.add(5, r.m1_corner);
      acc.add(6, r.det_m2_literal);
      acc.add(7, s.residual / (1.0 + s.M3.norm()));
      acc.add(8, std::max(0.0, -min_imag_eigenvalue(s.M3)));
    } catch (const Error&) {
      for (std::size_t c = 0; c < acc.checks.size(); ++c) acc.add(c, std::numeric_limits<double>::infinity());
    }
  });
  return acc.checks;
}

std::vector<CheckResult> kappa_path_identities(double phi, const std::vector<double>& gammas,
                                               const std::vector<double>& energies, const std::vector<double>& kappas,
                                               const std::vector<cplx>& zs, int jobs) {
  Accumulator acc;
  acc.checks = {make("m22 = 4 gamma^2 z m11 (kappa > 0)", 1e-8),
                make("m21 - m12 = (i/gamma) m22 (1 - gamma kappa detT1/(2 phi))", 1e-8)};
  const int total = int(gammas.size() * energies.size() * kappas.size() * zs.size());
  parallel_for(total, jobs, [&](int idx) {
    std::size_t rest = std::size_t(idx);
    const std::size_t zi = rest % zs.size();
    rest /= zs.size();
    const std::size_t ki = rest % kappas.size();
    rest /= kappas.size();
    const std::size_t ei = rest % energies.size();
    const std::size_t gi = rest / energies.size();
    ModelParams p;
    p.phi = phi;
    p.gamma = gammas[gi];
    p.E = energies[ei];
    p.kappa = kappas[ki];
    try {
      const IdentityResiduals r = identity_residuals(p, solve_reduced(p, zs[zi]));
      acc.add(0, r.m22_relation);
      acc.add(1, r.m21_relation);
    } catch (const Error&) {
      acc.add(0, std::numeric_limits<double>::infinity());
      acc.add(1, std::numeric_limits<double>::infinity());
    }
  });
  return acc.checks;
}

CheckResult reduced_vs_full(int samples, std::uint64_t seed) {
  CheckResult c = make("reduced M3 = full pencil DEL block", 1e-8);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ug(0.5, 2.5), ue(-1.5, 1.5), ur(-0.2, 1.2), ui(0.02, 1.0);
  const int ks[] = {1, 1, 2, 1};
  const int ls[] = {1, 2, 3, 3};
  for (int s = 0; s < samples; ++s) {
    const int k = ks[s % 4], l = ls[s % 4];
    ModelParams p;
    p.gamma = ug(rng);
    p.E = ue(rng);
    p.phi = double(k) / l;
    if (p.phi <= 0.5) p.kappa = 0.1;
    const double re = ur(rng);
    const cplx z(re, ui(rng));
    double err;
    try {
      const DysonProblem pb = DysonProblem::from_pencil(quantum_dot_pencil(p.gamma, p.Y(), k, l));
      const DysonSolution full = solve_del(pb, z);
      const ReducedSolution red = solve_reduced(p, z);
      const QuantumDotLayout lay{k, l};
      Eigen::Matrix2cd blk;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) blk(a, b) = full.M(lay.group3(a, 0), lay.group3(b, 0));
      err = (blk - red.M3).norm() / (1.0 + red.M3.norm());
    } catch (const Error&) {
      err = std::numeric_limits<double>::infinity();
    }
    ++c.points;
    c.max_error = std::max(c.max_error, err);
  }
  return c;
}

std::vector<CheckResult> run_verify(const VerifyConfig& cfg) {
  std::vector<CheckResult> out;
  const std::vector<double> gammas = {0.5, 0.8, 1.0, 2.0, 3.0};
  const std::vector<double> energies = cfg.E ? std::vector<double>{*cfg.E} : std::vector<double>{-1.5, -0.5, 0.0, 0.5, 1.5};
  const std::vector<cplx> zs = default_spectral_points();
  if (!cfg.phi || *cfg.phi == 1.0) {
    const auto lat = identity_lattice(gammas, energies, zs, cfg.jobs);
    out.insert(out.end(), lat.begin(), lat.end());
  }
  const double kphi = (cfg.phi && *cfg.phi > 0.0 && *cfg.phi < 1.0) ? *cfg.phi : 0.3;
  const std::vector<cplx> kz = {{0.2, 0.01}, {0.5, 0.1}, {0.8, 0.05}, {1.2, 0.5}};
  const auto kp = kappa_path_identities(kphi, gammas, energies, {0.05, 0.2}, kz, cfg.jobs);
  out.insert(out.end(), kp.begin(), kp.end());
  out.push_back(reduced_vs_full(10, cfg.seed));
  if (cfg.ideal_coupling) {
    ModelParams p;
    p.gamma = 1.0;
    p.E = 0.0;
    p.phi = 1.0 / 64.0;
    CheckResult c1 = make("ideal coupling |mean S_ii| at gamma = 1", 0.05);
    c1.points = 100;
    c1.max_error = std::abs(scattering_diagonal_mean(p, 16, 1024, 100, cfg.seed, Distribution::gaussian, cfg.jobs));
    out.push_back(c1);
    p.gamma = 2.0;
    CheckResult c2 = make("mean S_ii at gamma = 2 vs 1 - 2 gamma i/(E + i gamma + m_sc)", 0.05);
    c2.points = 100;
    c2.max_error = std::abs(scattering_diagonal_mean(p, 16, 1024, 100, cfg.seed + 1, Distribution::gaussian, cfg.jobs) -
                            scattering_mean_phi0(0.0, 2.0));
    out.push_back(c2);
  }
  return out;
}

}  // namespace ncdel
