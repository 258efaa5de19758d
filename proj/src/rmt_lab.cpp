#include "ncdel/rmt_lab.hpp"

#include "ncdel/parallel.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace ncdel {

namespace {

const cplx I(0.0, 1.0);

cplx draw(Distribution d, double var, Rng& rng) {
  switch (d) {
    case Distribution::gaussian: {
      std::normal_distribution<double> nd(0.0, std::sqrt(var / 2.0));
      const double re = nd(rng);
      return {re, nd(rng)};
    }
    case Distribution::bernoulli: {
      std::bernoulli_distribution b(0.5);
      const double s = std::sqrt(var / 2.0);
      const double re = b(rng) ? s : -s;
      return {re, b(rng) ? s : -s};
    }
    case Distribution::uniform_disc: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const double r = std::sqrt(2.0 * var) * std::sqrt(u(rng));
      return std::polar(r, 2.0 * M_PI * u(rng));
    }
  }
  return 0.0;
}

double draw_real(Distribution d, double var, Rng& rng) {
  switch (d) {
    case Distribution::gaussian:
      return std::normal_distribution<double>(0.0, std::sqrt(var))(rng);
    case Distribution::bernoulli:
      return std::bernoulli_distribution(0.5)(rng) ? std::sqrt(var) : -std::sqrt(var);
    case Distribution::uniform_disc: {
      const double a = std::sqrt(3.0 * var);
      return std::uniform_real_distribution<double>(-a, a)(rng);
    }
  }
  return 0.0;
}

double max_eig(const MatrixXc& herm) {
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Eigen::PartialPivLU<MatrixXc> resolvent_lu(const ModelParams& p, const MatrixXc& H, const MatrixXc& WWs) {
  const Eigen::Index M = H.rows();
  MatrixXc A = -H + cplx(0.0, p.gamma) * WWs;
  A.diagonal().array() += p.Y();
  Eigen::PartialPivLU<MatrixXc> lu(A);
  if (!(safe_rcond(lu) > std::numeric_limits<double>::epsilon()))
    throw SingularDenominator("Y - H + i gamma WW^* is numerically singular (M=" + std::to_string(M) + ")");
  return lu;
}

}  // namespace

Distribution parse_distribution(const std::string& name) {
  if (name == "gaussian" || name == "complex-gaussian") return Distribution::gaussian;
  if (name == "bernoulli" || name == "symmetrized-bernoulli") return Distribution::bernoulli;
  if (name == "uniform-disc" || name == "uniform_disc") return Distribution::uniform_disc;
  throw InvalidParams("unknown distribution: " + name);
}

std::string to_string(Distribution d) {
  switch (d) {
    case Distribution::gaussian:
      return "gaussian";
    case Distribution::bernoulli:
      return "bernoulli";
    case Distribution::uniform_disc:
      return "uniform-disc";
  }
  return "?";
}

void EnsembleConfig::validate() const {
  if (n < 1 || k < 1 || l < 1) throw InvalidParams("n, k, l must be positive");
  if (k > l) throw InvalidParams("need k <= l");
  params.validate();
}

Rng trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(trial), std::uint32_t(trial >> 32)};
  return Rng(seq);
}

MatrixXc sample_wigner(int M, Distribution d, Rng& rng) {
  if (M < 1) throw InvalidParams("matrix size must be positive");
  const double var = 1.0 / M;
  MatrixXc H(M, M);
  for (int j = 0; j < M; ++j) {
    H(j, j) = draw_real(d, var, rng);
    for (int i = 0; i < j; ++i) {
      H(i, j) = draw(d, var, rng);
      H(j, i) = std::conj(H(i, j));
    }
  }
  return H;
}

MatrixXc sample_iid(int M, int N, Distribution d, Rng& rng) {
  if (M < 1 || N < 1) throw InvalidParams("matrix size must be positive");
  const double var = 1.0 / M;
  MatrixXc W(M, N);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < M; ++i) W(i, j) = draw(d, var, rng);
  return W;
}

double theta_inverse_bound(double phi) {
  if (phi <= 0.5) return std::numeric_limits<double>::infinity();
  if (phi >= 1.0) return 12.0;
  const double r = 1.0 - 1.0 / std::sqrt(2.0 * phi);
  return 1.0 / (phi * r * r);
}

ThetaFlags theta_flags(const MatrixXc& H, const MatrixXc& W1, const MatrixXc& W2, double phi) {
  ThetaFlags f;
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(H, Eigen::EigenvaluesOnly);
  f.h_norm = es.eigenvalues().cwiseAbs().maxCoeff();
  f.h = f.h_norm <= 3.0;
  f.w1 = std::sqrt(max_eig(W1.adjoint() * W1)) <= 3.0;
  f.w2 = std::sqrt(max_eig(W2.adjoint() * W2)) <= 3.0;
  if (phi > 0.5) {
    MatrixXc W(W1.rows(), W1.cols() + W2.cols());
    W << W1, W2;
    Eigen::SelfAdjointEigenSolver<MatrixXc> ew(W * W.adjoint(), Eigen::EigenvaluesOnly);
    const double lo = ew.eigenvalues().minCoeff();
    f.inverse_norm = lo > 0.0 ? 1.0 / lo : std::numeric_limits<double>::infinity();
    f.inverse = f.inverse_norm <= theta_inverse_bound(phi);
  } else {
    f.inverse_norm = std::numeric_limits<double>::infinity();
    f.inverse = false;
  }
  return f;
}

MatrixXc build_T(const ModelParams& params, const MatrixXc& H, const MatrixXc& W1, const MatrixXc& W2) {
  if (H.rows() != W1.rows() || W1.rows() != W2.rows() || W1.cols() != W2.cols())
    throw SizeMismatch("inconsistent sample sizes");
  const MatrixXc WWs = W1 * W1.adjoint() + W2 * W2.adjoint();
  const auto lu = resolvent_lu(params, H, WWs);
  const MatrixXc X = W2.adjoint() * lu.solve(W1);
  MatrixXc T = 4.0 * params.gamma * params.gamma * X * X.adjoint();
  T = 0.5 * (T + T.adjoint()).eval();
  return T;
}

MatrixXc build_S(const ModelParams& params, const MatrixXc& H, const MatrixXc& W) {
  if (H.rows() != W.rows()) throw SizeMismatch("inconsistent sample sizes");
  const auto lu = resolvent_lu(params, H, W * W.adjoint());
  MatrixXc S = -2.0 * params.gamma * I * (W.adjoint() * lu.solve(W));
  S.diagonal().array() += 1.0;
  return S;
}

std::vector<double> hermitian_eigenvalues(const MatrixXc& A) {
  if (A.rows() != A.cols()) throw SizeMismatch("eigenvalues need a square matrix");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale) throw NotSelfAdjoint("matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    MatrixXc B = A;
    B.diagonal().array() += 1e-14 * scale;
    es.compute(B, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NonConvergence("Hermitian eigensolver failed", 0.0);
  }
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(v.begin(), v.end());
  return v;
}

SampleResult sample_trial(const EnsembleConfig& cfg, std::uint64_t trial, bool with_S, int max_attempts) {
  cfg.validate();
  Rng rng = trial_rng(cfg.seed, trial);
  SampleResult out;
  const int M = cfg.M(), N = cfg.N();
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const MatrixXc H = sample_wigner(M, cfg.distribution, rng);
    const MatrixXc W1 = sample_iid(M, N, cfg.distribution, rng);
    const MatrixXc W2 = sample_iid(M, N, cfg.distribution, rng);
    out.flags = theta_flags(H, W1, W2, cfg.phi());
    if (!out.flags.accepted(cfg.phi())) {
      ++out.rejected;
      continue;
    }
    out.eigenvalues = hermitian_eigenvalues(build_T(cfg.params, H, W1, W2));
    if (with_S) {
      MatrixXc W(M, 2 * N);
      W << W1, W2;
      out.S = build_S(cfg.params, H, W);
    }
    return out;
  }
  throw NonConvergence("sample rejected " + std::to_string(max_attempts) + " times", double(out.rejected));
}

EmpiricalSpectrum::EmpiricalSpectrum(std::vector<double> v) : values(std::move(v)) {
  std::sort(values.begin(), values.end());
}

double EmpiricalSpectrum::cdf(double x) const {
  if (values.empty()) return 0.0;
  return double(std::upper_bound(values.begin(), values.end(), x) - values.begin()) / double(values.size());
}

double EmpiricalSpectrum::moment(int p) const {
  double s = 0.0;
  for (double v : values) s += std::pow(v, p);
  return values.empty() ? 0.0 : s / double(values.size());
}

double EmpiricalSpectrum::fano() const { return 1.0 - moment(2) / moment(1); }

Histogram EmpiricalSpectrum::histogram() const {
  Histogram h;
  const double lo = 1e-2, hi = 1.0 - 1e-2;
  double width = 0.02;
  if (values.size() >= 4) {
    const double q1 = values[values.size() / 4];
    const double q3 = values[3 * values.size() / 4];
    const double fd = 2.0 * (q3 - q1) / std::cbrt(double(values.size()));
    if (fd > 0.0) width = fd;
  }
  const int inner = std::max(1, int(std::ceil((hi - lo) / width)));
  h.edges.push_back(0.0);
  for (int e = -6; e <= -3; ++e) h.edges.push_back(std::pow(10.0, e));
  for (int i = 0; i <= inner; ++i) h.edges.push_back(lo + (hi - lo) * i / inner);
  for (int e = -3; e >= -6; --e) h.edges.push_back(1.0 - std::pow(10.0, e));
  h.edges.push_back(1.0);
  h.counts.assign(h.edges.size() - 1, 0);
  for (double v : values) {
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
    std::size_t b = std::size_t(std::max<long>(0, long(it - h.edges.begin()) - 1));
    b = std::min(b, h.counts.size() - 1);
    ++h.counts[b];
  }
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    h.density.push_back(values.empty() ? 0.0
                                       : double(h.counts[b]) / (double(values.size()) * (h.edges[b + 1] - h.edges[b])));
  return h;
}

RunResult run_trials(const EnsembleConfig& cfg, int trials, int jobs) {
  cfg.validate();
  std::vector<SampleResult> res(std::size_t(std::max(trials, 0)));
  parallel_for(trials, jobs, [&](int t) { res[std::size_t(t)] = sample_trial(cfg, std::uint64_t(t)); });
  RunResult out;
  std::vector<double> pooled;
  for (auto& r : res) {
    out.rejected += r.rejected;
    out.attempts += r.rejected + 1;
    pooled.insert(pooled.end(), r.eigenvalues.begin(), r.eigenvalues.end());
    out.per_trial.push_back(std::move(r.eigenvalues));
  }
  out.spectrum = EmpiricalSpectrum(std::move(pooled));
  return out;
}

DensityCurve theory_curve(const ModelParams& params, int nodes, const SolverOptions& opts) {
  const CdfTable tab = cdf_table(params, nodes, opts);
  DensityCurve c;
  c.lambda = tab.lambda;
  c.cdf = tab.cdf;
  c.rho.assign(c.lambda.size(), std::numeric_limits<double>::quiet_NaN());
  c.eta_used.assign(c.lambda.size(), 0.0);
  c.quality.assign(c.lambda.size(), Quality::ok);
  const Moments m = moments(params, 32, opts);
  c.moment1 = m.m1 / m.m0;
  c.moment2 = m.m2 / m.m0;
  return c;
}

namespace {

double curve_cdf(const DensityCurve& c, double x) {
  if (c.lambda.empty()) return 0.0;
  if (x <= c.lambda.front()) return c.cdf.front();
  if (x >= c.lambda.back()) return c.cdf.back();
  const auto it = std::upper_bound(c.lambda.begin(), c.lambda.end(), x);
  const std::size_t j = std::size_t(it - c.lambda.begin());
  const double t = (x - c.lambda[j - 1]) / (c.lambda[j] - c.lambda[j - 1]);
  return c.cdf[j - 1] + t * (c.cdf[j] - c.cdf[j - 1]);
}

}  // namespace

CompareReport compare(const EmpiricalSpectrum& spectrum, const DensityCurve& curve) {
  if (curve.cdf.size() != curve.lambda.size() || curve.cdf.empty())
    throw InvalidParams("curve has no cumulative distribution");
  CompareReport r;
  const auto& v = spectrum.values;
  const double n = double(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = curve_cdf(curve, v[i]);
    r.ks_distance = std::max({r.ks_distance, std::abs(double(i + 1) / n - f), std::abs(double(i) / n - f)});
  }
  r.fano_empirical = spectrum.fano();
  r.fano_theory = 1.0 - curve.moment2 / curve.moment1;
  r.fano_gap = std::abs(r.fano_empirical - r.fano_theory);
  r.moment1_gap = std::abs(spectrum.moment(1) - curve.moment1);
  r.moment2_gap = std::abs(spectrum.moment(2) - curve.moment2);
  return r;
}

std::vector<double> sample_from_curve(const DensityCurve& curve, std::size_t count, Rng& rng) {
  if (curve.cdf.size() != curve.lambda.size() || curve.cdf.size() < 2)
    throw InvalidParams("curve has no cumulative distribution");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const double target = u(rng);
    auto it = std::lower_bound(curve.cdf.begin(), curve.cdf.end(), target);
    std::size_t j = std::clamp<std::size_t>(std::size_t(it - curve.cdf.begin()), 1, curve.cdf.size() - 1);
    const double c0 = curve.cdf[j - 1], c1 = curve.cdf[j];
    const double t = c1 > c0 ? (target - c0) / (c1 - c0) : 0.5;
    out.push_back(curve.lambda[j - 1] + t * (curve.lambda[j] - curve.lambda[j - 1]));
  }
  return out;
}

std::vector<GlobalLawRow> global_law_table(const ModelParams& params, cplx z, const std::vector<int>& sizes, int trials,
                                           std::uint64_t seed, Distribution d, int jobs) {
  const cplx m = solve_reduced(params, z).M1(0, 0);
  std::vector<GlobalLawRow> rows;
  for (int N : sizes) {
    EnsembleConfig cfg;
    cfg.n = N;
    cfg.k = 1;
    cfg.l = 1;
    cfg.distribution = d;
    cfg.seed = seed + std::uint64_t(N);
    cfg.params = params;
    std::vector<double> err(static_cast<std::size_t>(trials));
    parallel_for(trials, jobs, [&](int t) {
      const SampleResult s = sample_trial(cfg, std::uint64_t(t));
      cplx acc = 0.0;
      for (double lam : s.eigenvalues) acc += 1.0 / (lam - z);
      err[std::size_t(t)] = std::abs(acc / double(N) - m);
    });
    std::sort(err.begin(), err.end());
    const std::size_t h = err.size() / 2;
    const double med = err.size() % 2 ? err[h] : 0.5 * (err[h - 1] + err[h]);
    rows.push_back({N, med, 10.0 / N});
  }
  return rows;
}

cplx scattering_diagonal_mean(const ModelParams& params, int N, int M, int trials, std::uint64_t seed, Distribution d,
                              int jobs) {
  if (N < 1 || M < 1 || trials < 1) throw InvalidParams("sizes and trials must be positive");
  std::vector<cplx> means(static_cast<std::size_t>(trials));
  parallel_for(trials, jobs, [&](int t) {
    Rng rng = trial_rng(seed, std::uint64_t(t));
    const MatrixXc H = sample_wigner(M, d, rng);
    const MatrixXc W = sample_iid(M, 2 * N, d, rng);
    const MatrixXc S = build_S(params, H, W);
    means[std::size_t(t)] = S.diagonal().mean();
  });
  cplx acc = 0.0;
  for (const cplx& v : means) acc += v;
  return acc / double(trials);
}

}  // namespace ncdel
