#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ncdel/quantum_dot.hpp"

namespace ncdel {

enum class Distribution { gaussian, bernoulli, uniform_disc };

Distribution parse_distribution(const std::string& name);
std::string to_string(Distribution d);

struct EnsembleConfig {
  int n = 1;
  int k = 1;
  int l = 1;
  Distribution distribution = Distribution::gaussian;
  std::uint64_t seed = 1;
  ModelParams params;

  int N() const { return k * n; }
  int M() const { return l * n; }
  double phi() const { return double(k) / double(l); }
  void validate() const;
};

using Rng = std::mt19937_64;

// Independent stream for (seed, trial); identical for serial and parallel runs.
Rng trial_rng(std::uint64_t seed, std::uint64_t trial);

// Hermitian M x M, entries of variance 1/M.
MatrixXc sample_wigner(int M, Distribution d, Rng& rng);

// M x N, iid entries of variance 1/M.
MatrixXc sample_iid(int M, int N, Distribution d, Rng& rng);

struct ThetaFlags {
  bool h = false;
  bool w1 = false;
  bool w2 = false;
  bool inverse = false;
  double h_norm = 0.0;
  double inverse_norm = 0.0;

  // For phi <= 1/2 WW^* is singular and only the norm flags gate a sample.
  bool accepted(double phi) const { return h && w1 && w2 && (phi <= 0.5 || inverse); }
};

double theta_inverse_bound(double phi);
ThetaFlags theta_flags(const MatrixXc& H, const MatrixXc& W1, const MatrixXc& W2, double phi);

// 4 gamma^2 W2^* (Y - H + i gamma WW^*)^{-1} W1 W1^* (conj(Y) - H - i gamma WW^*)^{-1} W2
MatrixXc build_T(const ModelParams& params, const MatrixXc& H, const MatrixXc& W1, const MatrixXc& W2);

// I - 2 i gamma W^* (Y - H + i gamma WW^*)^{-1} W with W = (W1, W2)
MatrixXc build_S(const ModelParams& params, const MatrixXc& H, const MatrixXc& W);

std::vector<double> hermitian_eigenvalues(const MatrixXc& A);

struct SampleResult {
  std::vector<double> eigenvalues;
  MatrixXc S;
  ThetaFlags flags;
  int rejected = 0;
};

SampleResult sample_trial(const EnsembleConfig& cfg, std::uint64_t trial, bool with_S = false, int max_attempts = 20);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::vector<double> density;
};

struct EmpiricalSpectrum {
  std::vector<double> values;

  explicit EmpiricalSpectrum(std::vector<double> v = {});
  double cdf(double x) const;
  Histogram histogram() const;
  double moment(int p) const;
  double fano() const;
};

struct RunResult {
  EmpiricalSpectrum spectrum;
  std::vector<std::vector<double>> per_trial;
  int rejected = 0;
  int attempts = 0;
};

RunResult run_trials(const EnsembleConfig& cfg, int trials, int jobs = 1);

// Theoretical curve with its CDF and moments.
DensityCurve theory_curve(const ModelParams& params, int nodes = 2000, const SolverOptions& opts = {});

struct CompareReport {
  double ks_distance = 0.0;
  double fano_empirical = 0.0;
  double fano_theory = 0.0;
  double fano_gap = 0.0;
  double moment1_gap = 0.0;
  double moment2_gap = 0.0;
};

CompareReport compare(const EmpiricalSpectrum& spectrum, const DensityCurve& curve);

// Inverse-CDF samples from a curve with a CDF.
std::vector<double> sample_from_curve(const DensityCurve& curve, std::size_t count, Rng& rng);

struct GlobalLawRow {
  int N = 0;
  double median_error = 0.0;
  double envelope = 0.0;
};

// median over trials of |N^{-1} Tr (TT^* - z)^{-1} - M(1,1)| at phi = 1
std::vector<GlobalLawRow> global_law_table(const ModelParams& params, cplx z, const std::vector<int>& sizes,
                                           int trials, std::uint64_t seed, Distribution d, int jobs = 1);

// mean of the diagonal entries of S over trials
cplx scattering_diagonal_mean(const ModelParams& params, int N, int M, int trials, std::uint64_t seed,
                              Distribution d, int jobs = 1);

}  // namespace ncdel
