#include <doctest.h>

#include <algorithm>

#include "ncdel/rmt_lab.hpp"

using namespace ncdel;

namespace {

EnsembleConfig config(int n, int k, int l, std::uint64_t seed = 1) {
  EnsembleConfig c;
  c.n = n;
  c.k = k;
  c.l = l;
  c.seed = seed;
  c.params.phi = c.phi();
  return c;
}

}  // namespace

TEST_CASE("scalar Wigner entries") {
  Rng rng(123);
  double s = 0.0, s2 = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const MatrixXc h = sample_wigner(1, Distribution::gaussian, rng);
    CHECK(h(0, 0).imag() == 0.0);
    s += h(0, 0).real();
    s2 += h(0, 0).real() * h(0, 0).real();
  }
  CHECK(std::abs(s / draws) <= 0.05);
  CHECK(s2 / draws == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("entry variances") {
  Rng rng(5);
  for (Distribution d : {Distribution::gaussian, Distribution::bernoulli, Distribution::uniform_disc}) {
    const MatrixXc w = sample_iid(200, 100, d, rng);
    CHECK(w.squaredNorm() / 100.0 == doctest::Approx(1.0).epsilon(0.03));
    const MatrixXc h = sample_wigner(200, d, rng);
    CHECK((h - h.adjoint()).norm() == 0.0);
    CHECK(h.squaredNorm() / 200.0 == doctest::Approx(1.0).epsilon(0.03));
  }
}

TEST_CASE("distribution names") {
  CHECK(parse_distribution("bernoulli") == Distribution::bernoulli);
  CHECK(to_string(parse_distribution("uniform-disc")) == "uniform-disc");
  CHECK_THROWS_AS(parse_distribution("cauchy"), InvalidParams);
}

TEST_CASE("Hermitian eigenvalues") {
  MatrixXc d = MatrixXc::Zero(3, 3);
  d(0, 0) = 3.0;
  d(1, 1) = 1.0;
  d(2, 2) = 2.0;
  CHECK(hermitian_eigenvalues(d) == std::vector<double>{1.0, 2.0, 3.0});
  MatrixXc s(2, 2);
  s << 0, 1, 1, 0;
  const auto e = hermitian_eigenvalues(s);
  CHECK(e[0] == doctest::Approx(-1.0));
  CHECK(e[1] == doctest::Approx(1.0));
}

TEST_CASE("transmission matrix") {
  const EnsembleConfig cfg = config(40, 1, 1);
  const SampleResult s = sample_trial(cfg, 0);
  CHECK(s.eigenvalues.size() == 40);
  for (double v : s.eigenvalues) {
    CHECK(v >= -1e-9);
    CHECK(v <= 1.0 + 1e-9);
  }
  const SampleResult withS = sample_trial(cfg, 0, true);
  const MatrixXc U = withS.S.adjoint() * withS.S;
  CHECK((U - MatrixXc::Identity(U.rows(), U.cols())).norm() <= 1e-9);
}

TEST_CASE("theta bound") {
  CHECK(theta_inverse_bound(1.0) == doctest::Approx(12.0));
  CHECK(std::isinf(theta_inverse_bound(0.5)));
}

TEST_CASE("determinism") {
  const EnsembleConfig cfg = config(16, 1, 2, 77);
  const RunResult a = run_trials(cfg, 4, 1);
  const RunResult b = run_trials(cfg, 4, 3);
  CHECK(a.per_trial == b.per_trial);
  const RunResult c = run_trials(config(16, 1, 2, 78), 4, 1);
  CHECK(a.per_trial != c.per_trial);
}

TEST_CASE("empirical spectrum") {
  const EmpiricalSpectrum s({0.1, 0.4, 0.4, 0.9});
  CHECK(s.cdf(0.4) == doctest::Approx(0.75));
  CHECK(s.cdf(0.0) == 0.0);
  CHECK(s.moment(1) == doctest::Approx(0.45));
  const Histogram h = s.histogram();
  std::size_t total = 0;
  for (auto c : h.counts) total += c;
  CHECK(total == 4);
}

TEST_CASE("self-consistency of the theoretical CDF") {
  ModelParams p;
  const DensityCurve curve = theory_curve(p, 1000);
  Rng rng(2);
  const EmpiricalSpectrum s(sample_from_curve(curve, 100000, rng));
  CHECK(compare(s, curve).ks_distance <= 0.01);
  CHECK(curve.moment1 == doctest::Approx(0.45631098730766817).epsilon(1e-4));
}

TEST_CASE("small Monte-Carlo run against the theory") {
  const EnsembleConfig cfg = config(64, 1, 1);
  const RunResult r = run_trials(cfg, 4, 1);
  const CompareReport rep = compare(r.spectrum, theory_curve(cfg.params, 1000));
  CHECK(rep.ks_distance <= 0.1);
  CHECK(rep.fano_gap <= 0.03);
}

TEST_CASE("invalid ensemble") {
  EnsembleConfig cfg = config(0, 1, 1);
  CHECK_THROWS_AS(cfg.validate(), InvalidParams);
  cfg = config(4, 2, 1);
  CHECK_THROWS_AS(cfg.validate(), InvalidParams);
}
