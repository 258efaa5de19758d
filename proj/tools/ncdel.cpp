#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncdel/linearization.hpp"
#include "ncdel/parallel.hpp"
#include "ncdel/quantum_dot.hpp"
#include "ncdel/rmt_lab.hpp"
#include "ncdel/verify.hpp"
#include "ncdel/version.hpp"

using json = nlohmann::json;
using namespace ncdel;

namespace {

enum Exit { ok = 0, usage = 1, numeric = 2, verification = 3 };

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Output {
  std::unique_ptr<std::ofstream> file;
  std::ostream* os = &std::cout;

  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file) throw std::runtime_error("cannot open output file: " + path);
    os = file.get();
  }
  std::ostream& operator*() { return *os; }
};

struct Common {
  std::string output;
  std::string format = "csv";
  std::uint64_t seed = 1;
  int jobs = 1;
};

struct Model {
  double phi = 1.0;
  double E = 0.0;
  double gamma = 1.0;
  double kappa = 0.0;
  bool limit_path = false;

  ModelParams params() const {
    ModelParams p;
    p.phi = phi;
    p.E = E;
    p.gamma = gamma;
    p.kappa = kappa;
    p.limit_path = limit_path;
    return p;
  }
  std::string describe() const {
    return "phi=" + num(phi) + " E=" + num(E) + " gamma=" + num(gamma) + " kappa=" + num(kappa) +
           (limit_path ? " limit_path=1" : "");
  }
};

std::string header(const std::string& cmd, const std::string& config) {
  return std::string("ncdel ") + ncdel::version + " " + cmd + " " + config;
}

void add_model(CLI::App* app, Model& m, bool with_phi = true) {
  if (with_phi) app->add_option("--phi", m.phi, "ratio N/M in [0, 1]")->check(CLI::Range(0.0, 1.0));
  app->add_option("--E", m.E, "energy");
  app->add_option("--gamma", m.gamma, "coupling")->check(CLI::PositiveNumber);
  app->add_option("--kappa", m.kappa, "Im Y regularization")->check(CLI::NonNegativeNumber);
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("-o,--output", c.output, "output path (stdout if omitted)");
  app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--jobs", c.jobs, "worker threads")->envname("NCDEL_JOBS")->check(CLI::PositiveNumber);
}

std::vector<double> parse_range(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.size() != 3) throw CLI::ValidationError("grid", "expected start:stop:count");
  double a, b;
  int n;
  try {
    a = std::stod(parts[0]);
    b = std::stod(parts[1]);
    n = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw CLI::ValidationError("grid", "expected start:stop:count");
  }
  if (n < 1 || !(b >= a)) throw CLI::ValidationError("grid", "need count >= 1 and stop >= start");
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return g;
}

std::vector<double> with_log_edges(std::vector<double> g) {
  for (int e = 2; e <= 8; ++e) {
    g.push_back(std::pow(10.0, -e));
    g.push_back(1.0 - std::pow(10.0, -e));
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

const char* quality_name(Quality q) {
  switch (q) {
    case Quality::ok:
      return "ok";
    case Quality::flagged:
      return "flagged";
    case Quality::invalid:
      return "invalid";
  }
  return "?";
}

json complex_matrix(const MatrixXc& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) row.push_back({a(i, j).real(), a(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

int cmd_density(const Common& c, const Model& m, const std::string& grid_spec, bool log_edges) {
  std::vector<double> grid = parse_range(grid_spec);
  if (log_edges) grid = with_log_edges(grid);
  const ModelParams p = m.params();
  p.validate();
  const DensityCurve curve = density(p, grid, {}, c.jobs);
  const std::string head = header("density", m.describe() + " grid=" + grid_spec + (log_edges ? " log_edges=1" : "") +
                                                 " jobs=" + std::to_string(c.jobs));
  Output out(c.output);
  if (c.format == "json") {
    json j;
    j["header"] = head;
    json rows = json::array();
    for (std::size_t i = 0; i < curve.size(); ++i)
      rows.push_back({{"lambda", curve.lambda[i]},
                      {"rho", std::isnan(curve.rho[i]) ? json(nullptr) : json(curve.rho[i])},
                      {"eta_used", curve.eta_used[i]},
                      {"quality_flag", quality_name(curve.quality[i])}});
    j["rows"] = rows;
    j["moment1"] = std::isnan(curve.moment1) ? json(nullptr) : json(curve.moment1);
    j["moment2"] = std::isnan(curve.moment2) ? json(nullptr) : json(curve.moment2);
    *out << j.dump(2) << "\n";
  } else {
    *out << "# " << head << "\n";
    *out << "lambda,rho,eta_used,quality_flag\n";
    for (std::size_t i = 0; i < curve.size(); ++i)
      *out << num(curve.lambda[i]) << "," << (std::isnan(curve.rho[i]) ? "" : num(curve.rho[i])) << ","
           << num(curve.eta_used[i]) << "," << quality_name(curve.quality[i]) << "\n";
  }
  const double bad = curve.size() ? double(curve.invalid_count()) / double(curve.size()) : 0.0;
  if (bad > 0.2) {
    std::cerr << "error: " << curve.invalid_count() << " of " << curve.size() << " grid points failed\n";
    return numeric;
  }
  return ok;
}

int cmd_fano(const Common& c, const Model& m, bool phi_given, const std::string& sweep) {
  std::vector<double> phis = phi_given ? std::vector<double>{m.phi} : parse_range(sweep);
  for (double v : phis)
    if (!(v >= 0.0 && v <= 1.0)) throw CLI::ValidationError("sweep", "phi values must lie in [0, 1]");
  std::vector<double> F(phis.size());
  parallel_for(int(phis.size()), c.jobs, [&](int i) {
    Model mi = m;
    mi.phi = phis[std::size_t(i)];
    F[std::size_t(i)] = fano(mi.params());
  });
  const std::string head =
      header("fano", (phi_given ? m.describe() : "sweep=" + sweep + " " + m.describe().substr(m.describe().find("E="))) +
                         " jobs=" + std::to_string(c.jobs));
  Output out(c.output);
  if (c.format == "json") {
    json j;
    j["header"] = head;
    json rows = json::array();
    for (std::size_t i = 0; i < phis.size(); ++i)
      rows.push_back({{"phi", phis[i]}, {"E", m.E}, {"gamma", m.gamma}, {"F", F[i]}});
    j["rows"] = rows;
    *out << j.dump(2) << "\n";
  } else {
    *out << "# " << head << "\n";
    *out << "phi,E,gamma,F\n";
    for (std::size_t i = 0; i < phis.size(); ++i)
      *out << num(phis[i]) << "," << num(m.E) << "," << num(m.gamma) << "," << num(F[i]) << "\n";
  }
  return ok;
}

int cmd_asymptotics(const Common& c, const Model& m) {
  const ModelParams p = m.params();
  const EdgeAsymptotics a = edge_asymptotics(p);
  const std::vector<std::pair<std::string, double>> rows = {
      {"xi0_at_0", a.xi0_at_0},           {"nu0_at_0", a.nu0_at_0},         {"prefactor_at_0", a.prefactor_at_0},
      {"exponent_at_0", a.exponent_at_0}, {"branch_factor_at_0", a.branch_factor_at_0},
      {"xi0_at_1", a.xi0_at_1},           {"prefactor_at_1", a.prefactor_at_1}, {"E_star", a.E_star},
      {"edge_at_1_valid", a.edge_at_1_valid ? 1.0 : 0.0}};
  const std::string head = header("asymptotics", m.describe());
  Output out(c.output);
  if (c.format == "json") {
    json j;
    j["header"] = head;
    for (const auto& [k, v] : rows) j[k] = std::isnan(v) ? json(nullptr) : json(v);
    j["edge_at_1_valid"] = a.edge_at_1_valid;
    *out << j.dump(2) << "\n";
  } else {
    *out << "# " << head << "\n";
    *out << "name,value\n";
    for (const auto& [k, v] : rows) *out << csv_field(k) << "," << (std::isnan(v) ? "" : num(v)) << "\n";
  }
  return ok;
}

int cmd_mc(const Common& c, const Model& m, int N, int M, int trials, const std::string& dist,
           const std::string& eig_path, bool global_law, int nodes) {
  if (M == 0) M = N;
  if (N < 1 || M < N) throw CLI::ValidationError("N/M", "need 1 <= N <= M");
  const int n = std::gcd(N, M);
  EnsembleConfig cfg;
  cfg.n = n;
  cfg.k = N / n;
  cfg.l = M / n;
  cfg.distribution = parse_distribution(dist);
  cfg.seed = c.seed;
  Model mm = m;
  mm.phi = double(N) / M;
  cfg.params = mm.params();
  cfg.validate();
  const RunResult run = run_trials(cfg, trials, c.jobs);
  if (run.attempts > 0 && double(run.rejected) / run.attempts > 0.5) {
    std::cerr << "error: more than half of the samples were rejected\n";
    return numeric;
  }
  const DensityCurve curve = theory_curve(cfg.params, nodes);
  const CompareReport rep = compare(run.spectrum, curve);
  const std::string head = header("mc", mm.describe() + " N=" + std::to_string(N) + " M=" + std::to_string(M) +
                                            " trials=" + std::to_string(trials) + " dist=" + to_string(cfg.distribution) +
                                            " seed=" + std::to_string(c.seed) + " jobs=" + std::to_string(c.jobs));
  if (!eig_path.empty()) {
    Output eo(eig_path);
    *eo << "# " << head << "\n";
    *eo << "trial,index,lambda\n";
    for (std::size_t t = 0; t < run.per_trial.size(); ++t)
      for (std::size_t i = 0; i < run.per_trial[t].size(); ++i)
        *eo << t << "," << i << "," << num(run.per_trial[t][i]) << "\n";
  }
  json j;
  j["header"] = head;
  j["ks_distance"] = rep.ks_distance;
  j["fano_empirical"] = rep.fano_empirical;
  j["fano_theory"] = rep.fano_theory;
  j["fano_gap"] = rep.fano_gap;
  j["moment1_gap"] = rep.moment1_gap;
  j["moment2_gap"] = rep.moment2_gap;
  j["rejected"] = run.rejected;
  j["attempts"] = run.attempts;
  j["eigenvalue_min"] = run.spectrum.values.empty() ? 0.0 : run.spectrum.values.front();
  j["eigenvalue_max"] = run.spectrum.values.empty() ? 0.0 : run.spectrum.values.back();
  std::vector<GlobalLawRow> table;
  if (global_law) {
    ModelParams gp = cfg.params;
    gp.phi = 1.0;
    table = global_law_table(gp, {0.5, 0.5}, {64, 128, 256, 512}, 20, c.seed, cfg.distribution, c.jobs);
    json rows = json::array();
    for (const auto& r : table)
      rows.push_back({{"N", r.N}, {"median_error", r.median_error}, {"envelope", r.envelope}});
    j["global_law"] = rows;
  }
  Output out(c.output);
  if (c.format == "json") {
    *out << j.dump(2) << "\n";
  } else {
    *out << "# " << head << "\n";
    *out << "name,value\n";
    for (const char* k : {"ks_distance", "fano_empirical", "fano_theory", "fano_gap", "moment1_gap", "moment2_gap",
                          "rejected", "attempts", "eigenvalue_min", "eigenvalue_max"})
      *out << k << "," << (j[k].is_number_float() ? num(j[k].get<double>()) : j[k].dump()) << "\n";
    for (const auto& r : table) {
      *out << "global_law_median_N" << r.N << "," << num(r.median_error) << "\n";
      *out << "global_law_envelope_N" << r.N << "," << num(r.envelope) << "\n";
    }
  }
  return ok;
}

int cmd_linearize(const Common& c, const Model& m, const std::string& text, const std::string& preset, int contexts,
                  int n) {
  Expr e = scalar(0.0);
  Pencil p;
  std::string label;
  if (!preset.empty()) {
    if (preset != "quantum-dot") throw CLI::ValidationError("preset", "unknown preset: " + preset);
    if (m.gamma <= 0.0) throw CLI::ValidationError("gamma", "must be positive");
    e = quantum_dot_expression(m.gamma, {m.E, m.kappa});
    p = quantum_dot_pencil(m.gamma, {m.E, m.kappa});
    label = "preset=quantum-dot " + m.describe();
  } else {
    if (text.empty()) throw CLI::ValidationError("expression", "give an expression or --preset");
    e = parse(text);
    p = linearize(e);
    label = "expression=" + text;
  }
  std::mt19937_64 rng(c.seed);
  double worst = 0.0;
  int done = 0;
  for (int attempt = 0; done < contexts && attempt < 50 * contexts; ++attempt) {
    EvalContext ctx = random_context(variables(e), n, rng);
    try {
      const MatrixXc direct = evaluate(e, ctx);
      const MatrixXc rec = schur_reconstruct(p, ctx);
      worst = std::max(worst, (rec - direct).cwiseAbs().maxCoeff() / (1.0 + direct.cwiseAbs().maxCoeff()));
      ++done;
    } catch (const DomainViolation&) {
    } catch (const SingularDenominator&) {
    } catch (const SingularLhat&) {
    }
  }
  const std::string head = header("linearize", label + " contexts=" + std::to_string(contexts) +
                                                   " n=" + std::to_string(n) + " seed=" + std::to_string(c.seed));
  json j;
  j["header"] = head;
  j["m"] = p.m;
  j["k"] = p.k;
  j["K0"] = complex_matrix(p.K0);
  j["K"] = json::array();
  for (const auto& a : p.K) j["K"].push_back(complex_matrix(a));
  j["L"] = json::array();
  for (const auto& a : p.L) j["L"].push_back(complex_matrix(a));
  j["verification"] = {{"contexts", done}, {"max_residual", worst}};
  Output out(c.output);
  *out << j.dump(2) << "\n";
  if (done < contexts) {
    std::cerr << "error: only " << done << " in-domain contexts found\n";
    return numeric;
  }
  return ok;
}

int cmd_verify(const Common& c, const VerifyConfig& vc) {
  const auto results = run_verify(vc);
  Output out(c.output);
  bool all = true;
  for (const auto& r : results) {
    const char* tag = r.informational ? "INFO" : (r.passed() ? "PASS" : "FAIL");
    all = all && r.passed();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3e", r.max_error);
    *out << tag << "  " << r.name << "  points=" << r.points << "  max_error=" << buf << "  tol=" << r.tolerance
         << "\n";
  }
  return all ? ok : verification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Limiting spectral densities via linearization and the Dyson equation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ncdel::version));

  Common common;
  Model model;

  std::string grid = "0.01:0.99:99";
  bool log_edges = false;
  auto* density_cmd = app.add_subcommand("density", "self-consistent density of transmission eigenvalues");
  add_model(density_cmd, model);
  add_common(density_cmd, common);
  density_cmd->add_option("--grid", grid, "start:stop:count");
  density_cmd->add_flag("--log-edges", log_edges, "add geometric points near 0 and 1");
  density_cmd->add_flag("--limit-path", model.limit_path, "reach kappa = 0 through Y = E + i phi X, X -> 0");

  std::string sweep = "0.05:0.95:19";
  auto* fano_cmd = app.add_subcommand("fano", "Fano factor for a single phi or a phi sweep");
  add_model(fano_cmd, model);
  add_common(fano_cmd, common);
  fano_cmd->add_option("--sweep", sweep, "phi sweep start:stop:count");

  auto* asym_cmd = app.add_subcommand("asymptotics", "edge asymptotics near 0 and 1");
  add_model(asym_cmd, model);
  add_common(asym_cmd, common);

  int N = 128, M = 0, trials = 10, nodes = 2000;
  std::string dist = "gaussian", eig_path;
  bool global_law = false;
  auto* mc_cmd = app.add_subcommand("mc", "Monte-Carlo sampling compared with the theory");
  add_model(mc_cmd, model, false);
  add_common(mc_cmd, common);
  mc_cmd->add_option("--N", N, "number of channels")->check(CLI::PositiveNumber);
  mc_cmd->add_option("--M", M, "dot dimension (defaults to N)")->check(CLI::NonNegativeNumber);
  mc_cmd->add_option("--trials", trials, "number of trials")->check(CLI::PositiveNumber);
  mc_cmd->add_option("--dist", dist, "gaussian, bernoulli or uniform-disc");
  mc_cmd->add_option("--eigenvalues", eig_path, "per-trial eigenvalue CSV");
  mc_cmd->add_option("--nodes", nodes, "quadrature nodes for the theoretical CDF")->check(CLI::PositiveNumber);
  mc_cmd->add_flag("--check-global-law", global_law, "tabulate the global-law error for N = 64..512");

  std::string expr, preset;
  int contexts = 5, ctx_n = 4;
  auto* lin_cmd = app.add_subcommand("linearize", "linearize an expression and dump the pencil");
  add_model(lin_cmd, model, false);
  add_common(lin_cmd, common);
  lin_cmd->add_option("expression", expr, "expression, e.g. \"x1*x1 + inv(2 - x1)\"");
  lin_cmd->add_option("--preset", preset, "built-in pencil (quantum-dot)");
  lin_cmd->add_option("--contexts", contexts, "random contexts for the reconstruction check")->check(CLI::PositiveNumber);
  lin_cmd->add_option("--n", ctx_n, "matrix size of the random contexts")->check(CLI::PositiveNumber);

  VerifyConfig vc;
  double vphi = 1.0, vE = 0.0;
  auto* verify_cmd = app.add_subcommand("verify", "identity and invariant suite");
  add_common(verify_cmd, common);
  auto* vphi_opt = verify_cmd->add_option("--phi", vphi, "restrict to this phi")->check(CLI::Range(0.0, 1.0));
  auto* vE_opt = verify_cmd->add_option("--E", vE, "restrict to this energy");
  verify_cmd->add_flag("--ideal-coupling", vc.ideal_coupling, "add the ideal-coupling Monte-Carlo check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  try {
    if (*density_cmd) return cmd_density(common, model, grid, log_edges);
    if (*fano_cmd) return cmd_fano(common, model, fano_cmd->count("--phi") > 0, sweep);
    if (*asym_cmd) return cmd_asymptotics(common, model);
    if (*mc_cmd) return cmd_mc(common, model, N, M, trials, dist, eig_path, global_law, nodes);
    if (*lin_cmd) return cmd_linearize(common, model, expr, preset, contexts, ctx_n);
    if (*verify_cmd) {
      if (*vphi_opt) vc.phi = vphi;
      if (*vE_opt) vc.E = vE;
      vc.seed = common.seed;
      vc.jobs = common.jobs;
      return cmd_verify(common, vc);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const NotSelfAdjoint& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const InvalidParams& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const OutOfRange& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return numeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  }
  return usage;
}
