#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ncdel/quantum_dot.hpp"

namespace ncdel {

struct CheckResult {
  std::string name;
  std::size_t points = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  // reported but never failing
  bool informational = false;

  bool passed() const { return informational || max_error <= tolerance; }
};

struct VerifyConfig {
  std::optional<double> phi;
  std::optional<double> E;
  bool ideal_coupling = false;
  std::uint64_t seed = 1;
  int jobs = 1;
};

// Identities of the reduced solution on a phi = 1 lattice (5 gammas x 5 energies x 20 spectral points).
std::vector<CheckResult> identity_lattice(const std::vector<double>& gammas, const std::vector<double>& energies,
                                          const std::vector<cplx>& zs, int jobs = 1);

// Identities along Y = E + i kappa at phi < 1.
std::vector<CheckResult> kappa_path_identities(double phi, const std::vector<double>& gammas,
                                               const std::vector<double>& energies, const std::vector<double>& kappas,
                                               const std::vector<cplx>& zs, int jobs = 1);

// Reduced 2x2 solution against the full pencil DEL at random (gamma, E, phi = k/l, z).
CheckResult reduced_vs_full(int samples, std::uint64_t seed);

std::vector<cplx> default_spectral_points();

std::vector<CheckResult> run_verify(const VerifyConfig& cfg);

}  // namespace ncdel
