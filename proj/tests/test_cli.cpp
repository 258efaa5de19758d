#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  static int counter = 0;
  const std::string path = "cli_test_" + std::to_string(++counter) + ".out";
  const std::string cmd = std::string(NCDEL_BIN) + " " + args + " > " + path + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  std::remove(path.c_str());
  return r;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run("--help").code == 0);
  CHECK(run("").code == 1);
  CHECK(run("density --phi 2").code == 1);
  CHECK(run("density --grid 1:0:3").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("linearize \"x1 +\"").code == 1);
  CHECK(run("linearize \"x1*y1\"").code == 1);
}

TEST_CASE("density at phi = 0") {
  const Run r = run("density --phi 0 --E 0 --gamma 1 --grid 0.01:0.99:99");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("# ncdel ", 0) == 0);
  CHECK(r.out.find(" density ") != std::string::npos);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 100);
  CHECK(rows[0] == std::vector<std::string>{"lambda", "rho", "eta_used", "quality_flag"});
  double worst = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double l = std::stod(rows[i][0]), rho = std::stod(rows[i][1]);
    worst = std::max(worst, std::abs(rho - 1.0 / (M_PI * std::sqrt(l * (1.0 - l)))));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("density at phi = 1 has a monotone grid") {
  const Run r = run("density --phi 1 --grid 0.05:0.95:7 --log-edges --format json");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["header"].get<std::string>().rfind("ncdel ", 0) == 0);
  double prev = -1.0;
  for (const auto& row : j["rows"]) {
    CHECK(row["lambda"].get<double>() > prev);
    prev = row["lambda"].get<double>();
  }
}

TEST_CASE("regularized density") {
  CHECK(run("density --phi 0.3 --E 0.5 --gamma 2 --kappa 1e-3 --grid 0.2:0.8:3").code == 0);
}

TEST_CASE("fano") {
  const auto rows = csv_rows(run("fano --phi 0 --E 1 --gamma 2").out);
  REQUIRE(rows.size() == 2);
  CHECK(std::stod(rows[1][3]) == doctest::Approx(5.0 / (10.0 + 4.0 * std::sqrt(3.0))).epsilon(1e-12));
  CHECK(std::stod(csv_rows(run("fano --phi 0").out)[1][3]) == 0.25);
}

TEST_CASE("asymptotics") {
  const Run r = run("asymptotics --phi 1 --format json");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["xi0_at_1"].get<double>() == doctest::Approx(-std::sqrt(2.0 * std::sqrt(8.0) - 4.0)));
  const auto rows = csv_rows(run("asymptotics --phi 0.5").out);
  CHECK(rows[0] == std::vector<std::string>{"name", "value"});
}

TEST_CASE("linearize") {
  for (const char* e : {"\"x1\"", "\"y1*y1* + y2*y2*\""}) {
    const Run r = run(std::string("linearize ") + e);
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["verification"]["max_residual"].get<double>() < 1e-10);
  }
  const auto j = nlohmann::json::parse(run("linearize --preset quantum-dot").out);
  CHECK(j["m"] == 8);
  CHECK(j["K"].size() == 1);
  CHECK(j["L"].size() == 2);
}

TEST_CASE("mc determinism") {
  const std::string args = "mc --N 128 --M 128 --trials 10 --seed 5 --format json";
  const auto a = nlohmann::json::parse(run(args).out);
  const auto b = nlohmann::json::parse(run(args + " --jobs 2").out);
  CHECK(a["ks_distance"].get<double>() == b["ks_distance"].get<double>());
  CHECK(a["ks_distance"].get<double>() <= 0.06);
}

TEST_CASE("verify") {
  const Run r = run("verify --phi 1 --E 0.5");
  CHECK(r.code == 0);
  CHECK(r.out.find("det M3 quadratic") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
}
