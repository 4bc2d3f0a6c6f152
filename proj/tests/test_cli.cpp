#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(EMPROC_BIN_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buffer;
  std::string output;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buffer.data(), buffer.size(), pipe) != nullptr) {
    output += buffer.data();
  }
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), output};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("emproc_cli_" + tag);
  fs::remove_all(dir);
  return dir;
}

std::string write_config(const std::string& tag, const std::string& text) {
  const fs::path path = fs::temp_directory_path() / ("emproc_cfg_" + tag + ".json");
  std::ofstream out(path);
  out << text;
  return path.string();
}

const std::string kConfigDir = EMPROC_CONFIG_DIR;

}  // namespace

TEST_CASE("describe: plan is stable and lists the bundled checks") {
  const auto a = run_cli("describe --config " + kConfigDir + "/default.json");
  const auto b = run_cli("describe --config " + kConfigDir + "/default.json");
  CHECK(a.exit_code == 0);
  CHECK(a.output == b.output);
  CHECK(a.output.find("checks (6):") != std::string::npos);
}

TEST_CASE("verify: small passing config exits 0 with the 1/12 oracle cell") {
  const fs::path out = temp_dir("verify_pass");
  const std::string cfg = write_config("pass", R"({
    "model": {"kind": "comonotone"},
    "weights": {"q": {"kind": "constant", "value": 1.0}},
    "grid": {"horizon": 1.0, "points": [0.5, 1.0]},
    "run": {"n": 200, "R": 2000, "seed": 8},
    "checks": [{"name": "variance"}],
    "output": {"directory": "unused", "formats": ["csv", "json"]}
  })");
  const auto result = run_cli("verify --config " + cfg + " --out " + out.string());
  CHECK(result.exit_code == 0);
  const std::string report = slurp(out / "variance.json");
  CHECK(report.find("0.083333333") != std::string::npos);
  const std::string summary = slurp(out / "summary.json");
  CHECK(summary.find("\"pass\": true") != std::string::npos);
}

TEST_CASE("verify: failing tolerance exits 1 and reports detail") {
  const fs::path out = temp_dir("verify_fail");
  const std::string cfg = write_config("fail", R"({
    "model": {"kind": "comonotone"},
    "weights": {"q": {"kind": "constant", "value": 1.0}},
    "grid": {"horizon": 1.0, "points": [0.5, 1.0]},
    "run": {"n": 200, "R": 500, "seed": 8},
    "checks": [{"name": "variance", "z_max": 1e-9, "bias_slack": 0.0}],
    "output": {"directory": "unused", "formats": ["json"]}
  })");
  const auto result = run_cli("verify --config " + cfg + " --out " + out.string());
  CHECK(result.exit_code == 1);
  const std::string summary = slurp(out / "summary.json");
  CHECK(summary.find("\"pass\": false") != std::string::npos);
}

TEST_CASE("malformed config: exit 2, no partial outputs") {
  const fs::path out = temp_dir("bad_config");
  const std::string cfg = write_config("bad", R"({
    "model": {"kind": "comonotone"},
    "weights": {"q": {"kind": "constant", "value": 1.0}},
    "grid": {"horizon": 1.0, "points": [0.5, 1.0]},
    "run": {"n": -5, "R": 100, "seed": 8},
    "checks": [{"name": "variance"}],
    "output": {"directory": "unused", "formats": ["json"]}
  })");
  const auto result = run_cli("verify --config " + cfg + " --out " + out.string());
  CHECK(result.exit_code == 2);
  CHECK(!fs::exists(out));

  const std::string unknown = write_config("unknown_check", R"({
    "checks": [{"name": "varianze"}]
  })");
  const auto bad_name = run_cli("describe --config " + unknown);
  CHECK(bad_name.exit_code == 2);
  CHECK(bad_name.output.find("varianze") != std::string::npos);
}

TEST_CASE("oracle subcommand: surfaces only, zero draws") {
  const fs::path out = temp_dir("oracle");
  const auto result = run_cli("oracle --config " + kConfigDir +
                              "/default.json --out " + out.string());
  CHECK(result.exit_code == 0);
  const std::string summary = slurp(out / "summary.json");
  CHECK(summary.find("\"rng_draws\": 0") != std::string::npos);
  CHECK(fs::exists(out / "oracle_surfaces.csv"));
  const std::string csv = slurp(out / "oracle_surfaces.csv");
  CHECK(csv.rfind("# digest=", 0) == 0);  // every output carries the digest
  CHECK(csv.find("t,s,value,kind") != std::string::npos);
  CHECK(csv.find("residual_cov") != std::string::npos);
  CHECK(csv.find("combined_cov") != std::string::npos);
}

TEST_CASE("bound violation surfaces as exit 3") {
  const std::string cfg = write_config("bound", R"({
    "model": {"kind": "ou", "rho": 1.0},
    "weights": {"q": {"kind": "linear_y", "a": 0.0, "b": 1.0}},
    "grid": {"horizon": 1.0, "points": [0.5, 1.0]},
    "run": {"n": 100, "R": 50, "seed": 3},
    "checks": [{"name": "variance"}],
    "output": {"directory": "unused", "formats": ["json"]}
  })");
  const auto result = run_cli("verify --config " + cfg);
  CHECK(result.exit_code == 3);
}

TEST_CASE("bridge and tightness subcommands filter their checks") {
  const fs::path out = temp_dir("bridge_demo");
  const auto bridge = run_cli("bridge --config " + kConfigDir +
                              "/bridge_demo.json --out " + out.string());
  CHECK(bridge.exit_code == 0);
  CHECK(fs::exists(out / "bridge_gaussian.json"));

  // The bridge-only config contains no tightness checks.
  const auto none = run_cli("tightness --config " + kConfigDir +
                            "/bridge_demo.json --out " + out.string());
  CHECK(none.exit_code == 2);
}

TEST_CASE("lstat subcommand runs the worked configuration") {
  const fs::path out = temp_dir("lstat");
  const auto result = run_cli("lstat --config " + kConfigDir +
                              "/lstat_worked.json --out " + out.string());
  CHECK(result.exit_code == 0);
  const std::string report = slurp(out / "lstat.json");
  // J(1.0) = (0.75)^3/3 for the worked threshold configuration.
  CHECK(report.find("0.140625") != std::string::npos);
}

TEST_CASE("simulate subcommand emits estimates without oracle pairing") {
  const fs::path out = temp_dir("simulate");
  const std::string cfg = write_config("sim", R"({
    "model": {"kind": "independent"},
    "weights": {"q": {"kind": "constant", "value": 1.0}},
    "grid": {"horizon": 1.0, "points": [0.25, 0.75]},
    "run": {"n": 100, "R": 200, "seed": 5},
    "checks": [],
    "output": {"directory": "unused", "formats": ["csv"]}
  })");
  const auto result = run_cli("simulate --config " + cfg + " --out " + out.string());
  CHECK(result.exit_code == 0);
  const std::string csv = slurp(out / "simulate.csv");
  CHECK(csv.find("residual_star_mean") != std::string::npos);
  CHECK(!fs::exists(out / "simulate.json"));  // csv-only config
}
