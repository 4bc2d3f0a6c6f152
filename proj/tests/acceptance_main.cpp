// Acceptance gate: runs `emproc verify --all` with 1 and 8 workers, prints
// one PASS/FAIL line per criterion, and byte-compares the two report trees
// for the determinism criterion.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(EMPROC_BIN_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buffer;
  std::string output;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return {127, "popen failed"};
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

bool trees_identical(const fs::path& a, const fs::path& b,
                     std::string& detail) {
  std::vector<fs::path> files_a;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (entry.is_regular_file()) files_a.push_back(fs::relative(entry.path(), a));
  }
  std::sort(files_a.begin(), files_a.end());
  std::vector<fs::path> files_b;
  for (const auto& entry : fs::recursive_directory_iterator(b)) {
    if (entry.is_regular_file()) files_b.push_back(fs::relative(entry.path(), b));
  }
  std::sort(files_b.begin(), files_b.end());
  if (files_a != files_b) {
    detail = "file sets differ";
    return false;
  }
  for (const auto& rel : files_a) {
    if (slurp(a / rel) != slurp(b / rel)) {
      detail = "byte mismatch in " + rel.string();
      return false;
    }
  }
  return true;
}

}  // namespace

int main() {
  const fs::path base = fs::temp_directory_path() / "emproc_acceptance";
  fs::remove_all(base);
  const fs::path out1 = base / "workers1";
  const fs::path out8 = base / "workers8";

  const CliResult run1 =
      run_cli("verify --all --workers 1 --out " + out1.string());
  const CliResult run8 =
      run_cli("verify --all --workers 8 --out " + out8.string());

  bool all_pass = true;

  // Criteria 1-10 come from the workers=1 run; echo its per-criterion lines.
  std::istringstream lines(run1.output);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind("PASS c", 0) == 0 || line.rfind("FAIL c", 0) == 0 ||
        line.rfind("  - ", 0) == 0) {
      std::cout << line << "\n";
    }
    if (line.rfind("FAIL c", 0) == 0) all_pass = false;
  }
  if (run1.exit_code != 0) all_pass = false;
  if (run8.exit_code != 0) {
    all_pass = false;
    std::cout << "FAIL c11_determinism - workers=8 run exited with code "
              << run8.exit_code << "\n";
  } else {
    std::string detail;
    const bool identical = trees_identical(out1, out8, detail);
    std::cout << (identical ? "PASS" : "FAIL")
              << " c11_determinism - verify --all reports byte-identical for "
                 "workers 1 and 8\n";
    if (!identical) {
      std::cout << "  - " << detail << "\n";
      all_pass = false;
    }
  }

  std::cout << (all_pass ? "ACCEPTANCE: all criteria passed"
                         : "ACCEPTANCE: FAILURES PRESENT")
            << "\n";
  return all_pass ? 0 : 1;
}
