#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("zklab_cli_" + name);
  fs::remove_all(p);
  return p;
}

int zklab(const std::string& args) {
  const std::string cmd = std::string("\"") + ZKLAB_PATH + "\" " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(Cli, OdeWritesTrajectoryAndManifest) {
  const fs::path out = scratch("ode");
  ASSERT_EQ(zklab("ode --b0 0.1 --theta 1.66032 --t-end 6 --out " + out.string()), 0);
  const auto rows = read_csv(out / "trajectory.csv");
  ASSERT_GT(rows.size(), 100u);
  ASSERT_EQ(rows[0].back(), "b_over_lambda_theta");
  double lo = 1e300, hi = -1e300;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double v = std::stod(rows[k].back());
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_NEAR(lo, 0.1, 1e-8);
  EXPECT_LT(hi - lo, 1e-8);

  const auto man = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(man["command"], "ode");
  EXPECT_EQ(man["config"]["b0"], "0.1");
  EXPECT_TRUE(fs::exists(out / "prediction.json"));
}

TEST(Cli, GroundStateEnergyVanishes) {
  const fs::path out = scratch("gs");
  ASSERT_EQ(zklab("ground-state --dr 0.01 --rmax 20 --out " + out.string()), 0);
  const auto j = nlohmann::json::parse(slurp(out / "ground_state.json"));
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_LT(j["identity_gaps"]["energy"].get<double>(), 1e-4);
  EXPECT_LT(std::abs(j["energy"].get<double>()), 1e-3);
  EXPECT_NEAR(j["Q0"].get<double>(), 2.2062, 1e-3);
}

TEST(Cli, ExitCodes) {
  const fs::path out = scratch("codes");
  EXPECT_EQ(zklab("no-such-command"), 64);
  EXPECT_EQ(zklab(""), 64);
  EXPECT_EQ(zklab("ode --bogus 1"), 64);
  EXPECT_EQ(zklab("--help"), 0);
  EXPECT_EQ(zklab("ode --set nonsense=1 --out " + out.string()), 3);
  EXPECT_EQ(zklab("ode --dt -1 --out " + out.string()), 3);
  EXPECT_EQ(zklab("ode --config /nonexistent/file.cfg --out " + out.string()), 3);
}

TEST(Cli, ConfigFileAndOverrideOrder) {
  const fs::path out = scratch("cfg");
  fs::create_directories(out);
  const fs::path cfg = out / "ode.cfg";
  {
    std::ofstream f(cfg);
    f << "# modulation run\nb0 = 0.2\nt_end = 1\n";
  }
  ASSERT_EQ(zklab("ode --config " + cfg.string() + " --set b0=0.05 --out " + out.string()), 0);
  const auto man = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(man["config"]["b0"], "0.05");
  EXPECT_EQ(man["config"]["t_end"], "1");
  EXPECT_EQ(man["input_hashes"].size(), 1u);
}
