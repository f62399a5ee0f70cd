// End-to-end tests that drive the bip-lab binary through a shell, checking
// exit codes, stdout, and the files each subcommand writes.
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace {

std::string data(const std::string& name) { return std::string(BIPLAB_DATA_DIR) + "/" + name; }

std::string tmp(const std::string& name) { return ::testing::TempDir() + name; }

int run(const std::string& args, const std::string& stdout_file = "/dev/null") {
  const std::string cmd = std::string(BIPLAB_CLI) + " " + args + " > " + stdout_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        field += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

TEST(CliValidate, AcceptsWellFormedSpace) {
  EXPECT_EQ(run("validate --space " + data("line9.json")), 0);
}

TEST(CliValidate, MalformedJsonExitsTwo) {
  const std::string bad = tmp("bad_space.json");
  std::ofstream(bad) << "{\"points\": ";
  EXPECT_EQ(run("validate --space " + bad), 2);
}

TEST(CliValidate, MissingFileExitsTwo) {
  EXPECT_EQ(run("validate --space /nonexistent/space.json"), 2);
}

TEST(CliArgs, MissingRequiredOptionExitsTwo) {
  EXPECT_EQ(run("wasserstein --space " + data("line9.json") + " --mu0 " + data("mu0_line9.json")), 2);
}

TEST(CliArgs, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }

TEST(CliWasserstein, PrintsTheExactCostForTranslatedPatches) {
  const std::string out = tmp("wq.txt");
  ASSERT_EQ(run("wasserstein --space " + data("line9.json") + " --mu0 " + data("mu0_line9.json") + " --mu1 " +
                    data("mu1_line9.json"),
                out),
            0);
  EXPECT_EQ(slurp(out), "6\n");
}

TEST(CliWasserstein, WritesTheOptimalCouplingAsCsv) {
  const std::string coupling = tmp("coupling.csv");
  ASSERT_EQ(run("wasserstein --space " + data("line9.json") + " --mu0 " + data("mu0_line9.json") + " --mu1 " +
                data("mu1_line9.json") + " --coupling " + coupling),
            0);
  const std::vector<std::string> rows = lines_of(slurp(coupling));
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0], "i,j,mass");
  double total = 0.0;
  for (std::size_t k = 1; k < rows.size(); ++k) total += std::stod(split_csv_line(rows[k])[2]);
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(CliInterpolate, WritesAMidpointTraceWithBoundedDensities) {
  const std::string trace = tmp("trace.csv");
  ASSERT_EQ(run("interpolate --space " + data("line9.json") + " --mu0 " + data("mu0_line9.json") + " --mu1 " +
                data("mu1_line9.json") + " --levels 1 --out " + trace),
            0);
  const std::vector<std::string> rows = lines_of(slurp(trace));
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0], "time,point,mass,density,level_cap");
  bool saw_midpoint = false;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const std::vector<std::string> f = split_csv_line(rows[k]);
    ASSERT_EQ(f.size(), 5u);
    if (f[0] == "0.5") saw_midpoint = true;
    EXPECT_LE(std::stod(f[3]), (1.0 / 3.0) * (1.0 + 1e-6));
  }
  EXPECT_TRUE(saw_midpoint);
}

TEST(CliBipVerify, FlatLineTranslatesPassTheCurvatureProfile) {
  EXPECT_EQ(run("bip-verify --space " + data("line9.json") + " --pairs " + data("pairs_line9.json") +
                " --profile " + data("profile_cdinfty_K0.json") + " --levels 1"),
            0);
}

TEST(CliBipVerify, AcceptsAnInlineProfile) {
  EXPECT_EQ(run("bip-verify --space " + data("line9.json") + " --pairs " + data("pairs_line9.json") +
                " --profile '{\"kind\": \"cd_infty\", \"K\": 0.0}' --levels 1"),
            0);
}

TEST(CliBipVerify, PinchedLineFailsAndNamesAWitness) {
  const std::string report = tmp("bip_fail.csv");
  EXPECT_EQ(run("bip-verify --space " + data("pinched17.json") + " --pairs " + data("pairs_pinched17.json") +
                " --profile " + data("profile_constant_1.json") + " --levels 1 --out " + report),
            1);
  const std::string text = slurp(report);
  EXPECT_NE(text.find("witness"), std::string::npos);
  EXPECT_NE(text.find("false"), std::string::npos);
}

TEST(CliCurvature, FlatLineSatisfiesNonnegativeCurvature) {
  EXPECT_EQ(run("curvature-check --space " + data("line9.json") + " --pairs " + data("pairs_line9.json") +
                " --kind cd_infty --K 0 --levels 1"),
            0);
}

TEST(CliCurvature, FlatLineFailsAStrictlyPositiveBound) {
  EXPECT_EQ(run("curvature-check --space " + data("line9.json") + " --pairs " + data("pairs_line9.json") +
                " --kind cd_infty --K 10 --levels 1"),
            1);
}

TEST(CliCurvature, WritesPerTimeMarginsAsJson) {
  const std::string report = tmp("curv.json");
  ASSERT_EQ(run("curvature-check --space " + data("line9.json") + " --pairs " + data("pairs_line9.json") +
                " --kind cd_infty --K 0 --levels 1 --out " + report),
            0);
  const std::string text = slurp(report);
  EXPECT_NE(text.find("\"margins\""), std::string::npos);
  EXPECT_NE(text.find("\"times\""), std::string::npos);
}

TEST(CliSobolev, RecoversTheUnitGradientOfALinearFunction) {
  const std::string grad = tmp("gradient.csv");
  ASSERT_EQ(run("sobolev --space " + data("line9.json") + " --f " + data("f_line9.json") + " --out " + grad), 0);
  const std::vector<std::string> rows = lines_of(slurp(grad));
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0], "point,gradient");
  for (std::size_t k = 1; k < rows.size(); ++k)
    EXPECT_NEAR(std::stod(split_csv_line(rows[k])[1]), 1.0, 2e-3);
}

TEST(CliSobolev, CompareReportsMonotoneNormsAcrossExponents) {
  EXPECT_EQ(run("sobolev compare --space " + data("line9.json") + " --f " + data("f_line9.json") +
                " --p1 1.5 --p2 3"),
            0);
}

TEST(CliPmgh, TransfersAMeasureWithinTheDensityBound) {
  const std::string report = tmp("pmgh.json");
  ASSERT_EQ(run("pmgh --space " + data("line9.json") + " --target " + data("target_evens9.json") + " --limit " +
                data("limit_all9.json") + " --mu " + data("mu_limit9.json") + " --cutoff " +
                data("cutoff_ones9.json") + " --out " + report),
            0);
  EXPECT_NE(slurp(report).find("\"pass\": true"), std::string::npos);
}

TEST(CliReport, BatteryPassesOnAFlatLineAndSortsRows) {
  const std::string report = tmp("report.csv");
  ASSERT_EQ(run("report --space " + data("line9.json") + " --out " + report), 0);
  const std::vector<std::string> rows = lines_of(slurp(report));
  ASSERT_GE(rows.size(), 9u);
  EXPECT_EQ(rows[0], "check_id,statement,lhs,rhs,margin,pass");
  std::string prev;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const std::vector<std::string> f = split_csv_line(rows[k]);
    ASSERT_EQ(f.size(), 6u);
    EXPECT_GE(f[0], prev);
    prev = f[0];
    EXPECT_EQ(f[5], "true");
  }
}

TEST(CliReport, OutputIsByteIdenticalAcrossRuns) {
  const std::string r1 = tmp("report_run1.csv");
  const std::string r2 = tmp("report_run2.csv");
  ASSERT_EQ(run("report --space " + data("line9.json") + " --out " + r1), 0);
  ASSERT_EQ(run("report --space " + data("line9.json") + " --out " + r2), 0);
  const std::string t1 = slurp(r1);
  EXPECT_FALSE(t1.empty());
  EXPECT_EQ(t1, slurp(r2));
}

TEST(CliReport, PinchedLineFailsTheInterpolationChecksHonestly) {
  const std::string report = tmp("report_pinched.csv");
  EXPECT_EQ(run("report --space " + data("pinched17.json") + " --out " + report), 1);
  const std::string text = slurp(report);
  EXPECT_NE(text.find("\"e-interpolation-density\","), std::string::npos);
  EXPECT_NE(text.find("false"), std::string::npos);
}

}  // namespace
