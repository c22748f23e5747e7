#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gsbp/io.hpp"
#include "printed.hpp"

namespace {

namespace fs = std::filesystem;
using gsbp::io::json;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("gsbp_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Exit status of the CLI; stdout and stderr go to files in the test dir.
  int run(const std::string& args) {
    const std::string cmd = std::string(GSBP_CLI) + " " + args + " >" + path("stdout").string() + " 2>" +
                            path("stderr").string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }
  fs::path path(const std::string& name) const { return dir_ / name; }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
  std::string out() const { return slurp(path("stdout")); }
  std::string err() const { return slurp(path("stderr")); }

  fs::path dir_;
};

TEST_F(Cli, CertifyLobatto4) {
  ASSERT_EQ(run("certify --family lobatto -n 4 -o " + path("c.json").string()), 0) << err();
  const json rep = gsbp::io::read_json_file(path("c.json"));
  EXPECT_EQ(rep["summary"]["q"], 3);
  EXPECT_EQ(rep["summary"]["tau"], 6);
  EXPECT_EQ(rep["summary"]["l_stable"], true);
  EXPECT_EQ(rep["summary"]["bn_stable"], true);
  EXPECT_EQ(rep["operator"]["passes"], true);
  EXPECT_NE(err().find("q=3 tau=6"), std::string::npos);
  EXPECT_NE(err().find("L-stable BN-stable"), std::string::npos);
}

TEST_F(Cli, TableauGauss4MatchesPrintedWeights) {
  ASSERT_EQ(run("tableau --family gauss -n 4 -o " + path("gauss4.json").string()), 0) << err();
  const auto imported = gsbp::io::tableau_from_json(gsbp::io::read_json_file(path("gauss4.json")));
  // the printed b is half the [0, 1] weight vector (it sums to 1/2)
  EXPECT_LT(gsbp::max_abs(gsbp::VecD(imported.tableau.b - 2.0 * printed::gauss4_b())), 1e-13);
  EXPECT_LT(gsbp::max_abs(gsbp::MatD(imported.tableau.A - printed::gauss4_A())), 1e-11);
  EXPECT_EQ(out(), "");
}

TEST_F(Cli, MissingInputIsUsageError) {
  const auto target = path("x.csv");
  EXPECT_EQ(run("solve --tableau " + path("missing.json").string() + " --steps 4 -o " + target.string()), 2);
  EXPECT_FALSE(fs::exists(target));
  EXPECT_NE(err().find("cannot open"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_NE(err().find("Usage"), std::string::npos);
  EXPECT_EQ(run("certify --family lobatto -n 4 --bogus"), 2);
  EXPECT_EQ(run("certify --family lobatto -n 4 --scheme dirk3"), 2);
  EXPECT_EQ(run("certify --family warped -n 4"), 2);
  EXPECT_EQ(run("solve --scheme dirk3 --step 0.1 --steps 4"), 2);
  EXPECT_EQ(run("solve --scheme dirk3 --problem nope --steps 4"), 2);
  EXPECT_EQ(run("dual --scheme gauss-collocation-2"), 2);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, InvariantViolationIsNumericFailure) {
  json doc = gsbp::io::read_json_file(fs::path(GSBP_TEST_DATA) / "fd-sbp-2-1.json");
  doc["Theta"][1][2] = "0.6";
  gsbp::io::write_file_atomic(path("bad.json"), gsbp::io::dump(doc));
  const auto target = path("t.json");
  EXPECT_EQ(run("tableau --operator " + path("bad.json").string() + " -o " + target.string()), 1);
  EXPECT_FALSE(fs::exists(target));
  EXPECT_NE(err().find("residual"), std::string::npos);
}

TEST_F(Cli, ArtifactsAreDeterministic) {
  for (const std::string verb : {"solve --scheme radau-iia-3 --problem cubic --steps 5",
                                 "certify --scheme dirk4", "dual --scheme dirk3 --lambda -3"}) {
    ASSERT_EQ(run(verb + " -o " + path("a").string()), 0) << err();
    ASSERT_EQ(run(verb + " -o " + path("b").string()), 0) << err();
    EXPECT_EQ(slurp(path("a")), slurp(path("b"))) << verb;
    EXPECT_FALSE(slurp(path("a")).empty());
  }
}

TEST_F(Cli, RegistryMatchesStoredGoldens) {
  int checked = 0;
  for (const auto& entry : fs::directory_iterator(GSBP_GOLDEN_DIR)) {
    const std::string name = entry.path().stem().string();
    ASSERT_EQ(run("tableau --scheme " + name + " -o " + path(name).string()), 0) << err();
    EXPECT_EQ(slurp(path(name)), slurp(entry.path())) << name;
    ++checked;
  }
  EXPECT_EQ(checked, 19);
}

TEST_F(Cli, OperatorRoundTrip) {
  const auto op = path("op.json");
  ASSERT_EQ(run("make-operator --family radau-iia -n 3 -o " + op.string()), 0) << err();
  ASSERT_EQ(run("tableau --operator " + op.string() + " -o " + path("a.json").string()), 0) << err();
  ASSERT_EQ(run("tableau --family radau-iia -n 3 -o " + path("b.json").string()), 0) << err();
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  ASSERT_EQ(run("make-operator --family gauss -n 3 --interval 2 5"), 0) << err();
  const json doc = json::parse(out());
  EXPECT_EQ(doc["interval"][1], "5");
}

TEST_F(Cli, SolveSatAgreesWithRungeKutta) {
  ASSERT_EQ(run("solve --scheme lobatto-iiic-4 --lambda -2 --steps 4 --sat -o " + path("sat.csv").string()),
            0)
      << err();
  ASSERT_EQ(run("solve --scheme lobatto-iiic-4 --lambda -2 --steps 4 -o " + path("rk.csv").string()), 0);
  auto last_y = [](const std::string& csv) {
    std::istringstream in(csv);
    std::string line, last;
    while (std::getline(in, line))
      if (line.find(",,,") != std::string::npos) last = line;
    const auto a = last.find(',');
    const auto b = last.find(',', a + 1);
    return std::stod(last.substr(b + 1, last.find(',', b + 1) - b - 1));
  };
  EXPECT_NEAR(last_y(slurp(path("sat.csv"))), last_y(slurp(path("rk.csv"))), 1e-12);
  EXPECT_EQ(run("solve --scheme gauss-collocation-2 --steps 4 --sat"), 2);
}

TEST_F(Cli, DualMatchesPrimal) {
  ASSERT_EQ(run("dual --scheme gauss-gsbp-4 --lambda -1.5 --alpha 0.25 --y0 2"), 0) << err();
  const json doc = json::parse(out());
  EXPECT_LT(std::stod(doc["difference"].get<std::string>()), 1e-11);
}

TEST_F(Cli, StudyAndBench) {
  const json cfg = {{"nblocks", 4},          {"nodes_per_block", 3},   {"T", 0.5},
                    {"schemes", {"radau-iia-2", std::string("file:") + GSBP_TEST_DATA + "/fd-sbp-2-1.json"}},
                    {"h_values", {0.125, 0.0625, 0.03125, 0.015625}}, {"repetitions", 1}};
  gsbp::io::write_file_atomic(path("cfg.json"), cfg.dump());
  ASSERT_EQ(run("study --config " + path("cfg.json").string() + " --no-timing -o " + path("s.csv").string() +
                " --dat " + path("wp.dat").string()),
            0)
      << err();
  const std::string csv = slurp(path("s.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 8 + 2);
  EXPECT_TRUE(fs::exists(path("wp.dat")));
  ASSERT_EQ(run("study --config " + path("cfg.json").string() + " --no-timing -o " + path("s2.csv").string()), 0);
  EXPECT_EQ(csv, slurp(path("s2.csv")));

  EXPECT_EQ(run("study --config " + path("missing.json").string() + " -o " + path("m.csv").string()), 2);
  EXPECT_FALSE(fs::exists(path("m.csv")));

  ASSERT_EQ(run("bench --nblocks 4 --nodes 3 --T 0.5 --schemes dirk3 --h-values 0.125 0.0625 0.03125 "
                "0.015625 --repetitions 1"),
            0)
      << err();
  EXPECT_NE(out().find("dirk3,3,3,slope,"), std::string::npos);
}

}  // namespace
