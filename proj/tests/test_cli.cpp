#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string output;
};

std::string binary() {
  const char* bin = std::getenv("AXINSM_BIN");
  return bin ? bin : "";
}

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "axinsm_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result invoke(const std::string& args) {
  const std::string cmd = "'" + binary() + "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path only_subdir(const fs::path& root) {
  fs::path found;
  int count = 0;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) found = e.path(), ++count;
  EXPECT_EQ(count, 1) << root;
  return found;
}

const std::string small = " --set params.Nr=16 --set params.Nz=16 --set params.t_end=0.04 --set params.dt=1e-2 --quiet";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    if (binary().empty()) GTEST_SKIP() << "AXINSM_BIN not set";
  }
};

}  // namespace

TEST_F(Cli, HelpListsSubcommandsAndDefaults) {
  Result r = invoke("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"run-nsm", "run-mhd", "sweep-c", "verify-lemmas", "norms", "checks"})
    EXPECT_NE(r.output.find(sub), std::string::npos) << sub;
  r = invoke("verify-lemmas --help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("[all]"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("[20]"), std::string::npos) << r.output;
  r = invoke("--version");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("1.0.0"), std::string::npos);
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(invoke("").code, 1);
  EXPECT_EQ(invoke("frobnicate").code, 1);
  EXPECT_EQ(invoke("run-nsm --no-such-flag").code, 1);
  const std::string out = " --out '" + (scratch() / "usage").string() + "'";
  Result r = invoke("run-nsm --set params.bogus=1" + out);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("params.bogus"), std::string::npos) << r.output;
  EXPECT_EQ(invoke("run-nsm --set params.Nz=12" + out).code, 1);
  EXPECT_EQ(invoke("run-nsm --set params.c=0" + out).code, 1);
  EXPECT_EQ(invoke("run-nsm --config /nonexistent/cfg.txt" + out).code, 1);
  EXPECT_EQ(invoke("verify-lemmas --suite nope" + out).code, 1);
  EXPECT_EQ(invoke("checks --criteria 11" + out).code, 1);
  EXPECT_EQ(invoke("norms --snapshot /nonexistent.bin" + out).code, 1);

  const fs::path cfg = scratch() / "bad.cfg";
  std::ofstream(cfg) << "params.nu=0.1\nparams.sigma\n";
  r = invoke("run-nsm --config '" + cfg.string() + "'" + out);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("line 2"), std::string::npos) << r.output;
}

TEST_F(Cli, NumericalFailureExitsTwo) {
  const std::string out = " --out '" + (scratch() / "cfl").string() + "'";
  const Result s = invoke("run-nsm" + small + " --set profile.amplitude=1e6" + out);
  EXPECT_EQ(s.code, 2) << s.output;
}

TEST_F(Cli, RunNsmWritesLayoutAndIsReproducible) {
  const fs::path a = scratch() / "run_a", b = scratch() / "run_b";
  const std::string args = "run-nsm" + small + " --snapshot-every 2 --sample-every 1 --seed 5";
  ASSERT_EQ(invoke(args + " --out '" + a.string() + "'").code, 0);
  ASSERT_EQ(invoke(args + " --out '" + b.string() + "'").code, 0);
  const fs::path da = only_subdir(a), db = only_subdir(b);
  EXPECT_EQ(da.filename(), db.filename());
  EXPECT_EQ(da.filename().string().rfind("run-nsm-", 0), 0u);

  for (const char* f : {"config.resolved", "ledger.csv", "report.json", "snapshots/initial.bin",
                        "snapshots/final.bin", "snapshots/step_00000002.bin"}) {
    ASSERT_TRUE(fs::exists(da / f)) << f;
    EXPECT_EQ(slurp(da / f), slurp(db / f)) << f;
  }
  const std::string cfg = slurp(da / "config.resolved");
  EXPECT_EQ(cfg.rfind("# axinsm 1.0.0 config_hash=", 0), 0u) << cfg;
  EXPECT_NE(cfg.find("seed=5"), std::string::npos);
  EXPECT_NE(cfg.find("params.Nr=16"), std::string::npos);

  const auto report = nlohmann::json::parse(slurp(da / "report.json"));
  EXPECT_EQ(report["steps"].get<long>() >= 4, true);
  EXPECT_LT(report["relative_residual"].get<double>(), 1e-2);
  EXPECT_EQ(report["header"]["seed"].get<int>(), 5);
  EXPECT_EQ(slurp(da / "ledger.csv").rfind("t,name,value\n", 0), 0u);

  const Result other = invoke("run-nsm" + small + " --seed 6 --out '" + a.string() + "'");
  ASSERT_EQ(other.code, 0);
  int dirs = 0;
  for (const auto& e : fs::directory_iterator(a)) dirs += e.is_directory();
  EXPECT_EQ(dirs, 2);
}

TEST_F(Cli, OutDefaultsToEnvironment) {
  const fs::path root = scratch() / "env_out";
  const std::string cmd = "env AXINSM_OUT='" + root.string() + "' '" + binary() + "' run-mhd" + small + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  char buf[256];
  while (std::fgets(buf, sizeof buf, pipe)) {
  }
  const int status = pclose(pipe);
  EXPECT_EQ(WEXITSTATUS(status), 0);
  const fs::path d = only_subdir(root);
  EXPECT_EQ(d.filename().string().rfind("run-mhd-", 0), 0u);
  EXPECT_TRUE(fs::exists(d / "snapshots" / "final.bin"));
}

TEST_F(Cli, NormsReadsSnapshot) {
  const fs::path root = scratch() / "norms";
  ASSERT_EQ(invoke("run-nsm" + small + " --out '" + root.string() + "'").code, 0);
  const fs::path snap = only_subdir(root) / "snapshots" / "final.bin";
  const Result r = invoke("norms --snapshot '" + snap.string() + "' --set params.lift_n=16 --out '" +
                          (scratch() / "norms_out").string() + "'");
  ASSERT_EQ(r.code, 0) << r.output;
  for (const char* k : {"u_L2", "B_L2", "B_H32", "E_L2", "gamma_L3"}) EXPECT_NE(r.output.find(k), std::string::npos) << k;
  const fs::path d = only_subdir(scratch() / "norms_out");
  const auto report = nlohmann::json::parse(slurp(d / "report.json"));
  EXPECT_GT(report["norms"]["B_L2"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(d / "blocks.csv"));

  const fs::path junk = scratch() / "junk.bin";
  std::ofstream(junk) << "not a snapshot";
  EXPECT_EQ(invoke("norms --snapshot '" + junk.string() + "'").code, 1);
}

TEST_F(Cli, VerifyLemmasReportsSuites) {
  const fs::path root = scratch() / "lemmas";
  const Result r = invoke("verify-lemmas --suite bony --n 2 --out '" + root.string() + "'");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("bony"), std::string::npos);
  EXPECT_NE(r.output.find("pass"), std::string::npos);
  const auto report = nlohmann::json::parse(slurp(only_subdir(root) / "report.json"));
  ASSERT_EQ(report["suites"].size(), 1u);
  EXPECT_TRUE(report["suites"][0]["passed"].get<bool>());

  const Result s = invoke("verify-lemmas --suite structure --quiet" + small + " --set params.lift_n=16 --out '" +
                          root.string() + "'");
  EXPECT_EQ(s.code, 0) << s.output;
}

TEST_F(Cli, SweepWritesFitReport) {
  const fs::path root = scratch() / "sweep";
  const Result r = invoke("sweep-c" + small + " --set params.t_end=0.32 --set sweep.sample_every=1 --set sweep.c_list=4,8"
                          " --set sweep.refinement=false --out '" +
                          root.string() + "'");
  ASSERT_EQ(r.code, 0) << r.output;
  const fs::path d = only_subdir(root);
  EXPECT_EQ(slurp(d / "report.csv").rfind("c,metric,value\n", 0), 0u);
  const auto report = nlohmann::json::parse(slurp(d / "report.json"));
  EXPECT_TRUE(report["complete"].get<bool>());
  EXPECT_EQ(report["c_list"].size(), 2u);
  EXPECT_TRUE(fs::exists(d / "ledger.csv"));
}

TEST_F(Cli, ChecksRunsSelectedCriterion) {
  const fs::path root = scratch() / "checks";
  const Result r = invoke("checks --criteria 8 --out '" + root.string() + "'");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("criterion 8"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("PASS"), std::string::npos);
}
