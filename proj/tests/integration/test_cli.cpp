#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "snlb/cli.hpp"
#include "snlb/field_io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int status;
  std::string out, err;
};

CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "snlb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = snlb::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("snlb_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
  }
  void TearDown() override { fs::remove_all(root_); }
  std::string dir(const std::string& name) const { return (root_ / name).string(); }
  fs::path root_;
};

TEST_F(Cli, HelpExitsZero) {
  const CliResult r = run({"--help"});
  EXPECT_EQ(r.status, 0);
  for (const auto& s : snlb::subcommands()) EXPECT_NE(r.out.find(s), std::string::npos) << s;
}

TEST_F(Cli, VarianceTablesAlphaRows) {
  const CliResult r = run({"--output", dir("vt"), "variance-tables", "--n-max", "1"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(root_ / "vt" / "variance.csv"), "kind,N,t,value\nalpha,0,0,1\nalpha,1,0,3\n");
}

TEST_F(Cli, EveryRunWritesConfigAndManifest) {
  ASSERT_EQ(run({"--output", dir("sn"), "sample-noise", "--M", "4", "--T", "0.05", "--snapshots"}).status, 0);
  for (const char* f : {"resolved-config.json", "manifest.json", "variance.csv", "psi_0.b4df"})
    EXPECT_TRUE(fs::exists(root_ / "sn" / f)) << f;
  const auto m = nlohmann::ordered_json::parse(slurp(root_ / "sn" / "manifest.json"));
  EXPECT_EQ(m["schema"], snlb::kManifestSchema);
  EXPECT_EQ(m["version"], snlb::kVersion);
  EXPECT_EQ(m["seed"], 1);
  EXPECT_TRUE(m["wall_time_seconds"].is_number());
  EXPECT_EQ(m["artifacts"], (std::vector<std::string>{"psi_0.b4df", "resolved-config.json", "variance.csv"}));
  const auto file = snlb::read_field_file(root_ / "sn" / "psi_0.b4df");
  EXPECT_EQ(file.frames.size(), 6u);
}

TEST_F(Cli, SimulateAtZeroTimeRecordsInitialDiagnostics) {
  const CliResult r = run({"--output", dir("sim"), "simulate-snlb", "--M", "6", "--T", "0"});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(root_ / "sim" / "trajectory.csv"), "time,h_sprime,energy\n0,0,0\n");
}

TEST_F(Cli, UnknownFlagIsValidationError) {
  const CliResult r = run({"--output", dir("x"), "simulate-snlb", "--no-such-flag"});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_NE(r.err.find("status=1 kind=validation"), std::string::npos);
}

TEST_F(Cli, MissingConfigNamesThePath) {
  const CliResult r = run({"--config", dir("absent.ini"), "simulate-snlb"});
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find(dir("absent.ini")), std::string::npos);
}

TEST_F(Cli, StrichartzAtOrBelowThreeRejected) {
  for (const char* p : {"3", "2.5"}) {
    const CliResult r = run({"--output", dir("st"), "strichartz-probe", "--p", p});
    EXPECT_EQ(r.status, 1) << p;
    EXPECT_NE(r.err.find("subcommand=strichartz-probe"), std::string::npos);
  }
}

TEST_F(Cli, BlowUpExitsTwo) {
  const CliResult r = run({"--output", dir("bu"), "simulate-snlb", "--init", "hs", "--amplitude", "100", "--sign", "-1",
                     "--threshold", "10"});
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("kind=numerical"), std::string::npos);
  EXPECT_TRUE(fs::exists(root_ / "bu" / "manifest.json"));
}

TEST_F(Cli, IniConfigAppliesAndFlagsOverride) {
  fs::create_directories(root_);
  std::ofstream(root_ / "c.ini") << "[variance-tables]\nn-max = 3\nkind = sigma\n";
  const CliResult r = run({"--config", dir("c.ini"), "--output", dir("vt"), "variance-tables", "--kind", "alpha"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto c = nlohmann::ordered_json::parse(slurp(root_ / "vt" / "resolved-config.json"));
  EXPECT_EQ(c["params"]["n_max"], 3);
  EXPECT_EQ(c["params"]["kind"], "alpha");
}

TEST_F(Cli, DeterministicRepeatIsByteIdentical) {
  const std::vector<std::string> tail{"simulate-sdnlb", "--M", "4", "--T", "0.1", "--paths", "3", "--snapshots"};
  auto a = tail, b = tail;
  a.insert(a.begin(), {"--deterministic", "--threads", "1", "--output", dir("a")});
  b.insert(b.begin(), {"--deterministic", "--threads", "3", "--output", dir("b")});
  ASSERT_EQ(run(a).status, 0);
  ASSERT_EQ(run(b).status, 0);
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(root_ / "a")) {
    const auto name = e.path().filename();
    if (name == "resolved-config.json") continue;  // differs only in output dir and thread count
    EXPECT_EQ(slurp(e.path()), slurp(root_ / "b" / name)) << name;
    ++compared;
  }
  EXPECT_EQ(compared, 7u);
}

TEST(RunConfigJson, RoundTrip) {
  snlb::RunConfig c;
  c.subcommand = "strichartz-probe";
  c.params.Ns = {4, 8};
  c.diagnostics.observables = {"energy"};
  c.stochastic.seed = 0xFFFFFFFFFFFFull;
  c.integrator.dt = 0.1;
  const nlohmann::ordered_json j = c;
  const auto back = j.get<snlb::RunConfig>();
  EXPECT_EQ(nlohmann::ordered_json(back), j);
  auto bad = j;
  bad["schema"] = "snlb.config/0";
  EXPECT_THROW(bad.get<snlb::RunConfig>(), std::invalid_argument);
}

TEST(ParallelFor, CoversEveryIndexOnceAndRethrows) {
  for (int threads : {1, 4}) {
    std::vector<int> hits(100, 0);
    snlb::parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
    EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 100);
    EXPECT_THROW(snlb::parallel_for(10, threads,
                                    [](std::size_t i) {
                                      if (i == 7) throw std::runtime_error("x");
                                    }),
                 std::runtime_error);
  }
}

}  // namespace
