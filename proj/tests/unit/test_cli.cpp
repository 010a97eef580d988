#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "mfcnn/cli.hpp"
#include "mfcnn/kernel_file.hpp"

using namespace mfcnn;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> v;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) v.push_back(f);
  if (!line.empty() && line.back() == ',') v.emplace_back();
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "mfcnn_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Cli, FormatNumber) {
  EXPECT_EQ(cli::format_number(0.1), "0.1");
  EXPECT_EQ(cli::format_number(1.0), "1");
  EXPECT_EQ(cli::format_number(1.0 / 3), "0.3333333333333333");
  EXPECT_EQ(cli::format_number(INFINITY), "inf");
  EXPECT_EQ(cli::format_number(-INFINITY), "-inf");
  EXPECT_EQ(cli::format_number(NAN), "nan");
  for (double x : {1e-300, 6.02214076e23, -2.5e-7})
    EXPECT_EQ(std::stod(cli::format_number(x)), x);
}

TEST(Cli, ConfigFileAndPrecedence) {
  const auto path = scratch("run.cfg");
  std::ofstream(path) << "# comment\nsigma-w2 = 0.5\n\n--sigma-b2=0.5\nactivation=linear  # trailing\n";
  const auto cfg = cli::read_config_file(path.string());
  EXPECT_EQ(cfg.at("sigma-w2"), "0.5");
  EXPECT_EQ(cfg.at("sigma-b2"), "0.5");
  EXPECT_EQ(cfg.at("activation"), "linear");
  const auto merged = cli::merge_config({"--sigma-w2", "0.25"}, cfg);
  EXPECT_EQ(std::count(merged.begin(), merged.end(), "--sigma-w2=0.5"), 0);
  EXPECT_EQ(std::count(merged.begin(), merged.end(), "--sigma-b2=0.5"), 1);

  // flags win over the file: linear, σ_w² = 0.25, σ_b² = 0.5 → q* = 0.5/0.75
  const auto r = run({"fixed-point", "--config", path.string(), "--sigma-w2", "0.25"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["q_star"].get<double>(), 2.0 / 3, 1e-9);
  EXPECT_EQ(j["activation"], "linear");
}

TEST(Cli, UsageAndNumericExitCodes) {
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"no-such-command"}).code, cli::kUsage);
  EXPECT_EQ(run({"fixed-point"}).code, cli::kUsage);
  EXPECT_EQ(run({"fixed-point", "--sigma-w2", "-1", "--sigma-b2", "0"}).code, cli::kUsage);
  EXPECT_EQ(run({"fixed-point", "--activation", "relu6", "--sigma-w2", "1", "--sigma-b2", "0"}).code,
            cli::kUsage);
  const auto r = run({"fixed-point", "--activation", "linear", "--sigma-w2", "2", "--sigma-b2", "0.5"});
  EXPECT_EQ(r.code, cli::kNumeric);
  const auto err = nlohmann::json::parse(r.err);
  EXPECT_EQ(err["error"], "convergence");
  EXPECT_TRUE(err.contains("residual"));
  EXPECT_TRUE(err.contains("iterations"));
}

TEST(Cli, BinaryExitCodes) {
  const char* bin = std::getenv("MFCNN_BIN");
  if (!bin) GTEST_SKIP() << "MFCNN_BIN not set";
  auto status = [&](const std::string& args) {
    const int s = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(status("fixed-point --activation tanh --sigma-w2 1 --sigma-b2 0"), 0);
  EXPECT_EQ(status("fixed-point --sigma-w2"), 2);
  EXPECT_EQ(status("fixed-point --activation linear --sigma-w2 2 --sigma-b2 0.5"), 3);
}

TEST(Cli, FixedPointExamples) {
  auto r = run({"fixed-point", "--activation", "tanh", "--sigma-w2", "1", "--sigma-b2", "0"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["q_star"].get<double>(), 0.0);
  EXPECT_NEAR(j["chi_c"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(j["xi_c"], "inf");

  r = run({"fixed-point", "--activation", "linear", "--sigma-w2", "0.5", "--sigma-b2", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["q_star"].get<double>(), 1.0, 1e-9);
  EXPECT_NEAR(j["xi_c"].get<double>(), 1 / std::log(2.0), 1e-9);
}

TEST(Cli, PhaseDiagramRows) {
  const auto r = run({"phase-diagram", "--activation", "tanh", "--sigma-w2-grid", "0.5,1,4",
                      "--sigma-b2-grid", "0,0.05"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 7u);
  EXPECT_EQ(ls[0], "sigma_w2,sigma_b2,q_star,c_star,chi1,phase,error");
  // σ_b² is the outer loop
  const std::vector<std::pair<std::string, std::string>> order = {
      {"0.5", "0"}, {"1", "0"}, {"4", "0"}, {"0.5", "0.05"}, {"1", "0.05"}, {"4", "0.05"}};
  const std::vector<std::string> phase = {"ordered", "critical", "chaotic",
                                          "ordered", "ordered", "chaotic"};
  for (int i = 0; i < 6; ++i) {
    const auto f = fields(ls[i + 1]);
    ASSERT_EQ(f.size(), 7u) << ls[i + 1];
    EXPECT_EQ(f[0], order[i].first);
    EXPECT_EQ(f[1], order[i].second);
    EXPECT_EQ(f[5], phase[i]);
  }
}

TEST(Cli, DepthScales) {
  auto r = run({"depth-scales", "--activation", "tanh", "--sigma-w2", "1", "--sigma-b2", "0", "--v",
                "one-hot:1", "--n", "6"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 7u);
  for (std::size_t i = 1; i < ls.size(); ++i) EXPECT_EQ(fields(ls[i])[5], "inf");

  r = run({"depth-scales", "--activation", "tanh", "--sigma-w2", "1", "--sigma-b2", "0", "--v",
           "uniform:1", "--n", "10"});
  ASSERT_EQ(r.code, 0) << r.err;
  ls = lines(r.out);
  int infinite = 0;
  for (std::size_t i = 1; i < ls.size(); ++i) infinite += fields(ls[i])[5] == "inf";
  EXPECT_EQ(infinite, 1);
  EXPECT_EQ(fields(ls[1])[5], "inf");
}

TEST(Cli, GenKernelIsDeterministic) {
  const auto a = scratch("delta_a.mfck"), b = scratch("delta_b.mfck");
  for (const auto& p : {a, b}) {
    const auto r = run({"gen-kernel", "--kind", "delta", "--ksize", "3", "--cin", "4", "--cout", "4",
                        "--seed", "7", "--out", p.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());

  const auto r = run({"verify-kernel", "--in", a.string(), "--trials", "20"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["norm_preserving"].get<bool>());
  EXPECT_LT(j["max_norm_ratio_error"].get<double>(), 1e-10);
}

TEST(Cli, GaussianOneHotPayloadIsCentreOnly) {
  const auto p = scratch("gauss.mfck");
  const auto r = run({"gen-kernel", "--kind", "gaussian", "--ksize", "3", "--cin", "2", "--cout", "3",
                      "--rank", "2", "--v", "one-hot:1", "--seed", "1", "--out", p.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto f = read_kernel_file(p.string());
  EXPECT_EQ(f.header.kind, KernelKind::gaussian);
  for (int t = 0; t < f.kernel.tap_count(); ++t) {
    if (t == 4)
      EXPECT_GT(f.kernel.tap(t).cwiseAbs().maxCoeff(), 0.0);
    else
      EXPECT_EQ(f.kernel.tap(t).cwiseAbs().maxCoeff(), 0.0) << "tap " << t;
  }
}

TEST(Cli, SimulateDepthZeroEchoesInput) {
  const auto r = run({"simulate", "--depth", "0", "--n", "3", "--channels", "4", "--members", "2",
                      "--input", "identity"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 10u);
  EXPECT_EQ(ls[0], "layer,row,col,empirical,std_error,theory");
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto f = fields(ls[i]);
    EXPECT_EQ(f[3], f[5]);
    EXPECT_EQ(f[3], f[1] == f[2] ? "1" : "0");
  }
}

TEST(Cli, OutputFileMetaSidecarAndDeterminism) {
  const auto p1 = scratch("sim1.csv"), p2 = scratch("sim2.csv");
  for (const auto& p : {p1, p2}) {
    const auto r = run({"simulate", "--mode", "covariance", "--activation", "tanh", "--sigma-w2", "1.5",
                        "--depth", "3", "--channels", "16", "--n", "5", "--members", "3", "--seed", "9",
                        "--out", p.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(slurp(p1), slurp(p2));
  const auto meta = nlohmann::json::parse(slurp(p1.string() + ".meta.json"));
  EXPECT_EQ(meta["command"], "simulate");
  EXPECT_TRUE(meta.contains("rng"));
  EXPECT_TRUE(meta.contains("parameters"));
  EXPECT_TRUE(meta.contains("created"));
}
