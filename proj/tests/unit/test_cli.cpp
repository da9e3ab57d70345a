#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "selfpref/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "selfpref");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = selfpref::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("selfpref_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::size_t file_count() const { return std::distance(fs::directory_iterator(dir_), fs::directory_iterator()); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, UnknownFlagIsAConfigErrorWithoutOutputs) {
  auto r = run({"audit", "--records", "x.jsonl", "--bogus", "--out", path("report.txt")});
  EXPECT_EQ(r.code, selfpref::cli::kConfigError);
  EXPECT_EQ(file_count(), 0u);
  auto j = nlohmann::json::parse(r.err.substr(0, r.err.find('\n')));
  EXPECT_EQ(j["level"], "error");
  EXPECT_EQ(j["exit"], 2);
  EXPECT_EQ(run({}).code, selfpref::cli::kConfigError);
  EXPECT_EQ(run({"fixtures", "--alpha", "1.5"}).code, selfpref::cli::kConfigError);
}

TEST_F(CliTest, SimulateThenAuditIsDeterministic) {
  ASSERT_EQ(
      run({"simulate", "--n", "300", "--groups", "4", "--seed", "11", "--beta", "0.5", "--out", path("r.jsonl")}).code,
      0);
  ASSERT_EQ(run({"audit", "--records", path("r.jsonl"), "--format", "structured", "--out", path("a1.jsonl")}).code, 0);
  ASSERT_EQ(run({"audit", "--records", path("r.jsonl"), "--format", "structured", "--out", path("a2.jsonl")}).code, 0);
  EXPECT_EQ(slurp(path("a1.jsonl")), slurp(path("a2.jsonl")));
  const auto text = slurp(path("a1.jsonl"));
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 4 + 1 + 4);
  // No temporary files are left behind.
  EXPECT_EQ(file_count(), 3u);
}

TEST_F(CliTest, IngestionFailureLeavesNoReport) {
  {
    std::ofstream f(path("bad.jsonl"));
    f << "{not json}\n";
  }
  auto r = run({"audit", "--records", path("bad.jsonl"), "--out", path("report.txt")});
  EXPECT_EQ(r.code, selfpref::cli::kIngestionError);
  EXPECT_FALSE(fs::exists(path("report.txt")));
  EXPECT_NE(r.err.find("\"rejection\""), std::string::npos);
}

TEST_F(CliTest, DegenerateStatistics) {
  ASSERT_EQ(run({"simulate", "--n", "50", "--noise-sd", "0", "--out", path("flat.jsonl")}).code, 0);
  auto r = run({"audit", "--records", path("flat.jsonl"), "--out", path("report.txt")});
  EXPECT_EQ(r.code, selfpref::cli::kDegenerateStatistics);
  EXPECT_FALSE(fs::exists(path("report.txt")));
}

TEST_F(CliTest, CollectionFailureExitCode) {
  {
    std::ofstream f(path("pairs.jsonl"));
    f << R"({"dataset":"d","example_id":"1","judge":"j","judge_family":"fj","reference":"r","reference_family":"fr","subject":"j","subject_family":"fj","question":"q","subject_response":"a","reference_response":"b","outcome":0})"
      << "\n";
  }
  auto r = run({"collect", "--pairs", path("pairs.jsonl"), "--endpoint-url", "http://127.0.0.1:1/v1/chat/completions",
                "--template", "verifiable-math", "--max-retries", "0", "--timeout", "1", "--out", path("out.jsonl")});
  EXPECT_EQ(r.code, selfpref::cli::kCollectionError);
  EXPECT_FALSE(fs::exists(path("out.jsonl")));
}

TEST_F(CliTest, FixturesReproduceDatasetMeans) {
  auto r = run({"fixtures", "--format", "structured"});
  ASSERT_EQ(r.code, 0);
  std::map<std::string, double> means;
  std::istringstream in(r.out);
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    if (j["kind"] == "aggregate") means[j["dataset"]] = j["mean_rel_delta"].get<double>();
  }
  EXPECT_NEAR(means.at("alpaca_eval"), -79.19, 0.05);
  EXPECT_NEAR(means.at("translation"), -82.57, 0.05);
  EXPECT_NEAR(means.at("truthfulness"), -67.57, 0.05);
  EXPECT_NEAR(means.at("math500"), -98.8, 0.1);
  EXPECT_EQ(run({"fixtures", "--table", "entropy"}).code, 0);
  EXPECT_EQ(run({"fixtures", "--table", "cot", "--format", "csv"}).code, 0);
}

TEST_F(CliTest, DiagnosticCommands) {
  ASSERT_EQ(run({"simulate", "--n", "200", "--groups", "5", "--independent-proxy-outcomes", "--proxies", "4", "--out",
                 path("r.jsonl")})
                .code,
            0);
  auto v = run({"validate-proxies", "--records", path("r.jsonl")});
  ASSERT_EQ(v.code, 0) << v.err;
  EXPECT_NE(v.out.find("pearson r ="), std::string::npos);
  auto e = run({"entropy", "--records", path("r.jsonl"), "--format", "structured"});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_NE(e.out.find("entropy_summary"), std::string::npos);
  auto rec = run({"simulate", "--n", "200", "--trials", "5", "--format", "structured"});
  ASSERT_EQ(rec.code, 0);
  EXPECT_EQ(nlohmann::json::parse(rec.out)["trials"], 5);
}

TEST_F(CliTest, HelpExitsCleanly) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("audit"), std::string::npos);
}
