#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

CliRun run(const std::string& args) {
  std::string cmd = std::string(GEOEQUIV_CLI) + " " + args + " 2>&1";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string params(const std::string& name) { return std::string(GEOEQUIV_PARAMS) + "/" + name; }

fs::path scratch() {
  fs::path d = fs::temp_directory_path() / ("geoequiv_cli_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Cli, GenerateThenVerifyDini) {
  fs::path m = scratch() / "dini.json";
  CliRun g = run("generate dini --params " + params("dini.json") + " --format json --out " + m.string());
  ASSERT_EQ(g.code, 0) << g.out;
  CliRun v = run("verify --model " + m.string() + " --samples 20 --seed 7 --T 0.3 --tol 1e-6");
  EXPECT_EQ(v.code, 0) << v.out;
  EXPECT_NE(v.out.find("verdict: pass"), std::string::npos);
}

TEST(Cli, MalformedManifestNamesTheField) {
  fs::path m = scratch() / "bad.json";
  write(m, R"({"coords": ["x", "y"], "rank": 2, "frame": [["1", "0"], ["0", "1"]],
               "gram1": [["1", "0"], ["0", "1 +* x"]], "gram2": [["1", "0"], ["0", "1"]],
               "domain": {"min": [-1, -1], "max": [1, 1]}})");
  CliRun r = run("verify --model " + m.string());
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.out.find("gram1[1][1]"), std::string::npos) << r.out;
}

TEST(Cli, DegenerateGramRejected) {
  fs::path m = scratch() / "degenerate.json";
  write(m, R"({"coords": ["x", "y"], "rank": 2, "frame": [["1", "0"], ["0", "1"]],
               "gram1": [["1", "0"], ["0", "x"]], "gram2": [["1", "0"], ["0", "1"]],
               "domain": {"min": [-1, -1], "max": [1, 1]}})");
  EXPECT_EQ(run("analyze --model " + m.string() + " --at 0.5 0.5").code, 4);
}

TEST(Cli, ConstructorHypothesisViolationIsModelError) {
  fs::path p = scratch() / "crossing.json";
  write(p, R"({"beta1": "2", "beta2": "1", "domain": {"min": [-1, -1], "max": [1, 1]}})");
  EXPECT_EQ(run("generate dini --params " + p.string()).code, 4);
}

TEST(Cli, HeisenbergConformalFails) {
  CliRun r = run("verify --model " + params("models/heisenberg-conformal.json") + " --samples 30 --seed 7");
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_EQ(run("check-relations --model " + params("models/heisenberg-conformal.json") + " --points 10").code, 2);
}

TEST(Cli, ScaledHeisenbergPasses) {
  EXPECT_EQ(run("verify --model " + params("models/heisenberg-scaled-2.json") + " --samples 20 --seed 7").code, 0);
  EXPECT_EQ(run("check-relations --model " + params("models/heisenberg-scaled-2.json") + " --points 10").code, 0);
}

TEST(Cli, InconclusiveWhenRunsLeaveTheDomain) {
  fs::path m = scratch() / "gd1.json";
  ASSERT_EQ(run("generate gendini1 --params " + params("gendini1.json") + " --format json --out " + m.string()).code, 0);
  EXPECT_EQ(run("verify --model " + m.string() + " --samples 10 --T 2").code, 3);
}

TEST(Cli, JsonReportIsVersionedAndReproducible) {
  fs::path d = scratch();
  std::string base = "verify --model " + params("models/plane-perturbed.json") + " --samples 10 --seed 3 --format json";
  CliRun a = run(base + " --out " + (d / "a.json").string());
  CliRun b = run(base + " --threads 1 --out " + (d / "b.json").string());
  CliRun c = run(base + " --threads 1 --out " + (d / "c.json").string());
  EXPECT_EQ(a.code, b.code);
  EXPECT_EQ(slurp(d / "b.json"), slurp(d / "c.json"));
  auto j = nlohmann::json::parse(slurp(d / "b.json"));
  EXPECT_EQ(j["schema"], "geoequiv-report/1");
  EXPECT_EQ(j["command"], "verify");
  EXPECT_EQ(j["config"]["seed"], 3);
  EXPECT_EQ(j["result"]["samples"].size(), 10u);
}

TEST(Cli, EverySubcommandEmitsSchema) {
  fs::path m = scratch() / "lc.json";
  ASSERT_EQ(run("generate levi-civita --params " + params("levi-civita.json") + " --format json --out " + m.string()).code, 0);
  for (const std::string& args :
       {"analyze --model " + m.string() + " --at 0.1 0.2", "geodesic --model " + m.string() + " --q 0 0 --p 1 0 --T 0.2",
        "check-relations --model " + m.string() + " --points 5"}) {
    CliRun r = run(args + " --format json");
    ASSERT_EQ(r.code, 0) << args << "\n" << r.out;
    EXPECT_EQ(nlohmann::json::parse(r.out)["schema"], "geoequiv-report/1") << args;
  }
}

TEST(Cli, GeodesicCsv) {
  CliRun r = run("geodesic --model " + params("models/plane-perturbed.json") + " --q 0 0 --p 1 0 --T 0.1");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.rfind("t,q_1,q_2,p_1,p_2,h\n", 0), 0u);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("verify").code, 1);
  EXPECT_EQ(run("verify --model /nonexistent/model.json").code, 1);
  EXPECT_EQ(run("generate nosuch --params x.json").code, 1);
  EXPECT_EQ(run("analyze --model " + params("models/plane-perturbed.json") + " --at 0.1").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}
