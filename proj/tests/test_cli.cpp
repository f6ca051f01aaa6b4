#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <sstream>
#include <string>

#include "json.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + QCHEAT_CLI + " " + args + " 2>/tmp/qcheat_cli_stderr";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string last_stderr() {
  FILE* f = std::fopen("/tmp/qcheat_cli_stderr", "r");
  if (!f) return {};
  std::string s;
  char buf[1024];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, f)) > 0) s.append(buf, n);
  std::fclose(f);
  return s;
}

std::string last_line(const std::string& s) {
  auto end = s.find_last_not_of('\n');
  auto start = s.rfind('\n', end);
  return s.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
}

const std::string fixtures = QCHEAT_FIXTURES;

}  // namespace

TEST(Cli, C0LevelOne) {
  Result r = run("c0 --n 1");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["c0"]["value"].get<double>(), 1.0 / 120, 1e-12);
  EXPECT_TRUE(j["cross_check"]["agrees"].get<bool>());
  EXPECT_EQ(j["config"]["n"], 1);
  EXPECT_TRUE(j.contains("version"));
  EXPECT_EQ(run("c0 --n 1").out, r.out);
}

TEST(Cli, C0UsageErrors) {
  EXPECT_EQ(run("c0 --n 0").code, 2);
  EXPECT_EQ(run("c0").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST(Cli, C0Tolerance) {
  Result r = run("c0 --n 2 --tol 1e-10 --format csv");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string hdr, cols, row;
  std::getline(in, hdr);
  std::getline(in, cols);
  std::getline(in, row);
  EXPECT_EQ(hdr.rfind("# {", 0), 0u);
  EXPECT_EQ(cols, "n,c0,error");
  const double err = std::stod(row.substr(row.rfind(',') + 1));
  EXPECT_LE(err, 1e-10);
}

TEST(Cli, CnAndReport) {
  Result r = run("cn --n 1");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(nlohmann::json::parse(r.out)["Cn"]["value"].get<double>(), 2.8536832016696687e-5, 1e-15);
  Result rep = run("report --n 1 --kappa 48");
  ASSERT_EQ(rep.code, 0);
  auto j = nlohmann::json::parse(rep.out);
  EXPECT_EQ(j["report"]["Q"], 10);
  EXPECT_GT(j["report"]["c1"]["value"].get<double>(), 0);
}

TEST(Cli, ReduceC1FinalLineHasOnlyKappa) {
  Result r = run("reduce-c1 --n 1");
  ASSERT_EQ(r.code, 0);
  const std::string line = last_line(r.out);
  EXPECT_EQ(line.rfind("c1 = (", 0), 0u) << line;
  EXPECT_NE(line.find("kappa"), std::string::npos);
  EXPECT_EQ(line.find("T^"), std::string::npos);
  EXPECT_EQ(line.find("R^"), std::string::npos);
  EXPECT_NE(r.out.find("[moment rule (4)]"), std::string::npos);
  Result t = run("reduce-c1 --n 1 --torsion-only");
  ASSERT_EQ(t.code, 0);
  EXPECT_EQ(last_line(t.out), "c1 = 0");
  Result j = run("reduce-c1 --n 1 --format json");
  ASSERT_EQ(j.code, 0);
  EXPECT_EQ(nlohmann::json::parse(j.out)["result"], line);
}

TEST(Cli, SpectrumFromSyntheticTrace) {
  Result r = run("spectrum --trace " + fixtures + "/synthetic_trace.txt --n 1");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["fit"]["Q"].get<double>() / 10, 1.0, 1e-4);
  EXPECT_NEAR(j["geometry"]["dimension"].get<double>(), 7.0, 1e-3);
  Result torus = run("spectrum " + fixtures + "/torus_spectrum.txt --t 0.001,0.002,0.004,0.008");
  ASSERT_EQ(torus.code, 0);
  EXPECT_NEAR(nlohmann::json::parse(torus.out)["fit"]["Q"].get<double>(), 2.0, 1e-5);
}

TEST(Cli, SpectrumParseErrorNamesTheLine) {
  Result r = run("spectrum " + fixtures + "/bad_spectrum.txt");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(last_stderr().find("line 4"), std::string::npos);
}

TEST(Cli, KernelBatchWithBadRow) {
  Result r = run("kernel --n 1 " + fixtures + "/kernel_batch.txt");
  EXPECT_EQ(r.code, 2);
  std::istringstream in(r.out);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "line,t,value,error,status");
  EXPECT_NE(rows[1].find(",ok"), std::string::npos);
  EXPECT_EQ(rows[3].rfind("4,-1,", 0), 0u);
  EXPECT_NE(rows[3].find("time must be positive"), std::string::npos);
  EXPECT_NE(rows[4].find(",ok"), std::string::npos);
}

TEST(Cli, Popp) {
  Result r = run("popp " + fixtures + "/heisenberg_frame.json");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["B"][0][0], "2");
  EXPECT_NEAR(j["density"].get<double>(), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(run("popp " + fixtures + "/singular_frame.json").code, 4);
  EXPECT_NE(last_stderr().find("singular"), std::string::npos);
  EXPECT_EQ(run("popp /nonexistent.json").code, 2);
}

TEST(Cli, MonteCarloIsReproducible) {
  const std::string args = "mc --n 1 --t 1 --paths 2000 --steps 50 --seed 7";
  Result a = run(args, "QCHEAT_THREADS=1");
  Result b = run(args, "QCHEAT_THREADS=2");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("quantity,estimate,stderr,n_paths,n_steps,seed"), std::string::npos);
  EXPECT_NE(a.out.find("\"seed\":7"), std::string::npos);
  EXPECT_EQ(run("mc --n 1 --paths 10").code, 2);  // seed is mandatory
  EXPECT_EQ(run("mc --n 1 --seed 1 --paths 100000 --steps 1000000").code, 2);
}

TEST(Cli, SpecRoundTrip) {
  Result r = run("spec --n 2");
  ASSERT_EQ(r.code, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["spec"]["m"], 8);
  EXPECT_EQ(j["spec"]["J"].size(), 3u);
}
