#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status = -1;
  std::string out;
};

Outcome run(const std::string& args) {
  const std::string cmd = std::string(DSPACE_CLI) + " " + args + " 2>&1";
  Outcome r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), p)) r.out += buf.data();
  r.status = pclose(p);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("dspace_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_points(const fs::path& p, const std::vector<Eigen::Vector3d>& pts) {
  std::ofstream out(p);
  out.precision(17);
  out << "x,y,z\n";
  for (const auto& v : pts) out << v.x() << ',' << v.y() << ',' << v.z() << '\n';
}

}  // namespace

TEST(Cli, SameSeedGivesIdenticalFiles) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const std::string common = "track --preset track --runs 2 --baseline none --seed 42 --out ";
  ASSERT_EQ(run(common + a.string()).status, 0);
  ASSERT_EQ(run(common + b.string()).status, 0);
  for (const char* f : {"truth.csv", "observations.csv", "estimates.csv", "metrics.csv"}) {
    const std::string x = slurp(a / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(b / f)) << f;
  }
}

TEST(Cli, OspaCommand) {
  const fs::path d = scratch("ospa");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<Eigen::Vector3d> x, y;
  for (int i = 0; i < 3; ++i) x.emplace_back(u(rng), u(rng), u(rng));
  for (int i = 0; i < 2; ++i) y.emplace_back(u(rng), u(rng), u(rng));
  write_points(d / "x.csv", x);
  write_points(d / "y.csv", y);
  write_points(d / "empty.csv", {});
  write_points(d / "one.csv", {Eigen::Vector3d(1, 2, 3)});

  const Outcome same = run("ospa " + (d / "x.csv").string() + " " + (d / "x.csv").string() + " -c 10 -p 1");
  ASSERT_EQ(same.status, 0) << same.out;
  EXPECT_NEAR(std::stod(same.out), 0.0, 1e-12);

  const Outcome card = run("ospa " + (d / "empty.csv").string() + " " + (d / "one.csv").string() + " -c 10 -p 1");
  ASSERT_EQ(card.status, 0) << card.out;
  EXPECT_EQ(std::stod(card.out), 10.0);

  const Outcome xy = run("ospa " + (d / "x.csv").string() + " " + (d / "y.csv").string() + " -c 4 -p 2");
  ASSERT_EQ(xy.status, 0) << xy.out;
  EXPECT_NEAR(std::stod(xy.out), oracle::ospa_brute(x, y, 4, 2), 1e-12);
}

TEST(Cli, BadInputFailsCleanly) {
  EXPECT_NE(run("localise --preset no-such-preset --out " + scratch("bad").string()).status, 0);
  EXPECT_NE(run("ospa /nonexistent/a.csv /nonexistent/b.csv").status, 0);
}
