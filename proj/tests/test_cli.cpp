#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "pens_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string at(const std::string& name) { return (workdir() / name).string(); }

int pens(const std::string& args) {
  const std::string cmd = std::string(PENS_BIN) + " " + args + " >" + at("stdout.txt") + " 2>" +
                          at("stderr.txt");
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& path) {
  const auto s = slurp(path);
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

const std::string& sea_csv() {
  static const std::string path = [] {
    const auto p = at("sea.csv");
    REQUIRE(pens("gen sea --n 2000 --seed 4 --out " + p) == 0);
    return p;
  }();
  return path;
}

}  // namespace

TEST_CASE("gen writes a header plus one row per sample") {
  CHECK(pens("gen hyperplane --n 500 --out " + at("hp.csv")) == 0);
  CHECK(count_lines(at("hp.csv")) == 501);
  CHECK(slurp(at("hp.csv")).rfind("x1,x2,x3,x4,class\n", 0) == 0);
  CHECK(count_lines(sea_csv()) == 2001);
}

TEST_CASE("run and report succeed") {
  const auto metrics = at("m.jsonl");
  CHECK(pens("run --data " + sea_csv() + " --stamps 3 --metrics " + metrics + " --quiet") == 0);
  CHECK(count_lines(metrics) == 4);
  CHECK(slurp(at("stdout.txt")).find("\"record\":\"summary\"") != std::string::npos);
  CHECK(pens("report --metrics " + metrics) == 0);
  CHECK(slurp(at("stdout.txt")).find("cr ") != std::string::npos);
  CHECK(pens("run --gen sea --n 2000 --stamps 2 --ofs-b 2 --base multivariate --quiet --snapshot " +
             at("snap.json")) == 0);
  CHECK(slurp(at("snap.json")).find("pens-snapshot/1") != std::string::npos);
  CHECK(pens("run --data " + sea_csv() + " --mode cv --folds 4 --chunk 100 --quiet") == 0);
}

TEST_CASE("metrics are byte-identical across runs with timing off") {
  const std::string args = "run --data " + sea_csv() + " --stamps 4 --no-timing --quiet --metrics ";
  REQUIRE(pens(args + at("a.jsonl")) == 0);
  REQUIRE(pens(args + at("b.jsonl")) == 0);
  CHECK(slurp(at("a.jsonl")) == slurp(at("b.jsonl")));
}

TEST_CASE("config file values apply and flags override them") {
  const auto cfg = at("run.toml");
  std::ofstream(cfg) << "[run]\nstamps = 1\ntheta = 0.8\nquiet = true\n";
  REQUIRE(pens("--config " + cfg + " run --data " + sea_csv() + " --metrics " + at("c1.jsonl")) == 0);
  CHECK(count_lines(at("c1.jsonl")) == 2);
  REQUIRE(pens("--config " + cfg + " run --data " + sea_csv() + " --stamps 2 --metrics " +
               at("c2.jsonl")) == 0);
  CHECK(count_lines(at("c2.jsonl")) == 3);
}

TEST_CASE("configuration errors exit with 2") {
  CHECK(pens("") == 2);
  CHECK(pens("run --data " + sea_csv() + " --bogus") == 2);
  CHECK(pens("run --data " + sea_csv() + " --theta 1.5") == 2);
  CHECK(pens("run --data " + sea_csv() + " --p 1") == 2);
  CHECK(pens("run --data " + sea_csv() + " --ofs-b 9") == 2);
  CHECK(pens("run --data " + sea_csv() + " --base diagonal") == 2);
  CHECK(pens("run --data " + sea_csv() + " --al-budget 0.3") == 2);
  CHECK(pens("run --data " + sea_csv() + " --al-imbalance") == 2);
  CHECK(pens("run --gen sea --data " + sea_csv()) == 2);
  CHECK(pens("run --gen circles") == 2);
  CHECK(pens("run --data " + sea_csv() + " --mode bootstrap") == 2);
  CHECK(pens("gen sea") == 2);
  std::ofstream(at("bad.toml")) << "[run]\nstamps = \"many\"\n";
  CHECK(pens("--config " + at("bad.toml") + " run --data " + sea_csv()) == 2);
  CHECK(pens("--config " + at("missing.toml") + " run --data " + sea_csv()) == 2);
  CHECK(pens("--help") == 0);
}

TEST_CASE("data errors exit with 3") {
  CHECK(pens("run --data " + at("nope.csv")) == 3);
  std::ofstream(at("broken.csv")) << "a,b,class\n1,2,1\n3,oops,2\n";
  CHECK(pens("run --data " + at("broken.csv")) == 3);
  CHECK(slurp(at("stderr.txt")).find(":3:") != std::string::npos);
  CHECK(pens("run --data " + sea_csv() + " --stamps 5") == 3);
  CHECK(slurp(at("stderr.txt")).find("stamp 5 of 5") != std::string::npos);
  std::ofstream(at("tiny.csv")) << "a,class\n1,1\n2,2\n";
  CHECK(pens("run --data " + at("tiny.csv") + " --mode cv --folds 5") == 3);
  std::ofstream(at("bad.jsonl")) << "{\"record\":\"stamp\"\n";
  CHECK(pens("report --metrics " + at("bad.jsonl")) == 3);
}
