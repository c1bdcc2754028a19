#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "eds/run.hpp"

using namespace eds;
using json = nlohmann::json;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = std::string("cli_test_") + name;
  }
  ~TempFile() { std::remove(path.c_str()); }
  std::string read() const {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

std::string strip_wall_ms(std::string text) {
  auto pos = text.find("\"wall_ms\"");
  if (pos == std::string::npos) return text;
  auto end = text.find('\n', pos);
  text.erase(pos, end - pos);
  return text;
}

}  // namespace

TEST_CASE("sczech subcommand: pinned example 1/w for D=2") {
  TempFile tmp("sczech.json");
  RunConfig cfg;
  cfg.subcommand = "sczech";
  cfg.D = 2;
  cfg.args = {"1", "0+1w"};
  cfg.json_path = tmp.path;
  REQUIRE(run(cfg) == 0);
  json j = json::parse(tmp.read());
  CHECK(j["results"]["Dtilde"] == "0");
  CHECK(j["results"]["S"] == "2");
  CHECK(j["results"]["ell"] == 1);
  CHECK(j["results"]["reciprocity_defect"] == "0");
  CHECK(j["config"]["subcommand"] == "sczech");
  CHECK(j.contains("git_revision"));
}

TEST_CASE("classical subcommand: s(1,3) = 1/18") {
  TempFile tmp("classical.json");
  RunConfig cfg;
  cfg.subcommand = "classical";
  cfg.args = {"1", "3"};
  cfg.json_path = tmp.path;
  REQUIRE(run(cfg) == 0);
  json j = json::parse(tmp.read());
  CHECK(j["results"]["value"] == "1/18");
}

TEST_CASE("cf subcommand emits digits and convergents") {
  TempFile tmp("cf.json");
  RunConfig cfg;
  cfg.subcommand = "cf";
  cfg.D = 2;
  cfg.args = {"2", "5"};
  cfg.json_path = tmp.path;
  REQUIRE(run(cfg) == 0);
  json j = json::parse(tmp.read());
  CHECK(j["results"]["a0"] == "0");
  CHECK(j["results"]["digits"] == json::array({"3", "-2"}));
  CHECK(j["results"]["ell"] == 2);
}

TEST_CASE("config errors exit with code 2") {
  RunConfig cfg;
  cfg.subcommand = "sczech";
  cfg.D = 5;  // not an allowed discriminant
  cfg.args = {"1", "2"};
  cfg.json_path = "cli_test_err.json";
  CHECK(run(cfg) == 2);
  cfg = RunConfig{};
  cfg.subcommand = "nonsense";
  CHECK(run(cfg) == 2);
  std::remove("cli_test_err.json");
}

TEST_CASE("zero denominator is a config error") {
  RunConfig cfg;
  cfg.subcommand = "sczech";
  cfg.D = 2;
  cfg.args = {"1", "0"};
  cfg.json_path = "cli_test_zero.json";
  CHECK(run(cfg) == 2);
  std::remove("cli_test_zero.json");
}

TEST_CASE("enumerate writes the documented CSV schema") {
  TempFile tmp("enum.json");
  TempFile csv("enum.csv");
  RunConfig cfg;
  cfg.subcommand = "enumerate";
  cfg.D = 2;
  cfg.X = 10;
  cfg.json_path = tmp.path;
  cfg.csv_path = csv.path;
  REQUIRE(run(cfg) == 0);
  json j = json::parse(tmp.read());
  CHECK(j["results"]["count"].get<int>() > 5);
  std::string text = csv.read();
  CHECK(text.rfind("a_u,a_v,b_u,b_v,normsq_b,ell,S_num,S_den,Dt_num,Dt_den", 0) == 0);
  // one data line per point
  size_t lines = std::count(text.begin(), text.end(), '\n');
  CHECK(lines == j["results"]["count"].get<size_t>() + 1);
}

TEST_CASE("identical config and seed give identical artifacts") {
  for (int pass = 0; pass < 2; ++pass) {
    TempFile a("det.json");
    TempFile ca("det.csv");
    RunConfig cfg;
    cfg.subcommand = pass == 0 ? "distribution" : "ulam";
    cfg.D = 2;
    cfg.X = 60;
    cfg.grid = 24;
    cfg.samples = 120;
    cfg.seed = 99;
    cfg.threads = 2;
    cfg.with_ks = true;
    cfg.json_path = a.path;
    cfg.csv_path = ca.path;
    REQUIRE(run(cfg) == 0);
    std::string json1 = a.read(), csv1 = ca.read();
    REQUIRE(run(cfg) == 0);
    CHECK(strip_wall_ms(json1) == strip_wall_ms(a.read()));
    CHECK(json1 != "");
    CHECK(csv1 == ca.read());
  }
}

TEST_CASE("distribution report carries moments and KS fields") {
  TempFile tmp("dist.json");
  RunConfig cfg;
  cfg.subcommand = "distribution";
  cfg.D = 7;
  cfg.X = 80;
  cfg.with_ks = true;
  cfg.json_path = tmp.path;
  REQUIRE(run(cfg) == 0);
  json j = json::parse(tmp.read());
  CHECK(j["results"].contains("moments"));
  CHECK(j["results"].contains("ks_gaussian"));
  CHECK(j["results"]["count"].get<uint64_t>() > 100);
  CHECK(j["config"]["X"] == 80);
}

TEST_CASE("tgrid parser") {
  auto g = parse_tgrid("0.1:0.3:0.1");
  REQUIRE(g.size() == 3);
  CHECK(g[0] == doctest::Approx(0.1));
  CHECK(g[2] == doctest::Approx(0.3));
  CHECK_THROWS_AS(parse_tgrid("nonsense"), std::invalid_argument);
  CHECK_THROWS_AS(parse_tgrid("1:2:-1"), std::invalid_argument);
}
