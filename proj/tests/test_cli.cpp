#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = CMVDLM_CLI_PATH;

struct Result {
  int code = -1;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cmvdlm_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Result run(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = kCli + " " + args + " 2> " + err.string() + " > /dev/null";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

const char* kCausalIni =
    "[partition]\ncontrols = C1, C2\nexperimental = E1, E2\n"
    "[causal]\nT = 30\nnsamples = 300\n";

}  // namespace

TEST_CASE("simulate: default shape, determinism and truth file") {
  const auto dir = scratch("sim");
  REQUIRE(run("simulate --out " + (dir / "a").string() + " --seed 5", dir).code == 0);
  REQUIRE(run("simulate --out " + (dir / "b").string() + " --seed 5", dir).code == 0);
  for (const char* f : {"observed.csv", "counterfactual.csv", "truth.json"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  const auto rows = read_csv(dir / "a" / "observed.csv");
  CHECK(rows.size() == 61);
  CHECK(rows[0] == std::vector<std::string>{"time", "C1", "C2", "E1", "E2"});
  const auto truth = nlohmann::json::parse(slurp(dir / "a" / "truth.json"));
  CHECK(truth["T_intervention"] == 30);
  CHECK(truth["seed"] == 5);
  CHECK(truth["sigma"].size() == 4);
  CHECK(truth.contains("R"));
  CHECK(truth.contains("shock_draw"));
}

TEST_CASE("simulate: zero shock makes the counterfactual equal the observed") {
  const auto dir = scratch("sim0");
  write(dir / "c.ini", "[simulate]\nshock = 0, 0\n");
  REQUIRE(run("simulate --config " + (dir / "c.ini").string() + " --out " + dir.string(), dir).code == 0);
  const auto obs = read_csv(dir / "observed.csv");
  const auto cf = read_csv(dir / "counterfactual.csv");
  REQUIRE(obs.size() == cf.size());
  for (std::size_t i = 1; i < obs.size(); ++i) {
    CHECK(cf[i][1] == obs[i][3]);
    CHECK(cf[i][2] == obs[i][4]);
  }
}

TEST_CASE("causal: tables, determinism and manifest replay") {
  const auto dir = scratch("causal");
  REQUIRE(run("simulate --out " + dir.string() + " --seed 2", dir).code == 0);
  write(dir / "c.ini", kCausalIni);
  const std::string base = "causal --config " + (dir / "c.ini").string() + " --data " +
                           (dir / "observed.csv").string();
  REQUIRE(run(base + " --out " + (dir / "r1").string(), dir).code == 0);
  REQUIRE(run(base + " --out " + (dir / "r2").string(), dir).code == 0);
  REQUIRE(run("causal --config " + (dir / "r1" / "manifest.json").string() + " --data " +
                  (dir / "observed.csv").string() + " --out " + (dir / "r3").string(),
              dir).code == 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "r1" / "manifest.json"));
  CHECK(manifest["seed"] == 1);
  CHECK(manifest.contains("version"));
  for (const auto& f : manifest["outputs"]) {
    const std::string name = f.get<std::string>();
    CHECK(slurp(dir / "r1" / name) == slurp(dir / "r2" / name));
    CHECK(slurp(dir / "r1" / name) == slurp(dir / "r3" / name));
  }
  CHECK_FALSE(fs::exists(dir / "r1" / "lift.csv"));
  const auto effect = read_csv(dir / "r1" / "effect.csv");
  CHECK(effect[0] == std::vector<std::string>{"time", "series", "p05", "p25", "p50", "p75", "p95"});
  CHECK(effect.size() == 1 + 31 * 2);
  for (const char* name : {"effect.csv", "counterfactual.csv", "oam.csv", "filtered_effect.csv",
                           "lookahead_effect.csv", "lookahead_counterfactual.csv"}) {
    const auto rows = read_csv(dir / "r1" / name);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      for (std::size_t j = 3; j < rows[i].size(); ++j) {
        CHECK(std::stod(rows[i][j]) >= std::stod(rows[i][j - 1]));
      }
    }
  }
  // Seed override changes the draws.
  REQUIRE(run(base + " --seed 3 --out " + (dir / "r4").string(), dir).code == 0);
  CHECK(slurp(dir / "r1" / "effect.csv") != slurp(dir / "r4" / "effect.csv"));
}

TEST_CASE("causal: lift tables exist iff log scale") {
  const auto dir = scratch("lift");
  write(dir / "sim.ini", "[simulate]\nlevel = 200, 200, 200, 200\n");
  REQUIRE(run("simulate --config " + (dir / "sim.ini").string() + " --out " + dir.string(), dir).code == 0);
  write(dir / "c.ini", std::string(kCausalIni) + "log_scale = true\n");
  REQUIRE(run("causal --config " + (dir / "c.ini").string() + " --data " +
                  (dir / "observed.csv").string() + " --out " + (dir / "r").string(),
              dir).code == 0);
  CHECK(fs::exists(dir / "r" / "lift.csv"));
  CHECK(fs::exists(dir / "r" / "filtered_lift.csv"));
}

TEST_CASE("filter: diagnostics table") {
  const auto dir = scratch("filter");
  REQUIRE(run("simulate --out " + dir.string(), dir).code == 0);
  REQUIRE(run("filter --data " + (dir / "observed.csv").string() + " --out " + dir.string(), dir).code == 0);
  const auto rows = read_csv(dir / "filter.csv");
  CHECK(rows.size() == 1 + 55 * 4);
  CHECK(rows[1][0] == "6");
}

TEST_CASE("stratify: planted labels, determinism and the rank error") {
  const auto dir = scratch("strat");
  std::string panel = "unit,w1,w2,w3,w4,w5,w6\n";
  const int level[8] = {4, 3, 2, 1, -1, -2, -3, -4};
  const int planted[8] = {1, -1, -1, 1, 1, -1, -1, 1};
  const int pattern[6] = {3, -1, -1, -1, 0, 0};
  for (int u = 0; u < 8; ++u) {
    panel += "h" + std::to_string(u);
    for (int t = 0; t < 6; ++t) panel += "," + std::to_string(10 + level[u] + planted[u] * pattern[t]);
    panel += "\n";
  }
  write(dir / "panel.csv", panel);
  const std::string args = "stratify --data " + (dir / "panel.csv").string() + " --factor 2 --out ";
  REQUIRE(run(args + (dir / "a.csv").string() + " --means " + (dir / "m.csv").string(), dir).code == 0);
  REQUIRE(run(args + (dir / "b.csv").string(), dir).code == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  const auto labels = read_csv(dir / "a.csv");
  REQUIRE(labels.size() == 9);
  for (int u = 0; u < 8; ++u) CHECK(labels[u + 1][1] == (planted[u] > 0 ? "Hi" : "Lo"));
  CHECK(read_csv(dir / "m.csv").size() == 7);

  write(dir / "flat.csv", "unit,w1,w2,w3\na,1,2,3\nb,1,2,3\nc,1,2,3\n");
  const auto r = run("stratify --data " + (dir / "flat.csv").string() + " --factor 2 --out " +
                         (dir / "x.csv").string(),
                     dir);
  CHECK(r.code == 3);
  CHECK(r.err.find("rank") != std::string::npos);
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  REQUIRE(run("simulate --out " + dir.string(), dir).code == 0);
  const std::string data = " --data " + (dir / "observed.csv").string() + " --out " + (dir / "o").string();

  write(dir / "bad.ini", std::string(kCausalIni) + "unknown_key = 1\n");
  auto r = run("causal --config " + (dir / "bad.ini").string() + data, dir);
  CHECK(r.code == 2);
  CHECK(r.err.find("unknown_key") != std::string::npos);

  write(dir / "names.ini", "[partition]\ncontrols = C1, X9\nexperimental = E1\n[causal]\nT = 30\n");
  r = run("causal --config " + (dir / "names.ini").string() + data, dir);
  CHECK(r.code == 3);
  CHECK(r.err.find("X9") != std::string::npos);

  write(dir / "missing.csv", "time,C1,C2,E1,E2\n1,1,2,3,4\n2,1,,3,4\n");
  write(dir / "ok.ini", kCausalIni);
  r = run("causal --config " + (dir / "ok.ini").string() + " --data " + (dir / "missing.csv").string() +
              " --out " + (dir / "o").string(),
          dir);
  CHECK(r.code == 3);
  CHECK(r.err.find("missing.csv:3") != std::string::npos);

  write(dir / "dof.ini", std::string(kCausalIni) + "[model]\nbeta = 0.05\n");
  r = run("causal --config " + (dir / "dof.ini").string() + data, dir);
  CHECK(r.code == 4);

  r = run("causal --config " + (dir / "ok.ini").string() + " --data " + (dir / "nope.csv").string(), dir);
  CHECK(r.code == 5);
  CHECK(r.err.find("nope.csv") != std::string::npos);

  r = run("causal --data x.csv", dir);
  CHECK(r.code == 2);
}
