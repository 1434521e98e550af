#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pagar/io.hpp"

using namespace pagar;
namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(PAGAR_SOURCE_DIR) / "data" / "example1";

fs::path workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "pagar_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// runs the tool with stdout and stderr captured into files; returns the exit code
int lab(const std::string& args, const std::string& tag = "last") {
  const fs::path out = workdir() / (tag + ".out"), err = workdir() / (tag + ".err");
  const std::string cmd = std::string("\"") + PAGAR_LAB_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

fs::path example_run() {
  static const fs::path dir = [] {
    const fs::path d = workdir() / "example1";
    REQUIRE(lab("example1 --out \"" + d.string() + "\"") == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("example1 writes its three files with metadata lines") {
  const fs::path d = example_run();
  for (const char* f : {"irl_loss_vs_omega.csv", "protagonist_vs_delta.csv"}) {
    const std::string text = slurp(d / f);
    CHECK(text.rfind("# pagar_lab ", 0) == 0);
    CHECK(text.find("seed=1") != std::string::npos);
    CHECK(text.find("config=") != std::string::npos);
  }
  const Json s = read_json_file(d / "summary.json");
  CHECK(s["omega_star"].get<double>() == 1.0);
  CHECK(s["success_upper"] == "125/188");
  CHECK(s["success_lower"] == "1/2");
  CHECK(s["reach_s6_via_a2"] == "31/125");
  const double th = s["delta_success_threshold"].get<double>();
  CHECK(th >= 0.8);
  CHECK(th <= 1.5);
}

TEST_CASE("example1 reports the best likelihood near 2.8") {
  const Json s = read_json_file(example_run() / "summary.json");
  const double ds = s["delta_star"].get<double>();
  CHECK(ds >= 2.6);
  CHECK(ds <= 3.0);
}

TEST_CASE("the protagonist column never decreases along delta") {
  const auto rows = csv_rows(example_run() / "protagonist_vs_delta.csv");
  REQUIRE(rows.size() > 2);
  CHECK(rows[0][0] == "delta");
  double prev = -1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double p = std::stod(rows[i][1]);
    CHECK(p >= prev - 1e-12);
    prev = p;
  }
  CHECK(prev == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("verification exit codes") {
  const fs::path d = workdir();
  CHECK(lab("verify-bounds --instances 0 --out \"" + (d / "v0").string() + "\"") == 0);
  CHECK(read_json_file(d / "v0" / "verify_report.json")["passed"] == true);
  CHECK(lab("verify-bounds --instances 100 --seed 7 --out \"" + (d / "v7").string() + "\"") == 0);
  CHECK(lab("verify-bounds --instances 3 --inject-corrupted-bound --out \"" + (d / "vc").string() + "\"") == 1);
  const Json bad = read_json_file(d / "vc" / "verify_report.json");
  CHECK(bad.contains("first_counterexample"));
  CHECK(bad["failed"] == 3);
}

TEST_CASE("missing inputs exit 2 naming the path") {
  const std::string missing = (kData / "no_such_mdp.json").string();
  CHECK(lab("train --mdp \"" + missing + "\" --demos \"" + (kData / "demos.json").string() + "\" --out \"" +
                (workdir() / "t_missing").string() + "\"",
            "missing") == 2);
  CHECK(slurp(workdir() / "missing.err").find("no_such_mdp.json") != std::string::npos);
  CHECK(lab("train --variant ppo") == 2);
  CHECK(lab("frobnicate") == 2);
}

TEST_CASE("malformed config exits 2") {
  const fs::path cfg = workdir() / "bad_config.json";
  std::ofstream(cfg) << R"({"iteratons": 10})";
  CHECK(lab("train --config \"" + cfg.string() + "\" --out \"" + (workdir() / "t_bad").string() + "\"") == 2);
}

TEST_CASE("numeric divergence exits 3") {
  const fs::path cfg = workdir() / "tiny_cap.json";
  std::ofstream(cfg) << R"({"iterations": 5, "ratio_cap": 1e-9})";
  CHECK(lab("train --config \"" + cfg.string() + "\" --out \"" + (workdir() / "t_div").string() + "\"") == 3);
}

TEST_CASE("training writes one row per iteration and repeats byte for byte") {
  const std::string inputs = "--mdp \"" + (kData / "mdp.json").string() + "\" --demos \"" +
                             (kData / "demos.json").string() + "\" --config \"" + (kData / "config.json").string() +
                             "\" --seed 1";
  const fs::path a = workdir() / "train_a", b = workdir() / "train_b";
  REQUIRE(lab("train " + inputs + " --out \"" + a.string() + "\"") == 0);
  REQUIRE(lab("train " + inputs + " --out \"" + b.string() + "\"") == 0);
  const auto rows = csv_rows(a / "trace.csv");
  const int n = read_json_file(kData / "config.json")["iterations"].get<int>();
  CHECK(static_cast<int>(rows.size()) == n + 1);  // plus the header
  CHECK(rows[0] == std::vector<std::string>{"iteration", "j_irl", "j_pagar", "lambda", "exact_regret",
                                            "pi_p_param_summary"});
  CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
  CHECK(slurp(a / "policy.json") == slurp(b / "policy.json"));
  CHECK(read_json_file(a / "policy.json").contains("policy"));
}

TEST_CASE("the analysis verbs write their reports") {
  const fs::path d = workdir();
  CHECK(lab("check-alignment --omega 0 --out \"" + (d / "al").string() + "\"") == 0);
  CHECK(read_json_file(d / "al" / "alignment.json")["aligned"] == true);
  CHECK(lab("check-alignment --omega 1 --out \"" + (d / "al1").string() + "\"") == 0);
  CHECK(read_json_file(d / "al1" / "alignment.json")["aligned"] == false);
  CHECK(lab("domination --p1 0 --p2 1 --out \"" + (d / "dm").string() + "\"") == 0);
  CHECK(read_json_file(d / "dm" / "domination.json")["pi2_over_pi1"] == "incomparable");
  // a single reward leaves every utility row constant, which the check refuses
  CHECK(lab("domination --p1 0 --p2 1 --feature r2 --out \"" + (d / "dm1").string() + "\"") == 2);
  // two positive multiples of the s6 reward: the a1 route wins under both
  Json m = read_json_file(kData / "mdp.json");
  Json half = m["features"][1];
  half["name"] = "r2_half";
  for (auto& row : half["values"])
    for (auto& v : row) v = v.get<double>() * 0.5;
  m["features"].push_back(half);
  write_json_file(d / "scaled.json", m);
  CHECK(lab("domination --mdp \"" + (d / "scaled.json").string() + "\" --p1 1 --p2 0 --feature r2 --feature r2_half "
            "--out \"" + (d / "dm2").string() + "\"") == 0);
  CHECK(read_json_file(d / "dm2" / "domination.json")["pi2_over_pi1"] == "totally_dominates");
  CHECK(lab("wasserstein --p 1 --out \"" + (d / "w").string() + "\"") == 0);
  CHECK(read_json_file(d / "w" / "wasserstein.json")["w1"].get<double>() >= 0.0);
  CHECK(lab("minimax --unconstrained --trace \"" + (d / "mm.csv").string() + "\" --out \"" + (d / "mm").string() +
            "\"") == 0);
  CHECK(read_json_file(d / "mm" / "minimax.json")["decision_probability"].get<double>() ==
        doctest::Approx(0.63284).epsilon(1e-4));
  CHECK(slurp(d / "mm.csv").rfind("# pagar_lab ", 0) == 0);
}
