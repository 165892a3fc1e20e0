#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = QSTAB_CLI_PATH;
const std::string kData = QSTAB_TEST_DATA;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string data(const std::string& name) { return kData + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::path("cli_out") / name) {
    fs::remove_all(dir);
  }
  std::string out() const { return "--out " + dir.string() + " --quiet"; }
};

}  // namespace

TEST_CASE("analyze classifies the three qubit models") {
  Scratch s("analyze");
  CHECK(run("analyze --config " + data("sigma_minus.json") + " " + s.out()) == 0);
  CHECK(read_json(s.dir / "decay_analyze.json")["classification"] == "Stabilizable");
  CHECK(run("analyze --config " + data("sigma_z.json") + " " + s.out()) == 0);
  const json deph = read_json(s.dir / "dephasing_analyze.json");
  CHECK(deph["classification"] == "NeedsFeedback");
  CHECK(deph["design_assumptions"]["satisfied"] == true);
  CHECK(run("analyze --config " + data("sigma_plus.json") + " " + s.out()) == 0);
  const json pump = read_json(s.dir / "pump_analyze.json");
  CHECK(pump["classification"] == "TargetNotInvariantable");
  CHECK(pump["invariance_u0"]["invariant"] == false);
}

TEST_CASE("synthesize") {
  Scratch s("synthesize");
  CHECK(run("synthesize --config " + data("diag123.json") + " " + s.out()) == 0);
  const json d = read_json(s.dir / "diag123_synthesis.json");
  CHECK(d["mode"] == "feedback");
  CHECK(d["trace"]["steps"].size() == 1);
  CHECK(d["trace"]["steps"][0]["branch"] == "HamiltonianAdded");
  CHECK(d["H_c"][1][2][0].get<double>() == doctest::Approx(1.0));
  CHECK(d["H_c"][0][1][0].get<double>() == 0.0);
  CHECK(d["verification"]["verified"] == true);

  CHECK(run("synthesize --config " + data("sigma_minus.json") + " " + s.out()) == 0);
  const json z = read_json(s.dir / "decay_synthesis.json");
  CHECK(z["note"] == "already stabilizable, no correction needed");
  CHECK(z["H_c"][0][1][0].get<double>() == 0.0);

  CHECK(run("synthesize --config " + data("undriven_dephasing.json") + " " + s.out()) == 2);
  CHECK(run("synthesize --config " + data("sigma_plus.json") + " " + s.out()) == 4);
}

TEST_CASE("simulate the zero model") {
  Scratch s("zero");
  CHECK(run("simulate --config " + data("zero.json") + " --seed 5 " + s.out()) == 0);
  const auto rows = read_csv(s.dir / "zero_traj_5.csv");
  REQUIRE(rows.size() == 12);
  CHECK(rows[0][0] == "t");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    for (std::size_t c = 7; c < rows[i].size(); ++c) CHECK(rows[i][c] == rows[1][c]);
  }
  const json m = read_json(s.dir / "zero_manifest.json");
  CHECK(m["seeds"] == json::array({5}));
  CHECK(m["csv_schema"] == "qstab-trajectory-v1");
  CHECK(m["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("simulate the decay model") {
  Scratch s("decay");
  CHECK(run("simulate --config " + data("sigma_minus.json") + " --trajectories 200 " + s.out()) ==
        0);
  // Average the V1 column over the 200 files at t = 1, 2, 3.
  double sums[3] = {0, 0, 0};
  for (int seed = 1; seed <= 200; ++seed) {
    const auto rows = read_csv(s.dir / ("decay_traj_" + std::to_string(seed) + ".csv"));
    REQUIRE(rows.size() == 302);
    for (int k = 0; k < 3; ++k) sums[k] += std::stod(rows[1 + 100 * (k + 1)][3]);
  }
  for (int k = 0; k < 3; ++k) {
    const double expected = std::exp(-(k + 1.0));
    // Binomial-scale error at N = 200.
    const double se = std::sqrt(expected * (1 - expected) / 200.0);
    CHECK(std::abs(sums[k] / 200.0 - expected) <= 4.0 * se);
  }
}

TEST_CASE("switching runs log regions consistent with the hysteresis rules") {
  Scratch s("switching");
  CHECK(run("simulate --config " + data("sigma_z.json") + " --seed 3 " + s.out()) == 0);
  const auto rows = read_csv(s.dir / "dephasing_traj_3.csv");
  REQUIRE(rows.size() > 10);
  // Replay the state machine on the logged fidelity column. Rows are
  // thinned, so only check that each label is allowed for its fidelity.
  const double gamma = 0.5;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double f = std::stod(rows[i][5]);
    const std::string& region = rows[i][6];
    const double u = std::stod(rows[i][1]);
    if (f >= gamma) CHECK(region == "High");
    else if (f <= gamma / 2) CHECK(region == "Low");
    else CHECK(region.rfind("Band:", 0) == 0);
    if (region == "Low" || region == "Band:FromLow") CHECK(u == 1.0);
  }
  CHECK(rows[1][6] == "Low");
}

TEST_CASE("reruns reproduce identical files") {
  Scratch a("rerun_a");
  Scratch b("rerun_b");
  CHECK(run("simulate --config " + data("sigma_z.json") + " --seed 9 --dt 0.002 " + a.out()) == 0);
  CHECK(run("simulate --config " + data("sigma_z.json") + " --seed 9 --dt 0.002 " + b.out()) == 0);
  CHECK(slurp(a.dir / "dephasing_traj_9.csv") == slurp(b.dir / "dephasing_traj_9.csv"));
  const json ma = read_json(a.dir / "dephasing_manifest.json");
  const json mb = read_json(b.dir / "dephasing_manifest.json");
  CHECK(ma["config_hash"] == mb["config_hash"]);
  CHECK(ma["config"]["run"]["dt"] == 0.002);
}

TEST_CASE("ensemble and report") {
  Scratch s("ensemble");
  CHECK(run("ensemble --config " + data("sigma_minus.json") + " --trajectories 40 " + s.out()) == 0);
  const json e = read_json(s.dir / "decay_ensemble.json");
  CHECK(e["ensemble"]["sample_count"] == 40);
  CHECK(fs::exists(s.dir / "decay_ensemble.csv"));

  CHECK(run("report --config " + data("sigma_minus.json") + " " + s.out()) == 0);
  CHECK(read_json(s.dir / "decay_verdict.json")["pass"] == true);
  CHECK(run("report --config " + data("undriven_dephasing.json") +
            " --trajectories 20 " + s.out()) == 4);
}

TEST_CASE("errors map to exit codes") {
  CHECK(run("analyze --config " + data("broken.json")) == 2);
  CHECK(run("analyze --config " + data("missing.json")) == 2);
  CHECK(run("analyze") == 2);
  CHECK(run("frobnicate --config x") == 2);
  CHECK(run("simulate --config " + data("zero.json") + " --gamma 2 --quiet") == 2);
  CHECK(run("simulate --config " + data("zero.json") + " --dt -1 --quiet") == 2);
  CHECK(run("--help") == 0);
}
