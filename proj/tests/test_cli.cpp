#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

#ifndef SEDRL_CLI_PATH
#error "SEDRL_CLI_PATH must point at the command-line binary"
#endif

int run(const std::string& args) {
  const std::string cmd = std::string(SEDRL_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small-budget configuration so the full chain runs in seconds.
fs::path write_config(const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path path = dir / "config.json";
  std::ofstream out(path);
  out << R"({
    "seed": 11,
    "stays": 60,
    "rollout_stays": 30,
    "preprocess": {"mice": {"rounds": 1, "gbm": {"trees": 10}}},
    "encoder": {"hidden": 8, "layers": 1, "epochs": 2, "lr": 0.001},
    "agent": {"state_dim": 8, "hidden": 8, "batch_size": 32, "steps": 80,
              "eval_every": 40, "log_every": 20}
  })";
  return path;
}

struct Workspace {
  fs::path root;
  explicit Workspace(const std::string& name) : root(fs::temp_directory_path() / name) {
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workspace() { fs::remove_all(root); }
  std::string operator/(const std::string& leaf) const { return (root / leaf).string(); }
};

}  // namespace

TEST_CASE("cli: config validation and exit codes") {
  Workspace ws("sedrl_cli_cfg");
  CHECK(run("--print-config simulate --out " + ws / "x") == 0);

  std::ofstream(ws / "bad.json") << R"({"seeed": 3})";
  CHECK(run("--config " + ws / "bad.json" + " simulate --out " + ws / "x") == 2);

  std::ofstream(ws / "nested.json") << R"({"agent": {"batch_sizes": 8}})";
  CHECK(run("--config " + ws / "nested.json" + " simulate --out " + ws / "x") == 2);

  std::ofstream(ws / "mangled.json") << "{not json";
  CHECK(run("--config " + ws / "mangled.json" + " simulate --out " + ws / "x") == 2);

  // Missing input artifacts are data errors.
  CHECK(run("preprocess --in " + ws / "nowhere" + " --out " + ws / "x") == 3);
  CHECK(run("evaluate --in " + ws / "nowhere" + " --ckpt " + ws / "nowhere" + " --out " +
            ws / "x") == 3);
}

TEST_CASE("cli: print-config round trips through the strict parser") {
  Workspace ws("sedrl_cli_print");
  const std::string cmd = std::string(SEDRL_CLI_PATH) + " --print-config simulate --out " +
                          ws / "x" + " > " + ws / "resolved.json";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  const auto resolved = nlohmann::json::parse(slurp(ws.root / "resolved.json"));
  CHECK(resolved.contains("seed"));
  CHECK(resolved["agent"]["steps"] == 50000);
  CHECK(resolved["reward_b"]["w_mort"] == 10.0);
  CHECK(resolved["reward_a"]["w_mort"] == 0.0);

  // Feeding the dump back in is a no-op.
  CHECK(run("--config " + ws / "resolved.json" + " --print-config simulate --out " + ws / "x") ==
        0);
}

TEST_CASE("cli: four-stage chain is reproducible and hash-guarded") {
  Workspace ws("sedrl_cli_chain");
  const std::string cfg = " --config " + write_config(ws.root).string();

  REQUIRE(run(cfg + " simulate --out " + ws / "sim") == 0);
  REQUIRE(run(cfg + " simulate --out " + ws / "sim2") == 0);
  CHECK(slurp(ws.root / "sim/cohort.csv") == slurp(ws.root / "sim2/cohort.csv"));

  REQUIRE(run(cfg + " preprocess --in " + ws / "sim" + " --out " + ws / "pre") == 0);
  const auto report = nlohmann::json::parse(slurp(ws.root / "pre/preprocess_report.json"));
  CHECK(report["imputed_cells"].get<long>() > 0);
  CHECK(report["imputed_cell_rmse"].get<double>() > 0.0);
  // No missing cells may survive preprocessing.
  const std::string pre_csv = slurp(ws.root / "pre/cohort.csv");
  CHECK(pre_csv.find(",,") == std::string::npos);

  REQUIRE(run(cfg + " train --in " + ws / "pre" + " --policy A --out " + ws / "ckpt") == 0);
  REQUIRE(run(cfg + " train --in " + ws / "pre" + " --policy B --out " + ws / "ckpt") == 0);
  CHECK(fs::exists(ws.root / "ckpt/encoder.ckpt"));
  CHECK(fs::exists(ws.root / "ckpt/policy_A.ckpt"));
  CHECK(fs::exists(ws.root / "ckpt/policy_B.ckpt"));
  const std::string log = slurp(ws.root / "ckpt/training_log_A.csv");
  CHECK(log.rfind("step,critic1_loss,critic2_loss,actor_loss,lambda,mean_abs_q,val_loss", 0) ==
        0);

  REQUIRE(run(cfg + " evaluate --in " + ws / "pre" + " --ckpt " + ws / "ckpt" + " --out " +
              ws / "rep1" + " --rollout") == 0);
  REQUIRE(run(cfg + " evaluate --in " + ws / "pre" + " --ckpt " + ws / "ckpt" + " --out " +
              ws / "rep2" + " --rollout") == 0);
  for (const char* f : {"agreement.csv", "correlations.csv", "bins_policyB.csv",
                        "comorbidity.csv", "propofol_strata.csv", "stay_trace.csv",
                        "rollout.csv", "rollout_paired.csv", "manifest.json"}) {
    CAPTURE(f);
    CHECK(slurp(ws.root / "rep1" / f) == slurp(ws.root / "rep2" / f));
  }

  const auto manifest = nlohmann::json::parse(slurp(ws.root / "rep1/manifest.json"));
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest["input_hashes"].contains("encoder.ckpt"));
  CHECK(manifest["input_hashes"].contains("policy_A.ckpt"));

  // Every stage leaves its effective config next to its outputs.
  CHECK(fs::exists(ws.root / "sim/simulate_config.json"));
  CHECK(fs::exists(ws.root / "pre/preprocess_config.json"));
  CHECK(fs::exists(ws.root / "ckpt/train_A_config.json"));
  CHECK(fs::exists(ws.root / "rep1/evaluate_config.json"));

  // Evaluating under a different resolved config must refuse the checkpoints.
  CHECK(run(cfg + " --seed 99 evaluate --in " + ws / "pre" + " --ckpt " + ws / "ckpt" +
            " --out " + ws / "rep3") == 2);
}
