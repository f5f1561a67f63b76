#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sedrl/analysis/report.hpp"
#include "sedrl/common/csv.hpp"
#include "sedrl/common/rng.hpp"
#include "sedrl/nn/checkpoint.hpp"
#include "sedrl/pipeline/pipeline.hpp"
#include "sedrl/rl/agent.hpp"
#include "sedrl/rl/encoder.hpp"
#include "sedrl/sim/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sedrl;

namespace {

// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 1;
  int stays = 2000;
  int rollout_stays = 1000;
  sim::SimConfig cohort;
  pipeline::PreprocessConfig preprocess;
  rl::EncoderConfig encoder;
  rl::AgentConfig agent;
  rl::RewardConfig reward_a = rl::policy_a_reward();
  rl::RewardConfig reward_b = rl::policy_b_reward();
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, seed, stays, rollout_stays, cohort,
                                                preprocess, encoder, agent, reward_a, reward_b)

// Rejects keys that do not exist in the default-resolved configuration.
void validate_keys(const json& user, const json& schema, const std::string& path) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!schema.contains(key)) throw config_error("unknown config key: " + where);
    if (value.is_object()) validate_keys(value, schema.at(key), where);
  }
}

RunConfig load_run_config(const std::string& config_path, std::uint64_t seed_override,
                          bool seed_given) {
  RunConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw data_error("cannot open config file " + config_path);
    json user;
    try {
      user = json::parse(in);
    } catch (const json::exception& e) {
      throw config_error(std::string("config parse failure: ") + e.what());
    }
    validate_keys(user, json(RunConfig{}), "");
    try {
      cfg = user.get<RunConfig>();
    } catch (const json::exception& e) {
      throw config_error(std::string("config value failure: ") + e.what());
    }
  }
  if (seed_given) cfg.seed = seed_override;
  cfg.preprocess.seed = cfg.seed;
  return cfg;
}

std::string hash_hex(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, derive_seed(0, bytes));
  return buf;
}

std::string config_hash(const RunConfig& cfg) { return hash_hex(json(cfg).dump()); }

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hash_hex(ss.str());
}

void write_effective_config(const RunConfig& cfg, const fs::path& dir,
                            const std::string& stage) {
  fs::create_directories(dir);
  std::ofstream out(dir / (stage + "_config.json"));
  if (!out) throw data_error("cannot write effective config in " + dir.string());
  out << json(cfg).dump(2) << '\n';
}

sim::Cohort read_cohort_dir(const fs::path& dir) {
  const auto csv = dir / "cohort.csv";
  const auto side = dir / "cohort.json";
  if (!fs::exists(csv) || !fs::exists(side))
    throw data_error("missing cohort artifacts in " + dir.string());
  sim::Cohort cohort = sim::read_cohort_csv(csv.string(), side.string());
  const auto meds = dir / "med_records.csv";
  if (fs::exists(meds)) cohort.med_records = sim::read_med_records_csv(meds.string());
  return cohort;
}

int run_simulate(const RunConfig& cfg, const std::string& out) {
  const sim::Simulator simulator(cfg.cohort);
  const sim::Cohort complete = simulator.generate_cohort(cfg.stays, derive_seed(cfg.seed, "cohort"));
  const sim::Cohort masked = simulator.inject_missingness(
      complete, simulator.default_missing_rates(), derive_seed(cfg.seed, "missing"));

  fs::create_directories(out);
  const fs::path dir(out);
  sim::write_cohort_csv(complete, (dir / "cohort_complete.csv").string());
  sim::write_cohort_csv(masked, (dir / "cohort.csv").string());
  sim::write_cohort_sidecar(masked, (dir / "cohort.json").string());
  sim::write_med_records_csv(masked, (dir / "med_records.csv").string());
  write_effective_config(cfg, dir, "simulate");
  std::cout << "simulate: " << masked.stays.size() << " stays, "
            << masked.total_steps() << " hours -> " << out << "\n";
  return 0;
}

int run_preprocess(const RunConfig& cfg, const std::string& in, const std::string& out) {
  sim::Cohort cohort = read_cohort_dir(in);
  const sim::Cohort masked = cohort;  // pre-imputation copy for the fill report

  pipeline::PreprocessResult result;
  try {
    result = pipeline::run_preprocess(cohort, cfg.preprocess);
  } catch (const std::invalid_argument& e) {
    throw data_error(e.what());
  }

  fs::create_directories(out);
  const fs::path dir(out);
  sim::write_cohort_csv(cohort, (dir / "cohort.csv").string());
  sim::write_cohort_sidecar(cohort, (dir / "cohort.json").string());
  pipeline::save_scaler(result.scaler, (dir / "scaler.json").string());

  json report;
  report["obs_outliers_removed"] = result.clean_report.obs_removed;
  report["dose_outliers_removed"] = result.clean_report.dose_removed;
  std::map<std::string, int> split_sizes;
  for (const auto& [sid, label] : cohort.split)
    ++split_sizes[label == sim::Split::kTrain        ? "train"
                  : label == sim::Split::kValidation ? "validation"
                                                     : "test"];
  report["split_stays"] = split_sizes;

  // When the generator also shipped the complete cohort, score the fills.
  const auto truth_csv = fs::path(in) / "cohort_complete.csv";
  if (fs::exists(truth_csv)) {
    const sim::Cohort truth =
        sim::read_cohort_csv(truth_csv.string(), (fs::path(in) / "cohort.json").string());
    double se = 0.0;
    long n = 0;
    for (std::size_t i = 0; i < cohort.stays.size(); ++i)
      for (std::size_t t = 0; t < cohort.stays[i].steps.size(); ++t)
        for (int f = 0; f < sim::kNumObs; ++f) {
          if (!sim::is_missing(masked.stays[i].steps[t].obs(f))) continue;
          const double filled =
              result.scaler.inverse_obs(cohort.stays[i].steps[t].obs)(f);
          const double actual = truth.stays[i].steps[t].obs(f);
          se += (filled - actual) * (filled - actual);
          ++n;
        }
    report["imputed_cell_rmse"] = n > 0 ? std::sqrt(se / n) : 0.0;
    report["imputed_cells"] = n;
  }
  std::ofstream rep(dir / "preprocess_report.json");
  rep << report.dump(2) << '\n';
  write_effective_config(cfg, dir, "preprocess");
  std::cout << "preprocess: " << cohort.stays.size() << " stays -> " << out << "\n";
  return 0;
}

nn::ParamRefs agent_params(rl::Agent& agent) {
  nn::ParamRefs refs;
  for (auto* net : {&agent.actor, &agent.critic1, &agent.critic2})
    for (auto& p : net->params()) refs.push_back(p);
  return refs;
}

int run_train(const RunConfig& cfg, const std::string& in, const std::string& out,
              const std::string& policy) {
  sim::Cohort cohort = read_cohort_dir(in);
  if (cohort.split.empty()) throw data_error("cohort in " + in + " carries no split labels");
  const pipeline::Scaler scaler = pipeline::load_scaler((fs::path(in) / "scaler.json").string());
  const std::string hash = config_hash(cfg);

  auto enc = rl::train_encoder(cohort, cfg.encoder, derive_seed(cfg.seed, "encoder"));
  fs::create_directories(out);
  const fs::path dir(out);
  {
    json meta;
    meta["stage"] = "encoder";
    meta["config_hash"] = hash;
    meta["best_epoch"] = enc.best_epoch;
    nn::save_checkpoint((dir / "encoder.ckpt").string(), enc.encoder.gru.params(), meta);
  }

  const rl::RewardConfig reward = policy == "A" ? cfg.reward_a : cfg.reward_b;
  rl::PolicyTrainResult result;
  try {
    result = rl::train_policy(cohort, scaler, enc.encoder.gru, reward, cfg.agent,
                              derive_seed(cfg.seed, "policy-" + policy));
  } catch (const std::runtime_error& e) {
    if (std::string(e.what()).find("diverged") != std::string::npos) throw;  // numeric, code 4
    throw data_error(e.what());
  }

  json meta;
  meta["stage"] = "policy";
  meta["policy"] = policy;
  meta["config_hash"] = hash;
  meta["best_step"] = result.best_step;
  meta["best_val_loss"] = result.best_val_loss;
  nn::save_checkpoint((dir / ("policy_" + policy + ".ckpt")).string(),
                      agent_params(result.agent), meta);
  rl::write_training_log(result.log, (dir / ("training_log_" + policy + ".csv")).string());
  write_effective_config(cfg, dir, "train_" + policy);
  std::cout << "train " << policy << ": best step " << result.best_step << " -> " << out
            << "\n";
  return 0;
}

// Refuses checkpoints written under a different resolved configuration.
void check_hash(const nn::Checkpoint& ckpt, const std::string& expected, const fs::path& path) {
  const std::string found = ckpt.meta.value("config_hash", "<absent>");
  if (found != expected)
    throw config_error("config hash mismatch for " + path.string() + ": checkpoint " + found +
                       " vs current " + expected);
}

int run_evaluate(const RunConfig& cfg, const std::string& in, const std::string& ckpt_dir,
                 const std::string& out, bool rollout) {
  sim::Cohort cohort = read_cohort_dir(in);
  const pipeline::Scaler scaler = pipeline::load_scaler((fs::path(in) / "scaler.json").string());
  const std::string hash = config_hash(cfg);

  const fs::path enc_path = fs::path(ckpt_dir) / "encoder.ckpt";
  if (!fs::exists(enc_path)) throw data_error("missing checkpoint " + enc_path.string());
  const nn::Checkpoint enc_ckpt = nn::load_checkpoint(enc_path.string());
  check_hash(enc_ckpt, hash, enc_path);
  Rng scratch(1);
  nn::GruStack gru = nn::GruStack::make(sim::kNumObs + sim::kNumActions, cfg.encoder.hidden,
                                        cfg.encoder.layers, sim::kNumObs, scratch);
  nn::load_into(enc_ckpt, gru.params());

  json file_hashes;
  file_hashes["encoder.ckpt"] = file_hash(enc_path);
  file_hashes["cohort.csv"] = file_hash(fs::path(in) / "cohort.csv");
  file_hashes["scaler.json"] = file_hash(fs::path(in) / "scaler.json");

  std::vector<nn::Mlp> actors;
  std::vector<analysis::PolicyHandle> policies;
  for (const std::string name : {"A", "B"}) {
    const fs::path path = fs::path(ckpt_dir) / ("policy_" + name + ".ckpt");
    if (!fs::exists(path)) throw data_error("missing checkpoint " + path.string());
    const nn::Checkpoint ckpt = nn::load_checkpoint(path.string());
    check_hash(ckpt, hash, path);
    actors.emplace_back("actor",
                        std::vector<int>{cfg.agent.state_dim, cfg.agent.hidden, cfg.agent.hidden,
                                         cfg.agent.action_dim},
                        nn::Activation::kLeakyRelu, nn::Activation::kSigmoid, scratch);
    nn::load_into(ckpt, actors.back().params());
    file_hashes[path.filename().string()] = file_hash(path);
  }
  for (std::size_t i = 0; i < actors.size(); ++i)
    policies.push_back({i == 0 ? "A" : "B", &actors[i]});

  json extra;
  extra["config_hash"] = hash;
  extra["input_hashes"] = file_hashes;
  analysis::generate_report(cohort, scaler, gru, policies, out, derive_seed(cfg.seed, "report"),
                            extra);

  if (rollout) {
    sim::SimConfig sim_cfg = cfg.cohort;
    if (cohort.config.is_object() && !cohort.config.empty())
      sim_cfg = cohort.config.get<sim::SimConfig>();
    const sim::Simulator simulator(sim_cfg);
    const std::uint64_t roll_seed = derive_seed(cfg.seed, "rollout");

    std::vector<sim::Simulator::RolloutSummary> runs;
    for (const auto& policy : policies) {
      rl::AgentPolicy driver(gru, *policy.actor, scaler);
      runs.push_back(simulator.rollout_policy(driver, cfg.rollout_stays, roll_seed));
    }
    const auto behavior = simulator.rollout_behavior(cfg.rollout_stays, roll_seed);

    // Paired bootstrap over common-random-numbers stays for B - A mortality.
    std::vector<double> diffs;
    for (std::size_t i = 0; i < runs[0].stays.size(); ++i)
      diffs.push_back(runs[1].stays[i].mortality - runs[0].stays[i].mortality);
    Rng boot(derive_seed(cfg.seed, "rollout-boot"));
    std::vector<double> means;
    for (int rep = 0; rep < 1000; ++rep) {
      double sum = 0.0;
      for (std::size_t i = 0; i < diffs.size(); ++i)
        sum += diffs[boot.uniform_int(diffs.size())];
      means.push_back(sum / static_cast<double>(diffs.size()));
    }
    const double lo = pipeline::percentile(means, 2.5);
    const double hi = pipeline::percentile(means, 97.5);

    std::ofstream csv(fs::path(out) / "rollout.csv");
    csv << "policy,mortality_rate,mean_cumulative_pain,clamped_actions,n_stays\n";
    for (std::size_t i = 0; i < runs.size(); ++i)
      csv << policies[i].name << ',' << format_number(runs[i].mortality_rate) << ','
          << format_number(runs[i].mean_cumulative_pain) << ',' << runs[i].clamped_actions
          << ',' << runs[i].stays.size() << '\n';
    csv << "behavior," << format_number(behavior.mortality_rate) << ','
        << format_number(behavior.mean_cumulative_pain) << ',' << behavior.clamped_actions
        << ',' << behavior.stays.size() << '\n';
    std::ofstream paired(fs::path(out) / "rollout_paired.csv");
    paired << "contrast,mean_diff,ci_low,ci_high\n";
    paired << "mortality_B_minus_A,"
           << format_number(runs[1].mortality_rate - runs[0].mortality_rate) << ','
           << format_number(lo) << ',' << format_number(hi) << '\n';
  }

  write_effective_config(cfg, out, "evaluate");
  std::cout << "evaluate -> " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline dosing-policy learning toolkit"};
  app.require_subcommand(1);

  std::string config_path, in_dir, out_dir, ckpt_dir, policy = "A";
  std::uint64_t seed = 1;
  bool print_config = false, rollout = false;
  int stays = -1;

  app.add_option("--config", config_path, "JSON run configuration");
  auto* seed_opt = app.add_option("--seed", seed, "root seed (overrides config)");
  app.add_flag("--print-config", print_config, "print the resolved config and exit");

  auto* cmd_sim = app.add_subcommand("simulate", "generate a synthetic cohort");
  cmd_sim->add_option("--stays", stays, "number of stays (overrides config)");
  cmd_sim->add_option("--out", out_dir, "output directory")->required();

  auto* cmd_pre = app.add_subcommand("preprocess", "clean, impute, split, standardize");
  cmd_pre->add_option("--in", in_dir, "simulate output directory")->required();
  cmd_pre->add_option("--out", out_dir, "output directory")->required();

  auto* cmd_train = app.add_subcommand("train", "train encoder and one policy");
  cmd_train->add_option("--in", in_dir, "preprocess output directory")->required();
  cmd_train->add_option("--policy", policy, "A (pain only) or B (pain + mortality)")
      ->check(CLI::IsMember({"A", "B"}));
  cmd_train->add_option("--out", out_dir, "output directory")->required();

  auto* cmd_eval = app.add_subcommand("evaluate", "agreement report bundle");
  cmd_eval->add_option("--in", in_dir, "preprocess output directory")->required();
  cmd_eval->add_option("--ckpt", ckpt_dir, "train output directory")->required();
  cmd_eval->add_option("--out", out_dir, "output directory")->required();
  cmd_eval->add_flag("--rollout", rollout, "add counterfactual rollout summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    RunConfig cfg = load_run_config(config_path, seed, seed_opt->count() > 0);
    if (stays > 0) cfg.stays = stays;
    if (print_config) {
      std::cout << json(cfg).dump(2) << "\n";
      return 0;
    }
    if (cmd_sim->parsed()) return run_simulate(cfg, out_dir);
    if (cmd_pre->parsed()) return run_preprocess(cfg, in_dir, out_dir);
    if (cmd_train->parsed()) return run_train(cfg, in_dir, out_dir, policy);
    if (cmd_eval->parsed()) return run_evaluate(cfg, in_dir, ckpt_dir, out_dir, rollout);
    return 2;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const nn::CheckpointFormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const nn::CheckpointSchemaError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  }
}
