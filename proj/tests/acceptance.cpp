// Acceptance harness: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 7 and 8 run the full learning chain on a 2,000-stay
// synthetic cohort with an explicit reduced training budget; everything else
// is oracle-backed and fast.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "sedrl/analysis/report.hpp"
#include "sedrl/common/rng.hpp"
#include "sedrl/nn/gru.hpp"
#include "sedrl/nn/mlp.hpp"
#include "sedrl/pipeline/clean.hpp"
#include "sedrl/pipeline/hold.hpp"
#include "sedrl/pipeline/mice.hpp"
#include "sedrl/pipeline/pipeline.hpp"
#include "sedrl/pipeline/split.hpp"
#include "sedrl/rl/agent.hpp"
#include "sedrl/rl/encoder.hpp"
#include "sedrl/rl/reward.hpp"
#include "sedrl/sim/simulator.hpp"

using namespace sedrl;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void verdict(int index, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s criterion %d (%s): %s\n", ok ? "PASS" : "FAIL", index, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- criterion 1

// Central finite differences in double precision against the analytic pass.
template <typename LossFn>
double max_rel_grad_error(nn::ParamRefsT<double> params,
                          const nn::GradListT<double>& analytic, const LossFn& loss) {
  const double h = 1e-5;  // near cbrt(eps): balances truncation and roundoff
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& tensor = *params[p].tensor;
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      const double g = analytic[p](i);
      if (std::abs(g) <= 1e-6) continue;
      const double saved = tensor(i);
      tensor(i) = saved + h;
      const double up = loss();
      tensor(i) = saved - h;
      const double down = loss();
      tensor(i) = saved;
      const double fd = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g) / std::max(std::abs(fd), std::abs(g)));
    }
  }
  return worst;
}

void criterion_gradients() {
  Rng rng(101);
  double worst = 0.0;

  {
    nn::MlpT<double> mlp("mlp", {7, 64, 64, 3}, nn::Activation::kLeakyRelu,
                         nn::Activation::kIdentity, rng);
    nn::MatT<double> x(5, 7), weights(5, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
    for (Eigen::Index i = 0; i < weights.size(); ++i) weights(i) = rng.normal();

    nn::MlpCacheT<double> cache;
    mlp.forward(x, &cache);
    const auto analytic = mlp.backward(cache, weights);
    const auto loss = [&] { return (mlp.forward(x).array() * weights.array()).sum(); };
    worst = std::max(worst, max_rel_grad_error(mlp.params(), analytic, loss));
  }

  {
    auto gru = nn::GruStackT<double>::make(6, 8, 2, 5, rng);
    std::vector<nn::VecT<double>> inputs(3), probes(3);
    for (auto& v : inputs) {
      v = nn::VecT<double>(6);
      for (int i = 0; i < 6; ++i) v(i) = rng.normal();
    }
    for (auto& v : probes) {
      v = nn::VecT<double>(8);
      for (int i = 0; i < 8; ++i) v(i) = rng.normal();
    }
    const auto fwd = nn::gru_forward(gru, inputs);
    const auto analytic = nn::gru_backward(gru, fwd, probes);
    const auto loss = [&] {
      const auto f = nn::gru_forward(gru, inputs);
      double total = 0.0;
      for (std::size_t t = 0; t < f.states.size(); ++t) total += probes[t].dot(f.states[t]);
      return total;
    };
    // gru_backward covers the recurrent cells; the probe loss ignores the
    // prediction heads, whose analytic and numeric gradients are both zero.
    nn::ParamRefsT<double> cell_params = gru.params();
    cell_params.resize(analytic.size());
    worst = std::max(worst, max_rel_grad_error(cell_params, analytic, loss));
  }

  char detail[96];
  std::snprintf(detail, sizeof detail, "max relative gradient error %.2e (bound 1e-4)", worst);
  verdict(1, "gradient correctness", worst < 1e-4, detail);
}

// ---------------------------------------------------------------- criterion 2

void criterion_bellman() {
  bool ok = true;
  std::string detail;

  rl::AgentConfig cfg;
  cfg.state_dim = 3;
  cfg.action_dim = 2;
  cfg.hidden = 16;
  Rng rng(202);
  auto agent = rl::Agent::make(cfg, rng);

  rl::TransitionBatch batch;
  batch.states = nn::Mat::Random(16, 3);
  batch.next_states = nn::Mat::Random(16, 3);
  batch.actions = nn::Mat::Random(16, 2).cwiseAbs();
  batch.rewards = Eigen::VectorXf::Random(16);
  batch.terminal = Eigen::VectorXf::Ones(16);
  const Eigen::VectorXf y_term = rl::bellman_targets(batch, agent);
  for (int i = 0; i < 16; ++i)
    if (y_term(i) != batch.rewards(i)) ok = false;  // exact, no bootstrap leakage
  if (!ok) detail = "terminal targets not exactly r";

  // Pessimism: the backup never exceeds either single-critic backup.
  batch.terminal.setZero();
  const nn::Mat next_actions = agent.target_actor.forward(batch.next_states);
  nn::Mat x(16, 5);
  x << batch.next_states, next_actions;
  const Eigen::VectorXf q1 = agent.target1.forward(x).col(0);
  const Eigen::VectorXf q2 = agent.target2.forward(x).col(0);
  const Eigen::VectorXf y = rl::bellman_targets(batch, agent);
  for (int i = 0; i < 16; ++i) {
    const float y1 = batch.rewards(i) + 0.99f * q1(i);
    const float y2 = batch.rewards(i) + 0.99f * q2(i);
    if (y(i) > y1 + 1e-6f || y(i) > y2 + 1e-6f || y(i) + 1e-6f < std::min(y1, y2)) ok = false;
  }
  if (!ok && detail.empty()) detail = "twin-min pessimism violated";

  // Two-state deterministic chain vs the tabular fixed point.
  rl::AgentConfig chain_cfg;
  chain_cfg.state_dim = 2;
  chain_cfg.action_dim = 1;
  chain_cfg.hidden = 16;
  chain_cfg.lr = 1e-3;
  chain_cfg.kappa = 0.01;
  chain_cfg.alpha = 0.0;
  Rng chain_rng(51);
  auto chain_agent = rl::Agent::make(chain_cfg, chain_rng);
  rl::TransitionBatch chain;
  const int B = 64;
  chain.states = nn::Mat::Zero(B, 2);
  chain.next_states = nn::Mat::Zero(B, 2);
  chain.actions = nn::Mat::Constant(B, 1, 0.5f);
  chain.rewards = Eigen::VectorXf(B);
  chain.terminal = Eigen::VectorXf(B);
  for (int i = 0; i < B; ++i) {
    if (i % 2 == 0) {
      chain.states(i, 0) = 1.0f;
      chain.next_states(i, 1) = 1.0f;
      chain.rewards(i) = 0.0f;
      chain.terminal(i) = 0.0f;
    } else {
      chain.states(i, 1) = 1.0f;
      chain.rewards(i) = 1.0f;
      chain.terminal(i) = 1.0f;
    }
  }
  for (int step = 0; step < 10000; ++step) {
    rl::critic_update(chain, chain_agent);
    rl::actor_update(chain, chain_agent);
  }
  nn::Mat probe(2, 3);
  probe << 1.0f, 0.0f, 0.5f, 0.0f, 1.0f, 0.5f;
  const Eigen::VectorXf q = chain_agent.critic1.forward(probe).col(0);
  const double err = std::max(std::abs(q(0) - 0.99), std::abs(q(1) - 1.0));
  if (err >= 0.05) {
    ok = false;
    detail = "chain fixed point missed";
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "terminal exact, twin-min holds, chain |Q - q*| = %.3f%s%s",
                err, detail.empty() ? "" : "; ", detail.c_str());
  verdict(2, "Bellman machinery", ok, buf);
}

// ---------------------------------------------------------------- criterion 3

void criterion_bc_limit() {
  rl::AgentConfig cfg;
  cfg.state_dim = 4;
  cfg.action_dim = 2;
  cfg.hidden = 32;
  cfg.alpha = 0.0;
  cfg.lr = 1e-3;
  Rng rng(303);
  auto agent = rl::Agent::make(cfg, rng);

  // Supervised baseline: identical architecture and budget, plain MSE.
  nn::Mlp supervised("actor", {4, 32, 32, 2}, nn::Activation::kLeakyRelu,
                     nn::Activation::kSigmoid, rng);
  auto opt = nn::AdamState::init_for(supervised.params(), static_cast<float>(cfg.lr));

  auto draw = [](Rng& r, int n, nn::Mat& states, nn::Mat& actions) {
    states = nn::Mat(n, 4);
    actions = nn::Mat(n, 2);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < 4; ++k) states(i, k) = static_cast<float>(r.normal());
      // Smooth state-dependent dosing with noise, inside the sigmoid box.
      actions(i, 0) = static_cast<float>(
          std::clamp(0.5 + 0.2 * std::tanh(states(i, 0)) + 0.05 * r.normal(), 0.0, 1.0));
      actions(i, 1) = static_cast<float>(
          std::clamp(0.5 - 0.2 * std::tanh(states(i, 1) + states(i, 2)) + 0.05 * r.normal(),
                     0.0, 1.0));
    }
  };

  Rng data_rng(17);
  const int steps = 3000;
  for (int step = 0; step < steps; ++step) {
    rl::TransitionBatch batch;
    draw(data_rng, 64, batch.states, batch.actions);
    batch.next_states = nn::Mat::Zero(64, 4);
    batch.rewards = Eigen::VectorXf::Zero(64);
    batch.terminal = Eigen::VectorXf::Ones(64);
    rl::actor_update(batch, agent);

    nn::MlpCache cache;
    const nn::Mat out = supervised.forward(batch.states, &cache);
    auto grads = supervised.backward(cache, (2.0f / 64) * (out - batch.actions));
    nn::clip_grad_norm(grads, cfg.clip_norm);
    nn::adam_step(supervised.params(), grads, opt);
  }

  Rng held_rng(18);
  nn::Mat hs, ha;
  draw(held_rng, 2048, hs, ha);
  const double mae_actor = (agent.actor.forward(hs) - ha).cwiseAbs().mean();
  const double mae_sup = (supervised.forward(hs) - ha).cwiseAbs().mean();
  const bool mae_ok = std::abs(mae_actor - mae_sup) <= 0.05 * mae_sup;

  // Lambda law on fixed batches against a direct computation.
  rl::AgentConfig lcfg = cfg;
  lcfg.alpha = 2.0;
  Rng lrng(304);
  auto lagent = rl::Agent::make(lcfg, lrng);
  bool lambda_ok = true;
  for (int rep = 0; rep < 5; ++rep) {
    rl::TransitionBatch batch;
    draw(data_rng, 64, batch.states, batch.actions);
    batch.next_states = nn::Mat::Zero(64, 4);
    batch.rewards = Eigen::VectorXf::Zero(64);
    batch.terminal = Eigen::VectorXf::Ones(64);
    nn::Mat sa(64, 6);
    sa << batch.states, batch.actions;
    const double mean_abs_q = lagent.critic1.forward(sa).cwiseAbs().mean();
    const double expected = lcfg.alpha / mean_abs_q;
    const auto stats = rl::actor_update(batch, lagent);
    if (std::abs(stats.lambda - expected) > 1e-6 * expected) lambda_ok = false;
  }

  char detail[128];
  std::snprintf(detail, sizeof detail,
                "held-out MAE %.4f vs supervised %.4f (within 5%%: %s); lambda law %s",
                mae_actor, mae_sup, mae_ok ? "yes" : "no", lambda_ok ? "exact" : "violated");
  verdict(3, "behavior-cloning limit", mae_ok && lambda_ok, detail);
}

// ---------------------------------------------------------------- criterion 4

void criterion_reward() {
  bool ok = true;
  Rng rng(404);
  for (int rep = 0; rep < 500 && ok; ++rep) {
    rl::RewardConfig cfg;
    cfg.w_pain = rng.uniform(0.5, 2.0);
    cfg.w_mort = rep % 2 ? 10.0 * cfg.w_pain : 0.0;
    const int T = 1 + static_cast<int>(rng.uniform_int(50));
    const int mortality = rng.uniform() < 0.5 ? 1 : 0;
    std::vector<double> pain(static_cast<std::size_t>(T));
    for (auto& p : pain) p = rng.uniform(0.0, 10.0);
    const auto r = rl::compute_rewards(pain, mortality, cfg);

    double pain_total = 0.0;
    for (int t = 0; t < T; ++t) {
      const double lower =
          -cfg.w_pain / T - (t == T - 1 ? cfg.w_mort * mortality : 0.0) - 1e-12;
      if (r[static_cast<std::size_t>(t)] > 1e-12 || r[static_cast<std::size_t>(t)] < lower)
        ok = false;
      pain_total += r[static_cast<std::size_t>(t)];
    }
    pain_total += cfg.w_mort * mortality;  // remove the terminal penalty
    if (pain_total > 1e-12 || pain_total < -cfg.w_pain - 1e-12) ok = false;
  }

  // Hand-computed values: pain {2, 4} over T = 2, pain_max 10.
  const auto ra = rl::compute_rewards({2.0, 4.0}, 1, rl::policy_a_reward());
  const auto rb = rl::compute_rewards({2.0, 4.0}, 1, rl::policy_b_reward());
  const bool hand_ok = std::abs(ra[1] - (-0.2)) < 1e-12 && std::abs(rb[1] - (-10.2)) < 1e-12;
  verdict(4, "reward law", ok && hand_ok,
          ok ? (hand_ok ? "bounds hold on 500 random stays; -0.2 and -10.2 exact"
                        : "hand cases mismatch")
             : "per-step or stay-sum bound violated");
}

// ---------------------------------------------------------------- criterion 5

void criterion_pipeline() {
  const auto t0 = std::chrono::steady_clock::now();
  const sim::Simulator simulator((sim::SimConfig()));
  const sim::Cohort truth = simulator.generate_cohort(2000, derive_seed(5001, "cohort"));
  sim::Cohort masked =
      simulator.inject_missingness(truth, simulator.default_missing_rates(), 5002);

  pipeline::split_cohort(masked, pipeline::kDefaultSplit, 5003);
  bool split_ok = true;
  std::map<std::int64_t, sim::Split> patient_split;
  std::array<int, 3> counts{};
  for (const auto& traj : masked.stays) {
    const sim::Split label = masked.split.at(traj.stay_id);
    ++counts[static_cast<std::size_t>(label)];
    const auto it = patient_split.find(traj.patient_id);
    if (it != patient_split.end() && it->second != label) split_ok = false;  // disjointness
    patient_split[traj.patient_id] = label;
  }
  const double n = static_cast<double>(masked.stays.size());
  const std::array<double, 3> want{0.64, 0.16, 0.20};
  for (int s = 0; s < 3; ++s)
    if (std::abs(counts[static_cast<std::size_t>(s)] / n - want[static_cast<std::size_t>(s)]) >
        0.02)
      split_ok = false;

  pipeline::quantile_clean(masked);
  const sim::Cohort pre_hold = masked;  // observed pattern before filling
  pipeline::sample_and_hold(masked);

  // Sample-and-hold validity: every filled cell equals the most recent
  // observation and sits within that feature's hold horizon.
  const auto rules = pipeline::default_hold_rules();
  bool hold_ok = true;
  for (std::size_t i = 0; i < masked.stays.size() && hold_ok; ++i)
    for (int f = 0; f < sim::kNumObs && hold_ok; ++f) {
      int last_seen = -1;
      for (int t = 0; t < masked.stays[i].length(); ++t) {
        const float before = pre_hold.stays[i].steps[static_cast<std::size_t>(t)].obs(f);
        const float after = masked.stays[i].steps[static_cast<std::size_t>(t)].obs(f);
        if (!sim::is_missing(before)) {
          last_seen = t;
          if (after != before) hold_ok = false;
        } else if (!sim::is_missing(after)) {
          if (last_seen < 0 || t - last_seen > rules[static_cast<std::size_t>(f)] ||
              after !=
                  pre_hold.stays[i].steps[static_cast<std::size_t>(last_seen)].obs(f))
            hold_ok = false;
        }
      }
    }

  // Masked-cell RMSE: MICE vs median fill against simulator ground truth,
  // both starting from the same pre-hold missingness pattern.
  sim::Cohort mice_cohort = pre_hold;
  sim::Cohort median_cohort = pre_hold;
  pipeline::mice_impute(mice_cohort, pipeline::MiceConfig{}, 5004);
  pipeline::median_impute(median_cohort);
  int wins = 0;
  for (int f = 0; f < sim::kNumQuant; ++f) {
    double se_mice = 0.0, se_median = 0.0;
    long cells = 0;
    for (std::size_t i = 0; i < masked.stays.size(); ++i)
      for (std::size_t t = 0; t < masked.stays[i].steps.size(); ++t) {
        if (!sim::is_missing(pre_hold.stays[i].steps[t].obs(f))) continue;
        const double actual = truth.stays[i].steps[t].obs(f);
        const double dm = mice_cohort.stays[i].steps[t].obs(f) - actual;
        const double dd = median_cohort.stays[i].steps[t].obs(f) - actual;
        se_mice += dm * dm;
        se_median += dd * dd;
        ++cells;
      }
    if (cells > 0 && se_mice < se_median) ++wins;
  }

  const double secs = elapsed_s(t0);
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "split %s, hold horizon %s, MICE beats median on %d/15 features, %.0fs "
                "(budget 300s)",
                split_ok ? "ok" : "BAD", hold_ok ? "ok" : "BAD", wins, secs);
  verdict(5, "pipeline fidelity", split_ok && hold_ok && wins >= 12 && secs < 300, detail);
}

// ---------------------------------------------------------------- criterion 6

void criterion_statistics() {
  Rng rng(606);
  bool spearman_ok = true;
  for (int rep = 0; rep < 1000 && spearman_ok; ++rep) {
    const std::size_t n = 3 + rng.uniform_int(40);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.uniform_int(8));  // heavy ties
      y[i] = static_cast<double>(rng.uniform_int(8));
    }
    // Brute-force oracle: rank = 1 + #smaller + (#equal - 1)/2, then Pearson.
    auto ranks = [](const std::vector<double>& v) {
      std::vector<double> r(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) {
        int smaller = 0, equal = 0;
        for (double u : v) {
          if (u < v[i]) ++smaller;
          if (u == v[i]) ++equal;
        }
        r[i] = 1.0 + smaller + (equal - 1) / 2.0;
      }
      return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += rx[i];
      my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxx += (rx[i] - mx) * (rx[i] - mx);
      syy += (ry[i] - my) * (ry[i] - my);
      sxy += (rx[i] - mx) * (ry[i] - my);
    }
    if (sxx <= 0 || syy <= 0) {
      try {
        analysis::spearman_rho(x, y);
        spearman_ok = false;
      } catch (const analysis::undefined_correlation&) {
      }
      continue;
    }
    if (std::abs(analysis::spearman_rho(x, y) - sxy / std::sqrt(sxx * syy)) > 1e-12)
      spearman_ok = false;
  }

  analysis::ActionMax a_max{40.0, 2.0, 8.0, 0.1};
  nn::Vec dose(4);
  dose << 12.0f, 0.8f, 1.0f, 0.02f;
  const std::vector<nn::Vec> rec(4, dose);
  const auto perfect = analysis::agreement_score(rec, rec, a_max);
  nn::Vec shifted = dose;
  for (int k = 0; k < 4; ++k) shifted(k) += static_cast<float>(a_max[static_cast<std::size_t>(k)]);
  const auto worst = analysis::agreement_score(rec, {4, shifted}, a_max);

  // Hand case: the two-action pattern {0, a_max} and {a_max/2, a_max/2}
  // duplicated across both action pairs gives C = 1 - 4/8 = 0.5 exactly.
  analysis::ActionMax hm{10.0, 4.0, 10.0, 4.0};
  nn::Vec h0(4), h1(4), p0(4), p1(4);
  h0 << 1.0f, 1.0f, 1.0f, 1.0f;
  h1 = h0;
  p0 = h0;
  p1 = h1;
  p0(1) += 2.0f;
  p0(3) += 2.0f;
  p1(0) += 10.0f;
  p1(1) += 2.0f;
  p1(2) += 10.0f;
  p1(3) += 2.0f;
  const auto half = analysis::agreement_score({h0, h1}, {p0, p1}, hm);

  const bool agreement_ok = std::abs(perfect.overall - 1.0) < 1e-12 &&
                            std::abs(worst.overall) < 1e-6 &&
                            std::abs(half.overall - 0.5) < 1e-9;
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "Spearman oracle %s on 1000 tied vectors; agreement C=1/C=0/C=0.5: %.3f/%.3f/%.3f",
                spearman_ok ? "matched" : "MISMATCH", perfect.overall, worst.overall,
                half.overall);
  verdict(6, "statistics oracle", spearman_ok && agreement_ok, detail);
}

// ----------------------------------------------------------- criteria 7 and 8

struct TrainedSeed {
  sim::Cohort cohort;  // preprocessed
  pipeline::Scaler scaler;
  nn::GruStack encoder;
  rl::PolicyTrainResult policy_a, policy_b;
};

// Reduced-budget training chain; the Table-1 defaults (30 epochs, 50k
// steps) stay in the production config, this harness trades optimality for
// the 60-minute runtime bound.
TrainedSeed train_chain(std::uint64_t seed, int stays, int epochs, int steps) {
  TrainedSeed out;
  const sim::Simulator simulator((sim::SimConfig()));
  out.cohort = simulator.generate_cohort(stays, derive_seed(seed, "cohort"));
  out.cohort = simulator.inject_missingness(out.cohort, simulator.default_missing_rates(),
                                            derive_seed(seed, "missing"));
  pipeline::PreprocessConfig pc;
  pc.seed = seed;
  out.scaler = pipeline::run_preprocess(out.cohort, pc).scaler;

  rl::EncoderConfig ec;
  ec.epochs = epochs;
  out.encoder = rl::train_encoder(out.cohort, ec, derive_seed(seed, "encoder")).encoder.gru;

  rl::AgentConfig ac;
  ac.steps = steps;
  out.policy_a = rl::train_policy(out.cohort, out.scaler, out.encoder, rl::policy_a_reward(),
                                  ac, derive_seed(seed, "policy-A"));
  out.policy_b = rl::train_policy(out.cohort, out.scaler, out.encoder, rl::policy_b_reward(),
                                  ac, derive_seed(seed, "policy-B"));
  return out;
}

void criterion_headline_and_rollout(int stays, int epochs, int steps) {
  const auto t0 = std::chrono::steady_clock::now();
  bool headline_ok = true;
  std::string lines;
  std::vector<TrainedSeed> seeds;

  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    seeds.push_back(train_chain(seed, stays, epochs, steps));
    auto& ts = seeds.back();
    const std::string dir = "acceptance_report_" + std::to_string(seed);
    const auto report = analysis::generate_report(
        ts.cohort, ts.scaler, ts.encoder,
        {{"A", &ts.policy_a.agent.actor}, {"B", &ts.policy_b.agent.actor}}, dir,
        derive_seed(seed, "report"));
    fs::remove_all(dir);

    for (const auto& row : report.correlations) {
      if (row.target != "mortality" && row.target != "cumulative_pain") continue;
      bool want;
      if (row.target == "mortality")
        want = row.defined && row.estimate.excludes_zero() &&
               (row.policy == "A" ? row.estimate.rho > 0 : row.estimate.rho < 0);
      else
        want = row.defined && row.estimate.excludes_zero() && row.estimate.rho < 0;
      if (!want) headline_ok = false;
      char buf[128];
      std::snprintf(buf, sizeof buf, " seed %llu %s vs %s: rho=%+.3f CI[%+.3f,%+.3f]%s\n",
                    static_cast<unsigned long long>(seed), row.policy.c_str(),
                    row.target.c_str(), row.defined ? row.estimate.rho : 0.0,
                    row.defined ? row.estimate.ci_low : 0.0,
                    row.defined ? row.estimate.ci_high : 0.0, want ? "" : "  <-- FAIL");
      lines += buf;
    }
  }
  char timing[96];
  std::snprintf(timing, sizeof timing, "3 seeds in %.0fs (budget 3600s)", elapsed_s(t0));
  verdict(7, "headline directional reproduction", headline_ok && elapsed_s(t0) < 3600, timing);
  std::fputs(lines.c_str(), stdout);

  // Criterion 8 reuses the first trained seed for paired rollouts.
  auto& ts = seeds.front();
  const sim::Simulator simulator((sim::SimConfig()));
  rl::AgentPolicy drv_a(ts.encoder, ts.policy_a.agent.actor, ts.scaler);
  rl::AgentPolicy drv_b(ts.encoder, ts.policy_b.agent.actor, ts.scaler);
  const std::uint64_t roll_seed = derive_seed(1, "rollout");
  const auto run_a = simulator.rollout_policy(drv_a, 1000, roll_seed);
  const auto run_b = simulator.rollout_policy(drv_b, 1000, roll_seed);
  const auto behavior = simulator.rollout_behavior(1000, roll_seed);

  std::vector<double> diffs;  // B - A mortality under common random numbers
  for (std::size_t i = 0; i < run_a.stays.size(); ++i)
    diffs.push_back(run_b.stays[i].mortality - run_a.stays[i].mortality);
  Rng boot(derive_seed(1, "paired-boot"));
  std::vector<double> means;
  for (int rep = 0; rep < 1000; ++rep) {
    double sum = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i) sum += diffs[boot.uniform_int(diffs.size())];
    means.push_back(sum / static_cast<double>(diffs.size()));
  }
  const double lo = pipeline::percentile(means, 2.5);
  const double hi = pipeline::percentile(means, 97.5);
  const bool mort_ok = run_b.mortality_rate < run_a.mortality_rate && hi < 0.0;
  const bool pain_ok = run_a.mean_cumulative_pain <= behavior.mean_cumulative_pain &&
                       run_b.mean_cumulative_pain <= behavior.mean_cumulative_pain;
  char detail[192];
  std::snprintf(detail, sizeof detail,
                "mortality A=%.3f B=%.3f (B-A CI [%.4f, %.4f]); pain A=%.1f B=%.1f "
                "behavior=%.1f",
                run_a.mortality_rate, run_b.mortality_rate, lo, hi, run_a.mean_cumulative_pain,
                run_b.mean_cumulative_pain, behavior.mean_cumulative_pain);
  verdict(8, "causal sanity via rollout", mort_ok && pain_ok, detail);
}

// ---------------------------------------------------------------- criterion 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_reproducibility() {
#ifndef SEDRL_CLI_PATH
  verdict(9, "end-to-end reproducibility", false, "CLI binary path not configured");
#else
  const fs::path ws = fs::temp_directory_path() / "sedrl_acceptance_e2e";
  fs::remove_all(ws);
  fs::create_directories(ws);
  std::ofstream(ws / "config.json") << R"({
    "seed": 5, "stays": 80, "rollout_stays": 40,
    "preprocess": {"mice": {"rounds": 1, "gbm": {"trees": 10}}},
    "encoder": {"hidden": 8, "layers": 1, "epochs": 2, "lr": 0.001},
    "agent": {"state_dim": 8, "hidden": 8, "batch_size": 32, "steps": 100,
              "eval_every": 50, "log_every": 25}
  })";

  bool ok = true;
  auto stage = [&](const std::string& args) {
    const std::string cmd = std::string(SEDRL_CLI_PATH) + " --config " +
                            (ws / "config.json").string() + " " + args + " >/dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) ok = false;
  };
  for (const char* run : {"r1", "r2"}) {
    const std::string d = (ws / run).string();
    stage("simulate --out " + d + "/sim");
    stage("preprocess --in " + d + "/sim --out " + d + "/pre");
    stage("train --in " + d + "/pre --policy A --out " + d + "/ckpt");
    stage("train --in " + d + "/pre --policy B --out " + d + "/ckpt");
    stage("evaluate --in " + d + "/pre --ckpt " + d + "/ckpt --out " + d + "/report --rollout");
  }
  int compared = 0;
  if (ok)
    for (const auto& entry : fs::directory_iterator(ws / "r1" / "report")) {
      ++compared;
      if (slurp(entry.path()) != slurp(ws / "r2" / "report" / entry.path().filename()))
        ok = false;
    }
  fs::remove_all(ws);
  char detail[96];
  std::snprintf(detail, sizeof detail, "%d report artifacts byte-identical across two runs",
                compared);
  verdict(9, "end-to-end reproducibility", ok && compared > 0, detail);
#endif
}

}  // namespace

int main(int argc, char** argv) {
  // Override the criterion-7/8 budget for quick smoke runs.
  const int stays = argc > 1 ? std::atoi(argv[1]) : 2000;
  const int epochs = argc > 2 ? std::atoi(argv[2]) : 4;
  const int steps = argc > 3 ? std::atoi(argv[3]) : 8000;

  criterion_gradients();
  criterion_bellman();
  criterion_bc_limit();
  criterion_reward();
  criterion_pipeline();
  criterion_statistics();
  criterion_headline_and_rollout(stays, epochs, steps);
  criterion_reproducibility();

  std::printf("%d of 9 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
