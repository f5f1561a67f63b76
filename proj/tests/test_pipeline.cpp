#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "sedrl/common/rng.hpp"
#include "sedrl/pipeline/pipeline.hpp"
#include "sedrl/sim/simulator.hpp"

using namespace sedrl;
using namespace sedrl::pipeline;
using sim::Cohort;
using sim::kNumActions;
using sim::kNumObs;
using sim::kNumQuant;
using sim::MedRecord;
using sim::Split;

TEST_CASE("opioid conversion") {
  SUBCASE("identity, zero and the default table") {
    CHECK(convert_opioids({{0, 0, "oral_morphine", 10.0}})[{0, 0}] == doctest::Approx(10.0));
    CHECK(convert_opioids({{0, 0, "fentanyl", 0.0}})[{0, 0}] == doctest::Approx(0.0));
    const auto combined =
        convert_opioids({{0, 3, "fentanyl", 0.1}, {0, 3, "morphine", 2.0}});
    CHECK(combined.at({0, 3}) == doctest::Approx(0.1 * 300 + 2 * 3));
  }
  SUBCASE("unknown drug names the record") {
    CHECK_THROWS_WITH_AS(convert_opioids({{0, 0, "morphine", 1.0}, {0, 1, "ketamine", 5.0}}),
                         "unknown drug: ketamine (record 1)", std::invalid_argument);
  }
  SUBCASE("conversion is linear in dose") {
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
      const double d = rng.uniform(0, 5), alpha = rng.uniform(0, 3);
      const double one = convert_opioids({{0, 0, "hydromorphone", d}})[{0, 0}];
      const double scaled = convert_opioids({{0, 0, "hydromorphone", alpha * d}})[{0, 0}];
      CHECK(scaled == doctest::Approx(alpha * one).epsilon(1e-12));
    }
  }
}

TEST_CASE("benzodiazepine conversion") {
  CHECK(convert_benzos({{0, 0, "midazolam", 2.0}})[{0, 0}] == doctest::Approx(2.0));
  CHECK(convert_benzos({{0, 0, "diazepam", 10.0}})[{0, 0}] == doctest::Approx(4.0));
  // Two-hop chain equals the composed single factor.
  const double hop1 = 10.0 * 0.2;  // diazepam -> lorazepam-eq
  const double hop2 = hop1 * 2.0;  // lorazepam-eq -> midazolam-eq
  CHECK(convert_benzos({{0, 0, "diazepam", 10.0}})[{0, 0}] == doctest::Approx(hop2));
}

TEST_CASE("weight normalization") {
  CHECK(normalize_weight_based(70.0, 70.0) == doctest::Approx(1.0));
  CHECK(normalize_weight_based(0.0, 55.0) == doctest::Approx(0.0));
  CHECK(normalize_weight_based(120.0, 80.0) == doctest::Approx(1.5));
  CHECK_THROWS_AS(normalize_weight_based(5.0, 0.0), std::domain_error);
}

TEST_CASE("med record round trip reproduces combined action columns") {
  sim::Simulator simulator{sim::SimConfig{}};
  const Cohort truth = simulator.generate_cohort(30, 8);
  Cohort rebuilt = truth;
  for (auto& traj : rebuilt.stays)
    for (auto& step : traj.steps) {
      step.action(sim::kOpioid) = -1.0f;
      step.action(sim::kBenzo) = -1.0f;
    }
  apply_med_conversions(rebuilt);
  for (std::size_t i = 0; i < truth.stays.size(); ++i)
    for (int t = 0; t < truth.stays[i].length(); ++t) {
      CHECK(rebuilt.stays[i].steps[t].action(sim::kOpioid) ==
            doctest::Approx(truth.stays[i].steps[t].action(sim::kOpioid)).epsilon(1e-4));
      CHECK(rebuilt.stays[i].steps[t].action(sim::kBenzo) ==
            doctest::Approx(truth.stays[i].steps[t].action(sim::kBenzo)).epsilon(1e-4));
    }
}

namespace {

// Brute-force oracle: percentile by scanning every candidate rank.
double percentile_oracle(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] * (1.0 - (pos - static_cast<double>(lo))) +
         v[lo + 1] * (pos - static_cast<double>(lo));
}

Cohort labeled_cohort(int stays, std::uint64_t seed) {
  sim::Simulator simulator{sim::SimConfig{}};
  Cohort c = simulator.generate_cohort(stays, seed);
  split_cohort(c, kDefaultSplit, seed);
  return c;
}

}  // namespace

TEST_CASE("percentile matches a brute-force oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + static_cast<int>(rng.uniform_int(400)));
    for (auto& x : v) x = std::round(rng.normal(0, 10));  // ties likely
    const double p = rng.uniform(0, 100);
    CHECK(percentile(v, p) == doctest::Approx(percentile_oracle(v, p)).epsilon(1e-12));
  }
}

TEST_CASE("quantile_clean") {
  SUBCASE("identical values survive") {
    Cohort c = labeled_cohort(20, 3);
    for (auto& traj : c.stays)
      for (auto& step : traj.steps) step.obs(0) = 80.0f;
    const CleanReport report = quantile_clean(c);
    CHECK(report.obs_removed[0] == 0);
  }
  SUBCASE("tail mass is bounded when bounds come from the same data") {
    sim::Simulator simulator{sim::SimConfig{}};
    Cohort c = simulator.generate_cohort(100, 5);
    split_cohort(c, {1.0, 0.0, 0.0}, 5);  // everything in the training split
    const long cells = static_cast<long>(c.total_steps());
    const CleanReport report = quantile_clean(c);
    for (int f = 0; f < kNumQuant; ++f) {
      const double mass = f >= 8 ? 0.002 : 0.001;  // labs get a wider cut
      CHECK(report.obs_removed[f] <= static_cast<long>(mass * cells) + 2);
    }
    for (int k = 0; k < kNumActions; ++k)
      CHECK(report.dose_removed[k] <= static_cast<long>(0.01 * cells) + 2);
  }
  SUBCASE("a single extreme dose is zeroed") {
    Cohort c = labeled_cohort(40, 7);
    auto& victim = c.stays[0].steps[0].action;
    victim(sim::kOpioid) = 1e6f;
    quantile_clean(c);
    CHECK(victim(sim::kOpioid) == 0.0f);
  }
  SUBCASE("never removes observed in-range values") {
    Cohort c = labeled_cohort(40, 9);
    std::vector<double> vals;
    for (const auto& traj : c.stays)
      if (c.split.at(traj.stay_id) == Split::kTrain)
        for (const auto& step : traj.steps)
          if (!sim::is_missing(step.obs(2))) vals.push_back(step.obs(2));
    const double lo = percentile_oracle(vals, 0.05), hi = percentile_oracle(vals, 99.95);
    Cohort cleaned = c;
    quantile_clean(cleaned);
    for (std::size_t i = 0; i < c.stays.size(); ++i)
      for (int t = 0; t < c.stays[i].length(); ++t) {
        const float before = c.stays[i].steps[t].obs(2);
        if (!sim::is_missing(before) && before >= lo && before <= hi)
          CHECK(cleaned.stays[i].steps[t].obs(2) == before);
      }
  }
}

TEST_CASE("sample_and_hold") {
  sim::Trajectory traj;
  traj.steps.resize(31);
  for (auto& s : traj.steps) {
    s.obs = sim::Vec::Constant(kNumObs, std::nanf(""));
    s.action = sim::Vec::Zero(kNumActions);
  }
  const int lab = 8;  // 24 h horizon

  SUBCASE("fills up to the horizon and not beyond") {
    traj.steps[0].obs(lab) = 7.0f;
    sample_and_hold(traj, default_hold_rules());
    for (int t = 1; t <= 24; ++t) CHECK(traj.steps[t].obs(lab) == 7.0f);
    for (int t = 25; t <= 30; ++t) CHECK(sim::is_missing(traj.steps[t].obs(lab)));
  }
  SUBCASE("observed cells are never overwritten") {
    traj.steps[0].obs(lab) = 7.0f;
    traj.steps[3].obs(lab) = 9.0f;
    sample_and_hold(traj, default_hold_rules());
    CHECK(traj.steps[3].obs(lab) == 9.0f);
    CHECK(traj.steps[4].obs(lab) == 9.0f);
  }
  SUBCASE("leading missing values stay missing") {
    traj.steps[5].obs(lab) = 7.0f;
    sample_and_hold(traj, default_hold_rules());
    for (int t = 0; t < 5; ++t) CHECK(sim::is_missing(traj.steps[t].obs(lab)));
  }
  SUBCASE("fully observed trajectory is unchanged") {
    for (int t = 0; t <= 30; ++t) traj.steps[t].obs.setConstant(1.0f);
    sim::Trajectory copy = traj;
    sample_and_hold(traj, default_hold_rules());
    for (int t = 0; t <= 30; ++t) CHECK(traj.steps[t].obs == copy.steps[t].obs);
  }
}

TEST_CASE("gbm") {
  SUBCASE("constant target gives a constant model") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(50, 3);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(50, 4.2);
    const GbmModel m = gbm_fit(x, y, {100, 3, 0.1, 1});
    CHECK(m.trees.empty());
    CHECK(gbm_predict(m, x).isApproxToConstant(4.2, 1e-12));
  }
  SUBCASE("perfect binary separation on a toy set") {
    Eigen::MatrixXd x(4, 1);
    x << 0, 0, 1, 1;
    Eigen::VectorXd y(4);
    y << -1, -1, 3, 3;
    const GbmModel m = gbm_fit(x, y, {10, 1, 1.0, 1});
    CHECK((gbm_predict(m, x) - y).squaredNorm() / 4.0 < 1e-6);
  }
  SUBCASE("training MSE is non-increasing in tree count") {
    Rng rng(13);
    Eigen::MatrixXd x(300, 4);
    Eigen::VectorXd y(300);
    for (int i = 0; i < 300; ++i) {
      for (int f = 0; f < 4; ++f) x(i, f) = rng.normal();
      y(i) = std::sin(x(i, 0)) + 0.5 * x(i, 1) * x(i, 2) + 0.1 * rng.normal();
    }
    double prev = 1e300;
    for (int trees : {1, 5, 20, 60}) {
      const GbmModel m = gbm_fit(x, y, {trees, 3, 0.1, 20});
      const double mse = (gbm_predict(m, x) - y).squaredNorm() / 300.0;
      CHECK(mse <= prev + 1e-12);
      prev = mse;
    }
  }
  SUBCASE("prediction is deterministic and row-independent") {
    Rng rng(14);
    Eigen::MatrixXd x(120, 3);
    Eigen::VectorXd y(120);
    for (int i = 0; i < 120; ++i) {
      for (int f = 0; f < 3; ++f) x(i, f) = rng.normal();
      y(i) = x(i, 0) - 2.0 * x(i, 2);
    }
    const GbmModel m = gbm_fit(x, y, {30, 3, 0.1, 5});
    const Eigen::VectorXd p = gbm_predict(m, x);
    CHECK(gbm_predict(m, x) == p);
    Eigen::MatrixXd rev = x.colwise().reverse();
    const Eigen::VectorXd pr = gbm_predict(m, rev);
    CHECK(pr == p.reverse().eval());
  }
  SUBCASE("schema mismatch rejected") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(40, 3);
    const GbmModel m = gbm_fit(x, x.col(0), {5, 2, 0.5, 2});
    CHECK_THROWS_AS(gbm_predict(m, Eigen::MatrixXd::Random(4, 2)), std::invalid_argument);
  }
}

TEST_CASE("mice_impute") {
  SUBCASE("no missing cells leaves the cohort unchanged") {
    Cohort c = labeled_cohort(15, 2);
    Cohort copy = c;
    MiceConfig cfg;
    cfg.gbm.trees = 10;
    mice_impute(c, cfg, 1);
    for (std::size_t i = 0; i < c.stays.size(); ++i)
      for (int t = 0; t < c.stays[i].length(); ++t)
        CHECK(c.stays[i].steps[t].obs == copy.stays[i].steps[t].obs);
  }
  SUBCASE("recovers an exact linear dependence") {
    // Feature 8 := linear function of feature 0; mask 30% of it.
    Cohort c = labeled_cohort(60, 6);
    Rng rng(42);
    std::vector<float> truth;
    std::vector<std::pair<std::size_t, int>> masked;
    for (std::size_t i = 0; i < c.stays.size(); ++i)
      for (int t = 0; t < c.stays[i].length(); ++t) {
        auto& obs = c.stays[i].steps[t].obs;
        for (int f = 0; f < kNumObs; ++f)
          if (sim::is_missing(obs(f))) obs(f) = 0.0f;  // fully observe first
        obs(8) = 2.0f * obs(0) + 5.0f;
        if (rng.uniform() < 0.3) {
          truth.push_back(obs(8));
          masked.emplace_back(i, t);
          obs(8) = std::nanf("");
        }
      }
    double mean = 0, var = 0;
    for (float v : truth) mean += v;
    mean /= static_cast<double>(truth.size());
    for (float v : truth) var += (v - mean) * (v - mean);
    const double stdev = std::sqrt(var / static_cast<double>(truth.size()));

    MiceConfig cfg;
    cfg.gbm.trees = 60;
    cfg.gbm.min_leaf = 5;
    mice_impute(c, cfg, 3);
    double sse = 0;
    for (std::size_t j = 0; j < masked.size(); ++j) {
      const float filled = c.stays[masked[j].first].steps[masked[j].second].obs(8);
      sse += (filled - truth[j]) * (filled - truth[j]);
    }
    const double rmse = std::sqrt(sse / static_cast<double>(masked.size()));
    CHECK(rmse < 0.1 * stdev);
  }
  SUBCASE("beats median fill on simulator ground truth") {
    sim::Simulator simulator{sim::SimConfig{}};
    const Cohort truth = simulator.generate_cohort(120, 10);
    Cohort masked = simulator.inject_missingness(truth, simulator.default_missing_rates(), 4);
    split_cohort(masked, kDefaultSplit, 4);
    Cohort median_filled = masked;
    median_impute(median_filled);
    Cohort mice_filled = masked;
    MiceConfig cfg;
    cfg.gbm.trees = 40;
    mice_impute(mice_filled, cfg, 5);

    int mice_wins = 0, features_scored = 0;
    for (int f = 0; f < kNumQuant; ++f) {
      double sse_mice = 0, sse_median = 0;
      long cells = 0;
      for (std::size_t i = 0; i < truth.stays.size(); ++i)
        for (int t = 0; t < truth.stays[i].length(); ++t) {
          if (!sim::is_missing(masked.stays[i].steps[t].obs(f))) continue;
          const double tv = truth.stays[i].steps[t].obs(f);
          sse_mice += std::pow(mice_filled.stays[i].steps[t].obs(f) - tv, 2);
          sse_median += std::pow(median_filled.stays[i].steps[t].obs(f) - tv, 2);
          ++cells;
        }
      if (cells < 50) continue;
      ++features_scored;
      if (sse_mice < sse_median) ++mice_wins;
    }
    REQUIRE(features_scored == kNumQuant);
    // The chained imputation should dominate a constant fill on most channels.
    CHECK(mice_wins >= 12);
  }
  SUBCASE("observed cells are untouched and ordinals stay integral") {
    sim::Simulator simulator{sim::SimConfig{}};
    Cohort c = simulator.inject_missingness(simulator.generate_cohort(40, 12),
                                            simulator.default_missing_rates(), 2);
    split_cohort(c, kDefaultSplit, 2);
    const Cohort before = c;
    MiceConfig cfg;
    cfg.gbm.trees = 10;
    mice_impute(c, cfg, 7);
    for (std::size_t i = 0; i < c.stays.size(); ++i)
      for (int t = 0; t < c.stays[i].length(); ++t)
        for (int f = 0; f < kNumObs; ++f) {
          const float orig = before.stays[i].steps[t].obs(f);
          const float now = c.stays[i].steps[t].obs(f);
          CHECK(!sim::is_missing(now));
          if (!sim::is_missing(orig)) CHECK(now == orig);
          if (f >= sim::kPainIdx) CHECK(now == std::round(now));
        }
  }
}

TEST_CASE("split_cohort") {
  SUBCASE("single-stay patients hit the fractions exactly") {
    Cohort c;
    for (int i = 0; i < 100; ++i) {
      sim::Trajectory t;
      t.stay_id = i;
      t.patient_id = i;
      t.steps.resize(2);
      c.stays.push_back(t);
    }
    split_cohort(c, kDefaultSplit, 1);
    std::array<int, 3> count{};
    for (const auto& [stay, label] : c.split) ++count[static_cast<int>(label)];
    CHECK(count[0] == 64);
    CHECK(count[1] == 16);
    CHECK(count[2] == 20);
  }
  SUBCASE("patients never straddle subsets; union covers everything") {
    Cohort c = labeled_cohort(400, 19);
    std::map<std::int64_t, std::set<Split>> seen;
    for (const auto& traj : c.stays) {
      REQUIRE(c.split.count(traj.stay_id) == 1);
      seen[traj.patient_id].insert(c.split.at(traj.stay_id));
    }
    for (const auto& [pid, labels] : seen) CHECK(labels.size() == 1);
    std::array<long, 3> count{};
    for (const auto& traj : c.stays) ++count[static_cast<int>(c.split.at(traj.stay_id))];
    const auto n = static_cast<double>(c.stays.size());
    CHECK(std::abs(count[0] / n - 0.64) < 0.02);
    CHECK(std::abs(count[1] / n - 0.16) < 0.02);
    CHECK(std::abs(count[2] / n - 0.20) < 0.02);
  }
  SUBCASE("deterministic and validated") {
    Cohort a = labeled_cohort(50, 33);
    Cohort b = labeled_cohort(50, 33);
    CHECK(a.split == b.split);
    Cohort bad;
    bad.stays.resize(2);
    CHECK_THROWS_AS(split_cohort(bad, {0.5, 0.3, 0.2}, 0), std::invalid_argument);
    CHECK_THROWS_AS(split_cohort(a, {0.5, 0.3, 0.3}, 0), std::invalid_argument);
  }
}

TEST_CASE("standardize_features") {
  sim::Simulator simulator{sim::SimConfig{}};
  Cohort c = simulator.generate_cohort(80, 21);
  split_cohort(c, kDefaultSplit, 21);
  const Cohort raw = c;
  const Scaler scaler = standardize_features(c);

  SUBCASE("training split is centered and unit-scaled") {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(kNumObs);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(kNumObs);
    long rows = 0;
    for (const auto& traj : c.stays) {
      if (c.split.at(traj.stay_id) != Split::kTrain) continue;
      for (const auto& s : traj.steps) {
        sum += s.obs.cast<double>();
        sq += s.obs.cast<double>().cwiseAbs2();
        ++rows;
      }
    }
    for (int f = 0; f < kNumQuant; ++f) {
      const double mean = sum(f) / rows;
      CHECK(std::abs(mean) < 1e-4);  // float32 storage noise
      CHECK(std::abs(std::sqrt(sq(f) / rows - mean * mean) - 1.0) < 1e-4);
    }
    for (int f = kNumQuant; f < kNumObs; ++f) {
      CHECK(sum(f) / rows >= 0.0);
      CHECK(sum(f) / rows <= 1.0);
    }
  }
  SUBCASE("round trip recovers the originals") {
    for (std::size_t i = 0; i < c.stays.size(); ++i)
      for (int t = 0; t < c.stays[i].length(); ++t) {
        const sim::Vec back = scaler.inverse_obs(c.stays[i].steps[t].obs);
        for (int f = 0; f < kNumObs; ++f)
          CHECK(back(f) == doctest::Approx(raw.stays[i].steps[t].obs(f)).epsilon(1e-4));
        const sim::Vec aback = scaler.inverse_action(c.stays[i].steps[t].action);
        for (int k = 0; k < kNumActions; ++k)
          CHECK(aback(k) == doctest::Approx(raw.stays[i].steps[t].action(k)).epsilon(1e-4));
      }
  }
  SUBCASE("test split uses training statistics") {
    // Recompute the scaler from the raw training split and verify the test
    // split was transformed with exactly those statistics.
    Cohort raw2 = raw;
    const Scaler again = standardize_features(raw2);
    for (int f = 0; f < kNumObs; ++f) {
      CHECK(again.center[f] == scaler.center[f]);
      CHECK(again.scale[f] == scaler.scale[f]);
    }
    double test_mean = 0;
    long rows = 0;
    for (const auto& traj : c.stays) {
      if (c.split.at(traj.stay_id) != Split::kTest) continue;
      for (const auto& s : traj.steps) {
        test_mean += s.obs(0);
        ++rows;
      }
    }
    REQUIRE(rows > 0);
    CHECK(std::abs(test_mean / rows) > 1e-8);  // need not be centered
  }
  SUBCASE("scaler JSON round trip") {
    save_scaler(scaler, "scaler_test.json");
    const Scaler loaded = load_scaler("scaler_test.json");
    for (int f = 0; f < kNumObs; ++f) {
      CHECK(loaded.center[f] == scaler.center[f]);
      CHECK(loaded.scale[f] == scaler.scale[f]);
    }
    for (int k = 0; k < kNumActions; ++k) CHECK(loaded.a_max[k] == scaler.a_max[k]);
  }
}

TEST_CASE("run_preprocess end to end") {
  sim::Simulator simulator{sim::SimConfig{}};
  Cohort c = simulator.inject_missingness(simulator.generate_cohort(80, 30),
                                          simulator.default_missing_rates(), 3);
  PreprocessConfig cfg;
  cfg.seed = 3;
  cfg.mice.gbm.trees = 20;
  const PreprocessResult result = run_preprocess(c, cfg);
  for (const auto& traj : c.stays) {
    CHECK(c.split.count(traj.stay_id) == 1);
    for (const auto& step : traj.steps) {
      CHECK(!step.obs.array().isNaN().any());
      for (int k = 0; k < kNumActions; ++k) {
        CHECK(step.action(k) >= 0.0f);
        // Scaled by the training-split maximum, so held-out stays may
        // slightly exceed 1.
        CHECK(step.action(k) <= 1.5f);
      }
    }
  }
  CHECK(result.clean_report.total() > 0);
}
