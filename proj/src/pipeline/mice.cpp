#include "sedrl/pipeline/mice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "sedrl/common/rng.hpp"
#include "sedrl/pipeline/clean.hpp"

namespace sedrl::pipeline {

using sim::Split;

namespace {

struct Flattened {
  Eigen::MatrixXd values;                    // rows x kNumObs, NaN for missing
  std::vector<std::pair<int, int>> origin;   // row -> (stay index, step)
  std::vector<bool> is_train;
};

Flattened flatten(const sim::Cohort& cohort) {
  Flattened flat;
  flat.values.resize(static_cast<Eigen::Index>(cohort.total_steps()), sim::kNumObs);
  Eigen::Index r = 0;
  for (std::size_t s = 0; s < cohort.stays.size(); ++s) {
    const auto& traj = cohort.stays[s];
    const auto it = cohort.split.find(traj.stay_id);
    const bool train = it != cohort.split.end() && it->second == Split::kTrain;
    for (int t = 0; t < traj.length(); ++t, ++r) {
      flat.values.row(r) = traj.steps[t].obs.cast<double>();
      flat.origin.emplace_back(static_cast<int>(s), t);
      flat.is_train.push_back(train);
    }
  }
  return flat;
}

// Training-split medians of the observed cells; throws if a feature is
// never observed there.
Eigen::VectorXd train_medians(const Flattened& flat) {
  Eigen::VectorXd medians(sim::kNumObs);
  for (int f = 0; f < sim::kNumObs; ++f) {
    std::vector<double> vals;
    for (Eigen::Index r = 0; r < flat.values.rows(); ++r)
      if (flat.is_train[r] && !std::isnan(flat.values(r, f))) vals.push_back(flat.values(r, f));
    if (vals.empty())
      throw std::runtime_error(std::string("mice_impute: feature never observed in training "
                                           "split: ") +
                               sim::kObsNames[f]);
    medians(f) = percentile(std::move(vals), 50.0);
  }
  return medians;
}

// Ordinal scales come back as rounded values in their defined ranges.
double snap_ordinal(int f, double v) {
  if (f == sim::kPainIdx) return std::clamp(std::round(v), 0.0, 10.0);
  if (f == sim::kGcsIdx) return std::clamp(std::round(v), 3.0, 15.0);
  if (f == sim::kSasIdx) return std::clamp(std::round(v), 1.0, 7.0);
  if (f == sim::kDeliriumIdx) return std::clamp(std::round(v), 0.0, 1.0);
  return v;
}

Eigen::MatrixXd drop_column(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows,
                            int col) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols() - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int c = 0;
    for (int f = 0; f < m.cols(); ++f)
      if (f != col) out(static_cast<Eigen::Index>(i), c++) = m(rows[i], f);
  }
  return out;
}

}  // namespace

void median_impute(sim::Cohort& cohort) {
  Flattened flat = flatten(cohort);
  const Eigen::VectorXd medians = train_medians(flat);
  for (auto& traj : cohort.stays)
    for (auto& step : traj.steps)
      for (int f = 0; f < sim::kNumObs; ++f)
        if (sim::is_missing(step.obs(f)))
          step.obs(f) = static_cast<float>(snap_ordinal(f, medians(f)));
}

void mice_impute(sim::Cohort& cohort, const MiceConfig& config, std::uint64_t seed) {
  if (config.rounds < 1) throw std::invalid_argument("mice_impute: rounds < 1");
  Flattened flat = flatten(cohort);
  const Eigen::Index n = flat.values.rows();

  std::vector<std::vector<Eigen::Index>> missing_rows(sim::kNumObs);
  std::vector<std::vector<Eigen::Index>> train_obs_rows(sim::kNumObs);
  for (Eigen::Index r = 0; r < n; ++r)
    for (int f = 0; f < sim::kNumObs; ++f) {
      if (std::isnan(flat.values(r, f)))
        missing_rows[f].push_back(r);
      else if (flat.is_train[r])
        train_obs_rows[f].push_back(r);
    }

  const Eigen::VectorXd medians = train_medians(flat);
  for (int f = 0; f < sim::kNumObs; ++f)
    for (Eigen::Index r : missing_rows[f]) flat.values(r, f) = medians(f);

  // Visit features with any missingness in ascending missing-rate order.
  std::vector<int> visit;
  for (int f = 0; f < sim::kNumObs; ++f)
    if (!missing_rows[f].empty()) visit.push_back(f);
  std::stable_sort(visit.begin(), visit.end(),
                   [&](int a, int b) { return missing_rows[a].size() < missing_rows[b].size(); });

  Rng rng(derive_seed(seed, "mice"));
  for (int round = 0; round < config.rounds; ++round) {
    for (int f : visit) {
      std::vector<Eigen::Index> fit_rows = train_obs_rows[f];
      if (static_cast<int>(fit_rows.size()) > config.max_fit_rows) {
        // Deterministic Fisher-Yates prefix subsample.
        for (int i = 0; i < config.max_fit_rows; ++i) {
          const auto j = i + static_cast<int>(rng.uniform_int(
                                 static_cast<std::uint64_t>(fit_rows.size() - i)));
          std::swap(fit_rows[i], fit_rows[j]);
        }
        fit_rows.resize(config.max_fit_rows);
      }
      Eigen::VectorXd y(static_cast<Eigen::Index>(fit_rows.size()));
      for (std::size_t i = 0; i < fit_rows.size(); ++i)
        y(static_cast<Eigen::Index>(i)) = flat.values(fit_rows[i], f);
      const GbmModel model = gbm_fit(drop_column(flat.values, fit_rows, f), y, config.gbm);
      const Eigen::VectorXd pred =
          gbm_predict(model, drop_column(flat.values, missing_rows[f], f));
      for (std::size_t i = 0; i < missing_rows[f].size(); ++i)
        flat.values(missing_rows[f][i], f) =
            snap_ordinal(f, pred(static_cast<Eigen::Index>(i)));
    }
  }

  for (int f = 0; f < sim::kNumObs; ++f)
    for (Eigen::Index r : missing_rows[f]) {
      const auto [s, t] = flat.origin[static_cast<std::size_t>(r)];
      cohort.stays[static_cast<std::size_t>(s)].steps[static_cast<std::size_t>(t)].obs(f) =
          static_cast<float>(flat.values(r, f));
    }
}

}  // namespace sedrl::pipeline
