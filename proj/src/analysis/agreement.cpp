#include "sedrl/analysis/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace sedrl::analysis {

AgreementRecord agreement_score(const std::vector<nn::Vec>& recorded,
                                const std::vector<nn::Vec>& proposed, const ActionMax& a_max) {
  if (recorded.size() != proposed.size())
    throw std::invalid_argument("agreement_score: sequence length mismatch");
  if (recorded.empty()) throw std::invalid_argument("agreement_score: empty stay");

  AgreementRecord rec;
  const double T = static_cast<double>(recorded.size());
  double overall = 0.0;
  for (int k = 0; k < sim::kNumActions; ++k) {
    if (a_max[static_cast<std::size_t>(k)] <= 0.0) {
      std::cerr << "warning: " << sim::kActionNames[static_cast<std::size_t>(k)]
                << " never administered in the test set; agreement fixed at 1\n";
      rec.per_action[static_cast<std::size_t>(k)] = 1.0;
      rec.signed_deviation[static_cast<std::size_t>(k)] = 0.0;
      overall += 1.0;
      continue;
    }
    double abs_dev = 0.0, signed_dev = 0.0;
    for (std::size_t t = 0; t < recorded.size(); ++t) {
      const double diff = static_cast<double>(proposed[t](k)) - static_cast<double>(recorded[t](k));
      abs_dev += std::abs(diff);
      signed_dev += diff;
    }
    const double scale = T * a_max[static_cast<std::size_t>(k)];
    rec.per_action[static_cast<std::size_t>(k)] = 1.0 - abs_dev / scale;
    rec.signed_deviation[static_cast<std::size_t>(k)] = signed_dev / scale;
    overall += rec.per_action[static_cast<std::size_t>(k)];
  }
  rec.overall = overall / sim::kNumActions;
  return rec;
}

std::vector<BinRow> binned_outcomes(const std::vector<AgreementRecord>& records, int bin_count,
                                    Outcome outcome) {
  if (records.empty()) throw std::invalid_argument("binned_outcomes: no records");
  if (bin_count < 1) throw std::invalid_argument("binned_outcomes: bin_count < 1");

  double lo = records[0].overall, hi = records[0].overall;
  for (const auto& r : records) {
    lo = std::min(lo, r.overall);
    hi = std::max(hi, r.overall);
  }
  const double width = (hi - lo) / bin_count;

  std::vector<std::vector<const AgreementRecord*>> bins(static_cast<std::size_t>(bin_count));
  for (const auto& r : records) {
    int b = width > 0.0 ? static_cast<int>((r.overall - lo) / width) : 0;
    b = std::clamp(b, 0, bin_count - 1);
    bins[static_cast<std::size_t>(b)].push_back(&r);
  }

  std::vector<BinRow> rows;
  for (int b = 0; b < bin_count; ++b) {
    const auto& members = bins[static_cast<std::size_t>(b)];
    if (members.empty()) continue;
    BinRow row;
    row.center = lo + (b + 0.5) * width;
    row.count = static_cast<int>(members.size());
    row.low_confidence = row.count < 5;
    if (outcome == Outcome::kMortalityRate) {
      int deaths = 0;
      for (const auto* r : members) deaths += r->mortality;
      row.value = static_cast<double>(deaths) / row.count;
    } else {
      double sum = 0.0;
      for (const auto* r : members) sum += r->cumulative_pain;
      row.value = sum / row.count;
      double ss = 0.0;
      for (const auto* r : members) ss += (r->cumulative_pain - row.value) *
                                          (r->cumulative_pain - row.value);
      row.stddev = std::sqrt(ss / row.count);
    }
    rows.push_back(row);
  }
  return rows;
}

CorrelationEstimate deviation_vs_comorbidity(const std::vector<AgreementRecord>& records,
                                             int action, int n_resamples, std::uint64_t seed) {
  if (action < 0 || action >= sim::kNumActions)
    throw std::invalid_argument("deviation_vs_comorbidity: bad action index");
  std::vector<double> comorbidity, deviation;
  comorbidity.reserve(records.size());
  for (const auto& r : records) {
    comorbidity.push_back(r.comorbidity);
    deviation.push_back(r.signed_deviation[static_cast<std::size_t>(action)]);
  }
  return bootstrap_ci(comorbidity, deviation, n_resamples, seed);
}

}  // namespace sedrl::analysis
