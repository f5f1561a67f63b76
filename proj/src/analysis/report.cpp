#include "sedrl/analysis/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "sedrl/common/csv.hpp"
#include "sedrl/common/rng.hpp"
#include "sedrl/rl/encoder.hpp"

namespace sedrl::analysis {

namespace fs = std::filesystem;
using nn::Vec;

ActionMax test_action_maxima(const sim::Cohort& cohort, const pipeline::Scaler& scaler) {
  ActionMax a_max{};
  bool any = false;
  for (const auto& traj : cohort.stays) {
    const auto it = cohort.split.find(traj.stay_id);
    if (it == cohort.split.end() || it->second != sim::Split::kTest) continue;
    any = true;
    for (const auto& step : traj.steps) {
      const Vec raw = scaler.inverse_action(step.action);
      for (int k = 0; k < sim::kNumActions; ++k)
        a_max[static_cast<std::size_t>(k)] =
            std::max(a_max[static_cast<std::size_t>(k)], static_cast<double>(raw(k)));
    }
  }
  if (!any) throw std::invalid_argument("test_action_maxima: no test stays");
  return a_max;
}

std::vector<Vec> propose_doses(const nn::GruStack& encoder, const nn::Mlp& actor,
                               const pipeline::Scaler& scaler, const sim::Trajectory& traj) {
  const auto states = rl::encode_trajectory(encoder, traj);
  std::vector<Vec> doses;
  doses.reserve(states.size());
  for (const auto& s : states) {
    const nn::Mat out = actor.forward(s.transpose());
    doses.push_back(scaler.inverse_action(out.row(0).transpose()));
  }
  return doses;
}

namespace {

struct SvgCanvas {
  std::ofstream out;
  static constexpr int kW = 640, kH = 400, kMargin = 60;

  explicit SvgCanvas(const std::string& path) : out(path) {
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    // axes
    line(kMargin, kH - kMargin, kW - 20, kH - kMargin);
    line(kMargin, 20, kMargin, kH - kMargin);
  }
  ~SvgCanvas() { out << "</svg>\n"; }

  void line(double x1, double y1, double x2, double y2, const char* color = "#333") {
    out << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
        << "\" stroke=\"" << color << "\"/>\n";
  }
  void circle(double x, double y, const char* color) {
    out << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3.5\" fill=\"" << color
        << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const char* color) {
    out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
        << "\" fill=\"" << color << "\"/>\n";
  }
  void text(double x, double y, const std::string& s) {
    out << "<text x=\"" << x << "\" y=\"" << y << "\">" << s << "</text>\n";
  }
  // data-to-pixel maps over the plot area
  double px(double v, double lo, double hi) const {
    return kMargin + (v - lo) / (hi - lo) * (kW - kMargin - 20);
  }
  double py(double v, double lo, double hi) const {
    return kH - kMargin - (v - lo) / (hi - lo) * (kH - kMargin - 20);
  }
};

const char* policy_color(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  return colors[i % 4];
}

struct AgreementSummary {
  double mean = 0.0, stddev = 0.0;
};

AgreementSummary summarize(const std::vector<AgreementRecord>& records,
                           const std::function<double(const AgreementRecord&)>& get) {
  AgreementSummary s;
  for (const auto& r : records) s.mean += get(r);
  s.mean /= static_cast<double>(records.size());
  for (const auto& r : records) s.stddev += (get(r) - s.mean) * (get(r) - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(records.size()));
  return s;
}

void write_agreement_csv(const Report& report, const std::vector<PolicyHandle>& policies,
                         const fs::path& dir) {
  std::ofstream csv(dir / "agreement.csv");
  csv << "policy,scope,mean_agreement,std,n\n";
  SvgCanvas svg((dir / "agreement.svg").string());
  svg.text(SvgCanvas::kMargin, 15, "Mean agreement with recorded care, overall and per action");

  const int n_bars = static_cast<int>(policies.size()) * (1 + sim::kNumActions);
  int bar = 0;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    const auto& records = report.records.at(policies[p].name);
    auto emit = [&](const std::string& scope, const AgreementSummary& s) {
      csv << policies[p].name << ',' << scope << ',' << format_number(s.mean) << ','
          << format_number(s.stddev) << ',' << records.size() << '\n';
      const double x = svg.px(bar + 0.15, 0, n_bars);
      const double w = svg.px(bar + 0.85, 0, n_bars) - x;
      const double y = svg.py(std::max(0.0, s.mean), 0, 1);
      svg.rect(x, y, w, svg.py(0, 0, 1) - y, policy_color(p));
      svg.text(x, SvgCanvas::kH - SvgCanvas::kMargin + 14, policies[p].name + ":" + scope);
      ++bar;
    };
    emit("overall", summarize(records, [](const AgreementRecord& r) { return r.overall; }));
    for (int k = 0; k < sim::kNumActions; ++k)
      emit(sim::kActionNames[static_cast<std::size_t>(k)],
           summarize(records, [k](const AgreementRecord& r) {
             return r.per_action[static_cast<std::size_t>(k)];
           }));
  }
}

void write_correlation_rows(std::ofstream& csv, SvgCanvas& svg,
                            const std::vector<NamedCorrelation>& rows) {
  int i = 0;
  const int n = std::max<int>(1, static_cast<int>(rows.size()));
  svg.line(svg.px(0, -1, 1), 20, svg.px(0, -1, 1), SvgCanvas::kH - SvgCanvas::kMargin, "#bbb");
  for (const auto& row : rows) {
    csv << row.policy << ',' << row.target << ',';
    if (row.defined) {
      csv << format_number(row.estimate.rho) << ',' << format_number(row.estimate.ci_low) << ','
          << format_number(row.estimate.ci_high) << ',' << row.estimate.n_cases << ','
          << (row.estimate.excludes_zero() ? 1 : 0) << '\n';
      const double y = svg.py(i + 0.5, 0, n);
      svg.line(svg.px(row.estimate.ci_low, -1, 1), y, svg.px(row.estimate.ci_high, -1, 1), y);
      svg.circle(svg.px(row.estimate.rho, -1, 1), y, "#1f77b4");
      svg.text(SvgCanvas::kMargin + 4, y - 6, row.policy + " vs " + row.target);
    } else {
      csv << ",,," << 0 << ",0\n";
      svg.text(SvgCanvas::kMargin + 4, svg.py(i + 0.5, 0, n), row.policy + " vs " + row.target +
                                                                  ": undefined");
    }
    ++i;
  }
}

void write_bins_csv(const std::vector<AgreementRecord>& records, const fs::path& dir) {
  std::ofstream csv(dir / "bins_policyB.csv");
  csv << "outcome,bin_center,value,std,count,low_confidence\n";
  SvgCanvas svg((dir / "bins_policyB.svg").string());
  svg.text(SvgCanvas::kMargin, 15, "Outcomes by agreement bin, mortality-aware policy");

  for (const auto outcome : {Outcome::kMortalityRate, Outcome::kMeanCumulativePain}) {
    const auto rows = binned_outcomes(records, 10, outcome);
    const bool mort = outcome == Outcome::kMortalityRate;
    double vmax = 1e-9;
    for (const auto& row : rows) vmax = std::max(vmax, row.value + row.stddev);
    for (const auto& row : rows) {
      csv << (mort ? "mortality_rate" : "mean_cumulative_pain") << ','
          << format_number(row.center) << ',' << format_number(row.value) << ','
          << format_number(row.stddev) << ',' << row.count << ','
          << (row.low_confidence ? 1 : 0) << '\n';
      const double x = svg.px(row.center, 0, 1);
      const double y = svg.py(row.value, 0, vmax);
      if (!mort) svg.line(x, svg.py(row.value - row.stddev, 0, vmax), x,
                          svg.py(row.value + row.stddev, 0, vmax), "#aaa");
      svg.circle(x, y, mort ? "#d62728" : "#1f77b4");
    }
  }
}

void write_propofol_strata(const Report& report, const std::vector<PolicyHandle>& policies,
                           const fs::path& dir) {
  std::ofstream csv(dir / "propofol_strata.csv");
  csv << "policy,stratum,mean_signed_deviation,mortality_rate,n\n";
  SvgCanvas svg((dir / "propofol_strata.svg").string());
  svg.text(SvgCanvas::kMargin, 15, "Mortality by propofol deviation tercile");

  static const char* strata[] = {"under", "near", "over"};
  int bar = 0;
  const int n_bars = static_cast<int>(policies.size()) * 3;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    auto records = report.records.at(policies[p].name);
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
      return a.signed_deviation[sim::kPropofol] < b.signed_deviation[sim::kPropofol];
    });
    const std::size_t n = records.size();
    for (int s = 0; s < 3; ++s) {
      const std::size_t begin = n * static_cast<std::size_t>(s) / 3;
      const std::size_t end = n * static_cast<std::size_t>(s + 1) / 3;
      double dev = 0.0;
      int deaths = 0;
      for (std::size_t i = begin; i < end; ++i) {
        dev += records[i].signed_deviation[sim::kPropofol];
        deaths += records[i].mortality;
      }
      const auto count = static_cast<double>(end - begin);
      csv << policies[p].name << ',' << strata[s] << ',' << format_number(dev / count) << ','
          << format_number(deaths / count) << ',' << (end - begin) << '\n';
      const double x = svg.px(bar + 0.15, 0, n_bars);
      const double w = svg.px(bar + 0.85, 0, n_bars) - x;
      const double y = svg.py(deaths / count, 0, 1);
      svg.rect(x, y, w, svg.py(0, 0, 1) - y, policy_color(p));
      svg.text(x, SvgCanvas::kH - SvgCanvas::kMargin + 14, policies[p].name + ":" + strata[s]);
      ++bar;
    }
  }
}

void write_stay_trace(const sim::Cohort& cohort, const pipeline::Scaler& scaler,
                      const nn::GruStack& encoder, const std::vector<PolicyHandle>& policies,
                      const fs::path& dir) {
  const sim::Trajectory* pick = nullptr;
  int best_score = -1;
  for (const auto& traj : cohort.stays) {
    const auto it = cohort.split.find(traj.stay_id);
    if (it == cohort.split.end() || it->second != sim::Split::kTest) continue;
    const int score = cohort.comorbidity.at(traj.patient_id);
    if (score > best_score) {
      best_score = score;
      pick = &traj;
    }
  }

  std::ofstream csv(dir / "stay_trace.csv");
  csv << "hour,pain";
  for (int k = 0; k < sim::kNumActions; ++k) csv << ",recorded_" << sim::kActionNames[k];
  for (const auto& policy : policies)
    for (int k = 0; k < sim::kNumActions; ++k)
      csv << ',' << policy.name << '_' << sim::kActionNames[k];
  csv << '\n';

  std::vector<std::vector<Vec>> proposals;
  for (const auto& policy : policies)
    proposals.push_back(propose_doses(encoder, *policy.actor, scaler, *pick));

  SvgCanvas svg((dir / "stay_trace.svg").string());
  svg.text(SvgCanvas::kMargin, 15,
           "Opioid dose trace, highest-comorbidity test stay " + std::to_string(pick->stay_id));
  double dose_max = 1e-9;
  const int T = pick->length();
  for (int t = 0; t < T; ++t) {
    const Vec recorded = scaler.inverse_action(pick->steps[static_cast<std::size_t>(t)].action);
    dose_max = std::max(dose_max, static_cast<double>(recorded(sim::kOpioid)));
    for (const auto& prop : proposals)
      dose_max = std::max(dose_max, static_cast<double>(prop[static_cast<std::size_t>(t)](0)));

    csv << t << ','
        << format_number(scaler.inverse_obs(pick->steps[static_cast<std::size_t>(t)].obs)(
               sim::kPainIdx));
    for (int k = 0; k < sim::kNumActions; ++k) csv << ',' << format_number(recorded(k));
    for (const auto& prop : proposals)
      for (int k = 0; k < sim::kNumActions; ++k)
        csv << ',' << format_number(prop[static_cast<std::size_t>(t)](k));
    csv << '\n';
  }
  for (int t = 0; t + 1 < T; ++t) {
    auto raw = [&](int u) {
      return static_cast<double>(
          scaler.inverse_action(pick->steps[static_cast<std::size_t>(u)].action)(sim::kOpioid));
    };
    svg.line(svg.px(t, 0, T - 1), svg.py(raw(t), 0, dose_max), svg.px(t + 1, 0, T - 1),
             svg.py(raw(t + 1), 0, dose_max), "#333");
    for (std::size_t p = 0; p < proposals.size(); ++p)
      svg.line(svg.px(t, 0, T - 1),
               svg.py(proposals[p][static_cast<std::size_t>(t)](0), 0, dose_max),
               svg.px(t + 1, 0, T - 1),
               svg.py(proposals[p][static_cast<std::size_t>(t) + 1](0), 0, dose_max),
               policy_color(p));
  }
}

NamedCorrelation correlate(const std::string& policy, const std::string& target,
                           const std::vector<double>& x, const std::vector<double>& y,
                           std::uint64_t seed) {
  NamedCorrelation row;
  row.policy = policy;
  row.target = target;
  try {
    row.estimate = bootstrap_ci(x, y, 1000, derive_seed(seed, policy + "/" + target));
  } catch (const undefined_correlation&) {
    row.defined = false;
  } catch (const degenerate_data&) {
    row.defined = false;
  }
  return row;
}

}  // namespace

Report generate_report(const sim::Cohort& cohort, const pipeline::Scaler& scaler,
                       const nn::GruStack& encoder, const std::vector<PolicyHandle>& policies,
                       const std::string& out_dir, std::uint64_t seed,
                       const nlohmann::json& manifest_extra) {
  if (policies.empty()) throw std::invalid_argument("generate_report: no policies");
  for (const auto& policy : policies)
    if (policy.actor == nullptr)
      throw std::invalid_argument("generate_report: missing actor for policy " + policy.name);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  Report report;
  report.a_max = test_action_maxima(cohort, scaler);

  for (const auto& policy : policies) {
    auto& records = report.records[policy.name];
    for (const auto& traj : cohort.stays) {
      const auto it = cohort.split.find(traj.stay_id);
      if (it == cohort.split.end() || it->second != sim::Split::kTest) continue;
      std::vector<Vec> recorded;
      double pain = 0.0;
      for (const auto& step : traj.steps) {
        recorded.push_back(scaler.inverse_action(step.action));
        pain += scaler.inverse_obs(step.obs)(sim::kPainIdx);
      }
      const auto proposed = propose_doses(encoder, *policy.actor, scaler, traj);
      AgreementRecord rec = agreement_score(recorded, proposed, report.a_max);
      rec.stay_id = traj.stay_id;
      rec.cumulative_pain = pain;
      rec.mortality = traj.mortality;
      rec.comorbidity = cohort.comorbidity.at(traj.patient_id);
      records.push_back(rec);
    }
  }

  write_agreement_csv(report, policies, dir);

  {
    std::ofstream csv(dir / "correlations.csv");
    csv << "policy,target,rho,ci_low,ci_high,n_cases,ci_excludes_zero\n";
    SvgCanvas svg((dir / "correlations.svg").string());
    svg.text(SvgCanvas::kMargin, 15, "Agreement correlations with 95% bootstrap CIs");
    for (const auto& policy : policies) {
      const auto& records = report.records.at(policy.name);
      std::vector<double> agreement, mortality, pain;
      for (const auto& r : records) {
        agreement.push_back(r.overall);
        mortality.push_back(r.mortality);
        pain.push_back(r.cumulative_pain);
      }
      report.correlations.push_back(
          correlate(policy.name, "mortality", agreement, mortality, seed));
      report.correlations.push_back(
          correlate(policy.name, "cumulative_pain", agreement, pain, seed));
    }
    write_correlation_rows(csv, svg, report.correlations);
  }

  {
    // Comorbidity analyses: agreement level and per-action signed deviation.
    std::ofstream csv(dir / "comorbidity.csv");
    csv << "policy,target,rho,ci_low,ci_high,n_cases,ci_excludes_zero\n";
    SvgCanvas svg((dir / "comorbidity.svg").string());
    svg.text(SvgCanvas::kMargin, 15, "Comorbidity correlations with 95% bootstrap CIs");
    std::vector<NamedCorrelation> rows;
    for (const auto& policy : policies) {
      const auto& records = report.records.at(policy.name);
      std::vector<double> comorbidity, agreement;
      for (const auto& r : records) {
        comorbidity.push_back(r.comorbidity);
        agreement.push_back(r.overall);
      }
      rows.push_back(correlate(policy.name, "agreement", comorbidity, agreement, seed));
      for (int k = 0; k < sim::kNumActions; ++k) {
        std::vector<double> deviation;
        for (const auto& r : records)
          deviation.push_back(r.signed_deviation[static_cast<std::size_t>(k)]);
        rows.push_back(correlate(policy.name,
                                 std::string("deviation_") + sim::kActionNames[k], comorbidity,
                                 deviation, seed));
      }
    }
    write_correlation_rows(csv, svg, rows);
    report.correlations.insert(report.correlations.end(), rows.begin(), rows.end());
  }

  // Binned outcome curves for the mortality-aware policy (the one named
  // "B" when present, otherwise the last).
  const auto bin_policy = [&]() -> const std::string& {
    for (const auto& p : policies)
      if (p.name == "B") return p.name;
    return policies.back().name;
  }();
  write_bins_csv(report.records.at(bin_policy), dir);
  write_propofol_strata(report, policies, dir);
  write_stay_trace(cohort, scaler, encoder, policies, dir);

  nlohmann::json manifest = manifest_extra;
  manifest["seed"] = seed;
  manifest["n_test_stays"] = report.records.begin()->second.size();
  manifest["a_max"] = report.a_max;
  manifest["n_resamples"] = 1000;
  {
    std::vector<std::string> names;
    for (const auto& p : policies) names.push_back(p.name);
    manifest["policies"] = names;
  }
  std::ofstream mf(dir / "manifest.json");
  mf << manifest.dump(2) << '\n';

  return report;
}

}  // namespace sedrl::analysis
