#include "sedrl/analysis/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sedrl/common/rng.hpp"
#include "sedrl/pipeline/clean.hpp"

namespace sedrl::analysis {

std::vector<double> average_ranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman_rho: length mismatch");
  if (x.size() < 3) throw std::invalid_argument("spearman_rho: need at least 3 cases");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);

  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0)
    throw undefined_correlation("spearman_rho: zero rank variance");
  return sxy / std::sqrt(sxx * syy);
}

CorrelationEstimate bootstrap_ci(const std::vector<double>& x, const std::vector<double>& y,
                                 int n_resamples, std::uint64_t seed) {
  if (x.size() != y.size()) throw std::invalid_argument("bootstrap_ci: length mismatch");
  if (x.size() < 10) throw std::invalid_argument("bootstrap_ci: need at least 10 cases");
  if (n_resamples < 2) throw std::invalid_argument("bootstrap_ci: need at least 2 resamples");

  CorrelationEstimate est;
  est.n_resamples = n_resamples;
  est.n_cases = static_cast<int>(x.size());
  est.rho = spearman_rho(x, y);

  Rng rng(derive_seed(seed, "bootstrap"));
  const std::size_t n = x.size();
  std::vector<double> bx(n), by(n), rhos;
  rhos.reserve(static_cast<std::size_t>(n_resamples));
  const int redraw_cap = n_resamples / 2;
  while (rhos.size() < static_cast<std::size_t>(n_resamples)) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = rng.uniform_int(n);
      bx[i] = x[j];
      by[i] = y[j];
    }
    try {
      rhos.push_back(spearman_rho(bx, by));
    } catch (const undefined_correlation&) {
      if (++est.n_redrawn > redraw_cap)
        throw degenerate_data("bootstrap_ci: over half the resamples were undefined");
    }
  }
  est.ci_low = pipeline::percentile(rhos, 2.5);
  est.ci_high = pipeline::percentile(rhos, 97.5);
  return est;
}

}  // namespace sedrl::analysis
