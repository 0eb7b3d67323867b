#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "salient/errors.hpp"

// Numeric core shared by the analytics and salience modules: agreement and
// correlation statistics plus the chi-square goodness-of-fit test against a
// uniform null. No external numeric dependency; the regularized incomplete
// gamma function is implemented here (series + continued fraction).

namespace salient::analytics {

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

inline MeanStd mean_and_std(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::Empty, "mean_and_std of empty sample");
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

// Ranks 1..n with ties assigned the average rank of the tied run.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

// Spearman's rank correlation with average ranks for ties.
inline double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw Error(ErrorCode::MismatchedSets, "rank vectors differ in length");
  }
  if (xs.size() < 2) throw Error(ErrorCode::Empty, "need at least two paired observations");
  auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(xs) || constant(ys)) {
    throw Error(ErrorCode::ConstantInput, "correlation undefined for constant input");
  }
  const std::vector<double> rx = average_ranks(xs);
  const std::vector<double> ry = average_ranks(ys);
  return pearson(rx, ry);
}

// Item x category counts with a constant number of raters per item.
class CountMatrix {
 public:
  explicit CountMatrix(std::vector<std::vector<long>> cells) : cells_(std::move(cells)) {
    if (cells_.size() < 2) throw Error(ErrorCode::Empty, "need at least two items");
    const std::size_t categories = cells_.front().size();
    if (categories < 2) throw Error(ErrorCode::Empty, "need at least two categories");
    long raters = -1;
    for (const auto& row : cells_) {
      if (row.size() != categories) {
        throw Error(ErrorCode::UnequalRaters, "ragged count matrix");
      }
      long sum = 0;
      for (long c : row) {
        if (c < 0) throw Error(ErrorCode::OutOfRange, "negative cell count");
        sum += c;
      }
      if (raters == -1) raters = sum;
      if (sum != raters) {
        throw Error(ErrorCode::UnequalRaters, "rows must share one rater count");
      }
    }
    if (raters < 2) throw Error(ErrorCode::UnequalRaters, "need at least two raters per item");
    raters_ = raters;
  }

  std::size_t items() const { return cells_.size(); }
  std::size_t categories() const { return cells_.front().size(); }
  long raters_per_item() const { return raters_; }
  long at(std::size_t item, std::size_t category) const { return cells_[item][category]; }

 private:
  std::vector<std::vector<long>> cells_;
  long raters_ = 0;
};

// Fleiss' kappa. Returns nullopt when expected agreement is 1 (all mass in a
// single category), where the statistic is undefined.
inline std::optional<double> fleiss_kappa(const CountMatrix& m) {
  const double n = static_cast<double>(m.raters_per_item());
  const double items = static_cast<double>(m.items());
  double p_bar = 0.0;
  std::vector<double> column_share(m.categories(), 0.0);
  for (std::size_t i = 0; i < m.items(); ++i) {
    double agree = 0.0;
    for (std::size_t j = 0; j < m.categories(); ++j) {
      const double c = static_cast<double>(m.at(i, j));
      agree += c * (c - 1.0);
      column_share[j] += c;
    }
    p_bar += agree / (n * (n - 1.0));
  }
  p_bar /= items;
  double pe_bar = 0.0;
  for (double& share : column_share) {
    share /= items * n;
    pe_bar += share * share;
  }
  if (pe_bar >= 1.0 - 1e-12) return std::nullopt;
  return (p_bar - pe_bar) / (1.0 - pe_bar);
}

namespace detail {

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
// Series expansion of P(a, x) for x < a + 1, Lentz continued fraction for Q
// otherwise; both iterate to ~1e-16 relative term size.
inline double regularized_gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw Error(ErrorCode::OutOfRange, "gamma_q domain");
  if (x == 0.0) return 1.0;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 1000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return 1.0 - sum * std::exp(log_prefix);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int n = 1; n < 1000; ++n) {
    const double an = -static_cast<double>(n) * (static_cast<double>(n) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefix) * h;
}

}  // namespace detail

struct ChiSquareResult {
  double chi2 = 0.0;
  double p = 1.0;
};

// Goodness of fit against a uniform distribution over the k cells,
// df = k - 1. For k = 3 the p-value equals exp(-chi2 / 2).
inline ChiSquareResult chi_square_uniform(std::span<const long> counts) {
  if (counts.size() < 2) throw Error(ErrorCode::Empty, "need at least two cells");
  long total = 0;
  for (long c : counts) {
    if (c < 0) throw Error(ErrorCode::OutOfRange, "negative count");
    total += c;
  }
  if (total == 0) throw Error(ErrorCode::Empty, "zero total count");
  const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
  double chi2 = 0.0;
  for (long c : counts) {
    const double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  const double df = static_cast<double>(counts.size() - 1);
  return {chi2, detail::regularized_gamma_q(df / 2.0, chi2 / 2.0)};
}

inline ChiSquareResult chi_square_uniform(std::initializer_list<long> counts) {
  return chi_square_uniform(std::span<const long>(counts.begin(), counts.size()));
}

}  // namespace salient::analytics
