#include "myopass/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "myopass/errors.hpp"

namespace myopass::stats {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kExact:
      return "exact";
    case Method::kNormalApproximation:
      return "normal-approximation";
    case Method::kAsymptotic:
      return "asymptotic";
  }
  return "unknown";
}

std::string_view to_string(Sidedness sidedness) {
  switch (sidedness) {
    case Sidedness::kTwoSided:
      return "two-sided";
    case Sidedness::kGreater:
      return "greater";
    case Sidedness::kLess:
      return "less";
  }
  return "unknown";
}

Sidedness parse_sidedness(std::string_view text) {
  for (auto s : {Sidedness::kTwoSided, Sidedness::kGreater, Sidedness::kLess}) {
    if (to_string(s) == text) return s;
  }
  throw DomainError("unknown sidedness '" + std::string(text) + "'");
}

std::string significance_mark(double p_value) {
  if (p_value < 0.001) return "**";
  if (p_value < 0.05) return "*";
  return "";
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

std::vector<double> signed_rank_magnitudes(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(values[a]) < std::abs(values[b]);
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(values[order[j + 1]]) == std::abs(values[order[i]])) ++j;
    const double average = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = average;
    i = j + 1;
  }
  return ranks;
}

TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                Sidedness sidedness) {
  if (x.size() != y.size()) {
    throw DomainError("paired samples must have equal lengths");
  }
  std::vector<double> differences(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) differences[i] = x[i] - y[i];
  return wilcoxon_signed_rank(differences, sidedness);
}

TestResult wilcoxon_signed_rank(std::span<const double> differences,
                                Sidedness sidedness) {
  std::vector<double> nonzero;
  for (const double d : differences) {
    if (!std::isfinite(d)) throw DomainError("paired differences must be finite");
    if (d != 0.0) nonzero.push_back(d);
  }
  if (nonzero.empty()) {
    throw DegenerateError("all paired differences are zero");
  }
  const std::size_t n = nonzero.size();
  if (n < 5) {
    throw DomainError("signed-rank test needs at least 5 non-zero differences");
  }
  const std::vector<double> ranks = signed_rank_magnitudes(nonzero);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (nonzero[i] > 0.0) w_plus += ranks[i];
  }

  TestResult result;
  result.statistic = w_plus;
  result.n = n;
  if (n <= kExactWilcoxonLimit) {
    // Average ranks are multiples of 1/2; doubling makes every subset sum an
    // integer, so the null distribution is a count table over doubled sums.
    std::vector<int> doubled(n);
    int max_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
      max_sum += doubled[i];
    }
    std::vector<double> counts(static_cast<std::size_t>(max_sum) + 1, 0.0);
    counts[0] = 1.0;
    int reach = 0;
    for (const int r : doubled) {
      for (int s = reach; s >= 0; --s) {
        counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
      }
      reach += r;
    }
    const int observed = static_cast<int>(std::lround(2.0 * w_plus));
    double at_most = 0.0;
    double at_least = 0.0;
    for (int s = 0; s <= max_sum; ++s) {
      if (s <= observed) at_most += counts[static_cast<std::size_t>(s)];
      if (s >= observed) at_least += counts[static_cast<std::size_t>(s)];
    }
    const double patterns = std::ldexp(1.0, static_cast<int>(n));
    at_most /= patterns;
    at_least /= patterns;
    result.method = Method::kExact;
    switch (sidedness) {
      case Sidedness::kTwoSided:
        result.p_value = std::min(1.0, 2.0 * std::min(at_most, at_least));
        break;
      case Sidedness::kGreater:
        result.p_value = at_least;
        break;
      case Sidedness::kLess:
        result.p_value = at_most;
        break;
    }
  } else {
    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double tie_term = 0.0;
    {
      std::vector<double> sorted = ranks;
      std::sort(sorted.begin(), sorted.end());
      std::size_t i = 0;
      while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
      }
    }
    const double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (!(variance > 0.0)) throw DegenerateError("signed-rank variance is zero");
    const double sd = std::sqrt(variance);
    result.method = Method::kNormalApproximation;
    switch (sidedness) {
      case Sidedness::kTwoSided: {
        const double z = std::max(0.0, std::abs(w_plus - mean) - 0.5) / sd;
        result.p_value = std::min(1.0, std::erfc(z / std::numbers::sqrt2));
        break;
      }
      case Sidedness::kGreater:
        result.p_value = 1.0 - normal_cdf((w_plus - mean - 0.5) / sd);
        break;
      case Sidedness::kLess:
        result.p_value = normal_cdf((w_plus - mean + 0.5) / sd);
        break;
    }
  }
  result.p_value = std::clamp(result.p_value, 0.0, 1.0);
  result.mark = significance_mark(result.p_value);
  return result;
}

double ks_statistic(std::span<const double> sample,
                    const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("KS statistic of an empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  // Corner differences in extended precision so D is correctly rounded.
  const long double n = static_cast<long double>(sorted.size());
  long double d = 0.0L;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const long double f = cdf(sorted[i]);
    const long double above = static_cast<long double>(i + 1) / n - f;
    const long double below = f - static_cast<long double>(i) / n;
    d = std::max({d, above, below});
  }
  return static_cast<double>(d);
}

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double kPi = std::numbers::pi;
  double p = 0.0;
  if (lambda < 1.18) {
    // Jacobi theta form, fast for small lambda.
    double sum = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double m = 2.0 * k - 1.0;
      const double term = std::exp(-m * m * kPi * kPi / (8.0 * lambda * lambda));
      sum += term;
      if (term < 1e-18) break;
    }
    p = 1.0 - std::sqrt(2.0 * kPi) / lambda * sum;
  } else {
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      sum += (k % 2 ? 1.0 : -1.0) * term;
      if (term < 1e-18) break;
    }
    p = 2.0 * sum;
  }
  return std::clamp(p, 0.0, 1.0);
}

TestResult ks_normality(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 5) throw DomainError("KS normality test needs at least 5 observations");
  double mean = 0.0;
  for (const double x : sample) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (const double x : sample) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw DegenerateError("KS normality test on a constant sample");

  TestResult result;
  result.n = n;
  result.method = Method::kAsymptotic;
  result.statistic =
      ks_statistic(sample, [&](double x) { return normal_cdf((x - mean) / sd); });
  const double root_n = std::sqrt(static_cast<double>(n));
  result.p_value =
      kolmogorov_survival((root_n + 0.12 + 0.11 / root_n) * result.statistic);
  result.mark = significance_mark(result.p_value);
  return result;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile must lie in [0, 1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

BoxSummary box_summary(std::span<const double> sample) {
  if (sample.empty()) throw DomainError("box summary of an empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  BoxSummary box;
  box.median = quantile_sorted(sorted, 0.5);
  box.q1 = quantile_sorted(sorted, 0.25);
  box.q3 = quantile_sorted(sorted, 0.75);
  const double iqr = box.q3 - box.q1;
  const double low_fence = box.q1 - 1.5 * iqr;
  const double high_fence = box.q3 + 1.5 * iqr;
  box.whisker_low = box.q1;
  box.whisker_high = box.q3;
  bool seen = false;
  for (const double x : sorted) {
    if (x < low_fence || x > high_fence) {
      box.outliers.push_back(x);
      continue;
    }
    if (!seen) {
      box.whisker_low = x;
      seen = true;
    }
    box.whisker_high = x;
  }
  return box;
}

}  // namespace myopass::stats
