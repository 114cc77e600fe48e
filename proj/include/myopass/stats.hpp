#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace myopass::stats {

enum class Sidedness {
  kTwoSided,
  kGreater,  // first sample tends to exceed the second
  kLess,
};

enum class Method { kExact, kNormalApproximation, kAsymptotic };

std::string_view to_string(Method method);
std::string_view to_string(Sidedness sidedness);
/// Inverse of to_string; throws DomainError for unknown text.
Sidedness parse_sidedness(std::string_view text);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  Method method = Method::kExact;
  std::string mark;  // "", "*" (p < 0.05) or "**" (p < 0.001)
  std::size_t n = 0;  // observations used
};

/// "*" iff p < 0.05, "**" iff p < 0.001.
std::string significance_mark(double p_value);

inline constexpr std::size_t kExactWilcoxonLimit = 12;

/// Wilcoxon signed-rank test on the paired differences x[i] - y[i].
/// Zero differences are dropped, tied magnitudes get average ranks and the
/// statistic is W+ (rank sum of positive differences). For n <= 12 the p
/// value is exact over all 2^n sign patterns; above that a normal
/// approximation with continuity correction and tie-adjusted variance is
/// used. Throws DegenerateError when every difference is zero, DomainError
/// for unequal lengths or fewer than 5 non-zero differences.
TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                Sidedness sidedness = Sidedness::kTwoSided);

/// Same test on precomputed differences.
TestResult wilcoxon_signed_rank(std::span<const double> differences,
                                Sidedness sidedness = Sidedness::kTwoSided);

/// Average ranks (1-based) of |values|.
std::vector<double> signed_rank_magnitudes(std::span<const double> values);

/// sup |ECDF - F| computed at the step corners of the sorted sample.
double ks_statistic(std::span<const double> sample,
                    const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov survival function Q(lambda) = P(K > lambda).
double kolmogorov_survival(double lambda);

/// One-sample Kolmogorov-Smirnov test against the normal distribution with
/// the sample's own mean and standard deviation. Estimating the parameters
/// makes the plain KS p value conservative (it is larger than the Lilliefors
/// value). Throws DomainError for n < 5 and DegenerateError for zero
/// variance.
TestResult ks_normality(std::span<const double> sample);

double normal_cdf(double z);

struct BoxSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;  // ascending
};

/// Quartiles by linear interpolation between order statistics; whiskers at
/// the most extreme points within 1.5 IQR of the quartiles.
BoxSummary box_summary(std::span<const double> sample);

/// Linear-interpolation quantile of a sorted sample, q in [0, 1].
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace myopass::stats
