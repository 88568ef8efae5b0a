#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace natex::stats {

// Paired signed-rank test over difference scores. Zero differences are
// dropped, tied magnitudes get midranks. The two-sided p is exact (sign
// enumeration) for up to 25 nonzero differences and a tie- and
// continuity-corrected normal approximation above. The confidence interval
// is the pseudomedian interval built from Walsh averages at level
// 1 - alpha/family_size.
struct WilcoxonResult {
  size_t n = 0;          // input size
  size_t n_nonzero = 0;  // after dropping zeros
  double statistic = 0;  // W: sum of positive midranks
  double p_two_sided = 1;
  double pseudomedian = 0;  // median of Walsh averages
  double ci_low = 0;
  double ci_high = 0;
  double alpha_adjusted = 0.05;
  bool exact = true;  // p from enumeration rather than approximation
};

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& diffs,
                                    double alpha = 0.05, size_t family_size = 1);

double bonferroni(double alpha, size_t m);  // alpha / m

// Exact null distribution helpers for the untied signed-rank statistic,
// exposed for the test oracles. qsignrank(p, n) is the smallest integer q
// with P(W <= q) >= p.
double psignrank(long long q, size_t n);
long long qsignrank(double p, size_t n);

double normal_cdf(double z);
double normal_quantile(double p);  // inverse of normal_cdf

// Least squares with an implicit intercept. Rows whose Cook's distance
// exceeds 4/n after the first fit are removed and the model refit exactly
// once. Throws DataError naming the dependent columns when the design is
// rank deficient.
struct OlsResult {
  std::vector<std::string> names;  // "intercept" first
  std::vector<double> coef;
  std::vector<double> se;
  double r_squared = 0;
  size_t n_used = 0;
  size_t n_removed_outliers = 0;
  std::map<std::string, double> vif;  // per non-intercept predictor
  bool vif_warning = false;           // any VIF >= 5
};

OlsResult ols_fit(const std::vector<double>& y,
                  const std::vector<std::vector<double>>& columns,
                  const std::vector<std::string>& column_names);

// Distinct values that occur at least min_count times, sorted.
std::vector<std::string> frequent_levels(const std::vector<std::string>& values,
                                         size_t min_count);

struct Descriptives {
  size_t n = 0;
  double mean = 0, median = 0, q25 = 0, q75 = 0, min = 0, max = 0;
};

Descriptives describe(std::vector<double> values);  // n==0 leaves NaNs

// Linear interpolation between closest ranks; input must be sorted.
double quantile_sorted(const std::vector<double>& sorted, double p);
double median_of(std::vector<double> values);

}  // namespace natex::stats
