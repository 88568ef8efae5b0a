#include "natex/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "natex/util.hpp"

namespace natex::stats {

namespace {

constexpr size_t kExactPLimit = 25;    // sign enumeration bound for the p-value
constexpr size_t kExactCiLimit = 300;  // exact null quantiles for the interval
constexpr size_t kWalshMaterializeLimit = 2000;

// midranks of |diffs|, doubled so ties stay integral
struct Ranked {
  std::vector<long long> doubled;  // doubled midrank per diff, input order
  std::vector<size_t> tie_sizes;
};

Ranked midranks(const std::vector<double>& abs_diffs) {
  size_t n = abs_diffs.size();
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return abs_diffs[a] < abs_diffs[b]; });
  Ranked r;
  r.doubled.resize(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && abs_diffs[idx[j]] == abs_diffs[idx[i]]) ++j;
    // ranks i+1 .. j, midrank = (i+1+j)/2, doubled = i+1+j
    long long doubled = static_cast<long long>(i) + 1 + static_cast<long long>(j);
    for (size_t k = i; k < j; ++k) r.doubled[idx[k]] = doubled;
    r.tie_sizes.push_back(j - i);
    i = j;
  }
  return r;
}

// Exact two-sided tail of the tied statistic by counting sign assignments.
double exact_p(const std::vector<long long>& doubled_pos_ranks, long long w2_obs,
               long long sum2) {
  size_t n = doubled_pos_ranks.size();
  std::vector<uint64_t> dp(static_cast<size_t>(sum2) + 1, 0);
  dp[0] = 1;
  for (long long d : doubled_pos_ranks)
    for (long long w = sum2; w >= d; --w) dp[static_cast<size_t>(w)] += dp[static_cast<size_t>(w - d)];
  long long c = std::llabs(2 * w2_obs - sum2);
  uint64_t hits = 0;
  for (long long w = 0; w <= sum2; ++w)
    if (std::llabs(2 * w - sum2) >= c) hits += dp[static_cast<size_t>(w)];
  return static_cast<double>(hits) / std::ldexp(1.0, static_cast<int>(n));
}

// P(W <= q) for the untied statistic, computed on probabilities to avoid
// overflow for larger n.
std::vector<double> signrank_pmf(size_t n) {
  size_t m = n * (n + 1) / 2;
  std::vector<double> dp(m + 1, 0.0);
  dp[0] = 1.0;
  size_t reach = 0;
  for (size_t i = 1; i <= n; ++i) {
    reach += i;
    for (size_t w = reach + 1; w-- > i;) dp[w] = 0.5 * (dp[w] + dp[w - i]);
    for (size_t w = i; w-- > 0;) dp[w] *= 0.5;
  }
  return dp;
}

// k-th smallest (0-based) Walsh average (d_i+d_j)/2, i<=j, of sorted diffs.
double kth_walsh(const std::vector<double>& sorted, size_t k) {
  size_t n = sorted.size();
  size_t m = n * (n + 1) / 2;
  if (m <= kWalshMaterializeLimit) {
    std::vector<double> w;
    w.reserve(m);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i; j < n; ++j) w.push_back(0.5 * (sorted[i] + sorted[j]));
    std::sort(w.begin(), w.end());
    return w[k];
  }
  auto count_le = [&](double v) {
    // pairs i<=j with d_i + d_j <= 2v
    size_t count = 0;
    size_t j = n;
    for (size_t i = 0; i < n; ++i) {
      if (j < i + 1) j = i + 1;
      while (j > i && sorted[i] + sorted[j - 1] > 2.0 * v) --j;
      if (j <= i) break;
      count += j - i;
      if (j == i) break;
    }
    return count;
  };
  double lo = sorted.front(), hi = sorted.back();
  for (int it = 0; it < 200 && lo < hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (count_le(mid) >= k + 1)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  // Acklam's rational approximation, |relative error| < 1.15e-9
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("normal_quantile: p must be in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > phigh) {
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

double bonferroni(double alpha, size_t m) {
  if (m == 0) throw ConfigError("bonferroni: family size must be at least 1");
  return alpha / static_cast<double>(m);
}

double psignrank(long long q, size_t n) {
  if (q < 0) return 0.0;
  size_t m = n * (n + 1) / 2;
  if (static_cast<size_t>(q) >= m) return 1.0;
  auto pmf = signrank_pmf(n);
  double acc = 0.0;
  for (long long w = 0; w <= q; ++w) acc += pmf[static_cast<size_t>(w)];
  return acc;
}

long long qsignrank(double p, size_t n) {
  size_t m = n * (n + 1) / 2;
  if (n <= kExactCiLimit) {
    auto pmf = signrank_pmf(n);
    double acc = 0.0;
    for (size_t w = 0; w <= m; ++w) {
      acc += pmf[w];
      if (acc >= p - 1e-12) return static_cast<long long>(w);
    }
    return static_cast<long long>(m);
  }
  double nn = static_cast<double>(n);
  double mu = nn * (nn + 1) / 4.0;
  double sigma = std::sqrt(nn * (nn + 1) * (2 * nn + 1) / 24.0);
  double q = std::floor(mu + normal_quantile(p) * sigma);
  return std::max(0LL, std::min(static_cast<long long>(m), static_cast<long long>(q)));
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& diffs, double alpha,
                                    size_t family_size) {
  WilcoxonResult res;
  res.n = diffs.size();
  res.alpha_adjusted = bonferroni(alpha, family_size);

  std::vector<double> nonzero;
  for (double d : diffs)
    if (d != 0.0) nonzero.push_back(d);
  res.n_nonzero = nonzero.size();
  if (nonzero.empty()) {
    res.p_two_sided = 1.0;
    res.pseudomedian = 0.0;
    res.ci_low = 0.0;
    res.ci_high = 0.0;
    return res;
  }

  size_t n = nonzero.size();
  std::vector<double> mags(n);
  for (size_t i = 0; i < n; ++i) mags[i] = std::fabs(nonzero[i]);
  Ranked ranked = midranks(mags);

  long long w2 = 0, sum2 = 0;
  for (size_t i = 0; i < n; ++i) {
    sum2 += ranked.doubled[i];
    if (nonzero[i] > 0) w2 += ranked.doubled[i];
  }
  res.statistic = static_cast<double>(w2) / 2.0;

  if (n <= kExactPLimit) {
    res.exact = true;
    res.p_two_sided = exact_p(ranked.doubled, w2, sum2);
  } else {
    res.exact = false;
    double nn = static_cast<double>(n);
    double mu = nn * (nn + 1) / 4.0;
    double tie_corr = 0.0;
    for (size_t t : ranked.tie_sizes) {
      double td = static_cast<double>(t);
      tie_corr += (td * td * td - td);
    }
    double var = nn * (nn + 1) * (2 * nn + 1) / 24.0 - tie_corr / 48.0;
    double w = res.statistic;
    if (var <= 0) {
      res.p_two_sided = 1.0;
    } else {
      double cc = w > mu ? -0.5 : (w < mu ? 0.5 : 0.0);
      double z = (w - mu + cc) / std::sqrt(var);
      res.p_two_sided = 2.0 * (1.0 - normal_cdf(std::fabs(z)));
    }
  }
  res.p_two_sided = std::min(1.0, std::max(res.p_two_sided, 1e-300));

  std::sort(nonzero.begin(), nonzero.end());
  size_t m = n * (n + 1) / 2;
  if (m % 2 == 1) {
    res.pseudomedian = kth_walsh(nonzero, m / 2);
  } else {
    res.pseudomedian =
        0.5 * (kth_walsh(nonzero, m / 2 - 1) + kth_walsh(nonzero, m / 2));
  }
  long long k = std::max(1LL, qsignrank(res.alpha_adjusted / 2.0, n));
  if (static_cast<size_t>(k) > m) k = static_cast<long long>(m);
  res.ci_low = kth_walsh(nonzero, static_cast<size_t>(k - 1));
  res.ci_high = kth_walsh(nonzero, m - static_cast<size_t>(k));
  return res;
}

std::vector<std::string> frequent_levels(const std::vector<std::string>& values,
                                         size_t min_count) {
  std::map<std::string, size_t> counts;
  for (const auto& v : values) ++counts[v];
  std::vector<std::string> out;
  for (const auto& [level, count] : counts)
    if (count >= min_count) out.push_back(level);
  return out;
}

namespace {

struct Fit {
  Eigen::VectorXd beta;
  Eigen::VectorXd resid;
  double sse = 0, sst = 0, sigma2 = 0;
  Eigen::MatrixXd xtx_inv;
};

Fit fit_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           const std::vector<std::string>& names) {
  Eigen::Index n = X.rows(), p = X.cols();
  if (n <= p)
    throw DataError("regression: need more rows (" + std::to_string(n) +
                    ") than predictors (" + std::to_string(p) + ")");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    auto perm = qr.colsPermutation().indices();
    std::string cols;
    for (Eigen::Index i = qr.rank(); i < p; ++i) {
      if (!cols.empty()) cols += ", ";
      cols += names[static_cast<size_t>(perm[i])];
    }
    throw DataError("regression: design is rank deficient; dependent columns: " + cols);
  }
  Fit f;
  f.beta = qr.solve(y);
  f.resid = y - X * f.beta;
  f.sse = f.resid.squaredNorm();
  double ybar = y.mean();
  f.sst = (y.array() - ybar).square().sum();
  f.sigma2 = f.sse / static_cast<double>(n - p);
  f.xtx_inv = (X.transpose() * X).inverse();
  return f;
}

}  // namespace

OlsResult ols_fit(const std::vector<double>& y,
                  const std::vector<std::vector<double>>& columns,
                  const std::vector<std::string>& column_names) {
  if (columns.size() != column_names.size())
    throw ConfigError("regression: column/name count mismatch");
  size_t n = y.size();
  for (const auto& c : columns)
    if (c.size() != n) throw ConfigError("regression: ragged design columns");
  size_t p = columns.size() + 1;

  std::vector<std::string> names;
  names.push_back("intercept");
  for (const auto& nm : column_names) names.push_back(nm);

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::VectorXd Y(static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) {
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (size_t j = 0; j < columns.size(); ++j)
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = columns[j][i];
    Y(static_cast<Eigen::Index>(i)) = y[i];
  }

  Fit first = fit_ls(X, Y, names);
  double cook_cut = 4.0 / static_cast<double>(n);
  std::vector<size_t> keep;
  for (size_t i = 0; i < n; ++i) {
    Eigen::Index ii = static_cast<Eigen::Index>(i);
    double h = (X.row(ii) * first.xtx_inv * X.row(ii).transpose())(0, 0);
    double d;
    if (first.sigma2 <= 0) {
      d = 0.0;  // perfect fit: nothing is influential
    } else if (h >= 1.0 - 1e-12) {
      d = std::numeric_limits<double>::infinity();
    } else {
      double e = first.resid(ii);
      d = e * e * h /
          (static_cast<double>(p) * first.sigma2 * (1.0 - h) * (1.0 - h));
    }
    if (!(d > cook_cut)) keep.push_back(i);
  }

  Eigen::MatrixXd X2(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(p));
  Eigen::VectorXd Y2(static_cast<Eigen::Index>(keep.size()));
  for (size_t r = 0; r < keep.size(); ++r) {
    X2.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(keep[r]));
    Y2(static_cast<Eigen::Index>(r)) = Y(static_cast<Eigen::Index>(keep[r]));
  }
  Fit final = fit_ls(X2, Y2, names);

  OlsResult out;
  out.names = names;
  out.n_used = keep.size();
  out.n_removed_outliers = n - keep.size();
  out.r_squared = final.sst > 0 ? 1.0 - final.sse / final.sst : 0.0;
  for (size_t j = 0; j < p; ++j) {
    out.coef.push_back(final.beta(static_cast<Eigen::Index>(j)));
    out.se.push_back(std::sqrt(final.sigma2 *
                               final.xtx_inv(static_cast<Eigen::Index>(j),
                                             static_cast<Eigen::Index>(j))));
  }
  // VIF: regress each predictor on the remaining ones (intercept included)
  for (size_t j = 1; j < p; ++j) {
    Eigen::MatrixXd Xo(X2.rows(), static_cast<Eigen::Index>(p - 1));
    Eigen::Index c = 0;
    for (size_t k = 0; k < p; ++k) {
      if (k == j) continue;
      Xo.col(c++) = X2.col(static_cast<Eigen::Index>(k));
    }
    Eigen::VectorXd xj = X2.col(static_cast<Eigen::Index>(j));
    Eigen::VectorXd b = Xo.colPivHouseholderQr().solve(xj);
    double sse = (xj - Xo * b).squaredNorm();
    double xbar = xj.mean();
    double sst = (xj.array() - xbar).square().sum();
    double r2 = sst > 0 ? 1.0 - sse / sst : 0.0;
    double vif = r2 >= 1.0 - 1e-12 ? std::numeric_limits<double>::infinity()
                                   : 1.0 / (1.0 - r2);
    out.vif[names[j]] = vif;
    if (vif >= 5.0) out.vif_warning = true;
  }
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (sorted.size() == 1) return sorted[0];
  double h = p * static_cast<double>(sorted.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(h));
  if (lo >= sorted.size() - 1) return sorted.back();
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return quantile_sorted(values, 0.5);
}

Descriptives describe(std::vector<double> values) {
  Descriptives d;
  d.n = values.size();
  if (values.empty()) {
    double nan = std::numeric_limits<double>::quiet_NaN();
    d.mean = d.median = d.q25 = d.q75 = d.min = d.max = nan;
    return d;
  }
  std::sort(values.begin(), values.end());
  double sum = 0;
  for (double v : values) sum += v;
  d.mean = sum / static_cast<double>(values.size());
  d.median = quantile_sorted(values, 0.5);
  d.q25 = quantile_sorted(values, 0.25);
  d.q75 = quantile_sorted(values, 0.75);
  d.min = values.front();
  d.max = values.back();
  return d;
}

}  // namespace natex::stats
