#pragma once

#include <span>
#include <vector>

namespace goodweights {

/// Streaming mean and variance (Welford), mergeable across workers.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);

  long count() const { return n_; }
  double mean() const { return mean_; }
  /// Sample variance (n - 1 denominator); 0 for fewer than two values.
  double variance() const;
  double stddev() const;
  /// stddev / mean; NaN when the mean is zero.
  double cv() const;
  double standard_error() const;

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Summary {
  long count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double cv = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Two-pass summary with sample standard deviation.
Summary summarize(std::span<const double> xs);

double median(std::vector<double> xs);

/// Least-squares nondecreasing fit (pool adjacent violators) with optional
/// positive weights.
std::vector<double> isotonic_fit(std::span<const double> y, std::span<const double> weights = {});

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test; the p-value uses the asymptotic
/// Kolmogorov distribution with Stephens' small-sample correction.
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace goodweights
