#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "goodweights/dynamics.hpp"
#include "goodweights/train.hpp"

namespace goodweights {

struct ForecastConfig {
  double theta = 0.05;
  double lambda_max = 0.91;
  long horizon_steps = 1500;

  void validate() const;
};

struct ForecastOutcome {
  /// Lyapunov-scaled time of the first threshold exceedance.
  double tau_f = 0.0;
  /// True when the error stayed below theta over the whole horizon; tau_f
  /// then holds the horizon itself.
  bool censored = false;
  /// Index n of the first exceedance, or the number of compared steps when
  /// censored.
  long steps = 0;
};

/// Autonomous rollout of a surrogate. `trajectory` holds the states computed
/// before any divergence; if a state became non-finite, `diverged` is set and
/// `divergence_step` names that step (the rollout stops there).
struct Rollout {
  Trajectory trajectory;
  bool diverged = false;
  long divergence_step = -1;
};

/// n steps of u_{k+1} = W tanh(W_in u_k + b_in); returns up to n + 1 states.
/// `dt` labels the sampling step of the produced trajectory.
Rollout iterate(const SurrogateModel& model, const Eigen::Ref<const Eigen::VectorXd>& u0, long n,
                double dt = 0.02);

/// First n >= 1 (up to the horizon) where ||pred_n - truth_n||^2 / ||truth_n||^2
/// exceeds theta, reported as tau_f = n dt lambda_max. Throws
/// std::domain_error when a compared truth state is zero.
ForecastOutcome forecast_time(const Trajectory& pred, const Trajectory& truth, const ForecastConfig& cfg);

/// Rolls the model out from the first validation state and scores it against
/// the validation trajectory over min(horizon, length - 1) steps. A diverged
/// rollout counts as exceeding the threshold at its divergence step.
ForecastOutcome evaluate_model(const SurrogateModel& model, const Trajectory& validation,
                               const ForecastConfig& cfg);

struct HistogramRange {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  int bins = 100;
};

/// Per-coordinate marginal histograms. Samples falling outside [lo, hi] are
/// tallied as underflow/overflow, so bins + underflow + overflow == total.
struct MarginalHistograms {
  HistogramRange range;
  std::vector<std::vector<long>> counts;  // [coordinate][bin]
  std::vector<long> underflow;
  std::vector<long> overflow;
  long total = 0;
  bool valid = true;

  Eigen::Index dim() const { return range.lo.size(); }
  double bin_left(Eigen::Index coord, int bin) const;
  double bin_right(Eigen::Index coord, int bin) const;
  void add(const Eigen::Ref<const Eigen::VectorXd>& u);
  void merge(const MarginalHistograms& other);
};

/// Range from a reference sample, padded by `pad` times the extent on each side.
HistogramRange histogram_range(const Eigen::Ref<const Eigen::MatrixXd>& reference, int bins, double pad = 0.05);

MarginalHistograms empty_histograms(const HistogramRange& range);
MarginalHistograms histogram_of(const Eigen::Ref<const Eigen::MatrixXd>& samples, const HistogramRange& range);

struct HistogramRun {
  MarginalHistograms histograms;
  Trajectory reference;  // the recorded samples (after burn-in)
};

/// Long run of the true Lorenz-63 system from u0: samples after `burn_in`
/// time units, until `total_time`. With no range given, the range is fitted
/// to the run itself (padded 5%).
HistogramRun true_system_histograms(const Eigen::Ref<const Eigen::VectorXd>& u0, double total_time,
                                    double burn_in, int bins, const IntegratorConfig& cfg = {},
                                    const HistogramRange* range = nullptr);

/// Long rollout of a surrogate from u0, binned on `range` (normally taken
/// from the true-system run). A diverged rollout is marked invalid and keeps
/// the counts gathered so far.
MarginalHistograms model_histograms(const SurrogateModel& model, const Eigen::Ref<const Eigen::VectorXd>& u0,
                                    double total_time, double burn_in, double dt, const HistogramRange& range);

/// Sum over bins (plus underflow and overflow) of |p_a - p_b| for each
/// coordinate; an invalid histogram is at the maximal distance 2.
Eigen::VectorXd l1_distance(const MarginalHistograms& a, const MarginalHistograms& b);

/// CSV `coord,bin_left,bin_right,count`.
void write_histograms_csv(std::ostream& os, const MarginalHistograms& h);

}  // namespace goodweights
