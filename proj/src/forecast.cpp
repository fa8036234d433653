#include "goodweights/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "goodweights/numerics.hpp"

namespace goodweights {

void ForecastConfig::validate() const {
  if (!(theta > 0.0)) throw std::invalid_argument("forecast: theta must be > 0");
  if (!(lambda_max > 0.0)) throw std::invalid_argument("forecast: lambda_max must be > 0");
  if (horizon_steps < 1) throw std::invalid_argument("forecast: horizon_steps must be >= 1");
}

namespace {

// Surrogate step with preallocated scratch.
class SurrogateStepper {
 public:
  explicit SurrogateStepper(const SurrogateModel& model)
      : model_(model), phi_(model.feature_dim()) {}

  void step(const Eigen::Ref<const Eigen::VectorXd>& u, Eigen::Ref<Eigen::VectorXd> out) {
    phi_.noalias() = model_.iw.w_in * u;
    phi_ += model_.iw.b_in;
    tanh_inplace({phi_.data(), static_cast<std::size_t>(phi_.size())});
    out.noalias() = model_.ow.w * phi_;
  }

 private:
  const SurrogateModel& model_;
  Eigen::VectorXd phi_;
};

}  // namespace

Rollout iterate(const SurrogateModel& model, const Eigen::Ref<const Eigen::VectorXd>& u0, long n, double dt) {
  model.validate();
  if (n < 0) throw std::invalid_argument("iterate: n must be >= 0");
  if (u0.size() != model.state_dim()) throw std::invalid_argument("iterate: initial state has wrong dimension");

  Rollout out;
  out.trajectory.dt = dt;
  out.trajectory.states.resize(u0.size(), n + 1);
  out.trajectory.states.col(0) = u0;
  SurrogateStepper stepper(model);
  for (long k = 1; k <= n; ++k) {
    stepper.step(out.trajectory.states.col(k - 1), out.trajectory.states.col(k));
    if (!out.trajectory.states.col(k).allFinite()) {
      out.diverged = true;
      out.divergence_step = k;
      out.trajectory.states.conservativeResize(Eigen::NoChange, k);
      break;
    }
  }
  return out;
}

namespace {

ForecastOutcome score(const Eigen::Ref<const Eigen::MatrixXd>& pred, const Eigen::Ref<const Eigen::MatrixXd>& truth,
                      long compare_steps, double dt, const ForecastConfig& cfg) {
  for (long n = 1; n <= compare_steps; ++n) {
    const double denom = truth.col(n).squaredNorm();
    if (denom == 0.0) throw std::domain_error("forecast_time: zero truth state at step " + std::to_string(n));
    if (n >= pred.cols()) return {static_cast<double>(n) * dt * cfg.lambda_max, false, n};
    const double rel = (pred.col(n) - truth.col(n)).squaredNorm() / denom;
    // A NaN error counts as an exceedance.
    if (!(rel <= cfg.theta)) return {static_cast<double>(n) * dt * cfg.lambda_max, false, n};
  }
  return {static_cast<double>(compare_steps) * dt * cfg.lambda_max, true, compare_steps};
}

}  // namespace

ForecastOutcome forecast_time(const Trajectory& pred, const Trajectory& truth, const ForecastConfig& cfg) {
  cfg.validate();
  if (pred.size() != truth.size()) throw std::invalid_argument("forecast_time: trajectories differ in length");
  if (pred.dim() != truth.dim()) throw std::invalid_argument("forecast_time: trajectories differ in dimension");
  if (truth.size() < 1) throw std::invalid_argument("forecast_time: empty trajectories");
  const long compare = std::min<long>(cfg.horizon_steps, truth.size() - 1);
  return score(pred.states, truth.states, compare, truth.dt, cfg);
}

ForecastOutcome evaluate_model(const SurrogateModel& model, const Trajectory& validation, const ForecastConfig& cfg) {
  cfg.validate();
  if (validation.size() < 2) throw std::invalid_argument("evaluate_model: validation needs at least two states");
  const long compare = std::min<long>(cfg.horizon_steps, validation.size() - 1);
  const Rollout rollout = iterate(model, validation.state(0), compare, validation.dt);
  return score(rollout.trajectory.states, validation.states, compare, validation.dt, cfg);
}

double MarginalHistograms::bin_left(Eigen::Index coord, int bin) const {
  const double width = (range.hi[coord] - range.lo[coord]) / range.bins;
  return range.lo[coord] + width * bin;
}

double MarginalHistograms::bin_right(Eigen::Index coord, int bin) const {
  return bin + 1 == range.bins ? range.hi[coord] : bin_left(coord, bin + 1);
}

void MarginalHistograms::add(const Eigen::Ref<const Eigen::VectorXd>& u) {
  for (Eigen::Index c = 0; c < dim(); ++c) {
    const double x = u[c];
    const auto cu = static_cast<std::size_t>(c);
    if (!(x >= range.lo[c])) {
      ++underflow[cu];
    } else if (x > range.hi[c]) {
      ++overflow[cu];
    } else {
      const double t = (x - range.lo[c]) / (range.hi[c] - range.lo[c]);
      const int bin = std::min(range.bins - 1, static_cast<int>(t * range.bins));
      ++counts[cu][static_cast<std::size_t>(bin)];
    }
  }
  ++total;
}

void MarginalHistograms::merge(const MarginalHistograms& other) {
  if (other.dim() != dim() || other.range.bins != range.bins || other.range.lo != range.lo ||
      other.range.hi != range.hi)
    throw std::invalid_argument("histogram merge: ranges differ");
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t b = 0; b < counts[c].size(); ++b) counts[c][b] += other.counts[c][b];
    underflow[c] += other.underflow[c];
    overflow[c] += other.overflow[c];
  }
  total += other.total;
  valid = valid && other.valid;
}

HistogramRange histogram_range(const Eigen::Ref<const Eigen::MatrixXd>& reference, int bins, double pad) {
  if (bins < 2) throw std::invalid_argument("histogram: bins must be >= 2");
  if (reference.cols() < 1) throw std::invalid_argument("histogram: empty reference");
  HistogramRange r;
  r.bins = bins;
  r.lo = reference.rowwise().minCoeff();
  r.hi = reference.rowwise().maxCoeff();
  const Eigen::VectorXd extent = (r.hi - r.lo).cwiseMax(1e-12);
  r.lo -= pad * extent;
  r.hi += pad * extent;
  return r;
}

MarginalHistograms empty_histograms(const HistogramRange& range) {
  if (range.bins < 2) throw std::invalid_argument("histogram: bins must be >= 2");
  MarginalHistograms h;
  h.range = range;
  const auto d = static_cast<std::size_t>(range.lo.size());
  h.counts.assign(d, std::vector<long>(static_cast<std::size_t>(range.bins), 0));
  h.underflow.assign(d, 0);
  h.overflow.assign(d, 0);
  return h;
}

MarginalHistograms histogram_of(const Eigen::Ref<const Eigen::MatrixXd>& samples, const HistogramRange& range) {
  MarginalHistograms h = empty_histograms(range);
  for (Eigen::Index n = 0; n < samples.cols(); ++n) h.add(samples.col(n));
  return h;
}

namespace {

void check_times(double total_time, double burn_in) {
  if (!(burn_in >= 0.0 && total_time > burn_in))
    throw std::invalid_argument("histograms: need total_time > burn_in >= 0");
}

}  // namespace

HistogramRun true_system_histograms(const Eigen::Ref<const Eigen::VectorXd>& u0, double total_time, double burn_in,
                                    int bins, const IntegratorConfig& cfg, const HistogramRange* range) {
  check_times(total_time, burn_in);
  const long burn_steps = std::lround(burn_in / cfg.dt_sample);
  const long total_steps = std::lround(total_time / cfg.dt_sample);
  IntegratorConfig no_transient = cfg;
  no_transient.transient_time = burn_in;
  const Lorenz63 system;
  const State start = settle(system, u0, no_transient);
  HistogramRun run;
  run.reference = integrate(system, start, cfg, total_steps - burn_steps - 1);
  run.reference.t0 = static_cast<double>(burn_steps) * cfg.dt_sample;
  run.histograms = histogram_of(run.reference.states, range ? *range : histogram_range(run.reference.states, bins));
  return run;
}

MarginalHistograms model_histograms(const SurrogateModel& model, const Eigen::Ref<const Eigen::VectorXd>& u0,
                                    double total_time, double burn_in, double dt, const HistogramRange& range) {
  check_times(total_time, burn_in);
  model.validate();
  if (u0.size() != model.state_dim()) throw std::invalid_argument("model_histograms: wrong state dimension");
  const long burn_steps = std::lround(burn_in / dt);
  const long total_steps = std::lround(total_time / dt);
  MarginalHistograms h = empty_histograms(range);
  SurrogateStepper stepper(model);
  Eigen::VectorXd u = u0;
  Eigen::VectorXd next(u0.size());
  for (long k = 0; k < total_steps; ++k) {
    if (k >= burn_steps) h.add(u);
    if (k + 1 == total_steps) break;
    stepper.step(u, next);
    if (!next.allFinite()) {
      h.valid = false;
      break;
    }
    u.swap(next);
  }
  return h;
}

Eigen::VectorXd l1_distance(const MarginalHistograms& a, const MarginalHistograms& b) {
  if (a.dim() != b.dim() || a.range.bins != b.range.bins)
    throw std::invalid_argument("l1_distance: histograms have different shapes");
  Eigen::VectorXd out(a.dim());
  for (Eigen::Index c = 0; c < a.dim(); ++c) {
    if (!a.valid || !b.valid || a.total == 0 || b.total == 0) {
      out[c] = 2.0;
      continue;
    }
    const auto cu = static_cast<std::size_t>(c);
    const double na = static_cast<double>(a.total);
    const double nb = static_cast<double>(b.total);
    double sum = std::abs(a.underflow[cu] / na - b.underflow[cu] / nb) +
                 std::abs(a.overflow[cu] / na - b.overflow[cu] / nb);
    for (std::size_t k = 0; k < a.counts[cu].size(); ++k)
      sum += std::abs(a.counts[cu][k] / na - b.counts[cu][k] / nb);
    out[c] = sum;
  }
  return out;
}

void write_histograms_csv(std::ostream& os, const MarginalHistograms& h) {
  os << "coord,bin_left,bin_right,count\n" << std::setprecision(17);
  static constexpr const char* kNames[] = {"x", "y", "z"};
  for (Eigen::Index c = 0; c < h.dim(); ++c) {
    const std::string name = h.dim() == 3 ? kNames[c] : "u" + std::to_string(c);
    for (int b = 0; b < h.range.bins; ++b)
      os << name << ',' << h.bin_left(c, b) << ',' << h.bin_right(c, b) << ','
         << h.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)] << '\n';
  }
}

}  // namespace goodweights
