#include "goodweights/nnbaseline.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "goodweights/numerics.hpp"
#include "goodweights/parallel.hpp"
#include "goodweights/random.hpp"

namespace goodweights {

namespace {
constexpr Eigen::Index kColumnBlock = 256;
}

void NetParams::validate() const {
  if (w_in.rows() < 1 || w_in.cols() < 1) throw std::invalid_argument("network: empty parameters");
  if (b_in.size() != w_in.rows() || w.rows() != w_in.cols() || w.cols() != w_in.rows())
    throw std::invalid_argument("network: inconsistent parameter shapes");
}

bool NetParams::all_finite() const { return w_in.allFinite() && b_in.allFinite() && w.allFinite(); }

NetParams NetParams::zeros(Eigen::Index feature_dim, Eigen::Index state_dim) {
  return {Eigen::MatrixXd::Zero(feature_dim, state_dim), Eigen::VectorXd::Zero(feature_dim),
          Eigen::MatrixXd::Zero(state_dim, feature_dim)};
}

SurrogateModel NetParams::model(double beta) const {
  SurrogateModel m;
  m.iw = internal();
  m.ow.w = w;
  m.beta = beta;
  return m;
}

NetParams glorot_init(long feature_dim, long state_dim, std::uint64_t seed) {
  if (feature_dim < 1 || state_dim < 1) throw std::invalid_argument("glorot_init: dimensions must be >= 1");
  Rng rng(seed);
  NetParams p = NetParams::zeros(feature_dim, state_dim);
  const double bound = std::sqrt(6.0 / static_cast<double>(feature_dim + state_dim));
  // Both matrices connect D and D_r units, so they share the bound.
  for (long i = 0; i < feature_dim; ++i)
    for (long j = 0; j < state_dim; ++j) p.w_in(i, j) = rng.uniform(-bound, bound);
  for (long i = 0; i < state_dim; ++i)
    for (long j = 0; j < feature_dim; ++j) p.w(i, j) = rng.uniform(-bound, bound);
  return p;
}

namespace {

void check_shapes(const NetParams& p, const TrainingSet& ts) {
  p.validate();
  ts.validate();
  if (ts.inputs.rows() != p.state_dim()) throw std::invalid_argument("network: data dimension mismatch");
}

// Column-at-a-time kernels. The state dimension is tiny, so products with an
// inner dimension of D are written as D axpy/dot passes over the feature
// index, which the compiler vectorizes; everything stays in L1/L2.
template <bool kWithGradient>
double forward_backward(const NetParams& p, const TrainingSet& ts, double beta, NetParams* grad) {
  const Eigen::Index dr = p.feature_dim();
  const Eigen::Index d = p.state_dim();
  const Eigen::MatrixXd wt = p.w.transpose();  // D_r x D, columns contiguous
  Eigen::MatrixXd phi(dr, kColumnBlock);
  Eigen::VectorXd r(d);
  Eigen::VectorXd backprop(dr);
  Eigen::MatrixXd gwt;
  if constexpr (kWithGradient) gwt = Eigen::MatrixXd::Zero(dr, d);
  double fit = 0.0;
  for (Eigen::Index start = 0; start < ts.size(); start += kColumnBlock) {
    const Eigen::Index len = std::min(kColumnBlock, ts.size() - start);
    for (Eigen::Index n = 0; n < len; ++n) {
      double* __restrict z = phi.col(n).data();
      const double* __restrict b = p.b_in.data();
      for (Eigen::Index i = 0; i < dr; ++i) z[i] = b[i];
      for (Eigen::Index j = 0; j < d; ++j) {
        const double xj = ts.inputs(j, start + n);
        const double* __restrict w = p.w_in.col(j).data();
        for (Eigen::Index i = 0; i < dr; ++i) z[i] += w[i] * xj;
      }
    }
    tanh_inplace({phi.data(), static_cast<std::size_t>(dr * len)});
    for (Eigen::Index n = 0; n < len; ++n) {
      const double* __restrict z = phi.col(n).data();
      for (Eigen::Index k = 0; k < d; ++k) r[k] = wt.col(k).dot(phi.col(n)) - ts.targets(k, start + n);
      fit += r.squaredNorm();
      if constexpr (kWithGradient) {
        double* __restrict gb = grad->b_in.data();
        // g = (W^T r) * (1 - phi^2), half the gradient w.r.t. the pre-activation.
        double* __restrict g = backprop.data();
        for (Eigen::Index i = 0; i < dr; ++i) g[i] = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
          const double rk = r[k];
          const double* __restrict w = wt.col(k).data();
          double* __restrict gw = gwt.col(k).data();
          for (Eigen::Index i = 0; i < dr; ++i) {
            gw[i] += rk * z[i];
            g[i] += w[i] * rk;
          }
        }
        for (Eigen::Index i = 0; i < dr; ++i) {
          g[i] *= 1.0 - z[i] * z[i];
          gb[i] += g[i];
        }
        for (Eigen::Index j = 0; j < d; ++j) {
          const double xj = ts.inputs(j, start + n);
          double* __restrict gin = grad->w_in.col(j).data();
          for (Eigen::Index i = 0; i < dr; ++i) gin[i] += g[i] * xj;
        }
      }
    }
  }
  if constexpr (kWithGradient) {
    grad->w = 2.0 * gwt.transpose() + 2.0 * beta * p.w;
    grad->w_in *= 2.0;
    grad->b_in *= 2.0;
  }
  return fit + beta * p.w.squaredNorm();
}

}  // namespace

LossGradient loss_and_grad(const NetParams& p, const TrainingSet& ts, double beta) {
  check_shapes(p, ts);
  LossGradient out;
  out.grad = NetParams::zeros(p.feature_dim(), p.state_dim());
  out.loss = forward_backward<true>(p, ts, beta, &out.grad);
  return out;
}

double network_loss(const NetParams& p, const TrainingSet& ts, double beta) {
  check_shapes(p, ts);
  return forward_backward<false>(p, ts, beta, nullptr);
}

void SchedulerConfig::validate() const {
  if (!(eta0 > 0.0)) throw std::invalid_argument("scheduler: eta0 must be > 0");
  if (interval < 1) throw std::invalid_argument("scheduler: interval must be >= 1");
  if (!(xi > 0.0 && xi < 1.0)) throw std::invalid_argument("scheduler: xi must lie in (0, 1)");
}

SchedulerState SchedulerState::start(const SchedulerConfig& cfg) {
  cfg.validate();
  SchedulerState s;
  s.cfg = cfg;
  s.eta = cfg.eta0;
  return s;
}

SchedulerState scheduler_update(SchedulerState s, long step, double current_loss) {
  if (step < 1) throw std::invalid_argument("scheduler_update: step must be >= 1");
  if (step == 1) s.last_loss = current_loss;
  if (step % s.cfg.interval != 0) return s;
  if (s.last_loss == 0.0) {
    s.flagged = true;
    s.last_loss = current_loss;
    return s;
  }
  const double delta = (current_loss - s.last_loss) / s.last_loss;
  if (delta > s.cfg.gamma) s.eta *= delta > 0.0 ? 1.0 - s.cfg.xi : 1.0 + s.cfg.xi;
  s.last_loss = current_loss;
  return s;
}

std::string_view to_string(NetInit init) { return init == NetInit::Glorot ? "glorot" : "goodrows"; }

NetInit parse_net_init(std::string_view s) {
  if (s == "glorot") return NetInit::Glorot;
  if (s == "goodrows") return NetInit::GoodRows;
  throw std::invalid_argument("unknown network init '" + std::string(s) + "' (expected glorot or goodrows)");
}

void NetTrainConfig::validate() const {
  if (feature_dim < 1) throw std::invalid_argument("nn-train: D_r must be >= 1");
  if (!(beta >= 0.0)) throw std::invalid_argument("nn-train: beta must be >= 0");
  if (steps < 1) throw std::invalid_argument("nn-train: steps must be >= 1");
  if (checkpoint_every < 1) throw std::invalid_argument("nn-train: checkpoint_every must be >= 1");
  scheduler.validate();
  sampler.validate();
  bounds.validate();
  forecast.validate();
}

std::pair<double, long> mean_forecast_time(const SurrogateModel& model, const std::vector<Trajectory>& validation,
                                           const ForecastConfig& cfg, int workers) {
  if (validation.empty()) return {0.0, 0};
  std::vector<ForecastOutcome> outcomes(validation.size());
  parallel_for(validation.size(), workers,
               [&](std::size_t i) { outcomes[i] = evaluate_model(model, validation[i], cfg); });
  double sum = 0.0;
  long censored = 0;
  for (const auto& o : outcomes) {
    sum += o.tau_f;
    censored += o.censored ? 1 : 0;
  }
  return {sum / static_cast<double>(outcomes.size()), censored};
}

NetTrainResult train_network(const TrainingSet& ts, const std::vector<Trajectory>& validation,
                             const NetTrainConfig& cfg, const std::function<void(const Checkpoint&)>& on_checkpoint) {
  cfg.validate();
  ts.validate();
  const Eigen::Index d = ts.inputs.rows();

  NetTrainResult result;
  NetParams& p = result.params;
  p = glorot_init(cfg.feature_dim, d, derive_seed(cfg.seed, 0));
  if (cfg.init == NetInit::GoodRows) {
    const SampledWeights sw = sample_internal_weights(ts.inputs, cfg.feature_dim, 1.0, cfg.sampler,
                                                      SamplingAlgorithm::OneShot, BadMix::Balanced,
                                                      derive_seed(cfg.seed, 1));
    p.w_in = sw.weights.w_in;
    p.b_in = sw.weights.b_in;
  }

  SchedulerState sched = SchedulerState::start(cfg.scheduler);
  const double grad_scale = cfg.normalize_gradient ? 1.0 / static_cast<double>(ts.size()) : 1.0;

  auto checkpoint = [&](long step) {
    Checkpoint c;
    c.step = step;
    c.loss = network_loss(p, ts, cfg.beta);
    c.eta = sched.eta;
    const auto [mean_tau, censored] = mean_forecast_time(p.model(cfg.beta), validation, cfg.forecast, cfg.workers);
    c.mean_tau_f = mean_tau;
    c.censored = censored;
    c.counts = row_class_counts(p.internal(), ts.inputs, cfg.bounds);
    result.history.records.push_back(c);
    if (on_checkpoint) on_checkpoint(c);
    return c;
  };

  const Checkpoint first = checkpoint(0);
  if (cfg.stop_when_no_good && first.counts.good == 0) return result;

  for (long step = 1; step <= cfg.steps; ++step) {
    LossGradient lg = loss_and_grad(p, ts, cfg.beta);
    if (!std::isfinite(lg.loss) || !lg.grad.all_finite()) {
      result.history.aborted = true;
      result.history.abort_step = step;
      result.history.abort_reason = "non-finite loss or gradient";
      return result;
    }
    sched = scheduler_update(sched, step, lg.loss);
    const double rate = sched.eta * grad_scale;
    p.w_in -= rate * lg.grad.w_in;
    p.b_in -= rate * lg.grad.b_in;
    p.w -= rate * lg.grad.w;
    result.steps_taken = step;
    if (step % cfg.checkpoint_every == 0 || step == cfg.steps) {
      const Checkpoint c = checkpoint(step);
      if (!std::isfinite(c.loss)) {
        result.history.aborted = true;
        result.history.abort_step = step;
        result.history.abort_reason = "non-finite loss";
        return result;
      }
      if (cfg.stop_when_no_good && c.counts.good == 0) break;
    }
  }
  return result;
}

void write_history_csv(std::ostream& os, const TrainingHistory& history) {
  os << "step,loss,eta,mean_tauf,n_good,n_linear,n_saturated,n_mixed\n" << std::setprecision(17);
  for (const auto& c : history.records)
    os << c.step << ',' << c.loss << ',' << c.eta << ',' << c.mean_tau_f << ',' << c.counts.good << ','
       << c.counts.linear << ',' << c.counts.saturated << ',' << c.counts.mixed << '\n';
}

}  // namespace goodweights
