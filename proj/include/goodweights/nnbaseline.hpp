#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "goodweights/forecast.hpp"
#include "goodweights/sampler.hpp"
#include "goodweights/train.hpp"

namespace goodweights {

/// All trainable parameters of the single-layer network.
struct NetParams {
  Eigen::MatrixXd w_in;  // D_r x D
  Eigen::VectorXd b_in;  // D_r
  Eigen::MatrixXd w;     // D x D_r

  Eigen::Index feature_dim() const { return w_in.rows(); }
  Eigen::Index state_dim() const { return w_in.cols(); }
  void validate() const;
  bool all_finite() const;

  static NetParams zeros(Eigen::Index feature_dim, Eigen::Index state_dim);
  InternalWeights internal() const { return {w_in, b_in}; }
  SurrogateModel model(double beta) const;
};

/// Glorot-uniform weights (bound sqrt(6 / (fan_in + fan_out)) per matrix),
/// zero biases.
NetParams glorot_init(long feature_dim, long state_dim, std::uint64_t seed);

struct LossGradient {
  double loss = 0.0;
  NetParams grad;
};

/// L = ||W Phi - U||_F^2 + beta ||W||_F^2 with Phi = tanh(W_in X + b_in), and
/// its exact gradient. Computed in column blocks without materializing Phi.
LossGradient loss_and_grad(const NetParams& p, const TrainingSet& ts, double beta);
double network_loss(const NetParams& p, const TrainingSet& ts, double beta);

struct SchedulerConfig {
  double eta0 = 1e-3;
  long interval = 100;
  double xi = 0.1;
  double gamma = -1e-4;

  void validate() const;
};

struct SchedulerState {
  SchedulerConfig cfg;
  double eta = 0.0;
  double last_loss = 0.0;
  /// Set when a relative change could not be formed because last_loss was 0.
  bool flagged = false;

  static SchedulerState start(const SchedulerConfig& cfg);
};

/// Step `step` (1-based) of the adaptive learning-rate rule. Step 1 records
/// the reference loss. At every multiple of the interval the relative change
/// Delta = (L - L_ref) / L_ref is formed: if Delta > gamma the rate shrinks by
/// (1 - xi) when Delta > 0 and grows by (1 + xi) otherwise; the reference then
/// becomes L. A zero reference holds eta and sets `flagged`.
SchedulerState scheduler_update(SchedulerState s, long step, double current_loss);

enum class NetInit { Glorot, GoodRows };
std::string_view to_string(NetInit init);
NetInit parse_net_init(std::string_view s);

struct NetTrainConfig {
  long feature_dim = 300;
  double beta = 4e-5;
  long steps = 50000;
  long checkpoint_every = 10000;
  SchedulerConfig scheduler;
  NetInit init = NetInit::Glorot;
  /// Internal rows for NetInit::GoodRows come from the one-shot sampler.
  SamplerConfig sampler;
  ClassBounds bounds;
  ForecastConfig forecast;
  /// Descend on L / N instead of L. The loss reported is always L.
  bool normalize_gradient = true;
  /// End the run at the first checkpoint that finds no good rows.
  bool stop_when_no_good = false;
  int workers = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Checkpoint {
  long step = 0;
  double loss = 0.0;
  double eta = 0.0;
  double mean_tau_f = 0.0;
  long censored = 0;
  RowClassCounts counts;
};

struct TrainingHistory {
  std::vector<Checkpoint> records;  // strictly increasing steps, starting at 0
  bool aborted = false;
  long abort_step = -1;
  std::string abort_reason;
};

struct NetTrainResult {
  NetParams params;
  TrainingHistory history;
  long steps_taken = 0;
};

/// Mean forecast time and censored count of a model over validation runs.
std::pair<double, long> mean_forecast_time(const SurrogateModel& model, const std::vector<Trajectory>& validation,
                                           const ForecastConfig& cfg, int workers);

/// Full-batch gradient descent with the adaptive scheduler. Checkpoints are
/// taken at step 0, every `checkpoint_every` steps and at the last step. A
/// non-finite loss aborts the run; the history up to that point is kept.
/// `on_checkpoint` (optional) sees each record as it is appended.
NetTrainResult train_network(const TrainingSet& ts, const std::vector<Trajectory>& validation,
                             const NetTrainConfig& cfg,
                             const std::function<void(const Checkpoint&)>& on_checkpoint = {});

/// CSV `step,loss,eta,mean_tauf,n_good,n_linear,n_saturated,n_mixed`.
void write_history_csv(std::ostream& os, const TrainingHistory& history);

}  // namespace goodweights
