#include "goodweights/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "goodweights/parallel.hpp"
#include "goodweights/random.hpp"

namespace goodweights {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Dataset {
  Trajectory train;
  std::vector<Trajectory> validation;
  DataCorners corners;
};

std::shared_ptr<const Dataset> make_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
  auto d = std::make_shared<Dataset>();
  d->train = generate_trajectory(seed, 0, cfg.n_train, cfg.integrator);
  for (long k = 0; k < cfg.validation_runs; ++k)
    d->validation.push_back(
        generate_trajectory(seed, static_cast<std::uint64_t>(1 + k), cfg.forecast.horizon_steps, cfg.integrator));
  d->corners = data_corners(d->train.states);
  return d;
}

// One configuration point of the ensemble kinds.
struct GridPoint {
  long feature_dim = 0;
  double p_good = 0.0;
  double beta = 0.0;
  SamplingAlgorithm algorithm = SamplingAlgorithm::OneShot;
  BadMix mix = BadMix::Balanced;
};

std::vector<GridPoint> grid_points(const ExperimentConfig& cfg) {
  std::vector<GridPoint> out;
  for (long dr : cfg.feature_dims)
    for (double pg : cfg.p_good)
      for (double beta : cfg.betas)
        for (auto alg : cfg.algorithms)
          for (auto mix : cfg.bad_mixes) out.push_back({dr, pg, beta, alg, mix});
  return out;
}

ResultRecord base_record(const ExperimentConfig& cfg, const GridPoint& p, long group, long m) {
  ResultRecord r;
  r.group = group;
  r.realization = m;
  r.seed = weights_seed(cfg.seed, group, m);
  r.data_seed = data_seed(cfg, group, m);
  r.feature_dim = p.feature_dim;
  r.p_good = p.p_good;
  r.beta = p.beta;
  r.algorithm = std::string(to_string(p.algorithm));
  r.bad_mix = std::string(to_string(p.mix));
  r.w_scale = kNaN;
  r.b_scale = kNaN;
  r.n_train = cfg.n_train;
  r.l1_x = r.l1_y = r.l1_z = kNaN;
  return r;
}

// Forecast skill, norms and row statistics of a fitted random feature map.
void score_fit(const ExperimentConfig& cfg, const Dataset& data, const FitResult& fit, ResultRecord& r) {
  double sum = 0.0;
  long censored = 0;
  for (const auto& v : data.validation) {
    const auto o = evaluate_model(fit.model, v, cfg.forecast);
    sum += o.tau_f;
    censored += o.censored ? 1 : 0;
  }
  r.tau_f = sum / static_cast<double>(data.validation.size());
  r.censored = censored;
  r.loss = fit.loss;
  r.w_norm = fit.model.ow.w.norm();
  r.effective_range = effective_range(fit.model.iw, data.train.states);
  r.counts = row_class_counts(fit.model.iw, data.train.states, cfg.sampler.bounds);
}

FitResult fit_with_provenance(const InternalWeights& iw, const Dataset& data, double beta, std::uint64_t wseed,
                              std::uint64_t dseed) {
  auto fit = fit_model(iw, data.train, RidgeConfig{beta});
  fit.model.provenance = {wseed, dseed, "lorenz63"};
  return fit;
}

// A unit of work produces records, columns and (for invariant runs) histograms
// into its own slot; slots are concatenated in index order afterwards.
struct Slot {
  std::vector<ResultRecord> records;
  std::vector<ColumnRecord> columns;
  std::vector<std::pair<std::string, MarginalHistograms>> histograms;
};

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, const RunOptions& opt) : cfg_(cfg), opt_(opt) {}

  ExperimentResult run() {
    cfg_.validate();
    ExperimentResult result;
    result.config = cfg_;
    if (cfg_.data_mode == DataMode::Shared) shared_ = make_dataset(cfg_, data_seed(cfg_, 0, 0));
    points_ = grid_points(cfg_);

    std::size_t units = 0;
    switch (cfg_.kind) {
      case ExperimentKind::Heatmap:
        units = static_cast<std::size_t>(cfg_.heatmap.resolution) * cfg_.heatmap.resolution * cfg_.realizations;
        break;
      case ExperimentKind::Suppression:
      case ExperimentKind::InvariantMeasure:
        units = static_cast<std::size_t>(cfg_.realizations);
        break;
      case ExperimentKind::NnCompare:
        units = static_cast<std::size_t>(cfg_.realizations) + 1;
        break;
      default:
        units = points_.size() * static_cast<std::size_t>(cfg_.realizations);
    }

    std::vector<Slot> slots(units);
    std::vector<std::string> errors(units);
    std::atomic<bool> stop{false};
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;
    parallel_for(units, opt_.workers, [&](std::size_t i) {
      if (stop.load()) return;
      try {
        run_unit(i, slots[i]);
      } catch (const std::exception& e) {
        errors[i] = unit_name(i) + ": " + e.what();
        slots[i] = Slot{};
        if (!opt_.keep_going) stop = true;
      }
      const std::size_t n = ++done;
      if (opt_.progress) {
        std::lock_guard lock(progress_mutex);
        opt_.progress(n, units);
      }
    });

    for (std::size_t i = 0; i < units; ++i) {
      auto& s = slots[i];
      result.records.insert(result.records.end(), s.records.begin(), s.records.end());
      result.columns.insert(result.columns.end(), s.columns.begin(), s.columns.end());
      for (auto& h : s.histograms) result.histograms.push_back(std::move(h));
      if (!errors[i].empty()) result.errors.push_back(errors[i]);
    }
    result.summary = summarize_records(cfg_, result.records, result.columns);
    return result;
  }

 private:
  std::shared_ptr<const Dataset> dataset(long group, long m) const {
    if (shared_) return shared_;
    return make_dataset(cfg_, data_seed(cfg_, group, m));
  }

  std::string unit_name(std::size_t i) const {
    std::ostringstream os;
    os << to_string(cfg_.kind) << " unit " << i;
    return os.str();
  }

  void run_unit(std::size_t i, Slot& slot) const {
    const long index = static_cast<long>(i);
    switch (cfg_.kind) {
      case ExperimentKind::Heatmap:
        return heatmap_unit(index / cfg_.realizations, index % cfg_.realizations, slot);
      case ExperimentKind::Suppression:
        return suppression_unit(index, slot);
      case ExperimentKind::InvariantMeasure:
        return invariant_unit(index, slot);
      case ExperimentKind::NnCompare:
        if (index == 0) return nn_unit(slot);
        return ensemble_unit(0, index - 1, slot);
      default:
        return ensemble_unit(index / cfg_.realizations, index % cfg_.realizations, slot);
    }
  }

  void ensemble_unit(long g, long m, Slot& slot) const {
    const GridPoint& p = points_.at(static_cast<std::size_t>(g));
    const auto data = dataset(g, m);
    ResultRecord r = base_record(cfg_, p, g, m);
    const auto sw = sample_internal_weights(data->corners, p.feature_dim, p.p_good, cfg_.sampler, p.algorithm, p.mix,
                                            r.seed);
    const auto fit = fit_with_provenance(sw.weights, *data, p.beta, r.seed, r.data_seed);
    score_fit(cfg_, *data, fit, r);
    slot.records.push_back(std::move(r));
  }

  void heatmap_unit(long g, long m, Slot& slot) const {
    const int res = cfg_.heatmap.resolution;
    const long iw = g % res;
    const long ib = g / res;
    // Cell midpoints of the regular grid over (0, w_max) x (0, b_max).
    const double w = (static_cast<double>(iw) + 0.5) * cfg_.heatmap.w_max / res;
    const double b = (static_cast<double>(ib) + 0.5) * cfg_.heatmap.b_max / res;
    GridPoint p = points_.front();
    ResultRecord r = base_record(cfg_, p, g, m);
    r.p_good = kNaN;
    r.algorithm = "uniform";
    r.bad_mix = "";
    r.w_scale = w;
    r.b_scale = b;
    const auto iwts = uniform_internal_weights(p.feature_dim, shared_->train.dim(), w, b, r.seed);
    const auto fit = fit_with_provenance(iwts, *shared_, p.beta, r.seed, r.data_seed);
    score_fit(cfg_, *shared_, fit, r);
    slot.records.push_back(std::move(r));
  }

  // Row replacement: good rows overwrite the start rows at the positions of
  // a seeded permutation, a fixed prefix per stage, so later stages extend
  // earlier ones exactly as one-at-a-time replacement would.
  void suppression_unit(long m, Slot& slot) const {
    GridPoint p = points_.front();
    p.p_good = 0.0;
    p.mix = cfg_.suppression.start == RowClass::Linear ? BadMix::AllLinear : BadMix::AllSaturated;
    const auto data = dataset(0, m);
    const std::uint64_t wseed = weights_seed(cfg_.seed, 0, m);
    auto stages = cfg_.suppression.stages;
    std::sort(stages.begin(), stages.end());
    const long max_stage = stages.back();

    const auto start = sample_internal_weights(data->corners, p.feature_dim, 0.0, cfg_.sampler,
                                               SamplingAlgorithm::OneShot, p.mix, derive_seed(wseed, 0));
    SampledWeights good;
    if (max_stage > 0)
      good = sample_internal_weights(data->corners, max_stage, 1.0, cfg_.sampler, SamplingAlgorithm::OneShot,
                                     BadMix::Balanced, derive_seed(wseed, 1));
    std::vector<long> order(static_cast<std::size_t>(p.feature_dim));
    std::iota(order.begin(), order.end(), 0L);
    Rng rng(derive_seed(wseed, 2));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

    InternalWeights iw = start.weights;
    long replaced = 0;
    for (long stage : stages) {
      for (; replaced < stage; ++replaced) {
        const auto row = order[static_cast<std::size_t>(replaced)];
        iw.w_in.row(row) = good.weights.w_in.row(replaced);
        iw.b_in(row) = good.weights.b_in(replaced);
      }
      ResultRecord r = base_record(cfg_, p, 0, m);
      r.seed = wseed;
      r.p_good = static_cast<double>(stage) / static_cast<double>(p.feature_dim);
      r.algorithm = std::string(to_string(SamplingAlgorithm::OneShot));
      r.stage = stage;
      const auto fit = fit_with_provenance(iw, *data, p.beta, wseed, r.data_seed);
      score_fit(cfg_, *data, fit, r);
      const auto classes = classify_rows(iw, data->train.states, cfg_.sampler.bounds);
      const Eigen::VectorXd sup = column_sup_norms(fit.model.ow);
      const Eigen::VectorXd nsup = normalized_column_sup_norms(fit.model.ow);
      for (Eigen::Index c = 0; c < sup.size(); ++c)
        slot.columns.push_back({m, stage, static_cast<long>(c), classes[static_cast<std::size_t>(c)], sup(c), nsup(c)});
      slot.records.push_back(std::move(r));
    }
  }

  // Every configuration point for one realization, all compared against the
  // same long true-system run from the first validation state. Models run
  // for total_time; the reference run for reference_time.
  void invariant_unit(long m, Slot& slot) const {
    const auto data = dataset(0, m);
    const Eigen::VectorXd u0 = data->validation.front().state(0);
    const auto truth = true_system_histograms(u0, cfg_.invariant.reference_time, cfg_.invariant.burn_in,
                                              cfg_.invariant.bins, cfg_.integrator);
    if (m == 0) slot.histograms.emplace_back("truth", truth.histograms);
    for (std::size_t g = 0; g < points_.size(); ++g) {
      const GridPoint& p = points_[g];
      ResultRecord r = base_record(cfg_, p, static_cast<long>(g), m);
      r.data_seed = data_seed(cfg_, 0, m);
      const auto sw = sample_internal_weights(data->corners, p.feature_dim, p.p_good, cfg_.sampler, p.algorithm,
                                              p.mix, r.seed);
      const auto fit = fit_with_provenance(sw.weights, *data, p.beta, r.seed, r.data_seed);
      score_fit(cfg_, *data, fit, r);
      const auto h = model_histograms(fit.model, u0, cfg_.invariant.total_time, cfg_.invariant.burn_in,
                                      cfg_.integrator.dt_sample, truth.histograms.range);
      const Eigen::VectorXd l1 = l1_distance(truth.histograms, h);
      r.l1_x = l1(0);
      r.l1_y = l1.size() > 1 ? l1(1) : kNaN;
      r.l1_z = l1.size() > 2 ? l1(2) : kNaN;
      r.valid = h.valid;
      if (m == 0) {
        std::ostringstream label;
        label << "p_g=" << p.p_good;
        slot.histograms.emplace_back(label.str(), h);
      }
      slot.records.push_back(std::move(r));
    }
  }

  void nn_unit(Slot& slot) const {
    const GridPoint& p = points_.front();
    NetTrainConfig nc;
    nc.feature_dim = p.feature_dim;
    nc.beta = p.beta;
    nc.steps = cfg_.nn.steps;
    nc.checkpoint_every = cfg_.nn.checkpoint_every;
    nc.scheduler = cfg_.nn.scheduler;
    nc.init = cfg_.nn.init;
    nc.sampler = cfg_.sampler;
    nc.bounds = cfg_.sampler.bounds;
    nc.forecast = cfg_.forecast;
    nc.seed = weights_seed(cfg_.seed, -1, 0);
    const auto ts = TrainingSet::from_trajectory(shared_->train);
    const auto res = train_network(ts, shared_->validation, nc);
    for (const auto& c : res.history.records) {
      ResultRecord r = base_record(cfg_, p, -1, 0);
      r.model = "nn";
      r.seed = nc.seed;
      r.p_good = kNaN;
      r.algorithm = std::string(to_string(cfg_.nn.init));
      r.bad_mix = "";
      r.stage = c.step;
      r.tau_f = c.mean_tau_f;
      r.censored = c.censored;
      r.loss = c.loss;
      r.w_norm = kNaN;
      r.effective_range = kNaN;
      r.counts = c.counts;
      r.valid = !(res.history.aborted && c.step == res.history.records.back().step);
      slot.records.push_back(std::move(r));
    }
    // Norms need the parameters, which only the final checkpoint still has.
    if (!slot.records.empty()) {
      auto& last = slot.records.back();
      last.w_norm = res.params.w.norm();
      last.effective_range = effective_range(res.params.internal(), shared_->train.states);
    }
    if (res.history.aborted)
      throw std::runtime_error("network training aborted at step " + std::to_string(res.history.abort_step) + ": " +
                               res.history.abort_reason);
  }

  ExperimentConfig cfg_;
  RunOptions opt_;
  std::shared_ptr<const Dataset> shared_;
  std::vector<GridPoint> points_;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  return Runner(cfg, options).run();
}

}  // namespace goodweights
