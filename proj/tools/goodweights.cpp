// goodweights command line: data generation, sampling, training, scoring and
// config-driven experiment runs.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "goodweights/dynamics.hpp"
#include "goodweights/experiments.hpp"
#include "goodweights/forecast.hpp"
#include "goodweights/nnbaseline.hpp"
#include "goodweights/plot.hpp"
#include "goodweights/sampler.hpp"
#include "goodweights/train.hpp"
#include "goodweights/weights.hpp"

namespace gw = goodweights;
using nlohmann::json;

namespace {

json counts_json(const gw::RowClassCounts& c) {
  return {{"good", c.good}, {"linear", c.linear}, {"saturated", c.saturated}, {"mixed", c.mixed}, {"total", c.total()}};
}

void add_integrator_flags(CLI::App* cmd, gw::IntegratorConfig& ic) {
  cmd->add_option("--dt", ic.dt_sample, "sampling step")->check(CLI::PositiveNumber);
  cmd->add_option("--transient", ic.transient_time, "discarded spin-up time")->check(CLI::NonNegativeNumber);
  cmd->add_option("--substeps", ic.substeps, "RK4 steps per sample")->check(CLI::PositiveNumber);
}

void add_forecast_flags(CLI::App* cmd, gw::ForecastConfig& fc) {
  cmd->add_option("--theta", fc.theta, "relative squared error threshold")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", fc.lambda_max, "maximal Lyapunov exponent")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", fc.horizon_steps, "steps compared")->check(CLI::PositiveNumber);
}

gw::BadMix bad_mix_from_flag(const std::string& s) { return gw::parse_bad_mix(s); }

std::string histogram_svg(const gw::MarginalHistograms& truth, const gw::MarginalHistograms& model) {
  std::vector<gw::plot::Panel> panels;
  const char* names[] = {"x", "y", "z"};
  for (Eigen::Index k = 0; k < truth.dim(); ++k) {
    gw::plot::Panel p{k < 3 ? names[k] : "u" + std::to_string(k), "value", "density"};
    for (const auto* h : {&truth, &model}) {
      gw::plot::Bars b;
      b.label = h == &truth ? "truth" : "model";
      const int bins = h->range.bins;
      const double width = (h->range.hi(k) - h->range.lo(k)) / bins;
      for (int i = 0; i <= bins; ++i) b.edges.push_back(h->bin_left(k, 0) + i * width);
      for (int i = 0; i < bins; ++i)
        b.values.push_back(h->total > 0 ? static_cast<double>(h->counts[k][i]) / (static_cast<double>(h->total) * width)
                                        : 0.0);
      p.bars.push_back(b);
    }
    panels.push_back(p);
  }
  return gw::plot::render(panels);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random feature map surrogates with good internal weights"};
  app.require_subcommand(1);

  // generate
  gw::IntegratorConfig gen_ic;
  std::uint64_t gen_seed = 1, gen_stream = 0;
  long gen_n = 20000;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "integrate Lorenz-63 and write a trajectory CSV");
  add_integrator_flags(generate, gen_ic);
  generate->add_option("--seed", gen_seed, "master seed");
  generate->add_option("--stream", gen_stream, "stream of the seed (0 training, 1+ validation)");
  generate->add_option("--n", gen_n, "number of steps after the initial state")->check(CLI::PositiveNumber);
  generate->add_option("--out", gen_out, "output CSV (default stdout)");

  // classify
  std::string cls_weights, cls_data;
  gw::ClassBounds cls_bounds;
  auto* classify = app.add_subcommand("classify", "count good/linear/saturated/mixed rows");
  classify->add_option("--weights", cls_weights, "internal weights (binary)")->required()->check(CLI::ExistingFile);
  classify->add_option("--data", cls_data, "trajectory CSV")->required()->check(CLI::ExistingFile);
  classify->add_option("--l0", cls_bounds.l0, "lower bound of the good range");
  classify->add_option("--l1", cls_bounds.l1, "upper bound of the good range");

  // sample
  long smp_dr = 300;
  double smp_pg = 1.0;
  std::string smp_alg = "oneshot", smp_mix = "balanced", smp_data, smp_out, smp_csv;
  std::uint64_t smp_seed = 1;
  gw::SamplerConfig smp_cfg;
  auto* sample = app.add_subcommand("sample", "draw internal weights with a prescribed good fraction");
  sample->add_option("--dr", smp_dr, "feature dimension")->check(CLI::PositiveNumber);
  sample->add_option("--pg", smp_pg, "fraction of good rows")->check(CLI::Range(0.0, 1.0));
  sample->add_option("--algorithm", smp_alg, "standard or oneshot")->check(CLI::IsMember({"standard", "oneshot"}));
  sample->add_option("--bad-mix", smp_mix, "balanced, linear or saturated")
      ->check(CLI::IsMember({"balanced", "linear", "saturated"}));
  sample->add_option("--l0", smp_cfg.bounds.l0, "lower bound of the good range");
  sample->add_option("--l1", smp_cfg.bounds.l1, "upper bound of the good range");
  sample->add_option("--k", smp_cfg.k_decorrelation, "hit-and-run moves per row")->check(CLI::NonNegativeNumber);
  sample->add_option("--seed", smp_seed, "seed");
  sample->add_option("--data", smp_data, "training trajectory CSV")->required()->check(CLI::ExistingFile);
  sample->add_option("--out", smp_out, "weights output (binary)")->required();
  sample->add_option("--csv", smp_csv, "also write the weights as CSV");

  // train
  double trn_beta = 4e-5;
  std::string trn_weights, trn_data, trn_out;
  auto* train = app.add_subcommand("train", "ridge-fit the outer weights");
  train->add_option("--beta", trn_beta, "ridge parameter")->check(CLI::PositiveNumber);
  train->add_option("--weights", trn_weights, "internal weights (binary)")->required()->check(CLI::ExistingFile);
  train->add_option("--data", trn_data, "training trajectory CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--out", trn_out, "model output (binary)")->required();

  // forecast
  std::string fc_model, fc_data;
  gw::ForecastConfig fc_cfg;
  auto* forecast = app.add_subcommand("forecast", "forecast time of a model on a validation trajectory");
  forecast->add_option("--model", fc_model, "model (binary)")->required()->check(CLI::ExistingFile);
  forecast->add_option("--data", fc_data, "validation trajectory CSV")->required()->check(CLI::ExistingFile);
  add_forecast_flags(forecast, fc_cfg);

  // histogram
  std::string hist_model, hist_data, hist_out, hist_truth_out, hist_svg;
  double hist_total = 2000.0, hist_burn = 40.0;
  int hist_bins = 100;
  gw::IntegratorConfig hist_ic;
  auto* histogram = app.add_subcommand("histogram", "marginal histograms of a long model rollout against the truth");
  histogram->add_option("--model", hist_model, "model (binary)")->required()->check(CLI::ExistingFile);
  histogram->add_option("--data", hist_data, "trajectory whose first state starts both runs")
      ->required()
      ->check(CLI::ExistingFile);
  histogram->add_option("--total", hist_total, "rollout length in time units")->check(CLI::PositiveNumber);
  histogram->add_option("--burn-in", hist_burn, "discarded initial time")->check(CLI::NonNegativeNumber);
  histogram->add_option("--bins", hist_bins, "bins per coordinate")->check(CLI::Range(2, 1000000));
  histogram->add_option("--out", hist_out, "model histogram CSV (default stdout)");
  histogram->add_option("--truth-out", hist_truth_out, "true-system histogram CSV");
  histogram->add_option("--svg", hist_svg, "overlay plot");
  add_integrator_flags(histogram, hist_ic);

  // nn-train
  gw::NetTrainConfig nn_cfg;
  std::string nn_init = "glorot", nn_data, nn_out;
  long nn_validation = 25;
  long nn_n = 20000;
  std::uint64_t nn_data_seed = 1;
  gw::IntegratorConfig nn_ic;
  auto* nn = app.add_subcommand("nn-train", "gradient-descent training of the single-layer network");
  nn->add_option("--dr", nn_cfg.feature_dim, "hidden width")->check(CLI::PositiveNumber);
  nn->add_option("--beta", nn_cfg.beta, "ridge parameter")->check(CLI::PositiveNumber);
  nn->add_option("--steps", nn_cfg.steps, "gradient steps")->check(CLI::PositiveNumber);
  nn->add_option("--checkpoint-every", nn_cfg.checkpoint_every, "steps between checkpoints")->check(CLI::PositiveNumber);
  nn->add_option("--init", nn_init, "glorot or goodrows")->check(CLI::IsMember({"glorot", "goodrows"}));
  nn->add_option("--seed", nn_cfg.seed, "initialization seed");
  nn->add_option("--eta0", nn_cfg.scheduler.eta0, "initial learning rate")->check(CLI::PositiveNumber);
  nn->add_option("--data", nn_data, "training trajectory CSV (default: generated from --data-seed)");
  nn->add_option("--data-seed", nn_data_seed, "seed of generated training and validation data");
  nn->add_option("--n", nn_n, "length of generated training data")->check(CLI::PositiveNumber);
  nn->add_option("--validation-runs", nn_validation, "validation trajectories per checkpoint")->check(CLI::PositiveNumber);
  nn->add_flag("--stop-when-no-good", nn_cfg.stop_when_no_good, "end at the first checkpoint without good rows");
  nn->add_option("--out", nn_out, "history CSV (default stdout)");

  // run
  std::string run_config, run_out;
  gw::RunOptions run_opt;
  auto* run = app.add_subcommand("run", "run a configured experiment");
  run->add_option("--config", run_config, "experiment JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "output directory")->required();
  run->add_option("--workers", run_opt.workers, "worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--keep-going", run_opt.keep_going, "continue past failing realizations");
  bool run_quiet = false;
  run->add_flag("--quiet", run_quiet, "no progress output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) {
      const auto traj = gw::generate_trajectory(gen_seed, gen_stream, gen_n, gen_ic);
      if (gen_out.empty()) {
        gw::write_trajectory_csv(std::cout, traj);
      } else {
        gw::write_trajectory_csv(gen_out, traj);
      }
    } else if (*classify) {
      const auto iw = gw::read_internal_weights(cls_weights);
      const auto data = gw::read_trajectory_csv(cls_data);
      std::cout << counts_json(gw::row_class_counts(iw, data.states, cls_bounds)).dump() << '\n';
    } else if (*sample) {
      const auto data = gw::read_trajectory_csv(smp_data);
      const auto sw = gw::sample_internal_weights(data.states, smp_dr, smp_pg, smp_cfg,
                                                  gw::parse_sampling_algorithm(smp_alg), bad_mix_from_flag(smp_mix),
                                                  smp_seed);
      gw::write_internal_weights(smp_out, sw.weights);
      if (!smp_csv.empty()) {
        auto os = open_out(smp_csv);
        gw::write_internal_weights_csv(os, sw.weights);
      }
      json j = counts_json(gw::row_class_counts(sw.weights, data.states, smp_cfg.bounds));
      j["capped_rows"] = sw.capped_rows;
      std::cout << j.dump() << '\n';
    } else if (*train) {
      const auto iw = gw::read_internal_weights(trn_weights);
      const auto data = gw::read_trajectory_csv(trn_data);
      auto fit = gw::fit_model(iw, data, gw::RidgeConfig{trn_beta});
      fit.model.provenance.dataset = trn_data;
      gw::write_model(trn_out, fit.model);
      std::cout << json{{"loss", fit.loss},
                        {"stationarity", fit.stationarity},
                        {"w_norm", fit.model.ow.w.norm()},
                        {"feature_dim", fit.model.feature_dim()}}
                       .dump()
                << '\n';
    } else if (*forecast) {
      const auto model = gw::read_model(fc_model);
      const auto data = gw::read_trajectory_csv(fc_data);
      const auto o = gw::evaluate_model(model, data, fc_cfg);
      std::cout << json{{"tau_f", o.tau_f}, {"censored", o.censored}, {"steps", o.steps}}.dump() << '\n';
    } else if (*histogram) {
      if (!(hist_total > hist_burn)) throw std::invalid_argument("--total must exceed --burn-in");
      const auto model = gw::read_model(hist_model);
      const auto data = gw::read_trajectory_csv(hist_data);
      const Eigen::VectorXd u0 = data.state(0);
      const auto truth = gw::true_system_histograms(u0, hist_total, hist_burn, hist_bins, hist_ic);
      const auto h = gw::model_histograms(model, u0, hist_total, hist_burn, hist_ic.dt_sample, truth.histograms.range);
      if (hist_out.empty()) {
        gw::write_histograms_csv(std::cout, h);
      } else {
        auto os = open_out(hist_out);
        gw::write_histograms_csv(os, h);
      }
      if (!hist_truth_out.empty()) {
        auto os = open_out(hist_truth_out);
        gw::write_histograms_csv(os, truth.histograms);
      }
      if (!hist_svg.empty()) {
        try {
          auto os = open_out(hist_svg);
          os << histogram_svg(truth.histograms, h);
        } catch (const std::exception& e) {
          std::cerr << "plot: " << e.what() << '\n';
        }
      }
      const Eigen::VectorXd l1 = gw::l1_distance(truth.histograms, h);
      std::cerr << json{{"l1", std::vector<double>(l1.data(), l1.data() + l1.size())}, {"valid", h.valid}}.dump()
                << '\n';
    } else if (*nn) {
      nn_cfg.init = gw::parse_net_init(nn_init);
      nn_cfg.bounds = nn_cfg.sampler.bounds;
      gw::Trajectory train_traj = nn_data.empty() ? gw::generate_trajectory(nn_data_seed, 0, nn_n, nn_ic)
                                                  : gw::read_trajectory_csv(nn_data);
      std::vector<gw::Trajectory> validation;
      for (long k = 0; k < nn_validation; ++k)
        validation.push_back(gw::generate_trajectory(nn_data_seed, static_cast<std::uint64_t>(1 + k),
                                                     nn_cfg.forecast.horizon_steps, nn_ic));
      const auto res = gw::train_network(gw::TrainingSet::from_trajectory(train_traj), validation, nn_cfg,
                                         [](const gw::Checkpoint& c) {
                                           std::cerr << "step " << c.step << " loss " << c.loss << " tau "
                                                     << c.mean_tau_f << " good " << c.counts.good << '\n';
                                         });
      if (nn_out.empty()) {
        gw::write_history_csv(std::cout, res.history);
      } else {
        auto os = open_out(nn_out);
        gw::write_history_csv(os, res.history);
      }
      if (res.history.aborted) {
        std::cerr << "training aborted at step " << res.history.abort_step << ": " << res.history.abort_reason << '\n';
        return 3;
      }
    } else if (*run) {
      const auto cfg = gw::ExperimentConfig::load(run_config);
      if (!run_quiet) {
        run_opt.progress = [](std::size_t done, std::size_t total) {
          std::fprintf(stderr, "\r%zu/%zu", done, total);
          if (done == total) std::fputc('\n', stderr);
        };
      }
      const auto result = gw::run_experiment(cfg, run_opt);
      for (const auto& e : gw::write_outputs(result, run_out)) std::cerr << "plot: " << e << '\n';
      for (const auto& e : result.errors) std::cerr << "error: " << e << '\n';
      if (!result.errors.empty() && !run_opt.keep_going) return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "goodweights: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
