#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "goodweights/dynamics.hpp"
#include "goodweights/experiments.hpp"
#include "goodweights/forecast.hpp"
#include "goodweights/nnbaseline.hpp"
#include "goodweights/sampler.hpp"
#include "goodweights/train.hpp"
#include "goodweights/weights.hpp"

namespace py = pybind11;
namespace gw = goodweights;
using namespace pybind11::literals;

namespace {

gw::InternalWeights internal(const Eigen::MatrixXd& w_in, const Eigen::VectorXd& b_in) {
  gw::InternalWeights iw{w_in, b_in};
  iw.validate();
  return iw;
}

py::dict counts_dict(const gw::RowClassCounts& c) {
  return py::dict("good"_a = c.good, "linear"_a = c.linear, "saturated"_a = c.saturated, "mixed"_a = c.mixed);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Random feature map surrogates with good-region internal weights";

  py::register_exception<gw::NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::enum_<gw::RowClass>(m, "RowClass")
      .value("Good", gw::RowClass::Good)
      .value("Linear", gw::RowClass::Linear)
      .value("Saturated", gw::RowClass::Saturated)
      .value("Mixed", gw::RowClass::Mixed);

  py::class_<gw::IntegratorConfig>(m, "IntegratorConfig")
      .def(py::init<>())
      .def_readwrite("dt", &gw::IntegratorConfig::dt_sample)
      .def_readwrite("substeps", &gw::IntegratorConfig::substeps)
      .def_readwrite("transient_time", &gw::IntegratorConfig::transient_time);

  py::class_<gw::ClassBounds>(m, "ClassBounds")
      .def(py::init<>())
      .def(py::init([](double l0, double l1) {
             gw::ClassBounds b{l0, l1};
             b.validate();
             return b;
           }),
           "l0"_a, "l1"_a)
      .def_readwrite("l0", &gw::ClassBounds::l0)
      .def_readwrite("l1", &gw::ClassBounds::l1);

  py::class_<gw::SamplerConfig>(m, "SamplerConfig")
      .def(py::init<>())
      .def_readwrite("bounds", &gw::SamplerConfig::bounds)
      .def_readwrite("k_decorrelation", &gw::SamplerConfig::k_decorrelation)
      .def_readwrite("bisection_tol", &gw::SamplerConfig::bisection_tol)
      .def_readwrite("a_max", &gw::SamplerConfig::a_max);

  py::class_<gw::ForecastConfig>(m, "ForecastConfig")
      .def(py::init<>())
      .def_readwrite("theta", &gw::ForecastConfig::theta)
      .def_readwrite("lambda_max", &gw::ForecastConfig::lambda_max)
      .def_readwrite("horizon_steps", &gw::ForecastConfig::horizon_steps);

  py::class_<gw::Trajectory>(m, "Trajectory")
      .def(py::init([](Eigen::MatrixXd states, double dt, double t0) {
             gw::Trajectory t{std::move(states), dt, t0};
             t.validate();
             return t;
           }),
           "states"_a, "dt"_a = 0.02, "t0"_a = 0.0)
      .def_readonly("states", &gw::Trajectory::states)
      .def_readonly("dt", &gw::Trajectory::dt)
      .def_readonly("t0", &gw::Trajectory::t0)
      .def("__len__", [](const gw::Trajectory& t) { return t.states.cols(); });

  m.def("generate_trajectory", &gw::generate_trajectory, "seed"_a, "stream"_a, "n"_a,
        "config"_a = gw::IntegratorConfig{}, "Settled Lorenz-63 trajectory of n + 1 samples.");

  m.def("classify_row", &gw::classify_row, "w"_a, "b"_a, "data"_a, "bounds"_a = gw::ClassBounds{});
  m.def(
      "row_class_counts",
      [](const Eigen::MatrixXd& w_in, const Eigen::VectorXd& b_in, const Eigen::MatrixXd& data,
         const gw::ClassBounds& bounds) { return counts_dict(gw::row_class_counts(internal(w_in, b_in), data, bounds)); },
      "w_in"_a, "b_in"_a, "data"_a, "bounds"_a = gw::ClassBounds{});
  m.def(
      "effective_range",
      [](const Eigen::MatrixXd& w_in, const Eigen::VectorXd& b_in, const Eigen::MatrixXd& data) {
        return gw::effective_range(internal(w_in, b_in), data);
      },
      "w_in"_a, "b_in"_a, "data"_a);

  m.def(
      "sample_internal_weights",
      [](const Eigen::MatrixXd& data, long feature_dim, double p_good, const std::string& algorithm,
         const std::string& bad_mix, std::uint64_t seed, const gw::SamplerConfig& cfg) {
        gw::SampledWeights sw;
        {
          py::gil_scoped_release release;
          sw = gw::sample_internal_weights(data, feature_dim, p_good, cfg, gw::parse_sampling_algorithm(algorithm),
                                           gw::parse_bad_mix(bad_mix), seed);
        }
        return py::make_tuple(sw.weights.w_in, sw.weights.b_in, sw.row_classes);
      },
      "data"_a, "feature_dim"_a, "p_good"_a = 1.0, "algorithm"_a = "oneshot", "bad_mix"_a = "balanced", "seed"_a = 0,
      "config"_a = gw::SamplerConfig{}, "Returns (w_in, b_in, target row classes).");
  m.def(
      "uniform_internal_weights",
      [](long feature_dim, long state_dim, double w_scale, double b_scale, std::uint64_t seed) {
        const auto iw = gw::uniform_internal_weights(feature_dim, state_dim, w_scale, b_scale, seed);
        return py::make_tuple(iw.w_in, iw.b_in);
      },
      "feature_dim"_a, "state_dim"_a, "w_scale"_a, "b_scale"_a, "seed"_a = 0);

  m.def(
      "feature_matrix",
      [](const Eigen::MatrixXd& w_in, const Eigen::VectorXd& b_in, const Eigen::MatrixXd& inputs) {
        return gw::feature_matrix(internal(w_in, b_in), inputs);
      },
      "w_in"_a, "b_in"_a, "inputs"_a);
  m.def(
      "ridge_solve",
      [](const Eigen::MatrixXd& phi, const Eigen::MatrixXd& targets, double beta) {
        return gw::ridge_solve(phi, targets, {beta}).w;
      },
      "phi"_a, "targets"_a, "beta"_a);

  py::class_<gw::SurrogateModel>(m, "SurrogateModel")
      .def(py::init([](Eigen::MatrixXd w_in, Eigen::VectorXd b_in, Eigen::MatrixXd w, double beta) {
             gw::SurrogateModel s{internal(w_in, b_in), {std::move(w)}, beta, {}};
             s.validate();
             return s;
           }),
           "w_in"_a, "b_in"_a, "w"_a, "beta"_a)
      .def_property_readonly("w_in", [](const gw::SurrogateModel& s) { return s.iw.w_in; })
      .def_property_readonly("b_in", [](const gw::SurrogateModel& s) { return s.iw.b_in; })
      .def_property_readonly("w", [](const gw::SurrogateModel& s) { return s.ow.w; })
      .def_readonly("beta", &gw::SurrogateModel::beta)
      .def("save", [](const gw::SurrogateModel& s, const std::string& path) { gw::write_model(path, s); })
      .def_static("load", [](const std::string& path) { return gw::read_model(path); })
      .def(
          "iterate",
          [](const gw::SurrogateModel& s, const Eigen::VectorXd& u0, long n, double dt) {
            const auto r = gw::iterate(s, u0, n, dt);
            return py::make_tuple(r.trajectory, r.diverged);
          },
          "u0"_a, "n"_a, "dt"_a = 0.02, "Returns (trajectory, diverged).")
      .def(
          "forecast_time",
          [](const gw::SurrogateModel& s, const gw::Trajectory& validation, const gw::ForecastConfig& cfg) {
            const auto o = gw::evaluate_model(s, validation, cfg);
            return py::make_tuple(o.tau_f, o.censored);
          },
          "validation"_a, "config"_a = gw::ForecastConfig{}, "Returns (tau_f, censored).")
      .def(
          "column_sup_norms", [](const gw::SurrogateModel& s) { return gw::column_sup_norms(s.ow); })
      .def("normalized_column_sup_norms",
           [](const gw::SurrogateModel& s) { return gw::normalized_column_sup_norms(s.ow); });

  m.def(
      "fit",
      [](const Eigen::MatrixXd& w_in, const Eigen::VectorXd& b_in, const gw::Trajectory& traj, double beta) {
        gw::FitResult r;
        {
          py::gil_scoped_release release;
          r = gw::fit_model(internal(w_in, b_in), traj, {beta});
        }
        return py::make_tuple(r.model, r.loss, r.stationarity);
      },
      "w_in"_a, "b_in"_a, "trajectory"_a, "beta"_a = 4e-5, "Returns (model, loss, stationarity residual).");

  m.def(
      "forecast_time",
      [](const gw::Trajectory& pred, const gw::Trajectory& truth, const gw::ForecastConfig& cfg) {
        const auto o = gw::forecast_time(pred, truth, cfg);
        return py::make_tuple(o.tau_f, o.censored);
      },
      "pred"_a, "truth"_a, "config"_a = gw::ForecastConfig{});

  m.def(
      "train_network",
      [](const gw::Trajectory& traj, const std::vector<gw::Trajectory>& validation, long feature_dim, double beta,
         long steps, long checkpoint_every, const std::string& init, std::uint64_t seed, bool stop_when_no_good) {
        gw::NetTrainConfig cfg;
        cfg.feature_dim = feature_dim;
        cfg.beta = beta;
        cfg.steps = steps;
        cfg.checkpoint_every = checkpoint_every;
        cfg.init = gw::parse_net_init(init);
        cfg.seed = seed;
        cfg.stop_when_no_good = stop_when_no_good;
        gw::NetTrainResult r;
        {
          py::gil_scoped_release release;
          r = gw::train_network(gw::TrainingSet::from_trajectory(traj), validation, cfg);
        }
        py::list history;
        for (const auto& c : r.history.records)
          history.append(py::dict("step"_a = c.step, "loss"_a = c.loss, "eta"_a = c.eta, "mean_tau_f"_a = c.mean_tau_f,
                                  "counts"_a = counts_dict(c.counts)));
        return py::dict("model"_a = r.params.model(beta), "history"_a = history, "aborted"_a = r.history.aborted,
                        "steps_taken"_a = r.steps_taken);
      },
      "trajectory"_a, "validation"_a, "feature_dim"_a = 300, "beta"_a = 4e-5, "steps"_a = 50000,
      "checkpoint_every"_a = 10000, "init"_a = "glorot", "seed"_a = 0, "stop_when_no_good"_a = false);

  py::class_<gw::ExperimentResult>(m, "ExperimentResult")
      .def_property_readonly("summary_json", [](const gw::ExperimentResult& r) { return r.summary.dump(); })
      .def_readonly("errors", &gw::ExperimentResult::errors)
      .def("results_csv",
           [](const gw::ExperimentResult& r) {
             std::ostringstream os;
             gw::write_results_csv(os, r.records);
             return os.str();
           })
      .def("write_outputs", [](const gw::ExperimentResult& r, const std::filesystem::path& dir) {
        return gw::write_outputs(r, dir);
      });

  m.def(
      "run_experiment",
      [](const std::string& config_json, int workers, bool keep_going) {
        const auto cfg = gw::ExperimentConfig::from_json(nlohmann::json::parse(config_json));
        gw::RunOptions opts;
        opts.workers = workers;
        opts.keep_going = keep_going;
        py::gil_scoped_release release;
        return gw::run_experiment(cfg, opts);
      },
      "config_json"_a, "workers"_a = 1, "keep_going"_a = false);
}
