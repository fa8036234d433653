// End-to-end acceptance checks. Each criterion runs at full scale and prints
// one PASS/FAIL line; the exit status is nonzero if any selected criterion
// fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "goodweights/dynamics.hpp"
#include "goodweights/experiments.hpp"
#include "goodweights/forecast.hpp"
#include "goodweights/nnbaseline.hpp"
#include "goodweights/random.hpp"
#include "goodweights/sampler.hpp"
#include "goodweights/stats.hpp"
#include "goodweights/train.hpp"

namespace gw = goodweights;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [x]");
  }
};

struct Context {
  int workers = 1;
  std::filesystem::path out_dir;
};

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

gw::ExperimentResult run(const Context& ctx, const std::string& name, const json& j) {
  auto cfg = gw::ExperimentConfig::from_json(j);
  cfg.name = name;
  gw::RunOptions opts;
  opts.workers = ctx.workers;
  auto result = gw::run_experiment(cfg, opts);
  if (!result.errors.empty()) throw std::runtime_error(name + ": " + result.errors.front());
  if (!ctx.out_dir.empty()) gw::write_outputs(result, ctx.out_dir / name);
  return result;
}

std::vector<double> tau_of(const gw::ExperimentResult& r, const std::function<bool(const gw::ResultRecord&)>& pick) {
  std::vector<double> out;
  for (const auto& rec : r.records)
    if (pick(rec)) out.push_back(rec.tau_f);
  return out;
}

// Independent scan: every data point must satisfy L0 < |w.u + b| < L1.
long count_violations(const std::vector<gw::RowSample>& rows, const Eigen::MatrixXd& data,
                      const gw::ClassBounds& bounds) {
  long bad = 0;
  const long block = 500;
  for (std::size_t start = 0; start < rows.size(); start += block) {
    const long n = std::min<long>(block, static_cast<long>(rows.size() - start));
    Eigen::MatrixXd w(n, data.rows());
    Eigen::VectorXd b(n);
    for (long i = 0; i < n; ++i) {
      w.row(i) = rows[start + static_cast<std::size_t>(i)].w.transpose();
      b(i) = rows[start + static_cast<std::size_t>(i)].b;
    }
    const Eigen::ArrayXXd a = ((w * data).colwise() + b).array().abs();
    const Eigen::ArrayXd lo = a.rowwise().minCoeff();
    const Eigen::ArrayXd hi = a.rowwise().maxCoeff();
    for (long i = 0; i < n; ++i) bad += (lo(i) > bounds.l0 && hi(i) < bounds.l1) ? 0 : 1;
  }
  return bad;
}

Outcome c1_sampler_exactness(const Context&) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = gw::generate_trajectory(101, 0, 20000, {}).states;
  const auto corners = gw::data_corners(data);
  const gw::SamplerConfig cfg;
  const long n = 100000;
  for (auto alg : {gw::SamplingAlgorithm::Standard, gw::SamplingAlgorithm::OneShot}) {
    std::vector<gw::RowSample> rows;
    rows.reserve(n);
    for (long i = 0; i < n; ++i) {
      gw::Rng rng(gw::derive_seed(7, static_cast<std::uint64_t>(i)));
      rows.push_back(alg == gw::SamplingAlgorithm::Standard ? gw::standard_hit_and_run_row(corners, cfg, rng)
                                                            : gw::one_shot_row(corners, cfg, rng, gw::RowClass::Good));
    }
    const long bad = count_violations(rows, data, cfg.bounds);
    o.check(bad == 0, std::string(gw::to_string(alg)) + " violations " + std::to_string(bad) + "/" + std::to_string(n));
  }
  const double secs = seconds_since(t0);
  o.check(secs < 120.0, "runtime " + fmt(secs, 1) + "s < 120s");
  return o;
}

// Sampler comparison at D_r=512; shared by the forecast-time and
// effective-range criteria.
const gw::ExperimentResult& sampler_ensemble(const Context& ctx) {
  static const gw::ExperimentResult r = run(ctx, "sampler_compare",
                                            {{"kind", "sampler_compare"},
                                             {"seed", 2024},
                                             {"realizations", 200},
                                             {"n_train", 20000},
                                             {"feature_dims", {512}},
                                             {"p_good", {1.0}},
                                             {"betas", {2.79e-5}},
                                             {"algorithms", {"oneshot", "standard"}}});
  return r;
}

Outcome c2_forecast_time(const Context& ctx) {
  Outcome o;
  const auto& r = sampler_ensemble(ctx);
  const auto one = gw::summarize(tau_of(r, [](const auto& x) { return x.algorithm == "oneshot"; }));
  const auto std_ = gw::summarize(tau_of(r, [](const auto& x) { return x.algorithm == "standard"; }));
  o.check(std::abs(one.mean - 5.1) <= 0.35, "one-shot mean " + fmt(one.mean) + " in 5.1+-0.35");
  o.check(std::abs(one.stddev - 1.5) <= 0.4, "one-shot sd " + fmt(one.stddev) + " in 1.5+-0.4");
  o.check(std::abs(std_.mean - 5.4) <= 0.35, "standard mean " + fmt(std_.mean) + " in 5.4+-0.35");
  o.detail << " (n=" << one.count << "/" << std_.count << ")";
  return o;
}

Outcome c3_effective_range(const Context& ctx) {
  Outcome o;
  const auto& r = sampler_ensemble(ctx);
  std::map<std::string, gw::RunningStats> range;
  for (const auto& rec : r.records) range[rec.algorithm].add(rec.effective_range);
  o.check(std::abs(range["oneshot"].mean() - 0.42) <= 0.05,
          "one-shot R " + fmt(range["oneshot"].mean()) + " in 0.42+-0.05");
  o.check(std::abs(range["standard"].mean() - 1.0) <= 0.1,
          "standard R " + fmt(range["standard"].mean()) + " in 1.0+-0.1");
  return o;
}

Outcome c4_pg_trend(const Context& ctx) {
  Outcome o;
  const auto r = run(ctx, "pg_sweep",
                     {{"kind", "pg_sweep"},
                      {"seed", 4},
                      {"realizations", 100},
                      {"n_train", 20000},
                      {"feature_dims", {300}},
                      {"p_good", {{"start", 0.0}, {"stop", 1.0}, {"count", 11}}},
                      {"betas", {4e-5}}});
  const auto& series = r.summary.at("analysis").at("series").at(0);
  const double z = series.at("max_isotonic_z").get<double>();
  o.check(z <= 2.0, "max |mean - isotonic| / SE " + fmt(z, 2) + " <= 2");
  const auto pg = series.at("p_good").get<std::vector<double>>();
  const auto mean = series.at("tau_mean").get<std::vector<double>>();
  const auto cv = series.at("tau_cv").get<std::vector<double>>();
  auto at = [&](const std::vector<double>& v, double p) {
    for (std::size_t i = 0; i < pg.size(); ++i)
      if (std::abs(pg[i] - p) < 1e-9) return v[i];
    throw std::runtime_error("p_g grid point missing");
  };
  o.check(std::abs(at(mean, 1.0) - 4.46) <= 0.3, "mean at p_g=1 " + fmt(at(mean, 1.0)) + " in 4.46+-0.3");
  o.check(at(cv, 1.0) < at(cv, 0.2), "CV(1) " + fmt(at(cv, 1.0)) + " < CV(0.2) " + fmt(at(cv, 0.2)));
  return o;
}

Outcome c5_effective_dimension(const Context& ctx) {
  Outcome o;
  const auto full = run(ctx, "effective_dim_1024",
                        {{"kind", "effective_dim"},
                         {"seed", 51},
                         {"realizations", 100},
                         {"n_train", 20000},
                         {"feature_dims", {1024}},
                         {"p_good", {1.0}},
                         {"paired_data", false}});
  const auto half = run(ctx, "effective_dim_2048",
                        {{"kind", "effective_dim"},
                         {"seed", 52},
                         {"realizations", 100},
                         {"n_train", 20000},
                         {"feature_dims", {2048}},
                         {"p_good", {0.5}},
                         {"bad_mixes", {"balanced", "linear", "saturated"}},
                         {"paired_data", false}});
  std::vector<double> means{gw::summarize(tau_of(full, [](const auto&) { return true; })).mean};
  std::map<std::string, std::vector<double>> by_mix;
  for (const auto& rec : half.records) by_mix[rec.bad_mix].push_back(rec.tau_f);
  std::string listing = "means 1024/p1=" + fmt(means[0]);
  for (const auto& [mix, v] : by_mix) {
    means.push_back(gw::summarize(v).mean);
    listing += " 2048/" + mix + "=" + fmt(means.back());
  }
  const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
  o.check(*hi - *lo <= 0.3, listing + " spread " + fmt(*hi - *lo) + " <= 0.3");
  double min_p = 1.0;
  for (auto a = by_mix.begin(); a != by_mix.end(); ++a)
    for (auto b = std::next(a); b != by_mix.end(); ++b)
      min_p = std::min(min_p, gw::ks_two_sample(a->second, b->second).p_value);
  o.check(min_p > 0.01, "min pairwise KS p " + fmt(min_p) + " > 0.01");
  return o;
}

Outcome c6_wnorm_scaling(const Context& ctx) {
  Outcome o;
  const auto r = run(ctx, "wnorm_scaling",
                     {{"kind", "wnorm_scaling"},
                      {"seed", 6},
                      {"realizations", 50},
                      {"n_train", 20000},
                      {"feature_dims", {512, 1024, 2048, 4096}},
                      {"p_good", {1.0}}});
  // Own fit of log mean ||W|| against log D_r from the records.
  std::map<long, gw::RunningStats> wn;
  for (const auto& rec : r.records) wn[rec.feature_dim].add(rec.w_norm);
  std::vector<double> lx, ly;
  for (const auto& [dr, s] : wn) {
    lx.push_back(std::log(static_cast<double>(dr)));
    ly.push_back(std::log(s.mean()));
  }
  const double slope = gw::linear_fit(lx, ly).slope;
  o.check(slope >= -0.64 && slope <= -0.44, "log-log slope " + fmt(slope) + " in [-0.64, -0.44]");
  return o;
}

Outcome c7_suppression(const Context& ctx) {
  Outcome o;
  const auto r = run(ctx, "suppression",
                     {{"kind", "suppression"},
                      {"seed", 7},
                      {"realizations", 10},
                      {"n_train", 20000},
                      {"feature_dims", {300}},
                      {"suppression", {{"start", "saturated"}, {"stages", {10, 50, 150}}}}});
  // Pooled over realizations: fraction of saturated columns below 1 at
  // N_g=150, and per-realization median ratios at N_g=50.
  long below = 0, total = 0;
  double raw_below = 0;
  std::map<long, std::pair<std::vector<double>, std::vector<double>>> at50;
  for (const auto& c : r.columns) {
    if (c.stage == 150 && c.row_class == gw::RowClass::Saturated) {
      ++total;
      below += c.normalized_sup_norm < 1.0 ? 1 : 0;
      raw_below += c.sup_norm < 1.0 ? 1 : 0;
    }
    if (c.stage == 50) {
      auto& m = at50[c.realization];
      if (c.row_class == gw::RowClass::Good) m.first.push_back(c.normalized_sup_norm);
      if (c.row_class == gw::RowClass::Saturated) m.second.push_back(c.normalized_sup_norm);
    }
  }
  o.check(total > 0 && below == total,
          "N_g=150 saturated columns with normalized norm < 1: " + std::to_string(below) + "/" + std::to_string(total));
  gw::RunningStats ratio;
  double worst = 0.0;
  for (const auto& [m, v] : at50) {
    const double q = gw::median(v.second) / gw::median(v.first);
    ratio.add(q);
    worst = std::max(worst, q);
  }
  o.check(ratio.mean() < 0.05, "N_g=50 median saturated/good ratio " + fmt(ratio.mean(), 4) + " < 0.05 (worst " +
                                   fmt(worst, 4) + ")");
  o.detail << " (raw sup-norm < 1 at N_g=150: " << fmt(raw_below / std::max<long>(total, 1)) << ")";
  return o;
}

// Partial-pivoting Gaussian elimination on the normal equations.
Eigen::MatrixXd oracle_ridge(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& u, double beta) {
  Eigen::MatrixXd a = phi * phi.transpose();
  a.diagonal().array() += beta;
  Eigen::MatrixXd b = phi * u.transpose();
  const long n = a.rows();
  for (long k = 0; k < n; ++k) {
    long p = k;
    for (long i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(p, k))) p = i;
    a.row(k).swap(a.row(p));
    b.row(k).swap(b.row(p));
    for (long i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      a.row(i).tail(n - k) -= f * a.row(k).tail(n - k);
      b.row(i) -= f * b.row(k);
    }
  }
  for (long k = n - 1; k >= 0; --k) {
    for (long i = k + 1; i < n; ++i) b.row(k) -= a(k, i) * b.row(i);
    b.row(k) /= a(k, k);
  }
  return b.transpose();
}

Outcome c8_ridge_oracle(const Context&) {
  Outcome o;
  gw::Rng rng(8);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const long d = 1 + static_cast<long>(rng.index(3));
    const long dr = 1 + static_cast<long>(rng.index(20));
    const long n = 1 + static_cast<long>(rng.index(50));
    Eigen::MatrixXd phi(dr, n), u(d, n);
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi.data()[i] = std::tanh(rng.uniform(-3, 3));
    for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = rng.uniform(-20, 20);
    const double beta = std::pow(10.0, rng.uniform(-5, 0));
    const auto w = gw::ridge_solve(phi, u, {beta}).w;
    const auto ref = oracle_ridge(phi, u, beta);
    worst = std::max(worst, (w - ref).norm() / ref.norm());
  }
  o.check(worst < 1e-10, "worst relative error over 1000 instances " + fmt_g(worst) + " < 1e-10");

  const auto traj = gw::generate_trajectory(81, 0, 20000, {});
  double stat = 0.0;
  for (const auto& [dr, beta] : std::vector<std::pair<long, double>>{{300, 4e-5}, {512, 2.79e-5}, {2048, 4e-5}}) {
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto sw = gw::sample_internal_weights(traj.states, dr, 1.0, {}, gw::SamplingAlgorithm::OneShot,
                                                  gw::BadMix::Balanced, gw::derive_seed(dr, s));
      stat = std::max(stat, gw::fit_model(sw.weights, traj, {beta}).stationarity);
    }
  }
  o.check(stat < 1e-8, "worst stationarity residual " + fmt_g(stat) + " < 1e-8");
  return o;
}

double fd_gradient_error(std::uint64_t seed) {
  const auto ts = gw::TrainingSet::from_trajectory(gw::generate_trajectory(seed, 0, 16, {}));
  gw::Rng rng(seed);
  auto p = gw::glorot_init(8, 3, seed);
  for (Eigen::Index i = 0; i < p.b_in.size(); ++i) p.b_in(i) = rng.uniform(-1, 1);
  const double beta = 4e-5;
  const auto lg = gw::loss_and_grad(p, ts, beta);
  double worst = 0.0;
  auto probe = [&](double* x, const double* g, Eigen::Index n) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const double x0 = x[k];
      const double h = 1e-6 * std::max(1.0, std::abs(x0));
      x[k] = x0 + h;
      const double up = gw::network_loss(p, ts, beta);
      x[k] = x0 - h;
      const double down = gw::network_loss(p, ts, beta);
      x[k] = x0;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(fd - g[k]) / std::max(std::abs(g[k]), 1e-2 * lg.loss / 16));
    }
  };
  probe(p.w_in.data(), lg.grad.w_in.data(), p.w_in.size());
  probe(p.b_in.data(), lg.grad.b_in.data(), p.b_in.size());
  probe(p.w.data(), lg.grad.w.data(), p.w.size());
  return worst;
}

Outcome c9_network_baseline(const Context& ctx) {
  Outcome o;
  double fd = 0.0;
  for (std::uint64_t s = 1; s <= 5; ++s) fd = std::max(fd, fd_gradient_error(s));
  o.check(fd < 1e-5, "finite-difference rel err " + fmt_g(fd) + " < 1e-5");

  const std::uint64_t data_seed = 91;
  const auto ts = gw::TrainingSet::from_trajectory(gw::generate_trajectory(data_seed, 0, 20000, {}));
  std::vector<gw::Trajectory> validation;
  for (std::uint64_t k = 0; k < 25; ++k) validation.push_back(gw::generate_trajectory(data_seed, 1 + k, 1500, {}));
  gw::NetTrainConfig cfg;
  cfg.feature_dim = 300;
  cfg.beta = 4e-5;
  cfg.steps = 50000;
  cfg.checkpoint_every = 5000;
  cfg.seed = 9;
  cfg.workers = ctx.workers;

  const auto glorot = gw::train_network(ts, validation, cfg);
  o.check(!glorot.history.aborted, "glorot run completed");
  long late_max = 0;
  std::vector<double> tau, log_loss;
  for (const auto& c : glorot.history.records) {
    if (c.step > 10000) late_max = std::max(late_max, c.counts.good);
    tau.push_back(c.mean_tau_f);
    log_loss.push_back(std::log(c.loss));
  }
  o.check(late_max <= 1, "max n_good after step 1e4 = " + std::to_string(late_max) + " <= 1");
  const double corr = gw::pearson(tau, log_loss);
  o.check(corr < 0.0, "corr(mean tau_f, log L) " + fmt(corr) + " < 0");

  cfg.init = gw::NetInit::GoodRows;
  cfg.stop_when_no_good = true;
  const auto good = gw::train_network(ts, validation, cfg);
  const auto& last = good.history.records.back();
  o.check(last.counts.good == 0, "good-row init: n_good " + std::to_string(good.history.records.front().counts.good) +
                                     " -> " + std::to_string(last.counts.good) + " at step " +
                                     std::to_string(last.step));
  o.detail << " (final glorot loss " << fmt(glorot.history.records.back().loss, 1) << ", mean tau_f "
           << fmt(glorot.history.records.back().mean_tau_f) << ")";
  if (!ctx.out_dir.empty()) {
    std::filesystem::create_directories(ctx.out_dir / "nn");
    std::ofstream g(ctx.out_dir / "nn" / "glorot_history.csv");
    gw::write_history_csv(g, glorot.history);
    std::ofstream h(ctx.out_dir / "nn" / "goodrows_history.csv");
    gw::write_history_csv(h, good.history);
  }
  return o;
}

Outcome c10_invariant_measure(const Context& ctx) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run(ctx, "invariant_measure",
                     {{"kind", "invariant_measure"},
                      {"seed", 10},
                      {"realizations", 10},
                      {"n_train", 20000},
                      {"feature_dims", {300}},
                      {"p_good", {0.0, 1.0}},
                      {"betas", {4e-5}},
                      {"invariant", {{"total_time", 2000.0}, {"burn_in", 40.0}, {"bins", 100}}}});
  std::map<long, std::map<double, const gw::ResultRecord*>> by_m;
  for (const auto& rec : r.records) by_m[rec.realization][rec.p_good] = &rec;
  int wins = 0;
  for (const auto& [m, v] : by_m) {
    const auto& hi = *v.at(1.0);
    const auto& lo = *v.at(0.0);
    wins += (hi.l1_x < lo.l1_x && hi.l1_y < lo.l1_y && hi.l1_z < lo.l1_z) ? 1 : 0;
  }
  o.check(wins >= 8, "p_g=1 closer in every coordinate on " + std::to_string(wins) + "/" +
                         std::to_string(by_m.size()) + " seeds (>= 8)");
  const double secs = seconds_since(t0);
  o.check(secs < 300.0, "runtime " + fmt(secs, 1) + "s < 300s");
  return o;
}

Outcome c11_heatmap(const Context& ctx) {
  Outcome o;
  const auto r = run(ctx, "heatmap",
                     {{"kind", "heatmap"},
                      {"seed", 11},
                      {"realizations", 20},
                      {"n_train", 20000},
                      {"validation_runs", 5},
                      {"feature_dims", {300}},
                      {"betas", {4e-5}},
                      {"heatmap", {{"w_max", 0.4}, {"b_max", 4.0}, {"resolution", 10}}}});
  const auto& h = r.summary.at("analysis").at("heatmap");
  const double best = h.at("best").at("tau_mean").get<double>();
  const double corner = h.at("corner_tau_mean").get<double>();
  o.check(best > 4.0, "best cell mean " + fmt(best) + " (w=" + fmt(h.at("best").at("w").get<double>()) +
                          ", b=" + fmt(h.at("best").at("b").get<double>()) + ") > 4");
  o.check(corner < 1.0, "corner cell (w=0.02, b=0.2) mean " + fmt(corner) + " < 1");
  return o;
}

struct Criterion {
  int id;
  const char* title;
  Outcome (*fn)(const Context&);
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"goodweights acceptance checks"};
  std::vector<int> only;
  Context ctx;
  ctx.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string out;
  app.add_option("--only", only, "Criterion numbers to run (default: all)")->check(CLI::Range(1, 11));
  app.add_option("--workers", ctx.workers, "Worker threads");
  app.add_option("--out", out, "Directory for experiment outputs (empty: none)");
  CLI11_PARSE(app, argc, argv);
  ctx.out_dir = out;

  const std::vector<Criterion> criteria{
      {1, "sampler exactness", c1_sampler_exactness},
      {2, "forecast time by sampler", c2_forecast_time},
      {3, "effective range by sampler", c3_effective_range},
      {4, "forecast time vs good fraction", c4_pg_trend},
      {5, "effective dimension", c5_effective_dimension},
      {6, "readout norm scaling", c6_wnorm_scaling},
      {7, "bad-column suppression", c7_suppression},
      {8, "ridge oracle and stationarity", c8_ridge_oracle},
      {9, "gradient-trained network", c9_network_baseline},
      {10, "invariant measure", c10_invariant_measure},
      {11, "uniform-interval heatmap", c11_heatmap},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    std::string status, detail;
    try {
      const Outcome o = c.fn(ctx);
      status = o.pass ? "PASS" : "FAIL";
      detail = o.detail.str();
    } catch (const std::exception& e) {
      status = "FAIL";
      detail = std::string("error: ") + e.what();
    }
    failed += status == "PASS" ? 0 : 1;
    std::printf("C%-2d %s  %s: %s  [%.0fs]\n", c.id, status.c_str(), c.title, detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
