// Aggregation of result records and the files written for a finished run.
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "goodweights/experiments.hpp"
#include "goodweights/plot.hpp"
#include "goodweights/stats.hpp"

namespace goodweights {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using CellKey = std::tuple<std::string, long, long>;  // model, group, stage

struct Cell {
  const ResultRecord* first = nullptr;
  std::vector<double> tau;
  RunningStats tau_stats, loss, w_norm, range, l1_x, l1_y, l1_z;
  long censored = 0;
  long invalid = 0;
};

void add_finite(RunningStats& s, double x) {
  if (std::isfinite(x)) s.add(x);
}

double mean_or_nan(const RunningStats& s) { return s.count() > 0 ? s.mean() : kNaN; }

std::map<CellKey, Cell> group_cells(const std::vector<ResultRecord>& records) {
  std::map<CellKey, Cell> cells;
  for (const auto& r : records) {
    auto& c = cells[{r.model, r.group, r.stage}];
    if (!c.first) c.first = &r;
    // Censored rollouts enter at the censoring time.
    c.tau.push_back(r.tau_f);
    c.tau_stats.add(r.tau_f);
    c.censored += r.censored;
    c.invalid += r.valid ? 0 : 1;
    add_finite(c.loss, r.loss);
    add_finite(c.w_norm, r.w_norm);
    add_finite(c.range, r.effective_range);
    add_finite(c.l1_x, r.l1_x);
    add_finite(c.l1_y, r.l1_y);
    add_finite(c.l1_z, r.l1_z);
  }
  return cells;
}

json cell_json(const Cell& c) {
  const ResultRecord& r = *c.first;
  return {{"model", r.model},
          {"group", r.group},
          {"stage", r.stage},
          {"feature_dim", r.feature_dim},
          {"p_good", r.p_good},
          {"beta", r.beta},
          {"algorithm", r.algorithm},
          {"bad_mix", r.bad_mix},
          {"w_scale", r.w_scale},
          {"b_scale", r.b_scale},
          {"count", c.tau_stats.count()},
          {"tau_mean", c.tau_stats.mean()},
          {"tau_sd", c.tau_stats.stddev()},
          {"tau_cv", c.tau_stats.cv()},
          {"tau_se", c.tau_stats.standard_error()},
          {"censored", c.censored},
          {"invalid", c.invalid},
          {"loss_mean", mean_or_nan(c.loss)},
          {"w_norm_mean", mean_or_nan(c.w_norm)},
          {"w_norm_sd", c.w_norm.count() > 0 ? c.w_norm.stddev() : kNaN},
          {"R_mean", mean_or_nan(c.range)},
          {"R_sd", c.range.count() > 0 ? c.range.stddev() : kNaN},
          {"l1_x_mean", mean_or_nan(c.l1_x)},
          {"l1_y_mean", mean_or_nan(c.l1_y)},
          {"l1_z_mean", mean_or_nan(c.l1_z)}};
}

// Cells of one curve over p_g: same model, D_r, beta, algorithm and mix.
using SeriesKey = std::tuple<std::string, long, double, std::string, std::string>;

std::map<SeriesKey, std::vector<const Cell*>> series_over_pg(const std::map<CellKey, Cell>& cells) {
  std::map<SeriesKey, std::vector<const Cell*>> out;
  for (const auto& [key, c] : cells) {
    const auto& r = *c.first;
    out[{r.model, r.feature_dim, r.beta, r.algorithm, r.bad_mix}].push_back(&c);
  }
  for (auto& [key, v] : out)
    std::stable_sort(v.begin(), v.end(), [](const Cell* a, const Cell* b) { return a->first->p_good < b->first->p_good; });
  return out;
}

json series_json(const SeriesKey& key, const std::vector<const Cell*>& cells) {
  std::vector<double> pg, mean, se, cv, weights;
  for (const Cell* c : cells) {
    pg.push_back(c->first->p_good);
    mean.push_back(c->tau_stats.mean());
    se.push_back(c->tau_stats.standard_error());
    cv.push_back(c->tau_stats.cv());
    weights.push_back(se.back() > 0.0 ? 1.0 / (se.back() * se.back()) : 1.0);
  }
  const auto iso = isotonic_fit(mean, weights);
  double max_z = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double dev = std::abs(mean[i] - iso[i]);
    if (dev > 0.0) max_z = std::max(max_z, se[i] > 0.0 ? dev / se[i] : std::numeric_limits<double>::infinity());
  }
  return {{"model", std::get<0>(key)},
          {"feature_dim", std::get<1>(key)},
          {"beta", std::get<2>(key)},
          {"algorithm", std::get<3>(key)},
          {"bad_mix", std::get<4>(key)},
          {"p_good", pg},
          {"tau_mean", mean},
          {"tau_se", se},
          {"tau_cv", cv},
          {"isotonic", iso},
          {"max_isotonic_z", max_z}};
}

json analyze_wnorm(const std::map<CellKey, Cell>& cells) {
  // Log-log fit of mean ||W|| against D_r at the largest p_g of each D_r.
  std::map<long, const Cell*> top;
  for (const auto& [key, c] : cells) {
    auto& t = top[c.first->feature_dim];
    if (!t || c.first->p_good > t->first->p_good) t = &c;
  }
  std::vector<double> lx, ly, dr, wn;
  for (const auto& [d, c] : top) {
    dr.push_back(static_cast<double>(d));
    wn.push_back(c->w_norm.mean());
    lx.push_back(std::log(static_cast<double>(d)));
    ly.push_back(std::log(c->w_norm.mean()));
  }
  json j = {{"feature_dims", dr}, {"w_norm_mean", wn}};
  if (lx.size() >= 2) {
    const auto fit = linear_fit(lx, ly);
    j["loglog_slope"] = fit.slope;
    j["loglog_slope_stderr"] = fit.slope_stderr;
  }
  // Per D_r: is mean ||W|| nonincreasing in p_g?
  json per_dr = json::array();
  for (const auto& [key, series] : series_over_pg(cells)) {
    std::vector<double> pg, w;
    bool decreasing = true;
    for (const Cell* c : series) {
      pg.push_back(c->first->p_good);
      w.push_back(c->w_norm.mean());
      if (w.size() >= 2 && w.back() > w[w.size() - 2]) decreasing = false;
    }
    per_dr.push_back({{"feature_dim", std::get<1>(key)}, {"p_good", pg}, {"w_norm_mean", w}, {"nonincreasing", decreasing}});
  }
  j["w_norm_vs_p_good"] = per_dr;
  return j;
}

json analyze_effective_dim(const std::map<CellKey, Cell>& cells) {
  std::vector<const Cell*> all;
  for (const auto& [key, c] : cells) all.push_back(&c);
  json ks = json::array();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double min_p = 1.0;
  for (std::size_t a = 0; a < all.size(); ++a) {
    lo = std::min(lo, all[a]->tau_stats.mean());
    hi = std::max(hi, all[a]->tau_stats.mean());
    for (std::size_t b = a + 1; b < all.size(); ++b) {
      const auto& ra = *all[a]->first;
      const auto& rb = *all[b]->first;
      // Only the bad-row mix differs: same D_r, p_g and beta.
      if (ra.feature_dim != rb.feature_dim || ra.p_good != rb.p_good || ra.beta != rb.beta ||
          ra.algorithm != rb.algorithm)
        continue;
      const auto res = ks_two_sample(all[a]->tau, all[b]->tau);
      min_p = std::min(min_p, res.p_value);
      ks.push_back({{"a", ra.group}, {"b", rb.group}, {"bad_mix_a", ra.bad_mix}, {"bad_mix_b", rb.bad_mix},
                    {"statistic", res.statistic}, {"p_value", res.p_value}});
    }
  }
  json ng = json::array();
  for (const Cell* c : all)
    ng.push_back({{"group", c->first->group},
                  {"feature_dim", c->first->feature_dim},
                  {"n_good", c->first->p_good * static_cast<double>(c->first->feature_dim)},
                  {"bad_mix", c->first->bad_mix},
                  {"tau_mean", c->tau_stats.mean()}});
  return {{"ks_pairs", ks}, {"min_ks_p_value", min_p}, {"mean_spread", all.empty() ? kNaN : hi - lo}, {"cells", ng}};
}

json analyze_beta(const std::map<CellKey, Cell>& cells) {
  std::map<std::tuple<long, double, std::string, std::string>, std::vector<const Cell*>> by_pg;
  for (const auto& [key, c] : cells) {
    const auto& r = *c.first;
    by_pg[{r.feature_dim, r.p_good, r.algorithm, r.bad_mix}].push_back(&c);
  }
  json out = json::array();
  for (const auto& [key, v] : by_pg) {
    const Cell* best = *std::max_element(
        v.begin(), v.end(), [](const Cell* a, const Cell* b) { return a->tau_stats.mean() < b->tau_stats.mean(); });
    std::vector<double> betas, means;
    for (const Cell* c : v) {
      betas.push_back(c->first->beta);
      means.push_back(c->tau_stats.mean());
    }
    out.push_back({{"feature_dim", std::get<0>(key)},
                   {"p_good", std::get<1>(key)},
                   {"betas", betas},
                   {"tau_mean", means},
                   {"best_beta", best->first->beta},
                   {"best_tau_mean", best->tau_stats.mean()}});
  }
  return {{"best_beta_per_p_good", out}};
}

json analyze_sampler(const std::map<CellKey, Cell>& cells) {
  std::map<std::tuple<long, double, double, std::string>, std::map<std::string, const Cell*>> pairs;
  for (const auto& [key, c] : cells) {
    const auto& r = *c.first;
    pairs[{r.feature_dim, r.p_good, r.beta, r.bad_mix}][r.algorithm] = &c;
  }
  json out = json::array();
  for (const auto& [key, algs] : pairs) {
    json e = {{"feature_dim", std::get<0>(key)}, {"p_good", std::get<1>(key)}, {"beta", std::get<2>(key)}};
    for (const auto& [alg, c] : algs) {
      e[alg] = {{"tau_mean", c->tau_stats.mean()}, {"tau_sd", c->tau_stats.stddev()}, {"R_mean", c->range.mean()},
                {"R_sd", c->range.stddev()}, {"count", c->tau_stats.count()}};
    }
    if (algs.count("standard") && algs.count("oneshot"))
      e["tau_mean_difference"] = algs.at("standard")->tau_stats.mean() - algs.at("oneshot")->tau_stats.mean();
    out.push_back(e);
  }
  return {{"pairs", out}};
}

json analyze_heatmap(const ExperimentConfig& cfg, const std::map<CellKey, Cell>& cells) {
  const int res = cfg.heatmap.resolution;
  std::vector<std::vector<double>> mean(res, std::vector<double>(res, kNaN));
  auto sd = mean;
  const Cell* best = nullptr;
  for (const auto& [key, c] : cells) {
    const long g = c.first->group;
    if (g < 0 || g >= static_cast<long>(res) * res) continue;
    mean[g / res][g % res] = c.tau_stats.mean();
    sd[g / res][g % res] = c.tau_stats.stddev();
    if (!best || c.tau_stats.mean() > best->tau_stats.mean()) best = &c;
  }
  json j = {{"tau_mean", mean}, {"tau_sd", sd}, {"corner_tau_mean", mean[0][0]}};
  if (best)
    j["best"] = {{"w", best->first->w_scale}, {"b", best->first->b_scale}, {"tau_mean", best->tau_stats.mean()}};
  return j;
}

json analyze_suppression(const ExperimentConfig& cfg, const std::vector<ColumnRecord>& columns) {
  const RowClass bad = cfg.suppression.start;
  // (stage) -> pooled fractions; (stage, realization) -> median ratio.
  std::map<long, std::pair<long, long>> normalized_below, raw_below;
  std::map<std::pair<long, long>, std::pair<std::vector<double>, std::vector<double>>> medians;
  for (const auto& c : columns) {
    auto& m = medians[{c.stage, c.realization}];
    if (c.row_class == RowClass::Good) m.first.push_back(c.normalized_sup_norm);
    if (c.row_class != bad) continue;
    m.second.push_back(c.normalized_sup_norm);
    auto& nb = normalized_below[c.stage];
    auto& rb = raw_below[c.stage];
    ++nb.second;
    ++rb.second;
    if (c.normalized_sup_norm < 1.0) ++nb.first;
    if (c.sup_norm < 1.0) ++rb.first;
  }
  std::map<long, RunningStats> ratio_stats;
  std::map<long, double> ratio_max;
  for (const auto& [key, v] : medians) {
    if (v.first.empty() || v.second.empty()) continue;
    const double ratio = median(v.second) / median(v.first);
    ratio_stats[key.first].add(ratio);
    auto [it, inserted] = ratio_max.emplace(key.first, ratio);
    if (!inserted) it->second = std::max(it->second, ratio);
  }
  json out = json::array();
  std::set<long> stages;
  for (const auto& [key, v] : medians) stages.insert(key.first);
  for (long s : stages) {
    json e = {{"stage", s}};
    if (normalized_below.count(s)) {
      const auto [nb, n] = normalized_below.at(s);
      e["bad_columns"] = n;
      e["fraction_normalized_below_1"] = static_cast<double>(nb) / static_cast<double>(n);
      e["fraction_raw_below_1"] = static_cast<double>(raw_below.at(s).first) / static_cast<double>(n);
    }
    if (ratio_stats.count(s)) {
      e["median_ratio_mean"] = ratio_stats.at(s).mean();
      e["median_ratio_max"] = ratio_max.at(s);
    }
    out.push_back(e);
  }
  return {{"start", std::string(to_string(bad))}, {"stages", out}};
}

json analyze_invariant(const std::vector<ResultRecord>& records) {
  std::map<long, std::vector<const ResultRecord*>> by_m;
  for (const auto& r : records) by_m[r.realization].push_back(&r);
  long wins = 0;
  long compared = 0;
  json per = json::array();
  for (const auto& [m, v] : by_m) {
    auto [lo, hi] = std::minmax_element(v.begin(), v.end(), [](const ResultRecord* a, const ResultRecord* b) {
      return a->p_good < b->p_good;
    });
    if ((*lo)->p_good == (*hi)->p_good) continue;
    const auto& a = **hi;
    const auto& b = **lo;
    const bool win = a.l1_x < b.l1_x && a.l1_y < b.l1_y && a.l1_z < b.l1_z;
    ++compared;
    wins += win ? 1 : 0;
    per.push_back({{"realization", m},
                   {"high_p_good", a.p_good},
                   {"low_p_good", b.p_good},
                   {"l1_high", {a.l1_x, a.l1_y, a.l1_z}},
                   {"l1_low", {b.l1_x, b.l1_y, b.l1_z}},
                   {"all_coordinates_better", win}});
  }
  return {{"realizations_compared", compared}, {"wins", wins}, {"per_realization", per}};
}

json analyze_nn(const std::map<CellKey, Cell>& cells) {
  std::vector<double> steps, tau, log_loss;
  long max_good_late = -1;
  long min_good = std::numeric_limits<long>::max();
  RunningStats rfm;
  for (const auto& [key, c] : cells) {
    const auto& r = *c.first;
    if (r.model == "rfm") {
      rfm.merge(c.tau_stats);
      continue;
    }
    steps.push_back(static_cast<double>(r.stage));
    tau.push_back(r.tau_f);
    log_loss.push_back(std::log(r.loss));
    min_good = std::min(min_good, r.counts.good);
    if (r.stage > 10000) max_good_late = std::max(max_good_late, r.counts.good);
  }
  json j = {{"checkpoints", steps.size()}, {"rfm_tau_mean", rfm.count() ? rfm.mean() : kNaN},
            {"rfm_count", rfm.count()}};
  if (!steps.empty()) {
    j["final_step"] = steps.back();
    j["final_tau_mean"] = tau.back();
    j["final_loss"] = std::exp(log_loss.back());
    j["min_n_good"] = min_good;
    j["max_n_good_after_1e4"] = max_good_late;
    j["tau_log_loss_correlation"] = steps.size() >= 2 ? pearson(tau, log_loss) : kNaN;
  }
  return j;
}

}  // namespace

json summarize_records(const ExperimentConfig& cfg, const std::vector<ResultRecord>& records,
                       const std::vector<ColumnRecord>& columns) {
  const auto cells = group_cells(records);
  json j;
  j["kind"] = std::string(to_string(cfg.kind));
  j["name"] = cfg.name;
  j["records"] = records.size();
  j["cells"] = json::array();
  for (const auto& [key, c] : cells) j["cells"].push_back(cell_json(c));

  json analysis = json::object();
  switch (cfg.kind) {
    case ExperimentKind::PgSweep:
    case ExperimentKind::EffectiveDim:
    case ExperimentKind::WnormScaling:
    case ExperimentKind::BetaSweep:
    case ExperimentKind::SamplerCompare: {
      analysis["series"] = json::array();
      for (const auto& [key, v] : series_over_pg(cells)) analysis["series"].push_back(series_json(key, v));
      if (cfg.kind == ExperimentKind::WnormScaling) analysis["w_norm"] = analyze_wnorm(cells);
      if (cfg.kind == ExperimentKind::EffectiveDim) analysis["effective_dim"] = analyze_effective_dim(cells);
      if (cfg.kind == ExperimentKind::BetaSweep) analysis["beta"] = analyze_beta(cells);
      if (cfg.kind == ExperimentKind::SamplerCompare) analysis["sampler"] = analyze_sampler(cells);
      break;
    }
    case ExperimentKind::Heatmap:
      analysis["heatmap"] = analyze_heatmap(cfg, cells);
      break;
    case ExperimentKind::Suppression:
      analysis["suppression"] = analyze_suppression(cfg, columns);
      break;
    case ExperimentKind::InvariantMeasure:
      analysis["invariant"] = analyze_invariant(records);
      break;
    case ExperimentKind::NnCompare:
      analysis["nn"] = analyze_nn(cells);
      break;
  }
  j["analysis"] = analysis;
  return j;
}

namespace {

std::vector<double> json_doubles(const json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(v.is_number() ? v.get<double>() : kNaN);
  return out;
}

std::string series_label(const json& s) {
  std::ostringstream os;
  os << "D_r=" << s["feature_dim"].get<long>() << " beta=" << s["beta"].get<double>() << ' '
     << s["algorithm"].get<std::string>() << ' ' << s["bad_mix"].get<std::string>();
  return os.str();
}

std::vector<std::pair<std::string, std::string>> figures(const ExperimentResult& r) {
  std::vector<std::pair<std::string, std::string>> out;
  const json& a = r.summary.at("analysis");
  const auto cells = group_cells(r.records);

  if (a.contains("series")) {
    plot::Panel mean{"mean forecast time", "p_g", "E[tau_f]"};
    plot::Panel cv{"coefficient of variation", "p_g", "sd/mean"};
    for (const auto& s : a["series"]) {
      const auto pg = json_doubles(s["p_good"]);
      const auto m = json_doubles(s["tau_mean"]);
      const auto se = json_doubles(s["tau_se"]);
      plot::Series line{series_label(s), pg, m};
      for (std::size_t i = 0; i < m.size(); ++i) {
        line.band_lo.push_back(m[i] - 2.0 * se[i]);
        line.band_hi.push_back(m[i] + 2.0 * se[i]);
      }
      line.markers = true;
      mean.series.push_back(line);
      cv.series.push_back({series_label(s), pg, json_doubles(s["tau_cv"])});
    }
    out.emplace_back("tau_vs_pg.svg", plot::render({mean, cv}));
  }

  if (a.contains("effective_dim")) {
    plot::Panel ng{"mean forecast time by good rows", "N_g", "E[tau_f]"};
    std::map<long, plot::Series> by_dr;
    for (const auto& [key, c] : cells) {
      auto& s = by_dr[c.first->feature_dim];
      s.label = "D_r=" + std::to_string(c.first->feature_dim) + " " + c.first->bad_mix;
      s.markers = true;
      s.x.push_back(c.first->p_good * static_cast<double>(c.first->feature_dim));
      s.y.push_back(c.tau_stats.mean());
    }
    for (auto& [d, s] : by_dr) ng.series.push_back(s);
    plot::Panel hist{"forecast time distributions", "tau_f", "density"};
    for (const auto& [key, c] : cells) {
      plot::Bars b;
      b.label = "D_r=" + std::to_string(c.first->feature_dim) + " " + c.first->bad_mix;
      const int bins = 20;
      const double hi = std::max(1e-9, *std::max_element(c.tau.begin(), c.tau.end()));
      for (int i = 0; i <= bins; ++i) b.edges.push_back(hi * i / bins);
      b.values.assign(bins, 0.0);
      for (double t : c.tau)
        b.values[std::min(bins - 1, static_cast<int>(t / hi * bins))] += 1.0 / (static_cast<double>(c.tau.size()) * hi / bins);
      hist.bars.push_back(b);
    }
    out.emplace_back("effective_dim.svg", plot::render({ng, hist}));
  }

  if (a.contains("w_norm")) {
    const auto& w = a["w_norm"];
    plot::Panel p{"outer weight norm", "D_r", "mean ||W||"};
    p.log_x = p.log_y = true;
    p.series.push_back({"p_g max", json_doubles(w["feature_dims"]), json_doubles(w["w_norm_mean"])});
    p.series.back().markers = true;
    plot::Panel q{"norm against good fraction", "p_g", "mean ||W||"};
    for (const auto& s : w["w_norm_vs_p_good"])
      q.series.push_back({"D_r=" + std::to_string(s["feature_dim"].get<long>()), json_doubles(s["p_good"]),
                          json_doubles(s["w_norm_mean"])});
    out.emplace_back("wnorm.svg", plot::render({p, q}));
  }

  if (a.contains("heatmap")) {
    const auto& h = a["heatmap"];
    const int res = r.config.heatmap.resolution;
    std::vector<double> xs, ys;
    for (int i = 0; i < res; ++i) {
      xs.push_back((i + 0.5) * r.config.heatmap.w_max / res);
      ys.push_back((i + 0.5) * r.config.heatmap.b_max / res);
    }
    std::vector<std::vector<double>> mean, sd;
    for (const auto& row : h["tau_mean"]) mean.push_back(json_doubles(row));
    for (const auto& row : h["tau_sd"]) sd.push_back(json_doubles(row));
    out.emplace_back("heatmap_mean.svg", plot::render_heatmap("mean forecast time", "w", "b", xs, ys, mean, "E[tau_f]"));
    out.emplace_back("heatmap_sd.svg", plot::render_heatmap("forecast time spread", "w", "b", xs, ys, sd, "sd[tau_f]"));
  }

  if (a.contains("suppression") && !r.columns.empty()) {
    std::vector<plot::Panel> panels;
    const long m0 = r.columns.front().realization;
    std::map<long, std::map<RowClass, plot::Series>> by_stage;
    for (const auto& c : r.columns) {
      if (c.realization != m0) continue;
      auto& s = by_stage[c.stage][c.row_class];
      s.label = std::string(to_string(c.row_class));
      s.line = false;
      s.markers = true;
      s.x.push_back(static_cast<double>(c.column));
      s.y.push_back(c.normalized_sup_norm);
    }
    for (auto& [stage, classes] : by_stage) {
      plot::Panel p{"N_g=" + std::to_string(stage), "column", "normalized sup-norm"};
      for (auto& [cls, s] : classes) p.series.push_back(s);
      panels.push_back(p);
    }
    out.emplace_back("suppression.svg", plot::render(panels));
  }

  if (!r.histograms.empty()) {
    std::vector<plot::Panel> panels;
    const char* names[] = {"x", "y", "z"};
    const auto dim = r.histograms.front().second.dim();
    for (Eigen::Index k = 0; k < dim; ++k) {
      plot::Panel p{std::string("marginal ") + (k < 3 ? names[k] : std::to_string(k).c_str()), "value", "density"};
      for (const auto& [label, h] : r.histograms) {
        plot::Bars b;
        b.label = label;
        const int bins = h.range.bins;
        const double width = (h.range.hi(k) - h.range.lo(k)) / bins;
        for (int i = 0; i <= bins; ++i) b.edges.push_back(h.range.lo(k) + i * width);
        for (int i = 0; i < bins; ++i)
          b.values.push_back(h.total > 0 ? static_cast<double>(h.counts[k][i]) / (static_cast<double>(h.total) * width) : 0.0);
        p.bars.push_back(b);
      }
      panels.push_back(p);
    }
    out.emplace_back("invariant_measure.svg", plot::render(panels));
  }

  if (a.contains("nn")) {
    plot::Panel tau{"network forecast time", "step", "E[tau_f]"};
    plot::Panel loss{"network loss", "step", "L"};
    plot::Panel rows{"network row classes", "step", "rows"};
    loss.log_y = true;
    plot::Series t{"network"}, l{"network"}, g{"good"}, li{"linear"}, sa{"saturated"}, mi{"mixed"};
    for (const auto& rec : r.records) {
      if (rec.model != "nn") continue;
      const double x = static_cast<double>(rec.stage);
      t.x.push_back(x), t.y.push_back(rec.tau_f);
      l.x.push_back(x), l.y.push_back(rec.loss);
      for (auto* s : {&g, &li, &sa, &mi}) s->x.push_back(x);
      g.y.push_back(static_cast<double>(rec.counts.good));
      li.y.push_back(static_cast<double>(rec.counts.linear));
      sa.y.push_back(static_cast<double>(rec.counts.saturated));
      mi.y.push_back(static_cast<double>(rec.counts.mixed));
    }
    t.markers = l.markers = true;
    tau.series.push_back(t);
    const double rfm = a["nn"]["rfm_tau_mean"].is_number() ? a["nn"]["rfm_tau_mean"].get<double>() : kNaN;
    if (std::isfinite(rfm) && !t.x.empty()) tau.series.push_back({"random feature map", {t.x.front(), t.x.back()}, {rfm, rfm}});
    loss.series.push_back(l);
    rows.series = {g, li, sa, mi};
    out.emplace_back("nn_training.svg", plot::render({tau, loss, rows}));
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::vector<std::string> write_outputs(const ExperimentResult& result, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ostringstream os;
    write_results_csv(os, result.records);
    write_file(out_dir / "results.csv", os.str());
  }
  json summary = result.summary;
  summary["errors"] = result.errors;
  summary["config"] = result.config.to_json();
  write_file(out_dir / "summary.json", summary.dump(2) + "\n");
  if (!result.columns.empty()) {
    std::ostringstream os;
    write_columns_csv(os, result.columns);
    write_file(out_dir / "columns.csv", os.str());
  }
  if (!result.histograms.empty()) {
    std::ostringstream os;
    os << "label,coord,bin_left,bin_right,count\n" << std::setprecision(17);
    for (const auto& [label, h] : result.histograms)
      for (Eigen::Index k = 0; k < h.dim(); ++k)
        for (int b = 0; b < h.range.bins; ++b)
          os << label << ',' << k << ',' << h.bin_left(k, b) << ',' << h.bin_right(k, b) << ',' << h.counts[k][b] << '\n';
    write_file(out_dir / "histograms.csv", os.str());
  }

  std::vector<std::string> plot_errors;
  try {
    for (const auto& [name, svg] : figures(result)) {
      try {
        write_file(out_dir / name, svg);
      } catch (const std::exception& e) {
        plot_errors.push_back(name + ": " + e.what());
      }
    }
  } catch (const std::exception& e) {
    plot_errors.push_back(std::string("figures: ") + e.what());
  }
  return plot_errors;
}

}  // namespace goodweights
