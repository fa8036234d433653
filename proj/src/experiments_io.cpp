// Config parsing and CSV persistence for experiment runs.
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "goodweights/experiments.hpp"
#include "goodweights/random.hpp"

namespace goodweights {

using nlohmann::json;

namespace {

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::Heatmap, "heatmap"},
    {ExperimentKind::PgSweep, "pg_sweep"},
    {ExperimentKind::EffectiveDim, "effective_dim"},
    {ExperimentKind::WnormScaling, "wnorm_scaling"},
    {ExperimentKind::Suppression, "suppression"},
    {ExperimentKind::BetaSweep, "beta_sweep"},
    {ExperimentKind::SamplerCompare, "sampler_compare"},
    {ExperimentKind::InvariantMeasure, "invariant_measure"},
    {ExperimentKind::NnCompare, "nn_compare"},
};

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || item.key() == a;
    if (!known) throw std::invalid_argument(std::string(where) + ": unknown key '" + item.key() + "'");
  }
}

template <class T>
void read_value(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// A list of numbers, or {"start", "stop", "count"} for evenly spaced values.
std::vector<double> read_grid(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.is_array()) return v.get<std::vector<double>>();
  if (v.is_number()) return {v.get<double>()};
  check_keys(v, key, {"start", "stop", "count"});
  const double start = v.at("start").get<double>();
  const double stop = v.at("stop").get<double>();
  const long count = v.at("count").get<long>();
  if (count < 1) throw std::invalid_argument(std::string(key) + ": count must be >= 1");
  std::vector<double> out;
  for (long i = 0; i < count; ++i)
    out.push_back(count == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1));
  return out;
}

std::string field(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double parse_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad number '" + s + "' in results CSV");
  return v;
}

constexpr const char* kResultsHeader =
    "model,group,realization,seed,data_seed,feature_dim,p_good,beta,algorithm,bad_mix,w_scale,b_scale,n_train,"
    "stage,tau_f,censored,loss,w_norm,effective_range,n_good,n_linear,n_saturated,n_mixed,l1_x,l1_y,l1_z,valid";

}  // namespace

std::string_view to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view s) {
  for (const auto& [kind, name] : kKindNames)
    if (name == s) return kind;
  throw std::invalid_argument("unknown experiment kind '" + std::string(s) + "'");
}

std::string_view to_string(DataMode m) { return m == DataMode::Shared ? "shared" : "per_realization"; }

DataMode parse_data_mode(std::string_view s) {
  if (s == "shared") return DataMode::Shared;
  if (s == "per_realization") return DataMode::PerRealization;
  throw std::invalid_argument("unknown data_mode '" + std::string(s) + "' (expected shared or per_realization)");
}

void ExperimentConfig::validate() const {
  if (realizations < 1) throw std::invalid_argument("config: realizations must be >= 1");
  if (n_train < 1) throw std::invalid_argument("config: n_train must be >= 1");
  if (validation_runs < 1) throw std::invalid_argument("config: validation_runs must be >= 1");
  if (feature_dims.empty() || p_good.empty() || betas.empty() || algorithms.empty() || bad_mixes.empty())
    throw std::invalid_argument("config: grids must be nonempty");
  for (long dr : feature_dims)
    if (dr < 1) throw std::invalid_argument("config: feature_dims entries must be >= 1");
  for (double p : p_good)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("config: p_good entries must lie in [0, 1]");
  for (double b : betas)
    if (!(b > 0.0)) throw std::invalid_argument("config: betas must be > 0");
  sampler.validate();
  forecast.validate();
  integrator.validate();
  if (kind == ExperimentKind::Heatmap) {
    if (data_mode != DataMode::Shared) throw std::invalid_argument("config: heatmap requires shared data");
    if (heatmap.resolution < 1) throw std::invalid_argument("config: heatmap resolution must be >= 1");
    if (!(heatmap.w_max > 0.0 && heatmap.b_max > 0.0))
      throw std::invalid_argument("config: heatmap w_max and b_max must be > 0");
  }
  if (kind == ExperimentKind::Suppression) {
    if (suppression.start != RowClass::Linear && suppression.start != RowClass::Saturated)
      throw std::invalid_argument("config: suppression start must be linear or saturated");
    if (suppression.stages.empty()) throw std::invalid_argument("config: suppression stages must be nonempty");
    for (long s : suppression.stages)
      for (long dr : feature_dims)
        if (s < 0 || s > dr) throw std::invalid_argument("config: suppression stage outside [0, D_r]");
  }
  if (kind == ExperimentKind::InvariantMeasure) {
    if (!(invariant.burn_in >= 0.0 && invariant.total_time > invariant.burn_in))
      throw std::invalid_argument("config: invariant total_time must exceed burn_in >= 0");
    if (invariant.bins < 2) throw std::invalid_argument("config: invariant bins must be >= 2");
    if (!(invariant.reference_time > invariant.burn_in))
      throw std::invalid_argument("config: invariant reference_time must exceed burn_in");
  }
  if (kind == ExperimentKind::NnCompare) {
    if (nn.steps < 1 || nn.checkpoint_every < 1) throw std::invalid_argument("config: nn steps and checkpoint_every must be >= 1");
    nn.scheduler.validate();
  }
}

json ExperimentConfig::to_json() const {
  json j;
  j["kind"] = std::string(to_string(kind));
  j["name"] = name;
  j["seed"] = seed;
  j["realizations"] = realizations;
  j["n_train"] = n_train;
  j["validation_runs"] = validation_runs;
  j["data_mode"] = std::string(to_string(data_mode));
  j["paired_data"] = paired_data;
  j["feature_dims"] = feature_dims;
  j["p_good"] = p_good;
  j["betas"] = betas;
  j["algorithms"] = json::array();
  for (auto a : algorithms) j["algorithms"].push_back(std::string(to_string(a)));
  j["bad_mixes"] = json::array();
  for (auto m : bad_mixes) j["bad_mixes"].push_back(std::string(to_string(m)));
  j["sampler"] = {{"l0", sampler.bounds.l0},
                  {"l1", sampler.bounds.l1},
                  {"k", sampler.k_decorrelation},
                  {"bisection_tol", sampler.bisection_tol},
                  {"a_max", sampler.a_max},
                  {"max_direction_retries", sampler.max_direction_retries}};
  j["forecast"] = {{"theta", forecast.theta},
                   {"lambda_max", forecast.lambda_max},
                   {"horizon_steps", forecast.horizon_steps}};
  j["integrator"] = {{"dt", integrator.dt_sample},
                     {"substeps", integrator.substeps},
                     {"transient", integrator.transient_time}};
  j["heatmap"] = {{"w_max", heatmap.w_max}, {"b_max", heatmap.b_max}, {"resolution", heatmap.resolution}};
  j["suppression"] = {{"start", std::string(to_string(suppression.start))}, {"stages", suppression.stages}};
  j["invariant"] = {{"total_time", invariant.total_time}, {"burn_in", invariant.burn_in}, {"bins", invariant.bins},
                    {"reference_time", invariant.reference_time}};
  j["nn"] = {{"steps", nn.steps},
             {"checkpoint_every", nn.checkpoint_every},
             {"init", std::string(to_string(nn.init))},
             {"eta0", nn.scheduler.eta0},
             {"interval", nn.scheduler.interval},
             {"xi", nn.scheduler.xi},
             {"gamma", nn.scheduler.gamma}};
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j, "config",
             {"kind", "name", "seed", "realizations", "n_train", "validation_runs", "data_mode", "paired_data", "feature_dims",
              "p_good", "betas", "algorithms", "bad_mixes", "sampler", "forecast", "integrator", "heatmap",
              "suppression", "invariant", "nn"});
  ExperimentConfig c;
  if (!j.contains("kind")) throw std::invalid_argument("config: missing 'kind'");
  c.kind = parse_experiment_kind(j.at("kind").get<std::string>());
  if (c.kind == ExperimentKind::Heatmap || c.kind == ExperimentKind::NnCompare) c.data_mode = DataMode::Shared;
  read_value(j, "name", c.name);
  read_value(j, "seed", c.seed);
  read_value(j, "realizations", c.realizations);
  read_value(j, "n_train", c.n_train);
  read_value(j, "validation_runs", c.validation_runs);
  read_value(j, "paired_data", c.paired_data);
  if (j.contains("data_mode")) c.data_mode = parse_data_mode(j.at("data_mode").get<std::string>());
  if (j.contains("feature_dims")) c.feature_dims = j.at("feature_dims").get<std::vector<long>>();
  if (j.contains("p_good")) c.p_good = read_grid(j, "p_good");
  if (j.contains("betas")) c.betas = read_grid(j, "betas");
  if (j.contains("algorithms")) {
    c.algorithms.clear();
    for (const auto& a : j.at("algorithms")) c.algorithms.push_back(parse_sampling_algorithm(a.get<std::string>()));
  }
  if (j.contains("bad_mixes")) {
    c.bad_mixes.clear();
    for (const auto& m : j.at("bad_mixes")) c.bad_mixes.push_back(parse_bad_mix(m.get<std::string>()));
  }
  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    check_keys(s, "sampler", {"l0", "l1", "k", "bisection_tol", "a_max", "max_direction_retries"});
    read_value(s, "l0", c.sampler.bounds.l0);
    read_value(s, "l1", c.sampler.bounds.l1);
    read_value(s, "k", c.sampler.k_decorrelation);
    read_value(s, "bisection_tol", c.sampler.bisection_tol);
    read_value(s, "a_max", c.sampler.a_max);
    read_value(s, "max_direction_retries", c.sampler.max_direction_retries);
  }
  if (j.contains("forecast")) {
    const json& f = j.at("forecast");
    check_keys(f, "forecast", {"theta", "lambda_max", "horizon_steps"});
    read_value(f, "theta", c.forecast.theta);
    read_value(f, "lambda_max", c.forecast.lambda_max);
    read_value(f, "horizon_steps", c.forecast.horizon_steps);
  }
  if (j.contains("integrator")) {
    const json& g = j.at("integrator");
    check_keys(g, "integrator", {"dt", "substeps", "transient"});
    read_value(g, "dt", c.integrator.dt_sample);
    read_value(g, "substeps", c.integrator.substeps);
    read_value(g, "transient", c.integrator.transient_time);
  }
  if (j.contains("heatmap")) {
    const json& h = j.at("heatmap");
    check_keys(h, "heatmap", {"w_max", "b_max", "resolution"});
    read_value(h, "w_max", c.heatmap.w_max);
    read_value(h, "b_max", c.heatmap.b_max);
    read_value(h, "resolution", c.heatmap.resolution);
  }
  if (j.contains("suppression")) {
    const json& s = j.at("suppression");
    check_keys(s, "suppression", {"start", "stages"});
    if (s.contains("start")) c.suppression.start = parse_row_class(s.at("start").get<std::string>());
    read_value(s, "stages", c.suppression.stages);
  }
  if (j.contains("invariant")) {
    const json& s = j.at("invariant");
    check_keys(s, "invariant", {"total_time", "burn_in", "bins", "reference_time"});
    read_value(s, "total_time", c.invariant.total_time);
    read_value(s, "burn_in", c.invariant.burn_in);
    read_value(s, "bins", c.invariant.bins);
    read_value(s, "reference_time", c.invariant.reference_time);
  }
  if (j.contains("nn")) {
    const json& s = j.at("nn");
    check_keys(s, "nn", {"steps", "checkpoint_every", "init", "eta0", "interval", "xi", "gamma"});
    read_value(s, "steps", c.nn.steps);
    read_value(s, "checkpoint_every", c.nn.checkpoint_every);
    if (s.contains("init")) c.nn.init = parse_net_init(s.at("init").get<std::string>());
    read_value(s, "eta0", c.nn.scheduler.eta0);
    read_value(s, "interval", c.nn.scheduler.interval);
    read_value(s, "xi", c.nn.scheduler.xi);
    read_value(s, "gamma", c.nn.scheduler.gamma);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

std::uint64_t weights_seed(std::uint64_t master, long group, long realization) {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(group)), static_cast<std::uint64_t>(realization));
}

std::uint64_t data_seed(const ExperimentConfig& cfg, long group, long realization) {
  const std::uint64_t base = derive_seed(cfg.seed, kDataStream);
  if (cfg.data_mode == DataMode::Shared) return base;
  const std::uint64_t paired = derive_seed(base, static_cast<std::uint64_t>(realization));
  return cfg.paired_data ? paired : derive_seed(paired, static_cast<std::uint64_t>(group) + 1);
}

void write_results_csv(std::ostream& os, const std::vector<ResultRecord>& records) {
  os << kResultsHeader << '\n';
  for (const auto& r : records) {
    os << r.model << ',' << r.group << ',' << r.realization << ',' << r.seed << ',' << r.data_seed << ','
       << r.feature_dim << ',' << field(r.p_good) << ',' << field(r.beta) << ',' << r.algorithm << ',' << r.bad_mix
       << ',' << field(r.w_scale) << ',' << field(r.b_scale) << ',' << r.n_train << ',' << r.stage << ','
       << field(r.tau_f) << ',' << r.censored << ',' << field(r.loss) << ',' << field(r.w_norm) << ','
       << field(r.effective_range) << ',' << r.counts.good << ',' << r.counts.linear << ',' << r.counts.saturated
       << ',' << r.counts.mixed << ',' << field(r.l1_x) << ',' << field(r.l1_y) << ',' << field(r.l1_z) << ','
       << (r.valid ? 1 : 0) << '\n';
  }
}

std::vector<ResultRecord> read_results_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kResultsHeader) throw std::invalid_argument("results CSV: unexpected header");
  std::vector<ResultRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 27) throw std::invalid_argument("results CSV: expected 27 fields, got " + std::to_string(f.size()));
    ResultRecord r;
    r.model = f[0];
    r.group = std::stol(f[1]);
    r.realization = std::stol(f[2]);
    r.seed = std::stoull(f[3]);
    r.data_seed = std::stoull(f[4]);
    r.feature_dim = std::stol(f[5]);
    r.p_good = parse_double(f[6]);
    r.beta = parse_double(f[7]);
    r.algorithm = f[8];
    r.bad_mix = f[9];
    r.w_scale = parse_double(f[10]);
    r.b_scale = parse_double(f[11]);
    r.n_train = std::stol(f[12]);
    r.stage = std::stol(f[13]);
    r.tau_f = parse_double(f[14]);
    r.censored = std::stol(f[15]);
    r.loss = parse_double(f[16]);
    r.w_norm = parse_double(f[17]);
    r.effective_range = parse_double(f[18]);
    r.counts = {std::stol(f[19]), std::stol(f[20]), std::stol(f[21]), std::stol(f[22])};
    r.l1_x = parse_double(f[23]);
    r.l1_y = parse_double(f[24]);
    r.l1_z = parse_double(f[25]);
    r.valid = f[26] == "1";
    out.push_back(r);
  }
  return out;
}

void write_columns_csv(std::ostream& os, const std::vector<ColumnRecord>& columns) {
  os << "realization,stage,column,class,sup_norm,normalized_sup_norm\n" << std::setprecision(17);
  for (const auto& c : columns)
    os << c.realization << ',' << c.stage << ',' << c.column << ',' << to_string(c.row_class) << ',' << c.sup_norm
       << ',' << c.normalized_sup_norm << '\n';
}

}  // namespace goodweights
