#include "goodweights/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "goodweights/random.hpp"

namespace goodweights {

void Trajectory::validate() const {
  if (states.cols() < 1) throw std::invalid_argument("trajectory: no states");
  if (!(dt > 0.0)) throw std::invalid_argument("trajectory: dt must be > 0");
  if (!states.allFinite()) throw std::invalid_argument("trajectory: non-finite entry");
}

void IntegratorConfig::validate() const {
  if (!(dt_sample > 0.0)) throw std::invalid_argument("integrator: dt_sample must be > 0");
  if (substeps < 1) throw std::invalid_argument("integrator: substeps must be >= 1");
  if (!(transient_time >= 0.0)) throw std::invalid_argument("integrator: transient_time must be >= 0");
}

State lorenz_rhs(const State& u) {
  if (u.size() != 3) throw std::invalid_argument("lorenz_rhs: state must have 3 entries");
  if (!u.allFinite()) throw std::domain_error("lorenz_rhs: non-finite state");
  State du(3);
  Lorenz63{}.rhs({u.data(), 3}, {du.data(), 3});
  return du;
}

namespace {

// Advances u in place by `substeps` RK4 steps of size h.
class Rk4Stepper {
 public:
  Rk4Stepper(const DynamicalSystem& system, double h, int substeps)
      : system_(system), h_(h), substeps_(substeps), dim_(system.dim()),
        k1_(dim_), k2_(dim_), k3_(dim_), k4_(dim_), tmp_(dim_) {}

  void advance(std::span<double> u) {
    for (int s = 0; s < substeps_; ++s) step(u);
  }

 private:
  void step(std::span<double> u) {
    const std::size_t d = dim_;
    system_.rhs(u, k1_);
    for (std::size_t i = 0; i < d; ++i) tmp_[i] = u[i] + 0.5 * h_ * k1_[i];
    system_.rhs(tmp_, k2_);
    for (std::size_t i = 0; i < d; ++i) tmp_[i] = u[i] + 0.5 * h_ * k2_[i];
    system_.rhs(tmp_, k3_);
    for (std::size_t i = 0; i < d; ++i) tmp_[i] = u[i] + h_ * k3_[i];
    system_.rhs(tmp_, k4_);
    for (std::size_t i = 0; i < d; ++i)
      u[i] += h_ / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

  const DynamicalSystem& system_;
  double h_;
  int substeps_;
  std::size_t dim_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

bool all_finite(std::span<const double> u) {
  for (double v : u)
    if (!std::isfinite(v)) return false;
  return true;
}

void check_initial(const DynamicalSystem& system, const State& u0) {
  if (u0.size() != system.dim())
    throw std::invalid_argument("integrate: initial state has wrong dimension");
  if (!u0.allFinite()) throw std::domain_error("integrate: non-finite initial state");
}

}  // namespace

Trajectory integrate(const DynamicalSystem& system, const State& u0,
                     const IntegratorConfig& cfg, long n_samples) {
  cfg.validate();
  check_initial(system, u0);
  if (n_samples < 0) throw std::invalid_argument("integrate: n_samples must be >= 0");

  Trajectory traj;
  traj.dt = cfg.dt_sample;
  traj.states.resize(u0.size(), n_samples + 1);
  traj.states.col(0) = u0;

  Rk4Stepper stepper(system, cfg.dt_sample / cfg.substeps, cfg.substeps);
  State u = u0;
  for (long n = 1; n <= n_samples; ++n) {
    stepper.advance({u.data(), static_cast<std::size_t>(u.size())});
    if (!all_finite({u.data(), static_cast<std::size_t>(u.size())}))
      throw IntegrationError("integrate: state became non-finite at step " + std::to_string(n), n);
    traj.states.col(n) = u;
  }
  return traj;
}

State settle(const DynamicalSystem& system, const State& u0, const IntegratorConfig& cfg) {
  cfg.validate();
  check_initial(system, u0);
  const long n = std::lround(cfg.transient_time / cfg.dt_sample);
  Rk4Stepper stepper(system, cfg.dt_sample / cfg.substeps, cfg.substeps);
  State u = u0;
  for (long k = 1; k <= n; ++k) {
    stepper.advance({u.data(), static_cast<std::size_t>(u.size())});
    if (!all_finite({u.data(), static_cast<std::size_t>(u.size())}))
      throw IntegrationError("settle: state became non-finite at step " + std::to_string(k), k);
  }
  return u;
}

State draw_lorenz_initial_condition(std::uint64_t seed) {
  Rng rng(seed);
  State u(3);
  u[0] = rng.uniform(-10.0, 10.0);
  u[1] = rng.uniform(-10.0, 10.0);
  u[2] = rng.uniform(15.0, 35.0);
  return u;
}

Trajectory generate_trajectory(std::uint64_t seed, std::uint64_t stream, long n,
                               const IntegratorConfig& cfg) {
  const Lorenz63 system;
  const State u0 = settle(system, draw_lorenz_initial_condition(derive_seed(seed, stream)), cfg);
  return integrate(system, u0, cfg, n);
}

std::pair<Trajectory, Trajectory> generate_dataset(std::uint64_t seed, long n_train,
                                                   long n_valid, const IntegratorConfig& cfg) {
  if (n_train < 1 || n_valid < 1)
    throw std::invalid_argument("generate_dataset: n_train and n_valid must be >= 1");
  return {generate_trajectory(seed, 0, n_train, cfg), generate_trajectory(seed, 1, n_valid, cfg)};
}

double estimate_max_lyapunov(const DynamicalSystem& system, const State& u0,
                             const IntegratorConfig& cfg, double separation,
                             long steps_per_segment, long segments) {
  cfg.validate();
  check_initial(system, u0);
  if (!(separation > 0.0) || steps_per_segment < 1 || segments < 1)
    throw std::invalid_argument("estimate_max_lyapunov: bad arguments");

  Rk4Stepper a(system, cfg.dt_sample / cfg.substeps, cfg.substeps);
  Rk4Stepper b(system, cfg.dt_sample / cfg.substeps, cfg.substeps);
  State u = u0;
  State v = u0;
  v[0] += separation;
  const auto span_of = [](State& s) { return std::span<double>(s.data(), s.size()); };

  double log_growth = 0.0;
  for (long seg = 0; seg < segments; ++seg) {
    for (long k = 0; k < steps_per_segment; ++k) {
      a.advance(span_of(u));
      b.advance(span_of(v));
    }
    const double dist = (v - u).norm();
    if (!std::isfinite(dist) || dist == 0.0)
      throw IntegrationError("estimate_max_lyapunov: degenerate separation", seg);
    log_growth += std::log(dist / separation);
    v = u + (v - u) * (separation / dist);
  }
  return log_growth / (static_cast<double>(segments * steps_per_segment) * cfg.dt_sample);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t";
  if (traj.dim() == 3) {
    os << ",x,y,z";
  } else {
    for (Eigen::Index i = 0; i < traj.dim(); ++i) os << ",u" << i;
  }
  os << '\n' << std::setprecision(17);
  for (Eigen::Index n = 0; n < traj.size(); ++n) {
    os << traj.t0 + static_cast<double>(n) * traj.dt;
    for (Eigen::Index i = 0; i < traj.dim(); ++i) os << ',' << traj.states(i, n);
    os << '\n';
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_trajectory_csv(os, traj);
}

Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trajectory csv: empty input");
  const auto columns = std::count(line.begin(), line.end(), ',');
  if (columns < 1 || line.rfind("t,", 0) != 0)
    throw std::runtime_error("trajectory csv: expected header starting with 't,'");

  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    long count = 0;
    while (std::getline(row, cell, ',')) {
      const double v = std::stod(cell);
      if (count == 0) times.push_back(v);
      else values.push_back(v);
      ++count;
    }
    if (count != columns + 1) throw std::runtime_error("trajectory csv: ragged row");
  }
  if (times.empty()) throw std::runtime_error("trajectory csv: no samples");

  Trajectory traj;
  traj.states = Eigen::Map<Eigen::MatrixXd>(values.data(), columns, static_cast<Eigen::Index>(times.size()));
  traj.t0 = times.front();
  // A single-sample file carries no step; the default sampling step stands in.
  traj.dt = times.size() > 1 ? (times.back() - times.front()) / static_cast<double>(times.size() - 1)
                             : IntegratorConfig{}.dt_sample;
  traj.validate();
  return traj;
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_trajectory_csv(is);
}

}  // namespace goodweights
