#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace goodweights {

using State = Eigen::VectorXd;

/// Time-ordered samples of a D-dimensional state at a fixed step.
///
/// `states` is D x (N+1): one column per time step, so column n holds the
/// state at t0 + n*dt. Columns are contiguous, which keeps feature-matrix
/// construction a straight slice map.
struct Trajectory {
  Eigen::MatrixXd states;
  double dt = 0.0;
  double t0 = 0.0;

  Eigen::Index dim() const { return states.rows(); }
  Eigen::Index size() const { return states.cols(); }
  auto state(Eigen::Index n) const { return states.col(n); }

  /// Throws std::invalid_argument unless size() >= 1, dt > 0 and every entry
  /// is finite.
  void validate() const;
};

struct IntegratorConfig {
  double dt_sample = 0.02;
  int substeps = 10;
  double transient_time = 40.0;

  void validate() const;
};

/// Raised when a numerical integration leaves the finite range.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Autonomous vector field du/dt = F(u).
class DynamicalSystem {
 public:
  virtual ~DynamicalSystem() = default;
  virtual int dim() const = 0;
  virtual void rhs(std::span<const double> u, std::span<double> du) const = 0;
};

/// Lorenz-63 with the classical parameters (10, 28, 8/3).
class Lorenz63 final : public DynamicalSystem {
 public:
  static constexpr double kSigma = 10.0;
  static constexpr double kRho = 28.0;
  static constexpr double kBeta = 8.0 / 3.0;

  int dim() const override { return 3; }
  void rhs(std::span<const double> u, std::span<double> du) const override {
    du[0] = kSigma * (u[1] - u[0]);
    du[1] = u[0] * (kRho - u[2]) - u[1];
    du[2] = u[0] * u[1] - kBeta * u[2];
  }
};

/// Lorenz-63 right-hand side. Throws std::domain_error on a non-finite
/// entry and std::invalid_argument when u is not 3-dimensional.
State lorenz_rhs(const State& u);

/// Classical RK4: each recorded step is `cfg.substeps` RK4 steps of size
/// dt_sample / substeps. Returns n_samples + 1 states starting at u0.
/// The transient is NOT applied here; see settle().
Trajectory integrate(const DynamicalSystem& system, const State& u0,
                     const IntegratorConfig& cfg, long n_samples);

/// Integrates for cfg.transient_time (same resolution, unrecorded) and
/// returns the end state.
State settle(const DynamicalSystem& system, const State& u0,
             const IntegratorConfig& cfg);

/// Box from which random initial conditions are drawn before the transient:
/// [-10,10] x [-10,10] x [15,35].
State draw_lorenz_initial_condition(std::uint64_t seed);

/// Independent training and validation trajectories for Lorenz-63.
/// Each starts from its own random initial condition (streams 0 and 1 of
/// `seed`), is settled through the transient, then recorded: n_train + 1
/// and n_valid + 1 states.
std::pair<Trajectory, Trajectory> generate_dataset(std::uint64_t seed,
                                                   long n_train, long n_valid,
                                                   const IntegratorConfig& cfg);

/// One settled trajectory of n + 1 states from stream `stream` of `seed`.
Trajectory generate_trajectory(std::uint64_t seed, std::uint64_t stream,
                               long n, const IntegratorConfig& cfg);

/// Largest Lyapunov exponent by two-trajectory renormalization (Benettin):
/// the companion starts `separation` away, is integrated alongside for
/// `steps_per_segment` samples, and the log growth accumulated over
/// `segments` renormalized segments is divided by the elapsed time.
double estimate_max_lyapunov(const DynamicalSystem& system, const State& u0,
                             const IntegratorConfig& cfg, double separation,
                             long steps_per_segment, long segments);

/// CSV with header `t,x,y,z` (or t,u0,u1,... for D != 3), one row per sample,
/// 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory_csv(std::istream& is);
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace goodweights
