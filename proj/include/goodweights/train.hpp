#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "goodweights/dynamics.hpp"
#include "goodweights/weights.hpp"

namespace goodweights {

/// One-step pairs: targets column n is the successor of inputs column n.
struct TrainingSet {
  Eigen::MatrixXd inputs;   // D x N, u_0 .. u_{N-1}
  Eigen::MatrixXd targets;  // D x N, u_1 .. u_N

  static TrainingSet from_trajectory(const Trajectory& traj);
  Eigen::Index size() const { return inputs.cols(); }
  void validate() const;
};

struct RidgeConfig {
  double beta = 4e-5;

  void validate() const;
};

struct Provenance {
  std::uint64_t weights_seed = 0;
  std::uint64_t data_seed = 0;
  std::string dataset;
};

struct SurrogateModel {
  InternalWeights iw;
  OuterWeights ow;
  double beta = 0.0;
  Provenance provenance;

  Eigen::Index state_dim() const { return iw.state_dim(); }
  Eigen::Index feature_dim() const { return iw.feature_dim(); }
  void validate() const;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Column n is tanh(W_in inputs_n + b_in).
Eigen::MatrixXd feature_matrix(const InternalWeights& iw, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

/// Sufficient statistics of the ridge problem.
struct NormalEquations {
  Eigen::MatrixXd gram;   // Phi Phi^T (D_r x D_r, symmetric)
  Eigen::MatrixXd cross;  // U Phi^T (D x D_r)
  double target_sq = 0.0; // ||U||_F^2
  long samples = 0;
};

/// Accumulates the normal equations block by block over the samples
/// without materializing Phi; each block's Gram contribution is formed
/// separately before being added to the running sum.
NormalEquations accumulate_normal_equations(const InternalWeights& iw, const TrainingSet& ts);
NormalEquations normal_equations(const Eigen::Ref<const Eigen::MatrixXd>& phi,
                                 const Eigen::Ref<const Eigen::MatrixXd>& targets);

/// W = C (G + beta I)^{-1} by Cholesky, followed by one step of iterative
/// refinement. Throws NumericError if the factorization fails.
OuterWeights solve_normal_equations(const NormalEquations& ne, const RidgeConfig& cfg);

/// W = U Phi^T (Phi Phi^T + beta I)^{-1}.
OuterWeights ridge_solve(const Eigen::Ref<const Eigen::MatrixXd>& phi,
                         const Eigen::Ref<const Eigen::MatrixXd>& targets, const RidgeConfig& cfg);

/// ||W Phi - U||_F^2 + beta ||W||_F^2.
double loss(const OuterWeights& ow, const Eigen::Ref<const Eigen::MatrixXd>& phi,
            const Eigen::Ref<const Eigen::MatrixXd>& targets, const RidgeConfig& cfg);

/// Same loss evaluated from the normal equations.
double loss(const OuterWeights& ow, const NormalEquations& ne, const RidgeConfig& cfg);

/// ||W (G + beta I) - C||_F / ||C||_F.
double stationarity_residual(const OuterWeights& ow, const NormalEquations& ne, const RidgeConfig& cfg);

struct FitResult {
  SurrogateModel model;
  double loss = 0.0;
  double stationarity = 0.0;
};

/// Ridge fit on the one-step pairs of `traj`, with diagnostics.
FitResult fit_model(const InternalWeights& iw, const Trajectory& traj, const RidgeConfig& cfg);
SurrogateModel train_model(const InternalWeights& iw, const Trajectory& traj, const RidgeConfig& cfg);

/// Max |entry| of each column of W.
Eigen::VectorXd column_sup_norms(const OuterWeights& ow);

/// Column sup-norms divided by (machine epsilon + the largest of them).
Eigen::VectorXd normalized_column_sup_norms(const OuterWeights& ow);

// Binary container: 8-byte magic "GWMODEL1", uint32 D_r, uint32 D, float64
// beta, uint64 weights seed, uint64 data seed, uint32 length + bytes of the
// dataset id, D_r rows of (w_1 .. w_D, b), then W row-major (D x D_r).
// Little-endian throughout.
void write_model(std::ostream& os, const SurrogateModel& model);
void write_model(const std::string& path, const SurrogateModel& model);
SurrogateModel read_model(std::istream& is);
SurrogateModel read_model(const std::string& path);

}  // namespace goodweights
