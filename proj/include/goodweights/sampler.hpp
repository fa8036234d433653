#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "goodweights/random.hpp"
#include "goodweights/weights.hpp"

namespace goodweights {

struct SamplerConfig {
  ClassBounds bounds;
  int k_decorrelation = 10;
  double bisection_tol = 1e-10;
  /// Cap on the ray parameter when a chord or ray is unbounded.
  double a_max = 1e3;
  int max_direction_retries = 64;

  void validate() const;
};

/// Per-coordinate extremes of the training data.
struct DataCorners {
  Eigen::VectorXd coord_min;
  Eigen::VectorXd coord_max;

  Eigen::Index dim() const { return coord_min.size(); }
};

/// Entries must be +1 or -1.
using SignVector = Eigen::VectorXi;

struct RowSample {
  Eigen::VectorXd w;
  double b = 0.0;
  RowClass target_class = RowClass::Good;
  /// True when the draw hit the a_max cap on an unbounded ray or chord.
  bool capped = false;
};

enum class SamplingAlgorithm { Standard, OneShot };
enum class BadMix { Balanced, AllLinear, AllSaturated };

std::string_view to_string(SamplingAlgorithm a);
std::string_view to_string(BadMix m);
SamplingAlgorithm parse_sampling_algorithm(std::string_view s);
BadMix parse_bad_mix(std::string_view s);

DataCorners data_corners(const Eigen::Ref<const Eigen::MatrixXd>& data);

/// The data-box corners that minimize (first) and maximize (second) w.u over
/// the bounding box for any w whose signs match `s`.
std::pair<Eigen::VectorXd, Eigen::VectorXd> x_pm(const DataCorners& corners, const SignVector& s);

/// Sufficient test for (w, b) in S+: the affine map sends the whole data
/// bounding box into (L0, L1). sgn(0) counts as +1.
bool feasible_splus(const Eigen::Ref<const Eigen::VectorXd>& w, double b,
                    const DataCorners& corners, const ClassBounds& bounds);

/// Uniform random unit vector whose component signs follow s.
Eigen::VectorXd direction_in_cone(const SignVector& s, Rng& rng);

/// Hit-and-run on the (D+1)-dimensional feasible set, started at (0, b0) with
/// b0 ~ U(L0, L1), K chord moves located by bisection, then a uniform sign
/// flip. Always returns a Good row.
RowSample standard_hit_and_run_row(const DataCorners& corners, const SamplerConfig& cfg, Rng& rng);
RowSample standard_hit_and_run_row(const Eigen::Ref<const Eigen::MatrixXd>& data,
                                   const SamplerConfig& cfg, Rng& rng);

/// One-shot conical sampler: draws b, a random orthant s, a direction d in
/// it, and a uniform distance along d up to the first constraint (capped at
/// a_max), then flips the sign with probability 1/2.
///
///   Good:      b ~ U(L0, L1)
///   Linear:    b ~ U(0, L0)
///   Saturated: b ~ U(L1, 2 L1)
RowSample one_shot_row(const DataCorners& corners, const SamplerConfig& cfg, Rng& rng,
                       RowClass target);
RowSample one_shot_row(const Eigen::Ref<const Eigen::MatrixXd>& data, const SamplerConfig& cfg,
                       Rng& rng, RowClass target);

struct ClassPlan {
  long good = 0;
  long linear = 0;
  long saturated = 0;
};

/// N_g = round(p_g D_r) (halves away from zero); the rest split per `mix`,
/// balanced giving N_l = floor((D_r - N_g) / 2).
ClassPlan plan_row_classes(long feature_dim, double p_good, BadMix mix);

struct SampledWeights {
  InternalWeights weights;
  std::vector<RowClass> row_classes;  // target class of each row
  long capped_rows = 0;
};

/// Full internal-weight matrix with the planned class counts in random row
/// order. Row i is drawn from its own stream derive_seed(seed, i); the row
/// permutation uses a separate stream, so the result does not depend on
/// execution order. The standard algorithm covers Good rows only; bad rows
/// always come from the one-shot sampler.
SampledWeights sample_internal_weights(const DataCorners& corners, long feature_dim, double p_good,
                                       const SamplerConfig& cfg, SamplingAlgorithm algorithm,
                                       BadMix mix, std::uint64_t seed);
SampledWeights sample_internal_weights(const Eigen::Ref<const Eigen::MatrixXd>& data,
                                       long feature_dim, double p_good, const SamplerConfig& cfg,
                                       SamplingAlgorithm algorithm, BadMix mix, std::uint64_t seed);

/// W_in ~ U[-w_scale, w_scale], b_in ~ U[-b_scale, b_scale] entrywise.
InternalWeights uniform_internal_weights(long feature_dim, long state_dim, double w_scale,
                                         double b_scale, std::uint64_t seed);

}  // namespace goodweights
