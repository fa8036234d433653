#include "goodweights/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace goodweights {

namespace {

constexpr int kMaxBisectionIterations = 80;
constexpr int kMaxOneShotRedraws = 1000;
constexpr double kInitialBracket = 1e-3;
constexpr std::uint64_t kPermutationStream = std::numeric_limits<std::uint64_t>::max();

struct BoxExtent {
  double lo;
  double hi;
};

// Range of w.u + b as u sweeps the data bounding box.
BoxExtent box_extent(const Eigen::Ref<const Eigen::VectorXd>& w, double b, const DataCorners& c) {
  BoxExtent e{b, b};
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double a = w[i] * c.coord_min[i];
    const double z = w[i] * c.coord_max[i];
    if (w[i] >= 0.0) {
      e.lo += a;
      e.hi += z;
    } else {
      e.lo += z;
      e.hi += a;
    }
  }
  return e;
}

bool satisfies(const BoxExtent& e, RowClass target, const ClassBounds& bounds) {
  switch (target) {
    case RowClass::Good: return e.lo > bounds.l0 && e.hi < bounds.l1;
    case RowClass::Linear: return e.lo >= -bounds.l0 && e.hi <= bounds.l0;
    case RowClass::Saturated: return e.lo >= bounds.l1;
    case RowClass::Mixed: break;
  }
  return false;
}

class ChordFinder {
 public:
  ChordFinder(const DataCorners& corners, const SamplerConfig& cfg) : corners_(corners), cfg_(cfg) {}

  bool feasible(const Eigen::VectorXd& point) const {
    const Eigen::Index d = corners_.dim();
    return satisfies(box_extent(point.head(d), point[d], corners_), RowClass::Good, cfg_.bounds);
  }

  // Largest feasible t >= 0 along x + t*dir, found by bracketing and then
  // bisection. The returned value is always on the feasible side.
  double extent(const Eigen::VectorXd& x, const Eigen::VectorXd& dir, bool& capped) const {
    double inside = 0.0;
    double outside = kInitialBracket;
    while (feasible(x + outside * dir)) {
      inside = outside;
      outside *= 2.0;
      if (outside >= cfg_.a_max) {
        if (feasible(x + cfg_.a_max * dir)) {
          capped = true;
          return cfg_.a_max;
        }
        outside = cfg_.a_max;
        break;
      }
    }
    for (int it = 0; it < kMaxBisectionIterations && outside - inside >= cfg_.bisection_tol; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (feasible(x + mid * dir)) inside = mid;
      else outside = mid;
    }
    return inside;
  }

 private:
  const DataCorners& corners_;
  const SamplerConfig& cfg_;
};

void check_corners(const DataCorners& c) {
  if (c.coord_min.size() != c.coord_max.size() || c.coord_min.size() == 0)
    throw std::invalid_argument("data corners: inconsistent dimensions");
  if ((c.coord_min.array() > c.coord_max.array()).any())
    throw std::invalid_argument("data corners: coord_min exceeds coord_max");
}

}  // namespace

void SamplerConfig::validate() const {
  bounds.validate();
  if (k_decorrelation < 1) throw std::invalid_argument("sampler: k_decorrelation must be >= 1");
  if (!(bisection_tol > 0.0)) throw std::invalid_argument("sampler: bisection_tol must be > 0");
  if (!(a_max > 0.0)) throw std::invalid_argument("sampler: a_max must be > 0");
  if (max_direction_retries < 1) throw std::invalid_argument("sampler: max_direction_retries must be >= 1");
}

std::string_view to_string(SamplingAlgorithm a) {
  return a == SamplingAlgorithm::Standard ? "standard" : "oneshot";
}

std::string_view to_string(BadMix m) {
  switch (m) {
    case BadMix::Balanced: return "balanced";
    case BadMix::AllLinear: return "linear";
    case BadMix::AllSaturated: return "saturated";
  }
  return "unknown";
}

SamplingAlgorithm parse_sampling_algorithm(std::string_view s) {
  if (s == "standard") return SamplingAlgorithm::Standard;
  if (s == "oneshot" || s == "one-shot") return SamplingAlgorithm::OneShot;
  throw std::invalid_argument("unknown sampling algorithm: " + std::string(s));
}

BadMix parse_bad_mix(std::string_view s) {
  if (s == "balanced") return BadMix::Balanced;
  if (s == "linear" || s == "all-linear") return BadMix::AllLinear;
  if (s == "saturated" || s == "all-saturated") return BadMix::AllSaturated;
  throw std::invalid_argument("unknown bad-row mix: " + std::string(s));
}

DataCorners data_corners(const Eigen::Ref<const Eigen::MatrixXd>& data) {
  if (data.cols() < 1) throw std::invalid_argument("data_corners: data must be non-empty");
  return {data.rowwise().minCoeff(), data.rowwise().maxCoeff()};
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> x_pm(const DataCorners& corners, const SignVector& s) {
  check_corners(corners);
  if (s.size() != corners.dim()) throw std::invalid_argument("x_pm: sign vector has wrong dimension");
  Eigen::VectorXd minus(s.size());
  Eigen::VectorXd plus(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] == 1) {
      minus[i] = corners.coord_min[i];
      plus[i] = corners.coord_max[i];
    } else if (s[i] == -1) {
      minus[i] = corners.coord_max[i];
      plus[i] = corners.coord_min[i];
    } else {
      throw std::invalid_argument("x_pm: sign entries must be +1 or -1");
    }
  }
  return {minus, plus};
}

bool feasible_splus(const Eigen::Ref<const Eigen::VectorXd>& w, double b,
                    const DataCorners& corners, const ClassBounds& bounds) {
  if (w.size() != corners.dim()) throw std::invalid_argument("feasible_splus: dimension mismatch");
  return satisfies(box_extent(w, b, corners), RowClass::Good, bounds);
}

Eigen::VectorXd direction_in_cone(const SignVector& s, Rng& rng) {
  Eigen::VectorXd d(s.size());
  double norm2 = 0.0;
  do {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s[i] != 1 && s[i] != -1)
        throw std::invalid_argument("direction_in_cone: sign entries must be +1 or -1");
      d[i] = s[i] * std::abs(rng.normal());
    }
    norm2 = d.squaredNorm();
  } while (norm2 == 0.0);
  return d / std::sqrt(norm2);
}

RowSample standard_hit_and_run_row(const DataCorners& corners, const SamplerConfig& cfg, Rng& rng) {
  cfg.validate();
  check_corners(corners);
  const Eigen::Index d = corners.dim();
  const ChordFinder chords(corners, cfg);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(d + 1);
  x[d] = rng.uniform(cfg.bounds.l0, cfg.bounds.l1);
  if (!chords.feasible(x)) throw std::logic_error("standard_hit_and_run_row: infeasible start");

  bool capped = false;
  Eigen::VectorXd dir(d + 1);
  for (int k = 0; k < cfg.k_decorrelation; ++k) {
    double lo = 0.0;
    double hi = 0.0;
    int attempt = 0;
    for (; attempt < cfg.max_direction_retries; ++attempt) {
      for (Eigen::Index i = 0; i <= d; ++i) dir[i] = rng.normal();
      dir.normalize();
      hi = chords.extent(x, dir, capped);
      lo = -chords.extent(x, -dir, capped);
      if (hi - lo >= cfg.bisection_tol) break;
    }
    if (attempt == cfg.max_direction_retries)
      throw std::logic_error("standard_hit_and_run_row: chord collapsed below bisection_tol");
    x += rng.uniform(lo, hi) * dir;
  }

  RowSample row{x.head(d), x[d], RowClass::Good, capped};
  if (rng.sign() < 0) {
    row.w = -row.w;
    row.b = -row.b;
  }
  return row;
}

RowSample standard_hit_and_run_row(const Eigen::Ref<const Eigen::MatrixXd>& data,
                                   const SamplerConfig& cfg, Rng& rng) {
  return standard_hit_and_run_row(data_corners(data), cfg, rng);
}

RowSample one_shot_row(const DataCorners& corners, const SamplerConfig& cfg, Rng& rng,
                       RowClass target) {
  cfg.validate();
  check_corners(corners);
  const auto& bounds = cfg.bounds;
  const Eigen::Index d = corners.dim();

  double b = 0.0;
  switch (target) {
    case RowClass::Good: b = rng.uniform(bounds.l0, bounds.l1); break;
    case RowClass::Linear: b = rng.uniform(0.0, bounds.l0); break;
    case RowClass::Saturated: b = rng.uniform(bounds.l1, 2.0 * bounds.l1); break;
    case RowClass::Mixed: throw std::invalid_argument("one_shot_row: cannot target mixed rows");
  }

  SignVector s(d);
  for (Eigen::Index i = 0; i < d; ++i) s[i] = rng.sign();
  const Eigen::VectorXd dir = direction_in_cone(s, rng);
  const auto [x_minus, x_plus] = x_pm(corners, s);
  const double proj_minus = dir.dot(x_minus);
  const double proj_plus = dir.dot(x_plus);

  // Ray parameters at which each binding constraint becomes active; only
  // positive ones limit the ray (inf of the empty set is +inf).
  double limit = std::numeric_limits<double>::infinity();
  const auto consider = [&limit](double numerator, double denominator) {
    const double t = numerator / denominator;
    if (t > 0.0) limit = std::min(limit, t);
  };
  switch (target) {
    case RowClass::Good:
      consider(bounds.l0 - b, proj_minus);
      consider(bounds.l1 - b, proj_plus);
      break;
    case RowClass::Linear:
      consider(bounds.l0 - b, proj_plus);
      consider(-bounds.l0 - b, proj_minus);
      break;
    case RowClass::Saturated:
      consider(bounds.l1 - b, proj_minus);
      break;
    case RowClass::Mixed: break;
  }

  RowSample row;
  row.target_class = target;
  row.capped = limit > cfg.a_max;
  limit = std::min(limit, cfg.a_max);

  // A draw rounding onto the boundary is redrawn; this is measure zero.
  for (int attempt = 0;; ++attempt) {
    const double a = rng.uniform(0.0, limit);
    row.w = a * dir;
    row.b = b;
    if (satisfies(box_extent(row.w, b, corners), target, bounds)) break;
    if (attempt >= kMaxOneShotRedraws) throw std::logic_error("one_shot_row: no admissible draw");
  }
  if (rng.sign() < 0) {
    row.w = -row.w;
    row.b = -row.b;
  }
  return row;
}

RowSample one_shot_row(const Eigen::Ref<const Eigen::MatrixXd>& data, const SamplerConfig& cfg,
                       Rng& rng, RowClass target) {
  return one_shot_row(data_corners(data), cfg, rng, target);
}

ClassPlan plan_row_classes(long feature_dim, double p_good, BadMix mix) {
  if (feature_dim < 1) throw std::invalid_argument("plan_row_classes: D_r must be >= 1");
  if (!(p_good >= 0.0 && p_good <= 1.0)) throw std::invalid_argument("plan_row_classes: p_g must lie in [0, 1]");
  ClassPlan plan;
  plan.good = std::lround(p_good * static_cast<double>(feature_dim));
  const long bad = feature_dim - plan.good;
  switch (mix) {
    case BadMix::Balanced:
      plan.linear = bad / 2;
      plan.saturated = bad - plan.linear;
      break;
    case BadMix::AllLinear: plan.linear = bad; break;
    case BadMix::AllSaturated: plan.saturated = bad; break;
  }
  return plan;
}

SampledWeights sample_internal_weights(const DataCorners& corners, long feature_dim, double p_good,
                                       const SamplerConfig& cfg, SamplingAlgorithm algorithm,
                                       BadMix mix, std::uint64_t seed) {
  cfg.validate();
  check_corners(corners);
  const ClassPlan plan = plan_row_classes(feature_dim, p_good, mix);

  SampledWeights out;
  out.row_classes.reserve(static_cast<std::size_t>(feature_dim));
  out.row_classes.insert(out.row_classes.end(), static_cast<std::size_t>(plan.good), RowClass::Good);
  out.row_classes.insert(out.row_classes.end(), static_cast<std::size_t>(plan.linear), RowClass::Linear);
  out.row_classes.insert(out.row_classes.end(), static_cast<std::size_t>(plan.saturated), RowClass::Saturated);
  Rng perm(derive_seed(seed, kPermutationStream));
  for (std::size_t i = out.row_classes.size(); i > 1; --i)
    std::swap(out.row_classes[i - 1], out.row_classes[perm.index(i)]);

  const Eigen::Index d = corners.dim();
  out.weights.w_in.resize(feature_dim, d);
  out.weights.b_in.resize(feature_dim);
  for (long i = 0; i < feature_dim; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const RowClass target = out.row_classes[static_cast<std::size_t>(i)];
    const RowSample row = (algorithm == SamplingAlgorithm::Standard && target == RowClass::Good)
                              ? standard_hit_and_run_row(corners, cfg, rng)
                              : one_shot_row(corners, cfg, rng, target);
    out.weights.w_in.row(i) = row.w.transpose();
    out.weights.b_in[i] = row.b;
    if (row.capped) ++out.capped_rows;
  }
  return out;
}

SampledWeights sample_internal_weights(const Eigen::Ref<const Eigen::MatrixXd>& data,
                                       long feature_dim, double p_good, const SamplerConfig& cfg,
                                       SamplingAlgorithm algorithm, BadMix mix, std::uint64_t seed) {
  return sample_internal_weights(data_corners(data), feature_dim, p_good, cfg, algorithm, mix, seed);
}

InternalWeights uniform_internal_weights(long feature_dim, long state_dim, double w_scale,
                                         double b_scale, std::uint64_t seed) {
  if (feature_dim < 1 || state_dim < 1) throw std::invalid_argument("uniform_internal_weights: bad dimensions");
  Rng rng(seed);
  InternalWeights iw{Eigen::MatrixXd(feature_dim, state_dim), Eigen::VectorXd(feature_dim)};
  for (long i = 0; i < feature_dim; ++i)
    for (long j = 0; j < state_dim; ++j) iw.w_in(i, j) = rng.uniform(-w_scale, w_scale);
  for (long i = 0; i < feature_dim; ++i) iw.b_in[i] = rng.uniform(-b_scale, b_scale);
  return iw;
}

}  // namespace goodweights
