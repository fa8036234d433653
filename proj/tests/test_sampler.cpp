#include <array>
#include <cmath>

#include <gtest/gtest.h>

#include "goodweights/dynamics.hpp"
#include "goodweights/sampler.hpp"

namespace gw = goodweights;

namespace {

const Eigen::MatrixXd& lorenz_data() {
  static const Eigen::MatrixXd data = gw::generate_trajectory(31, 0, 20000, {}).states;
  return data;
}

Eigen::MatrixXd row_data(std::initializer_list<double> xs) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) m(0, i++) = x;
  return m;
}

double chi_square(const std::vector<long>& counts, double expected) {
  double chi = 0.0;
  for (long c : counts) chi += (c - expected) * (c - expected) / expected;
  return chi;
}

}  // namespace

TEST(DataCorners, Examples) {
  const auto one = gw::data_corners(Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(one.coord_min, Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(one.coord_max, Eigen::Vector3d(1, 2, 3));
  Eigen::MatrixXd two(3, 2);
  two << 0, 1, 0, -1, 0, 2;
  const auto c = gw::data_corners(two);
  EXPECT_EQ(c.coord_min, Eigen::Vector3d(0, -1, 0));
  EXPECT_EQ(c.coord_max, Eigen::Vector3d(1, 0, 2));
}

TEST(DataCorners, LorenzTrainingSet) {
  const auto c = gw::data_corners(lorenz_data());
  EXPECT_TRUE(c.coord_min.allFinite());
  EXPECT_TRUE(c.coord_max.allFinite());
  EXPECT_GT(c.coord_min(2), 0.0);
}

TEST(XPm, Examples) {
  const gw::DataCorners c{Eigen::Vector3d(-1, -2, 3), Eigen::Vector3d(4, 5, 6)};
  const auto [m1, p1] = gw::x_pm(c, Eigen::Vector3i(1, 1, 1));
  EXPECT_EQ(m1, c.coord_min);
  EXPECT_EQ(p1, c.coord_max);
  const auto [m2, p2] = gw::x_pm(c, Eigen::Vector3i(-1, -1, -1));
  EXPECT_EQ(m2, c.coord_max);
  EXPECT_EQ(p2, c.coord_min);
  const auto [m3, p3] = gw::x_pm(gw::data_corners(row_data({1, 2})), Eigen::VectorXi::Ones(1));
  EXPECT_EQ(m3(0), 1.0);
  EXPECT_EQ(p3(0), 2.0);
  EXPECT_THROW(gw::x_pm(c, Eigen::Vector3i(1, 0, 1)), std::invalid_argument);
}

TEST(FeasibleSplus, Examples) {
  const gw::ClassBounds bounds;
  const auto corners = gw::data_corners(row_data({1, 2}));
  EXPECT_TRUE(gw::feasible_splus(Eigen::VectorXd::Zero(1), (bounds.l0 + bounds.l1) / 2, corners, bounds));
  EXPECT_TRUE(gw::feasible_splus(Eigen::VectorXd::Constant(1, 0.5), 0.5, corners, bounds));
  EXPECT_FALSE(gw::feasible_splus(Eigen::VectorXd::Constant(1, 2.0), 0.0, corners, bounds));
}

TEST(FeasibleSplus, ImpliesGoodOnEveryPoint) {
  const auto& data = lorenz_data();
  const auto corners = gw::data_corners(data);
  gw::Rng rng(3);
  int feasible = 0;
  for (int t = 0; t < 2000; ++t) {
    const Eigen::Vector3d w(rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03));
    const double b = rng.uniform(0.4, 3.5);
    if (!gw::feasible_splus(w, b, corners, {})) continue;
    ++feasible;
    EXPECT_EQ(gw::classify_row(w, b, data, {}), gw::RowClass::Good);
  }
  EXPECT_GT(feasible, 20);
}

TEST(DirectionInCone, SignsAndNorm) {
  gw::Rng rng(5);
  for (const Eigen::Vector3i& s : {Eigen::Vector3i(1, 1, 1), Eigen::Vector3i(-1, 1, -1)}) {
    for (int t = 0; t < 1000; ++t) {
      const auto d = gw::direction_in_cone(s, rng);
      EXPECT_NEAR(d.norm(), 1.0, 1e-12);
      for (int i = 0; i < 3; ++i) EXPECT_GE(d(i) * s(i), 0.0);
    }
  }
}

TEST(DirectionInCone, PermutationSymmetry) {
  gw::Rng rng(6);
  std::vector<long> largest(3, 0);
  std::vector<long> octant_bins(6, 0);  // ordering of the three components
  const int n = 100000;
  for (int t = 0; t < n; ++t) {
    const auto d = gw::direction_in_cone(Eigen::Vector3i(1, 1, 1), rng);
    Eigen::Index k;
    d.maxCoeff(&k);
    ++largest[static_cast<std::size_t>(k)];
    const int code = (d(0) > d(1)) * 1 + (d(1) > d(2)) * 2 + (d(0) > d(2)) * 4;
    static const std::array<int, 8> slot{0, 1, 2, -1, -1, 3, 4, 5};
    ++octant_bins[static_cast<std::size_t>(slot[static_cast<std::size_t>(code)])];
  }
  EXPECT_LT(chi_square(largest, n / 3.0), 9.21);       // 2 dof, 1%
  EXPECT_LT(chi_square(octant_bins, n / 6.0), 15.09);  // 5 dof, 1%
}

TEST(StandardHitAndRun, DeterministicGivenSeed) {
  const auto corners = gw::data_corners(lorenz_data());
  gw::Rng a(11), b(11);
  const auto ra = gw::standard_hit_and_run_row(corners, {}, a);
  const auto rb = gw::standard_hit_and_run_row(corners, {}, b);
  EXPECT_EQ(ra.w, rb.w);
  EXPECT_EQ(ra.b, rb.b);
}

TEST(StandardHitAndRun, RowsAreGoodByExhaustiveScan) {
  const auto& data = lorenz_data();
  const auto corners = gw::data_corners(data);
  gw::Rng rng(12);
  for (int t = 0; t < 300; ++t) {
    const auto row = gw::standard_hit_and_run_row(corners, {}, rng);
    ASSERT_EQ(gw::classify_row(row.w, row.b, data, {}), gw::RowClass::Good);
  }
}

TEST(StandardHitAndRun, NoSmallBiasesAndReflectionSymmetry) {
  const auto corners = gw::data_corners(lorenz_data());
  const gw::ClassBounds bounds;
  gw::Rng rng(13);
  const int n = 10000;
  int positive = 0;
  int small = 0;
  for (int t = 0; t < n; ++t) {
    const auto row = gw::standard_hit_and_run_row(corners, {}, rng);
    small += std::abs(row.b) <= bounds.l0 ? 1 : 0;
    positive += row.b > 0 ? 1 : 0;
  }
  // |b| <= L0 is feasible only where w.u supplies the missing offset over
  // the whole data box, a sliver of the set.
  EXPECT_LE(small, n / 1000);
  // 99% binomial interval around 1/2.
  EXPECT_NEAR(positive / static_cast<double>(n), 0.5, 2.576 * 0.5 / std::sqrt(n));
}

TEST(OneShot, EveryTargetClassIsExact) {
  const auto& data = lorenz_data();
  const auto corners = gw::data_corners(data);
  gw::Rng rng(14);
  for (auto target : {gw::RowClass::Good, gw::RowClass::Linear, gw::RowClass::Saturated}) {
    for (int t = 0; t < 300; ++t) {
      const auto row = gw::one_shot_row(corners, {}, rng, target);
      ASSERT_EQ(gw::classify_row(row.w, row.b, data, {}), target);
      EXPECT_EQ(row.target_class, target);
    }
  }
  EXPECT_THROW(gw::one_shot_row(corners, {}, rng, gw::RowClass::Mixed), std::invalid_argument);
}

TEST(OneShot, OriginDataLeavesRayUnbounded) {
  const gw::SamplerConfig cfg;
  gw::Rng rng(15);
  for (int t = 0; t < 200; ++t) {
    const auto row = gw::one_shot_row(Eigen::MatrixXd::Zero(3, 1), cfg, rng, gw::RowClass::Good);
    EXPECT_TRUE(row.capped);
    EXPECT_GT(std::abs(row.b), cfg.bounds.l0);
    EXPECT_LT(std::abs(row.b), cfg.bounds.l1);
    EXPECT_LT(row.w.norm(), cfg.a_max);
  }
}

// D = 1, data {-1, 1}: the ray from (0, b) along d = +-1 leaves the good set
// at a1 = min(|b| - L0, L1 - |b|), and the distance along it is uniform.
TEST(OneShot, RayConditionalUniformity) {
  const gw::SamplerConfig cfg;
  const auto corners = gw::data_corners(row_data({-1, 1}));
  gw::Rng rng(16);
  const int n = 100000;
  std::vector<long> bins(10, 0);
  int flipped = 0;
  for (int t = 0; t < n; ++t) {
    const auto row = gw::one_shot_row(corners, cfg, rng, gw::RowClass::Good);
    const double b = std::abs(row.b);
    const double a1 = std::min(b - cfg.bounds.l0, cfg.bounds.l1 - b);
    const double u = std::abs(row.w(0)) / a1;
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++bins[static_cast<std::size_t>(u * 10)];
    flipped += row.b < 0 ? 1 : 0;
  }
  EXPECT_LT(chi_square(bins, n / 10.0), 21.67);  // 9 dof, 1%
  EXPECT_NEAR(flipped / static_cast<double>(n), 0.5, 2.576 * 0.5 / std::sqrt(n));
}

TEST(PlanRowClasses, RoundingContract) {
  const auto p = gw::plan_row_classes(301, 0.5, gw::BadMix::Balanced);
  EXPECT_EQ(p.good, 151);
  EXPECT_EQ(p.linear, 75);
  EXPECT_EQ(p.saturated, 75);
  EXPECT_EQ(gw::plan_row_classes(300, 1.0, gw::BadMix::Balanced).good, 300);
  const auto z = gw::plan_row_classes(300, 0.0, gw::BadMix::Balanced);
  EXPECT_EQ(z.good, 0);
  EXPECT_EQ(z.linear, 150);
  EXPECT_EQ(z.saturated, 150);
  const auto l = gw::plan_row_classes(2048, 0.5, gw::BadMix::AllLinear);
  EXPECT_EQ(l.linear, 1024);
  EXPECT_EQ(l.saturated, 0);
  EXPECT_THROW(gw::plan_row_classes(10, 1.5, gw::BadMix::Balanced), std::invalid_argument);
}

TEST(SampleInternalWeights, CountsMatchPlan) {
  const auto& data = lorenz_data();
  struct Case {
    long dr;
    double pg;
    gw::BadMix mix;
    gw::SamplingAlgorithm alg;
  };
  for (const auto& c : {Case{300, 1.0, gw::BadMix::Balanced, gw::SamplingAlgorithm::OneShot},
                        Case{300, 0.0, gw::BadMix::Balanced, gw::SamplingAlgorithm::OneShot},
                        Case{301, 0.5, gw::BadMix::Balanced, gw::SamplingAlgorithm::Standard},
                        Case{120, 0.3, gw::BadMix::AllSaturated, gw::SamplingAlgorithm::Standard},
                        Case{120, 0.3, gw::BadMix::AllLinear, gw::SamplingAlgorithm::OneShot}}) {
    const auto sw = gw::sample_internal_weights(data, c.dr, c.pg, {}, c.alg, c.mix, 99);
    const auto plan = gw::plan_row_classes(c.dr, c.pg, c.mix);
    EXPECT_EQ(gw::row_class_counts(sw.weights, data, {}), (gw::RowClassCounts{plan.good, plan.linear, plan.saturated, 0}));
    const auto classes = gw::classify_rows(sw.weights, data, {});
    EXPECT_EQ(classes, sw.row_classes);
  }
}

TEST(SampleInternalWeights, DeterministicAndRowIndependent) {
  const auto& data = lorenz_data();
  const auto a = gw::sample_internal_weights(data, 50, 0.6, {}, gw::SamplingAlgorithm::Standard,
                                             gw::BadMix::Balanced, 7);
  const auto b = gw::sample_internal_weights(data, 50, 0.6, {}, gw::SamplingAlgorithm::Standard,
                                             gw::BadMix::Balanced, 7);
  EXPECT_EQ(a.weights.w_in, b.weights.w_in);
  EXPECT_EQ(a.weights.b_in, b.weights.b_in);
  const auto c = gw::sample_internal_weights(data, 50, 0.6, {}, gw::SamplingAlgorithm::Standard,
                                             gw::BadMix::Balanced, 8);
  EXPECT_NE(a.weights.b_in, c.weights.b_in);
}

TEST(SamplerConfig, Validation) {
  gw::SamplerConfig c;
  c.k_decorrelation = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.a_max = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.bisection_tol = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(SamplerNames, ParseAndPrint) {
  EXPECT_EQ(gw::parse_sampling_algorithm("standard"), gw::SamplingAlgorithm::Standard);
  EXPECT_EQ(gw::parse_sampling_algorithm("oneshot"), gw::SamplingAlgorithm::OneShot);
  EXPECT_EQ(gw::parse_bad_mix("linear"), gw::BadMix::AllLinear);
  EXPECT_EQ(gw::parse_bad_mix("saturated"), gw::BadMix::AllSaturated);
  EXPECT_EQ(gw::to_string(gw::BadMix::Balanced), "balanced");
  EXPECT_THROW(gw::parse_bad_mix("mixed"), std::invalid_argument);
}

TEST(UniformInternalWeights, WithinIntervals) {
  const auto iw = gw::uniform_internal_weights(200, 3, 0.4, 4.0, 1);
  EXPECT_LE(iw.w_in.cwiseAbs().maxCoeff(), 0.4);
  EXPECT_LE(iw.b_in.cwiseAbs().maxCoeff(), 4.0);
  EXPECT_GT(iw.w_in.cwiseAbs().maxCoeff(), 0.3);
}
