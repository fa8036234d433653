#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "goodweights/dynamics.hpp"
#include "goodweights/random.hpp"
#include "goodweights/sampler.hpp"
#include "goodweights/weights.hpp"

namespace gw = goodweights;

namespace {

Eigen::MatrixXd row_data(std::initializer_list<double> xs) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) m(0, i++) = x;
  return m;
}

gw::InternalWeights random_weights(long dr, long d, double scale, std::uint64_t seed) {
  gw::Rng rng(seed);
  gw::InternalWeights iw{Eigen::MatrixXd(dr, d), Eigen::VectorXd(dr)};
  for (long i = 0; i < dr; ++i) {
    for (long j = 0; j < d; ++j) iw.w_in(i, j) = rng.uniform(-scale, scale);
    iw.b_in(i) = rng.uniform(-4.0, 4.0);
  }
  return iw;
}

const Eigen::MatrixXd& lorenz_data() {
  static const Eigen::MatrixXd data = gw::generate_trajectory(21, 0, 2000, {}).states;
  return data;
}

}  // namespace

TEST(Features, ZeroWeightsGiveZero) {
  gw::InternalWeights iw{Eigen::MatrixXd::Zero(5, 3), Eigen::VectorXd::Zero(5)};
  EXPECT_TRUE(gw::features(iw, Eigen::Vector3d(1, -2, 30)).isZero(0.0));
}

TEST(Features, SaturatedBiasGivesOne) {
  gw::InternalWeights iw{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Constant(4, 10.0)};
  const auto phi = gw::features(iw, Eigen::Vector3d(3, 2, 1));
  EXPECT_LT((phi.array() - 1.0).abs().maxCoeff(), 1e-8);
}

TEST(Features, ScalarTanh) {
  gw::InternalWeights iw{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1)};
  EXPECT_NEAR(gw::features(iw, Eigen::VectorXd::Ones(1))(0), 0.761594155955765, 1e-14);
}

TEST(Features, DimensionMismatchThrows) {
  gw::InternalWeights iw{Eigen::MatrixXd::Ones(2, 3), Eigen::VectorXd::Zero(2)};
  EXPECT_THROW(gw::features(iw, Eigen::VectorXd::Ones(2)), std::invalid_argument);
}

TEST(ClassifyRow, ConstantArgumentCases) {
  const gw::ClassBounds bounds;
  const auto& data = lorenz_data();
  EXPECT_EQ(gw::classify_row(Eigen::Vector3d::Zero(), (bounds.l0 + bounds.l1) / 2, data, bounds), gw::RowClass::Good);
  EXPECT_EQ(gw::classify_row(Eigen::Vector3d::Zero(), 0.0, data, bounds), gw::RowClass::Linear);
  EXPECT_EQ(gw::classify_row(Eigen::Vector3d::Zero(), 5.0, data, bounds), gw::RowClass::Saturated);
}

TEST(ClassifyRow, MixedScalarExample) {
  const auto data = row_data({0.1, 1.0});
  EXPECT_EQ(gw::classify_row(Eigen::VectorXd::Ones(1), 0.0, data, {}), gw::RowClass::Mixed);
}

TEST(ClassifyRow, BoundaryTiesGoToComplements) {
  const gw::ClassBounds bounds;
  const auto data = row_data({0.0});
  EXPECT_EQ(gw::classify_row(Eigen::VectorXd::Zero(1), bounds.l0, data, bounds), gw::RowClass::Linear);
  EXPECT_EQ(gw::classify_row(Eigen::VectorXd::Zero(1), bounds.l1, data, bounds), gw::RowClass::Saturated);
  EXPECT_EQ(gw::classify_row(Eigen::VectorXd::Zero(1), -bounds.l1, data, bounds), gw::RowClass::Saturated);
}

TEST(ClassifyRow, SignFlipInvariance) {
  const auto& data = lorenz_data();
  const auto iw = random_weights(400, 3, 0.3, 4);
  for (Eigen::Index i = 0; i < iw.feature_dim(); ++i) {
    const Eigen::VectorXd w = iw.w_in.row(i).transpose();
    EXPECT_EQ(gw::classify_row(w, iw.b_in(i), data, {}), gw::classify_row(-w, -iw.b_in(i), data, {}));
  }
}

TEST(ClassifyRow, ExhaustiveOracleAgreement) {
  const auto& data = lorenz_data();
  const gw::ClassBounds bounds;
  const auto iw = random_weights(300, 3, 0.2, 8);
  for (Eigen::Index i = 0; i < iw.feature_dim(); ++i) {
    bool all_good = true, all_lin = true, all_sat = true;
    for (Eigen::Index n = 0; n < data.cols(); ++n) {
      const double a = std::abs(iw.w_in.row(i).dot(data.col(n)) + iw.b_in(i));
      all_good = all_good && a > bounds.l0 && a < bounds.l1;
      all_lin = all_lin && a <= bounds.l0;
      all_sat = all_sat && a >= bounds.l1;
    }
    const auto expected = all_good  ? gw::RowClass::Good
                          : all_lin ? gw::RowClass::Linear
                          : all_sat ? gw::RowClass::Saturated
                                    : gw::RowClass::Mixed;
    EXPECT_EQ(gw::classify_row(iw.w_in.row(i).transpose(), iw.b_in(i), data, bounds), expected) << "row " << i;
  }
}

TEST(PointwiseFractions, ZeroWeightsAreLinear) {
  gw::InternalWeights iw{Eigen::MatrixXd::Zero(7, 3), Eigen::VectorXd::Zero(7)};
  const auto f = gw::pointwise_fractions(iw, lorenz_data(), {});
  EXPECT_DOUBLE_EQ(f.p_good, 0.0);
  EXPECT_DOUBLE_EQ(f.p_linear, 1.0);
  EXPECT_DOUBLE_EQ(f.p_saturated, 0.0);
}

TEST(PointwiseFractions, TwoPairEnumeration) {
  gw::InternalWeights iw{Eigen::MatrixXd::Ones(1, 1), Eigen::VectorXd::Zero(1)};
  const auto f = gw::pointwise_fractions(iw, row_data({0.1, 1.0}), {});
  EXPECT_DOUBLE_EQ(f.p_good, 0.5);
  EXPECT_DOUBLE_EQ(f.p_linear, 0.5);
  EXPECT_DOUBLE_EQ(f.p_saturated, 0.0);
}

TEST(PointwiseFractions, PartitionSumsToOne) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto f = gw::pointwise_fractions(random_weights(50, 3, 0.5, s), lorenz_data(), {});
    EXPECT_NEAR(f.p_good + f.p_linear + f.p_saturated, 1.0, 1e-12);
  }
}

TEST(PointwiseFractions, AllGoodRowsGiveOne) {
  const auto sw = gw::sample_internal_weights(lorenz_data(), 60, 1.0, {}, gw::SamplingAlgorithm::OneShot,
                                              gw::BadMix::Balanced, 3);
  EXPECT_DOUBLE_EQ(gw::pointwise_fractions(sw.weights, lorenz_data(), {}).p_good, 1.0);
}

TEST(EffectiveRange, Examples) {
  gw::InternalWeights zero_w{Eigen::MatrixXd::Zero(3, 3), Eigen::Vector3d(0.5, -2.0, 7.0)};
  EXPECT_DOUBLE_EQ(gw::effective_range(zero_w, lorenz_data()), 0.0);
  gw::InternalWeights iw{Eigen::MatrixXd(2, 1), Eigen::VectorXd(2)};
  iw.w_in << 1.0, 0.0;
  iw.b_in << 0.0, 0.5;
  EXPECT_DOUBLE_EQ(gw::effective_range(iw, row_data({0.0, 1.0})), 0.5);
}

TEST(EffectiveRange, GoodRowsBoundedByBandWidth) {
  const gw::ClassBounds bounds;
  const auto sw = gw::sample_internal_weights(lorenz_data(), 200, 1.0, {}, gw::SamplingAlgorithm::OneShot,
                                              gw::BadMix::Balanced, 5);
  for (Eigen::Index i = 0; i < 200; ++i) {
    gw::InternalWeights one{sw.weights.w_in.row(i), sw.weights.b_in.segment(i, 1)};
    const double r = gw::effective_range(one, lorenz_data());
    EXPECT_GT(r, 0.0);
    EXPECT_LE(r, bounds.l1 - bounds.l0);
  }
}

TEST(RowClassCounts, ConstructedMatrix) {
  const auto& data = lorenz_data();
  const auto corners = gw::data_corners(data);
  gw::Rng rng(17);
  gw::InternalWeights iw{Eigen::MatrixXd(15, 3), Eigen::VectorXd(15)};
  for (int i = 0; i < 15; ++i) {
    const auto row = gw::one_shot_row(corners, {}, rng, i < 10 ? gw::RowClass::Good : gw::RowClass::Linear);
    iw.w_in.row(i) = row.w.transpose();
    iw.b_in(i) = row.b;
  }
  EXPECT_EQ(gw::row_class_counts(iw, data, {}), (gw::RowClassCounts{10, 5, 0, 0}));
}

TEST(RowClassCounts, ZeroWeightsAllLinear) {
  gw::InternalWeights iw{Eigen::MatrixXd::Zero(9, 3), Eigen::VectorXd::Zero(9)};
  EXPECT_EQ(gw::row_class_counts(iw, lorenz_data(), {}), (gw::RowClassCounts{0, 9, 0, 0}));
}

TEST(ClassBounds, Validation) {
  EXPECT_THROW((gw::ClassBounds{0.0, 1.0}).validate(), std::invalid_argument);
  EXPECT_THROW((gw::ClassBounds{2.0, 1.0}).validate(), std::invalid_argument);
  EXPECT_NO_THROW((gw::ClassBounds{0.4, 3.5}).validate());
}

TEST(RowClassNames, RoundTrip) {
  for (auto c : {gw::RowClass::Good, gw::RowClass::Linear, gw::RowClass::Saturated, gw::RowClass::Mixed})
    EXPECT_EQ(gw::parse_row_class(gw::to_string(c)), c);
  EXPECT_THROW(gw::parse_row_class("excellent"), std::invalid_argument);
}

TEST(WeightsIo, BinaryRoundTrip) {
  const auto iw = random_weights(13, 3, 1.0, 2);
  std::stringstream ss;
  gw::write_internal_weights(ss, iw);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 16u + 13u * 4u * 8u);
  EXPECT_EQ(bytes.substr(0, 8), "GWIWGHT1");
  const auto back = gw::read_internal_weights(ss);
  EXPECT_EQ(back.w_in, iw.w_in);
  EXPECT_EQ(back.b_in, iw.b_in);
}

TEST(WeightsIo, RejectsCorruptInput) {
  std::stringstream bad_magic("NOTMAGIC\x01\0\0\0\x01\0\0\0");
  EXPECT_THROW(gw::read_internal_weights(bad_magic), std::runtime_error);
  const auto iw = random_weights(4, 3, 1.0, 2);
  std::stringstream ss;
  gw::write_internal_weights(ss, iw);
  std::stringstream truncated(ss.str().substr(0, 40));
  EXPECT_THROW(gw::read_internal_weights(truncated), std::runtime_error);
}

TEST(WeightsIo, CsvHeader) {
  std::stringstream ss;
  gw::write_internal_weights_csv(ss, random_weights(2, 3, 1.0, 1));
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "w0,w1,w2,b");
}

TEST(InternalWeights, ValidateRejectsNonFinite) {
  auto iw = random_weights(3, 3, 1.0, 1);
  iw.b_in(1) = std::nan("");
  EXPECT_THROW(iw.validate(), std::invalid_argument);
}
