#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "goodweights/dynamics.hpp"
#include "goodweights/nnbaseline.hpp"
#include "goodweights/random.hpp"

namespace gw = goodweights;

namespace {

gw::TrainingSet small_set(long n, std::uint64_t seed) {
  return gw::TrainingSet::from_trajectory(gw::generate_trajectory(seed, 0, n, {}));
}

gw::NetParams random_params(long dr, long d, std::uint64_t seed) {
  gw::Rng rng(seed);
  auto p = gw::NetParams::zeros(dr, d);
  for (Eigen::Index i = 0; i < p.w_in.size(); ++i) p.w_in.data()[i] = rng.uniform(-0.2, 0.2);
  for (Eigen::Index i = 0; i < p.b_in.size(); ++i) p.b_in.data()[i] = rng.uniform(-1, 1);
  for (Eigen::Index i = 0; i < p.w.size(); ++i) p.w.data()[i] = rng.uniform(-2, 2);
  return p;
}

// Flat views over the three parameter blocks, in a fixed order.
double& coord(gw::NetParams& p, Eigen::Index k) {
  if (k < p.w_in.size()) return p.w_in.data()[k];
  k -= p.w_in.size();
  if (k < p.b_in.size()) return p.b_in.data()[k];
  return p.w.data()[k - p.b_in.size()];
}

Eigen::Index n_coords(const gw::NetParams& p) { return p.w_in.size() + p.b_in.size() + p.w.size(); }

}  // namespace

TEST(GlorotInit, BoundsZeroBiasAndDeterminism) {
  const auto p = gw::glorot_init(300, 3, 9);
  EXPECT_LE(p.w_in.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 303.0));
  EXPECT_LE(p.w.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 303.0));
  EXPECT_GT(p.w_in.cwiseAbs().maxCoeff(), 0.9 * std::sqrt(6.0 / 303.0));
  EXPECT_TRUE(p.b_in.isZero(0.0));
  const auto q = gw::glorot_init(300, 3, 9);
  EXPECT_EQ(p.w_in, q.w_in);
  EXPECT_EQ(p.w, q.w);
  EXPECT_NE(gw::glorot_init(300, 3, 10).w_in, p.w_in);
}

TEST(LossAndGrad, ZeroParameters) {
  const auto ts = small_set(50, 1);
  const auto lg = gw::loss_and_grad(gw::NetParams::zeros(8, 3), ts, 0.1);
  EXPECT_NEAR(lg.loss, ts.targets.squaredNorm(), 1e-9);
  EXPECT_TRUE(lg.grad.w.isZero(0.0));
  EXPECT_TRUE(lg.grad.w_in.isZero(0.0));
  EXPECT_TRUE(lg.grad.b_in.isZero(0.0));
}

TEST(LossAndGrad, CentralFiniteDifferences) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto ts = small_set(15, 20 + s);
    ASSERT_EQ(ts.size(), 15);
    auto p = random_params(8, 3, s);
    const double beta = 0.3;
    const auto lg = gw::loss_and_grad(p, ts, beta);
    EXPECT_NEAR(lg.loss, gw::network_loss(p, ts, beta), 1e-12 * lg.loss);
    gw::Rng rng(100 + s);
    for (int t = 0; t < 5; ++t) {
      const auto k = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n_coords(p))));
      const double h = 1e-6;
      const double x = coord(p, k);
      coord(p, k) = x + h;
      const double up = gw::network_loss(p, ts, beta);
      coord(p, k) = x - h;
      const double down = gw::network_loss(p, ts, beta);
      coord(p, k) = x;
      const double fd = (up - down) / (2 * h);
      auto g = lg.grad;
      const double an = coord(g, k);
      EXPECT_LT(std::abs(fd - an) / std::max(std::abs(an), 1.0), 1e-5) << "coordinate " << k;
    }
  }
}

TEST(LossAndGrad, HandExpandedRegularizedExample) {
  // U = 0, D = 2, D_r = 2, inputs chosen so Phi is known in closed form.
  gw::TrainingSet ts{Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)};
  ts.inputs << 1, 0, 0, 1;
  auto p = gw::NetParams::zeros(2, 2);
  p.w_in << 1, 0, 0, 2;
  p.w << 1, 2, 3, 4;
  const double beta = 0.5;
  const double t1 = std::tanh(1.0), t2 = std::tanh(2.0);
  Eigen::Matrix2d phi;
  phi << t1, 0, 0, t2;
  Eigen::Matrix2d w;
  w << 1, 2, 3, 4;
  // grad W = 2 (W Phi) Phi^T + 2 beta W with Phi diagonal.
  Eigen::Matrix2d expected;
  expected << 2 * t1 * t1 + 1, 2 * 2 * t2 * t2 + 2, 2 * 3 * t1 * t1 + 3, 2 * 4 * t2 * t2 + 4;
  const auto lg = gw::loss_and_grad(p, ts, beta);
  EXPECT_LT((lg.grad.w - expected).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_NEAR(lg.loss, (w * phi).squaredNorm() + beta * w.squaredNorm(), 1e-13);
}

TEST(LossAndGrad, ZeroReadoutGradientPointsAlongTargets) {
  const auto ts = small_set(40, 3);
  auto p = random_params(6, 3, 4);
  p.w.setZero();
  const auto lg = gw::loss_and_grad(p, ts, 1e-3);
  const Eigen::MatrixXd phi = gw::feature_matrix(p.internal(), ts.inputs);
  const Eigen::MatrixXd expected = -2.0 * ts.targets * phi.transpose();
  EXPECT_LT((lg.grad.w - expected).norm(), 1e-10 * expected.norm());
  // Internal gradients vanish when W = 0.
  EXPECT_TRUE(lg.grad.w_in.isZero(0.0));
}

TEST(Scheduler, Branches) {
  gw::SchedulerConfig cfg;
  auto at = [&](double ratio) {
    auto s = gw::SchedulerState::start(cfg);
    s = gw::scheduler_update(s, 1, 100.0);
    for (long k = 2; k < 100; ++k) s = gw::scheduler_update(s, k, 100.0);
    return gw::scheduler_update(s, 100, 100.0 * (1 + ratio));
  };
  EXPECT_NEAR(at(0.05).eta, 0.9e-3, 1e-18);
  EXPECT_NEAR(at(-0.5).eta, 1e-3, 1e-18);
  EXPECT_NEAR(at(-5e-5).eta, 1.1e-3, 1e-18);
  EXPECT_DOUBLE_EQ(at(0.05).last_loss, 105.0);
}

TEST(Scheduler, OffIntervalStepsHoldRate) {
  auto s = gw::scheduler_update(gw::SchedulerState::start({}), 1, 10.0);
  s = gw::scheduler_update(s, 57, 20.0);
  EXPECT_EQ(s.eta, 1e-3);
  EXPECT_EQ(s.last_loss, 10.0);
}

TEST(Scheduler, ZeroReferenceIsFlagged) {
  auto s = gw::scheduler_update(gw::SchedulerState::start({}), 1, 0.0);
  s = gw::scheduler_update(s, 100, 1.0);
  EXPECT_TRUE(s.flagged);
  EXPECT_EQ(s.eta, 1e-3);
  EXPECT_THROW(gw::scheduler_update(s, 0, 1.0), std::invalid_argument);
}

TEST(TrainNetwork, LossDecreasesAndHistoryIsOrdered) {
  const auto ts = small_set(2000, 5);
  std::vector<gw::Trajectory> validation{gw::generate_trajectory(5, 1, 200, {})};
  gw::NetTrainConfig cfg;
  cfg.feature_dim = 30;
  cfg.steps = 3000;
  cfg.checkpoint_every = 500;
  cfg.seed = 2;
  cfg.forecast.horizon_steps = 200;
  std::vector<long> seen;
  const auto r = gw::train_network(ts, validation, cfg, [&](const gw::Checkpoint& c) { seen.push_back(c.step); });
  ASSERT_FALSE(r.history.aborted);
  ASSERT_EQ(r.history.records.size(), 7u);
  EXPECT_EQ(seen, (std::vector<long>{0, 500, 1000, 1500, 2000, 2500, 3000}));
  EXPECT_EQ(r.steps_taken, 3000);
  const auto& h = r.history.records;
  EXPECT_LT(h.back().loss, h.front().loss);
  for (std::size_t i = 1; i < h.size(); ++i) {
    EXPECT_GT(h[i].step, h[i - 1].step);
    EXPECT_LE(h[i].loss, h[i - 1].loss);
    EXPECT_EQ(h[i].counts.total(), 30);
  }
}

TEST(TrainNetwork, GoodRowInitStartsAllGood) {
  const auto ts = small_set(1000, 6);
  gw::NetTrainConfig cfg;
  cfg.feature_dim = 20;
  cfg.steps = 1;
  cfg.init = gw::NetInit::GoodRows;
  const auto r = gw::train_network(ts, {}, cfg);
  EXPECT_EQ(r.history.records.front().counts.good, 20);
}

TEST(TrainNetwork, DivergenceAbortsWithHistory) {
  const auto ts = small_set(500, 7);
  gw::NetTrainConfig cfg;
  cfg.feature_dim = 10;
  cfg.steps = 5000;
  cfg.checkpoint_every = 5000;
  cfg.scheduler.eta0 = 1e12;
  const auto r = gw::train_network(ts, {}, cfg);
  EXPECT_TRUE(r.history.aborted);
  EXPECT_GT(r.history.abort_step, 0);
  ASSERT_GE(r.history.records.size(), 1u);
  EXPECT_EQ(r.history.records.front().step, 0);
}

TEST(TrainNetwork, HistoryCsvHeader) {
  gw::TrainingHistory h;
  h.records.push_back({0, 1.5, 1e-3, 2.0, 0, {1, 2, 3, 4}});
  std::stringstream ss;
  gw::write_history_csv(ss, h);
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line, "step,loss,eta,mean_tauf,n_good,n_linear,n_saturated,n_mixed");
  std::getline(ss, line);
  EXPECT_EQ(line, "0,1.5,0.001,2,1,2,3,4");
}

TEST(NetInitNames, ParseAndPrint) {
  EXPECT_EQ(gw::parse_net_init("glorot"), gw::NetInit::Glorot);
  EXPECT_EQ(gw::to_string(gw::NetInit::GoodRows), "goodrows");
  EXPECT_THROW(gw::parse_net_init("xavier"), std::invalid_argument);
}
