#include "goodweights/train.hpp"

#include <cblas.h>

#include <algorithm>
#include <fstream>
#include <limits>

#include "binary_io.hpp"
#include "goodweights/numerics.hpp"

namespace goodweights {

namespace {
constexpr Eigen::Index kSampleBlock = 2048;
constexpr std::string_view kModelMagic = "GWMODEL1";

// Lower triangle of Phi Phi^T for one block of columns.
void block_gram(const Eigen::MatrixXd& phi, Eigen::MatrixXd& out) {
  const auto dr = static_cast<int>(phi.rows());
  out.resize(phi.rows(), phi.rows());
  cblas_dsyrk(CblasColMajor, CblasLower, CblasNoTrans, dr, static_cast<int>(phi.cols()), 1.0,
              phi.data(), dr, 0.0, out.data(), dr);
}

void add_block(NormalEquations& ne, const Eigen::MatrixXd& phi,
               const Eigen::Ref<const Eigen::MatrixXd>& targets, Eigen::MatrixXd& scratch) {
  block_gram(phi, scratch);
  ne.gram.triangularView<Eigen::Lower>() += scratch;
  ne.cross.noalias() += targets * phi.transpose();
  ne.target_sq += targets.squaredNorm();
  ne.samples += phi.cols();
}

NormalEquations empty_normal_equations(Eigen::Index dr, Eigen::Index d) {
  NormalEquations ne;
  ne.gram = Eigen::MatrixXd::Zero(dr, dr);
  ne.cross = Eigen::MatrixXd::Zero(d, dr);
  return ne;
}

void symmetrize_from_lower(Eigen::MatrixXd& m) {
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
}

}  // namespace

TrainingSet TrainingSet::from_trajectory(const Trajectory& traj) {
  if (traj.size() < 2) throw std::invalid_argument("training set needs at least two states");
  const Eigen::Index n = traj.size() - 1;
  return {traj.states.leftCols(n), traj.states.rightCols(n)};
}

void TrainingSet::validate() const {
  if (inputs.cols() < 1) throw std::invalid_argument("training set: no samples");
  if (inputs.rows() != targets.rows() || inputs.cols() != targets.cols())
    throw std::invalid_argument("training set: inputs and targets differ in shape");
}

void RidgeConfig::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("ridge: beta must be > 0");
}

void SurrogateModel::validate() const {
  iw.validate();
  ow.validate();
  if (ow.w.rows() != iw.state_dim() || ow.w.cols() != iw.feature_dim())
    throw std::invalid_argument("surrogate model: outer weights do not match internal weights");
}

Eigen::MatrixXd feature_matrix(const InternalWeights& iw, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  if (inputs.rows() != iw.state_dim() || iw.b_in.size() != iw.feature_dim())
    throw std::invalid_argument("feature_matrix: dimension mismatch");
  Eigen::MatrixXd phi = iw.w_in * inputs;
  phi.colwise() += iw.b_in;
  tanh_inplace({phi.data(), static_cast<std::size_t>(phi.size())});
  return phi;
}

NormalEquations accumulate_normal_equations(const InternalWeights& iw, const TrainingSet& ts) {
  ts.validate();
  if (ts.inputs.rows() != iw.state_dim()) throw std::invalid_argument("normal equations: dimension mismatch");
  NormalEquations ne = empty_normal_equations(iw.feature_dim(), ts.targets.rows());
  Eigen::MatrixXd phi;
  Eigen::MatrixXd scratch;
  for (Eigen::Index start = 0; start < ts.size(); start += kSampleBlock) {
    const Eigen::Index len = std::min(kSampleBlock, ts.size() - start);
    phi = feature_matrix(iw, ts.inputs.middleCols(start, len));
    add_block(ne, phi, ts.targets.middleCols(start, len), scratch);
  }
  symmetrize_from_lower(ne.gram);
  return ne;
}

NormalEquations normal_equations(const Eigen::Ref<const Eigen::MatrixXd>& phi,
                                 const Eigen::Ref<const Eigen::MatrixXd>& targets) {
  if (phi.cols() < 1) throw std::invalid_argument("normal equations: no samples");
  if (phi.cols() != targets.cols()) throw std::invalid_argument("normal equations: sample count mismatch");
  NormalEquations ne = empty_normal_equations(phi.rows(), targets.rows());
  Eigen::MatrixXd block;
  Eigen::MatrixXd scratch;
  for (Eigen::Index start = 0; start < phi.cols(); start += kSampleBlock) {
    const Eigen::Index len = std::min(kSampleBlock, phi.cols() - start);
    block = phi.middleCols(start, len);
    add_block(ne, block, targets.middleCols(start, len), scratch);
  }
  symmetrize_from_lower(ne.gram);
  return ne;
}

OuterWeights solve_normal_equations(const NormalEquations& ne, const RidgeConfig& cfg) {
  cfg.validate();
  if (!ne.gram.allFinite() || !ne.cross.allFinite())
    throw NumericError("ridge: non-finite normal equations");
  Eigen::MatrixXd a = ne.gram;
  a.diagonal().array() += cfg.beta;
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericError("ridge: Cholesky factorization failed");

  // A is symmetric, so W^T = A^{-1} C^T.
  Eigen::MatrixXd wt = llt.solve(ne.cross.transpose());
  const Eigen::MatrixXd residual = ne.cross.transpose() - a * wt;
  wt += llt.solve(residual);
  OuterWeights ow{wt.transpose()};
  if (!ow.w.allFinite()) throw NumericError("ridge: non-finite solution");
  return ow;
}

OuterWeights ridge_solve(const Eigen::Ref<const Eigen::MatrixXd>& phi,
                         const Eigen::Ref<const Eigen::MatrixXd>& targets, const RidgeConfig& cfg) {
  cfg.validate();
  return solve_normal_equations(normal_equations(phi, targets), cfg);
}

double loss(const OuterWeights& ow, const Eigen::Ref<const Eigen::MatrixXd>& phi,
            const Eigen::Ref<const Eigen::MatrixXd>& targets, const RidgeConfig& cfg) {
  if (ow.w.cols() != phi.rows() || ow.w.rows() != targets.rows() || phi.cols() != targets.cols())
    throw std::invalid_argument("loss: dimension mismatch");
  return (ow.w * phi - targets).squaredNorm() + cfg.beta * ow.w.squaredNorm();
}

double loss(const OuterWeights& ow, const NormalEquations& ne, const RidgeConfig& cfg) {
  const double fit = (ow.w * ne.gram).cwiseProduct(ow.w).sum() - 2.0 * ow.w.cwiseProduct(ne.cross).sum() +
                     ne.target_sq;
  return std::max(fit, 0.0) + cfg.beta * ow.w.squaredNorm();
}

double stationarity_residual(const OuterWeights& ow, const NormalEquations& ne, const RidgeConfig& cfg) {
  const Eigen::MatrixXd r = ow.w * ne.gram + cfg.beta * ow.w - ne.cross;
  const double scale = ne.cross.norm();
  return scale > 0.0 ? r.norm() / scale : r.norm();
}

FitResult fit_model(const InternalWeights& iw, const Trajectory& traj, const RidgeConfig& cfg) {
  iw.validate();
  cfg.validate();
  const TrainingSet ts = TrainingSet::from_trajectory(traj);
  const NormalEquations ne = accumulate_normal_equations(iw, ts);
  FitResult fit;
  fit.model.iw = iw;
  fit.model.ow = solve_normal_equations(ne, cfg);
  fit.model.beta = cfg.beta;
  fit.loss = loss(fit.model.ow, ne, cfg);
  fit.stationarity = stationarity_residual(fit.model.ow, ne, cfg);
  return fit;
}

SurrogateModel train_model(const InternalWeights& iw, const Trajectory& traj, const RidgeConfig& cfg) {
  return fit_model(iw, traj, cfg).model;
}

Eigen::VectorXd column_sup_norms(const OuterWeights& ow) {
  return ow.w.cwiseAbs().colwise().maxCoeff().transpose();
}

Eigen::VectorXd normalized_column_sup_norms(const OuterWeights& ow) {
  const Eigen::VectorXd sup = column_sup_norms(ow);
  const double top = sup.size() > 0 ? sup.maxCoeff() : 0.0;
  return sup / (std::numeric_limits<double>::epsilon() + top);
}

void write_model(std::ostream& os, const SurrogateModel& model) {
  model.validate();
  const Eigen::Index dr = model.feature_dim();
  const Eigen::Index d = model.state_dim();
  detail::write_magic(os, kModelMagic);
  detail::write_u32(os, static_cast<std::uint32_t>(dr));
  detail::write_u32(os, static_cast<std::uint32_t>(d));
  detail::write_f64(os, model.beta);
  detail::write_u64(os, model.provenance.weights_seed);
  detail::write_u64(os, model.provenance.data_seed);
  detail::write_u32(os, static_cast<std::uint32_t>(model.provenance.dataset.size()));
  os.write(model.provenance.dataset.data(), static_cast<std::streamsize>(model.provenance.dataset.size()));
  for (Eigen::Index i = 0; i < dr; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) detail::write_f64(os, model.iw.w_in(i, j));
    detail::write_f64(os, model.iw.b_in[i]);
  }
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < dr; ++j) detail::write_f64(os, model.ow.w(i, j));
  if (!os) throw std::runtime_error("write_model: stream error");
}

void write_model(const std::string& path, const SurrogateModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_model(os, model);
}

SurrogateModel read_model(std::istream& is) {
  detail::expect_magic(is, kModelMagic);
  const auto dr = static_cast<Eigen::Index>(detail::read_u32(is));
  const auto d = static_cast<Eigen::Index>(detail::read_u32(is));
  SurrogateModel model;
  model.beta = detail::read_f64(is);
  model.provenance.weights_seed = detail::read_u64(is);
  model.provenance.data_seed = detail::read_u64(is);
  model.provenance.dataset.resize(detail::read_u32(is));
  is.read(model.provenance.dataset.data(), static_cast<std::streamsize>(model.provenance.dataset.size()));
  model.iw.w_in.resize(dr, d);
  model.iw.b_in.resize(dr);
  for (Eigen::Index i = 0; i < dr; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) model.iw.w_in(i, j) = detail::read_f64(is);
    model.iw.b_in[i] = detail::read_f64(is);
  }
  model.ow.w.resize(d, dr);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < dr; ++j) model.ow.w(i, j) = detail::read_f64(is);
  model.validate();
  return model;
}

SurrogateModel read_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_model(is);
}

}  // namespace goodweights
