#include "goodweights/weights.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

#include "binary_io.hpp"
#include "goodweights/numerics.hpp"
#include "weights_internal.hpp"

namespace goodweights {

namespace {
constexpr std::string_view kInternalMagic = "GWIWGHT1";
constexpr Eigen::Index kColumnBlock = 1024;
constexpr Eigen::Index kRowBlock = 512;

// Calls fn(row0, z) for tiles z = W_in[rows] * data[cols] + b_in[rows].
template <typename Fn>
void for_each_argument_tile(const InternalWeights& iw, const Eigen::Ref<const Eigen::MatrixXd>& data,
                            Fn&& fn) {
  Eigen::MatrixXd z;
  for (Eigen::Index r0 = 0; r0 < iw.feature_dim(); r0 += kRowBlock) {
    const Eigen::Index rows = std::min(kRowBlock, iw.feature_dim() - r0);
    for (Eigen::Index c0 = 0; c0 < data.cols(); c0 += kColumnBlock) {
      const Eigen::Index cols = std::min(kColumnBlock, data.cols() - c0);
      z.noalias() = iw.w_in.middleRows(r0, rows) * data.middleCols(c0, cols);
      z.colwise() += iw.b_in.segment(r0, rows);
      fn(r0, z);
    }
  }
}
}  // namespace

void InternalWeights::validate() const {
  if (w_in.rows() != b_in.size())
    throw std::invalid_argument("internal weights: row count of w_in differs from length of b_in");
  if (!w_in.allFinite() || !b_in.allFinite())
    throw std::invalid_argument("internal weights: non-finite entry");
}

void OuterWeights::validate() const {
  if (!w.allFinite()) throw std::invalid_argument("outer weights: non-finite entry");
}

void ClassBounds::validate() const {
  if (!(l0 > 0.0 && l0 < l1)) throw std::invalid_argument("class bounds: need 0 < L0 < L1");
}

std::string_view to_string(RowClass c) {
  switch (c) {
    case RowClass::Good: return "good";
    case RowClass::Linear: return "linear";
    case RowClass::Saturated: return "saturated";
    case RowClass::Mixed: return "mixed";
  }
  return "unknown";
}

RowClass parse_row_class(std::string_view s) {
  if (s == "good") return RowClass::Good;
  if (s == "linear") return RowClass::Linear;
  if (s == "saturated") return RowClass::Saturated;
  if (s == "mixed") return RowClass::Mixed;
  throw std::invalid_argument("unknown row class: " + std::string(s));
}

Eigen::VectorXd features(const InternalWeights& iw, const Eigen::Ref<const Eigen::VectorXd>& u) {
  if (u.size() != iw.state_dim() || iw.b_in.size() != iw.feature_dim())
    throw std::invalid_argument("features: dimension mismatch");
  Eigen::VectorXd phi = iw.w_in * u + iw.b_in;
  tanh_inplace({phi.data(), static_cast<std::size_t>(phi.size())});
  return phi;
}

namespace detail {

ArgumentExtremes abs_argument_extremes(const InternalWeights& iw,
                                       const Eigen::Ref<const Eigen::MatrixXd>& data) {
  if (data.cols() < 1) throw std::invalid_argument("data must be non-empty");
  if (data.rows() != iw.state_dim() || iw.b_in.size() != iw.feature_dim())
    throw std::invalid_argument("dimension mismatch between weights and data");

  const Eigen::Index dr = iw.feature_dim();
  ArgumentExtremes ext{Eigen::VectorXd::Constant(dr, std::numeric_limits<double>::infinity()),
                       Eigen::VectorXd::Zero(dr)};
  for_each_argument_tile(iw, data, [&](Eigen::Index r0, Eigen::MatrixXd& z) {
    z = z.cwiseAbs();
    auto lo = ext.min_abs.segment(r0, z.rows());
    auto hi = ext.max_abs.segment(r0, z.rows());
    lo = lo.cwiseMin(z.rowwise().minCoeff());
    hi = hi.cwiseMax(z.rowwise().maxCoeff());
  });
  return ext;
}

RowClass classify_from_extremes(double min_abs, double max_abs, const ClassBounds& bounds) {
  if (min_abs > bounds.l0 && max_abs < bounds.l1) return RowClass::Good;
  if (max_abs <= bounds.l0) return RowClass::Linear;
  if (min_abs >= bounds.l1) return RowClass::Saturated;
  return RowClass::Mixed;
}

}  // namespace detail

RowClass classify_row(const Eigen::Ref<const Eigen::VectorXd>& w_row, double b,
                      const Eigen::Ref<const Eigen::MatrixXd>& data, const ClassBounds& bounds) {
  bounds.validate();
  if (data.cols() < 1) throw std::invalid_argument("classify_row: data must be non-empty");
  if (w_row.size() != data.rows()) throw std::invalid_argument("classify_row: dimension mismatch");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index n = 0; n < data.cols(); ++n) {
    const double a = std::abs(w_row.dot(data.col(n)) + b);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  return detail::classify_from_extremes(lo, hi, bounds);
}

std::vector<RowClass> classify_rows(const InternalWeights& iw,
                                    const Eigen::Ref<const Eigen::MatrixXd>& data,
                                    const ClassBounds& bounds) {
  bounds.validate();
  const auto ext = detail::abs_argument_extremes(iw, data);
  std::vector<RowClass> classes(static_cast<std::size_t>(iw.feature_dim()));
  for (Eigen::Index i = 0; i < iw.feature_dim(); ++i)
    classes[static_cast<std::size_t>(i)] =
        detail::classify_from_extremes(ext.min_abs[i], ext.max_abs[i], bounds);
  return classes;
}

RowClassCounts row_class_counts(const InternalWeights& iw,
                                const Eigen::Ref<const Eigen::MatrixXd>& data,
                                const ClassBounds& bounds) {
  RowClassCounts counts;
  for (RowClass c : classify_rows(iw, data, bounds)) {
    switch (c) {
      case RowClass::Good: ++counts.good; break;
      case RowClass::Linear: ++counts.linear; break;
      case RowClass::Saturated: ++counts.saturated; break;
      case RowClass::Mixed: ++counts.mixed; break;
    }
  }
  return counts;
}

FeatureFractions pointwise_fractions(const InternalWeights& iw,
                                     const Eigen::Ref<const Eigen::MatrixXd>& data,
                                     const ClassBounds& bounds) {
  bounds.validate();
  if (data.cols() < 1) throw std::invalid_argument("pointwise_fractions: data must be non-empty");
  if (data.rows() != iw.state_dim() || iw.b_in.size() != iw.feature_dim())
    throw std::invalid_argument("pointwise_fractions: dimension mismatch");

  long linear = 0;
  long saturated = 0;
  for_each_argument_tile(iw, data, [&](Eigen::Index, const Eigen::MatrixXd& z) {
    const auto a = z.array().abs();
    linear += (a <= bounds.l0).count();
    saturated += (a >= bounds.l1).count();
  });
  const double total = static_cast<double>(iw.feature_dim()) * static_cast<double>(data.cols());
  FeatureFractions f;
  f.p_linear = static_cast<double>(linear) / total;
  f.p_saturated = static_cast<double>(saturated) / total;
  f.p_good = static_cast<double>(static_cast<long>(total) - linear - saturated) / total;
  return f;
}

double effective_range(const InternalWeights& iw, const Eigen::Ref<const Eigen::MatrixXd>& data) {
  const auto ext = detail::abs_argument_extremes(iw, data);
  if (iw.feature_dim() == 0) return 0.0;
  return (ext.max_abs - ext.min_abs).mean();
}

void write_internal_weights(std::ostream& os, const InternalWeights& iw) {
  iw.validate();
  detail::write_magic(os, kInternalMagic);
  detail::write_u32(os, static_cast<std::uint32_t>(iw.feature_dim()));
  detail::write_u32(os, static_cast<std::uint32_t>(iw.state_dim()));
  for (Eigen::Index i = 0; i < iw.feature_dim(); ++i) {
    for (Eigen::Index j = 0; j < iw.state_dim(); ++j) detail::write_f64(os, iw.w_in(i, j));
    detail::write_f64(os, iw.b_in[i]);
  }
  if (!os) throw std::runtime_error("write_internal_weights: stream error");
}

void write_internal_weights(const std::string& path, const InternalWeights& iw) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_internal_weights(os, iw);
}

InternalWeights read_internal_weights(std::istream& is) {
  detail::expect_magic(is, kInternalMagic);
  const auto dr = static_cast<Eigen::Index>(detail::read_u32(is));
  const auto d = static_cast<Eigen::Index>(detail::read_u32(is));
  InternalWeights iw{Eigen::MatrixXd(dr, d), Eigen::VectorXd(dr)};
  for (Eigen::Index i = 0; i < dr; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) iw.w_in(i, j) = detail::read_f64(is);
    iw.b_in[i] = detail::read_f64(is);
  }
  iw.validate();
  return iw;
}

InternalWeights read_internal_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_internal_weights(is);
}

void write_internal_weights_csv(std::ostream& os, const InternalWeights& iw) {
  for (Eigen::Index j = 0; j < iw.state_dim(); ++j) os << 'w' << j << ',';
  os << "b\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < iw.feature_dim(); ++i) {
    for (Eigen::Index j = 0; j < iw.state_dim(); ++j) os << iw.w_in(i, j) << ',';
    os << iw.b_in[i] << '\n';
  }
}

}  // namespace goodweights
