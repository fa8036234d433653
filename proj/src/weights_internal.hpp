#pragma once

#include <Eigen/Dense>

#include "goodweights/weights.hpp"

namespace goodweights::detail {

struct ArgumentExtremes {
  Eigen::VectorXd min_abs;  // m_i
  Eigen::VectorXd max_abs;  // M_i
};

/// Per-row min and max over data columns of |w_i.u_n + b_i|.
ArgumentExtremes abs_argument_extremes(const InternalWeights& iw,
                                       const Eigen::Ref<const Eigen::MatrixXd>& data);

RowClass classify_from_extremes(double min_abs, double max_abs, const ClassBounds& bounds);

}  // namespace goodweights::detail
