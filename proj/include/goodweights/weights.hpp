#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "goodweights/dynamics.hpp"

namespace goodweights {

/// Hidden-layer parameters (W_in, b_in) of a random feature map.
struct InternalWeights {
  Eigen::MatrixXd w_in;  // D_r x D
  Eigen::VectorXd b_in;  // D_r

  Eigen::Index feature_dim() const { return w_in.rows(); }
  Eigen::Index state_dim() const { return w_in.cols(); }
  void validate() const;
};

/// Learned readout W (D x D_r).
struct OuterWeights {
  Eigen::MatrixXd w;

  void validate() const;
};

/// Limits separating the linear, good and saturated ranges of tanh.
struct ClassBounds {
  double l0 = 0.4;
  double l1 = 3.5;

  void validate() const;
};

enum class RowClass { Good, Linear, Saturated, Mixed };

std::string_view to_string(RowClass c);
RowClass parse_row_class(std::string_view s);

struct FeatureFractions {
  double p_good = 0.0;
  double p_linear = 0.0;
  double p_saturated = 0.0;
};

struct RowClassCounts {
  long good = 0;
  long linear = 0;
  long saturated = 0;
  long mixed = 0;

  long total() const { return good + linear + saturated + mixed; }
  friend bool operator==(const RowClassCounts&, const RowClassCounts&) = default;
};

/// tanh(W_in u + b_in).
Eigen::VectorXd features(const InternalWeights& iw, const Eigen::Ref<const Eigen::VectorXd>& u);

/// Classifies one row against every column of `data` (D x N).
///
/// With a_n = |w.u_n + b|: Good iff L0 < a_n < L1 for all n, Linear iff
/// a_n <= L0 for all n, Saturated iff a_n >= L1 for all n, Mixed otherwise.
/// Values exactly at L0 or L1 fall in Linear or Saturated respectively.
RowClass classify_row(const Eigen::Ref<const Eigen::VectorXd>& w_row, double b,
                      const Eigen::Ref<const Eigen::MatrixXd>& data, const ClassBounds& bounds);

/// Fractions of (feature, data point) pairs whose |argument| lies in the
/// linear [0, L0], saturated [L1, inf) or good (L0, L1) range.
FeatureFractions pointwise_fractions(const InternalWeights& iw,
                                     const Eigen::Ref<const Eigen::MatrixXd>& data,
                                     const ClassBounds& bounds);

/// Mean over rows of (max_n - min_n) of |w_i.u_n + b_i|.
double effective_range(const InternalWeights& iw, const Eigen::Ref<const Eigen::MatrixXd>& data);

RowClassCounts row_class_counts(const InternalWeights& iw,
                                const Eigen::Ref<const Eigen::MatrixXd>& data,
                                const ClassBounds& bounds);

/// Per-row classes, in row order.
std::vector<RowClass> classify_rows(const InternalWeights& iw,
                                    const Eigen::Ref<const Eigen::MatrixXd>& data,
                                    const ClassBounds& bounds);

// Binary container: 8-byte magic "GWIWGHT1", uint32 D_r, uint32 D (all
// little-endian), then D_r rows of (w_1 .. w_D, b) as float64, row-major.
void write_internal_weights(std::ostream& os, const InternalWeights& iw);
void write_internal_weights(const std::string& path, const InternalWeights& iw);
InternalWeights read_internal_weights(std::istream& is);
InternalWeights read_internal_weights(const std::string& path);

/// CSV with header w0,...,w{D-1},b; one row per feature.
void write_internal_weights_csv(std::ostream& os, const InternalWeights& iw);

}  // namespace goodweights
