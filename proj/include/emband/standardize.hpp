#pragma once

#include <cmath>
#include <string>

#include "emband/errors.hpp"
#include "emband/types.hpp"

namespace emband {

// Per-column centering and scaling record. Scale is the population standard
// deviation (divide by N); constant columns keep scale 1 and are centered
// only. The record is enough to map weights and predictions back to raw
// units: w_raw = w / scale, intercept = target_mean - sum(w * mean / scale).
template <typename Scalar>
struct ColumnScaling {
  VectorX<Scalar> mean;
  VectorX<Scalar> scale;

  static ColumnScaling identity(Index d) {
    return {VectorX<Scalar>::Zero(d), VectorX<Scalar>::Ones(d)};
  }

  MatrixX<Scalar> apply(const Eigen::Ref<const MatrixX<Scalar>>& raw) const {
    if (raw.cols() != mean.size())
      throw DimensionMismatch("expected " + std::to_string(mean.size()) +
                              " columns, got " + std::to_string(raw.cols()));
    return (raw.rowwise() - mean.transpose()).array().rowwise() /
           scale.transpose().array();
  }
};

template <typename Scalar>
ColumnScaling<Scalar> fit_column_scaling(const Eigen::Ref<const MatrixX<Scalar>>& x) {
  if (x.rows() < 2) throw DimensionMismatch("need at least 2 rows to standardize");
  ColumnScaling<Scalar> s;
  s.mean = x.colwise().mean();
  MatrixX<Scalar> centered = x.rowwise() - s.mean.transpose();
  s.scale = (centered.array().square().colwise().sum() / Scalar(x.rows())).sqrt();
  for (Index c = 0; c < s.scale.size(); ++c)
    if (s.scale[c] == Scalar(0)) s.scale[c] = Scalar(1);
  return s;
}

template <typename Scalar>
MatrixX<Scalar> standardize_columns(const Eigen::Ref<const MatrixX<Scalar>>& x,
                                    ColumnScaling<Scalar>& scaling_out) {
  scaling_out = fit_column_scaling<Scalar>(x);
  return scaling_out.apply(x);
}

}  // namespace emband
