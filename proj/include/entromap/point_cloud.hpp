#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "entromap/errors.hpp"

namespace entromap {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// An empirical measure (1/n) sum_i delta_{x_i} on R^d.
///
/// Points are stored as the rows of an n x d column-major matrix, so each
/// coordinate is contiguous across points. That layout is what the
/// Gibbs-kernel products in the solver want.
class PointCloud {
 public:
  explicit PointCloud(Matrix points) : points_(std::move(points)) {
    if (points_.rows() < 1 || points_.cols() < 1)
      throw InvalidArgument("PointCloud: need n >= 1 points of dimension d >= 1, got " +
                            std::to_string(points_.rows()) + "x" + std::to_string(points_.cols()));
    if (!points_.allFinite()) throw InvalidArgument("PointCloud: coordinates must be finite");
  }

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }

  const Matrix& points() const { return points_; }
  auto point(Index i) const { return points_.row(i); }

  Eigen::RowVectorXd mean() const { return points_.colwise().mean(); }

  /// Largest pairwise Euclidean distance; O(n^2 d).
  double diameter() const {
    const Index n = size();
    const Vector sq = points_.rowwise().squaredNorm();
    double best = 0.0;
    for (Index i = 0; i < n; ++i) {
      const Vector dots = points_ * points_.row(i).transpose();
      const double row_best = (sq.array() + sq(i) - 2.0 * dots.array()).maxCoeff();
      best = std::max(best, row_best);
    }
    return std::sqrt(std::max(best, 0.0));
  }

  PointCloud translated(const Eigen::RowVectorXd& t) const {
    if (t.size() != dim()) throw InvalidArgument("PointCloud::translated: dimension mismatch");
    return PointCloud(points_.rowwise() + t);
  }

 private:
  Matrix points_;
};

inline void require_same_dim(const PointCloud& a, const PointCloud& b, const char* where) {
  if (a.dim() != b.dim())
    throw InvalidArgument(std::string(where) + ": dimension mismatch (" + std::to_string(a.dim()) +
                          " vs " + std::to_string(b.dim()) + ")");
}

}  // namespace entromap
