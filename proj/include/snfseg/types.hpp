#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

namespace snfseg {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class FeatureKind { Mfcc, Chroma, Tempogram, CremaLike };
enum class DistanceKind { Euclidean, Cosine };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);

/// MFCC and tempogram blocks are compared with Euclidean distance,
/// chroma-like blocks with cosine distance.
DistanceKind distance_for(FeatureKind kind);

/// N time steps (rows) by d dimensions of a single feature type.
struct FeatureMatrix {
  Matrix data;
  double framerate = 0.0;
  FeatureKind kind = FeatureKind::Mfcc;
  DistanceKind distance = DistanceKind::Euclidean;

  FeatureMatrix() = default;
  FeatureMatrix(Matrix values, double rate, FeatureKind feature_kind);

  Index frames() const { return data.rows(); }
  Index dims() const { return data.cols(); }

  /// Throws Error(Input) when any invariant is violated.
  void validate() const;
};

enum class MatrixRole { Distance, Affinity, Transition, KernelS, Fused, Meet };

std::string_view to_string(MatrixRole role);

/// N x N matrix tagged with what it represents.
struct SquareMatrix {
  Matrix data;
  MatrixRole role = MatrixRole::Distance;
  double framerate = 0.0;

  Index size() const { return data.rows(); }
};

/// Per-row indices of the kappa nearest neighbours (self excluded), closest first.
struct NeighborSet {
  std::vector<std::vector<Index>> rows;

  Index size() const { return static_cast<Index>(rows.size()); }
};

}  // namespace snfseg
