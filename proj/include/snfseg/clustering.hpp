#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snfseg/segmentation.hpp"
#include "snfseg/types.hpp"

namespace snfseg {

/// Smallest eigenpairs of the random-walk Laplacian L = I - D^-1 A.
struct SpectralEmbedding {
  Vector eigenvalues;      // ascending
  Matrix vectors;          // N x k_max, unit-norm columns
  Vector residuals;        // ||L v_i - lambda_i v_i|| per column
  bool degree_clamped = false;
  std::vector<std::string> warnings;

  Index k_max() const { return vectors.cols(); }
};

/// Solved through L_sym = I - D^-1/2 A D^-1/2: v = D^-1/2 u, rescaled to unit
/// norm. Zero-degree rows are clamped to 1e-12 and flagged. Throws
/// Error(Numerical) if the eigensolver fails or a residual exceeds 1e-6 * N.
SpectralEmbedding rw_laplacian_embedding(const SquareMatrix& affinity, int k_max);

struct KMeansOptions {
  int restarts = 10;
  int max_iterations = 300;
};

struct KMeansResult {
  std::vector<int> labels;  // canonicalised by order of first appearance
  double objective = 0.0;   // within-cluster sum of squared distances
};

/// k-means++ seeded Lloyd iterations; best of `restarts` runs. Deterministic for a given seed.
KMeansResult kmeans_fit(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

inline std::vector<int> kmeans(const Matrix& points, int k, std::uint64_t seed) {
  return kmeans_fit(points, k, seed).labels;
}

/// Relabels so that labels appear as 0, 1, 2, ... in sequence order.
std::vector<int> canonicalize_labels(std::span<const int> labels);

/// Sum of squared distances of each point to its cluster mean.
double within_cluster_ss(const Matrix& points, std::span<const int> labels);

/// Maps frame indices onto time: frame n spans
/// [offset + n / framerate, offset + (n + 1) / framerate), clipped to [0, duration].
struct TimeGrid {
  double framerate = 1.0;
  double offset = 0.0;
  double duration = 0.0;
};

/// Run-length encodes a label sequence into intervals; first interval starts
/// at 0 and the last is extended to the duration.
Partition labels_to_partition(std::span<const int> labels, const TimeGrid& grid);

/// k-means on the first k eigenvectors, converted to intervals.
Partition cluster_at_k(const SpectralEmbedding& embedding, int k, const TimeGrid& grid, std::uint64_t seed);

/// [full track] followed by cluster_at_k for k = k_lo .. k_hi. When the embedding
/// has fewer than k_hi columns (short input) the sweep stops there and a
/// warning is appended to `warnings` (if given).
MultiLevelSegmentation build_hierarchy(const SpectralEmbedding& embedding, int k_lo, int k_hi, const TimeGrid& grid,
                                       std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

/// M_tu = deepest level at which t and u share a label, on the grid i / framerate.
SquareMatrix meet_matrix(const MultiLevelSegmentation& h, double framerate);

}  // namespace snfseg
