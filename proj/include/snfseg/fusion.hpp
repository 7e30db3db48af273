#pragma once

#include <Eigen/Sparse>

#include <span>
#include <vector>

#include "snfseg/types.hpp"

namespace snfseg {

/// Row-stochastic transition matrix: off-diagonal W_ij / (2 sum_{k != i} W_ik), diagonal 1/2.
SquareMatrix transition_matrix(const SquareMatrix& affinity);

/// Neighbour-restricted kernel: W_ij / (2 sum_{k in N(i)} W_ik) for j in N(i), else 0.
/// Rows sum to 1/2.
SquareMatrix kernel_matrix(const SquareMatrix& affinity, const NeighborSet& neighbors);

/// One feature's input to fusion.
struct FusionInput {
  SquareMatrix affinity;
  NeighborSet neighbors;
};

/// Iterates P_f <- S_f * mean_{k != f}(P_k) * S_f^T for all features
/// simultaneously, `iterations` times, starting from the transition matrices.
/// Returns the symmetrised mean of the final P_f.
SquareMatrix snf_fuse(std::span<const FusionInput> inputs, int iterations);

/// Per-iteration access for inspection and testing.
class FusionState {
 public:
  explicit FusionState(std::span<const FusionInput> inputs);

  void step();
  int iteration() const { return iteration_; }
  const std::vector<Matrix>& transitions() const { return p_; }

  /// (A + A^T) / 2 where A is the mean of the current transitions.
  SquareMatrix fused() const;

 private:
  std::vector<Eigen::SparseMatrix<double, Eigen::RowMajor>> s_;
  std::vector<Matrix> p_;
  double framerate_ = 0.0;
  int iteration_ = 0;
};

}  // namespace snfseg
