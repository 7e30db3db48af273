#pragma once

#include "snfseg/types.hpp"

namespace snfseg {

/// Self-similarity (distance) matrix using the feature's distance kind.
/// Cosine: a zero row is at distance 1 from non-zero rows and 0 from other zero rows.
SquareMatrix compute_ssm(const FeatureMatrix& f);

/// kappa nearest neighbours of every row (self excluded, ties to the lower index).
NeighborSet nearest_neighbors(const SquareMatrix& distance, int kappa);

/// Gaussian affinity with the pairwise autotuned bandwidth
///   sigma_ij = ((1/kappa) * (sum_{k in N(i)} D_ik + sum_{k in N(j)} D_kj) + D_ij) / 6,
///   W_ij = exp(-(D_ij / sigma_ij)^2).
/// Requires N >= kappa + 1.
SquareMatrix autotuned_affinity(const SquareMatrix& distance, int kappa);

/// Same as above, reusing a precomputed neighbour set.
SquareMatrix autotuned_affinity(const SquareMatrix& distance, const NeighborSet& neighbors);

/// Running median of `taps` samples along every diagonal (window shrinks
/// symmetrically at the ends), then (M + M^T) / 2.
SquareMatrix diagonal_median_filter(const SquareMatrix& affinity, int taps);

}  // namespace snfseg
