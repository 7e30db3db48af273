#include "snfseg/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "snfseg/error.hpp"

namespace snfseg {

namespace {

constexpr double kSigmaFloor = 1e-12;

}  // namespace

SquareMatrix compute_ssm(const FeatureMatrix& f) {
  const Index n = f.frames();
  require(n >= 2, ErrorCode::Input, "self-similarity needs at least 2 frames");
  const Matrix& x = f.data;
  Matrix d = Matrix::Zero(n, n);

  if (f.distance == DistanceKind::Euclidean) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double v = (x.row(i) - x.row(j)).norm();
        d(i, j) = v;
        d(j, i) = v;
      }
    }
  } else {
    const Vector norms = x.rowwise().norm();
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        double v;
        if (norms(i) == 0.0 || norms(j) == 0.0) {
          v = (norms(i) == 0.0 && norms(j) == 0.0) ? 0.0 : 1.0;
        } else {
          const double cos = x.row(i).dot(x.row(j)) / (norms(i) * norms(j));
          v = std::clamp(1.0 - cos, 0.0, 2.0);
        }
        d(i, j) = v;
        d(j, i) = v;
      }
    }
  }
  return {std::move(d), MatrixRole::Distance, f.framerate};
}

NeighborSet nearest_neighbors(const SquareMatrix& distance, int kappa) {
  require(kappa >= 1, ErrorCode::Usage, "kappa must be >= 1");
  const Index n = distance.size();
  const Index count = std::min<Index>(kappa, n - 1);
  NeighborSet out;
  out.rows.resize(static_cast<std::size_t>(n));
  std::vector<Index> order;
  for (Index i = 0; i < n; ++i) {
    order.clear();
    for (Index j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    auto closer = [&](Index a, Index b) {
      const double da = distance.data(i, a);
      const double db = distance.data(i, b);
      return da < db || (da == db && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + count, order.end(), closer);
    out.rows[static_cast<std::size_t>(i)].assign(order.begin(), order.begin() + count);
  }
  return out;
}

SquareMatrix autotuned_affinity(const SquareMatrix& distance, int kappa) {
  require(kappa >= 1, ErrorCode::Usage, "kappa must be >= 1");
  require(distance.size() >= kappa + 1, ErrorCode::Input,
          "affinity needs at least kappa + 1 = " + std::to_string(kappa + 1) + " frames, got " +
              std::to_string(distance.size()));
  return autotuned_affinity(distance, nearest_neighbors(distance, kappa));
}

SquareMatrix autotuned_affinity(const SquareMatrix& distance, const NeighborSet& neighbors) {
  const Index n = distance.size();
  require(neighbors.size() == n, ErrorCode::Usage, "neighbour set does not match matrix size");
  const Matrix& d = distance.data;

  // (1/kappa) * sum of neighbour distances, per row
  Vector mean_nn(n);
  for (Index i = 0; i < n; ++i) {
    const auto& nn = neighbors.rows[static_cast<std::size_t>(i)];
    require(!nn.empty(), ErrorCode::Input, "empty neighbour row");
    double acc = 0.0;
    for (const Index k : nn) acc += d(i, k);
    mean_nn(i) = acc / static_cast<double>(nn.size());
  }

  Matrix w(n, n);
  for (Index i = 0; i < n; ++i) {
    w(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      const double dij = d(i, j);
      const double sigma = (mean_nn(i) + mean_nn(j) + dij) / 6.0;
      double v;
      if (sigma < kSigmaFloor) {
        v = dij < kSigmaFloor ? 1.0 : 0.0;
      } else {
        const double r = dij / sigma;
        v = std::exp(-r * r);
      }
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return {std::move(w), MatrixRole::Affinity, distance.framerate};
}

SquareMatrix diagonal_median_filter(const SquareMatrix& affinity, int taps) {
  require(taps >= 1 && taps % 2 == 1, ErrorCode::Usage, "median filter taps must be odd and >= 1");
  if (taps == 1) return affinity;
  const Index n = affinity.size();
  const Index radius = taps / 2;
  Matrix out(n, n);
  std::vector<double> diag;
  std::vector<double> window;
  for (Index offset = -(n - 1); offset <= n - 1; ++offset) {
    const Index row0 = offset >= 0 ? offset : 0;
    const Index col0 = offset >= 0 ? 0 : -offset;
    const Index len = n - (offset >= 0 ? offset : -offset);
    diag.resize(static_cast<std::size_t>(len));
    for (Index p = 0; p < len; ++p) diag[static_cast<std::size_t>(p)] = affinity.data(row0 + p, col0 + p);
    for (Index p = 0; p < len; ++p) {
      const Index h = std::min({radius, p, len - 1 - p});
      window.assign(diag.begin() + (p - h), diag.begin() + (p + h + 1));
      auto mid = window.begin() + h;
      std::nth_element(window.begin(), mid, window.end());
      out(row0 + p, col0 + p) = *mid;
    }
  }
  Matrix sym = 0.5 * (out + out.transpose());
  return {std::move(sym), affinity.role, affinity.framerate};
}

}  // namespace snfseg
