#include "snfseg/clustering.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "snfseg/error.hpp"

namespace snfseg {

namespace {

constexpr double kDegreeFloor = 1e-12;

// Portable uniform draws; std::uniform_*_distribution is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  Index below(Index n) { return std::min<Index>(n - 1, static_cast<Index>(uniform() * static_cast<double>(n))); }

 private:
  std::mt19937_64 engine_;
};

Matrix kmeanspp_init(const Matrix& x, int k, Rng& rng) {
  const Index n = x.rows();
  Matrix centers(k, x.cols());
  centers.row(0) = x.row(rng.below(n));
  Vector closest = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    Index pick = 0;
    if (total <= 0.0) {
      pick = rng.below(n);
    } else {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        acc += closest(i);
        if (acc > target) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = x.row(pick);
    closest = closest.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

struct LloydResult {
  std::vector<int> labels;
  double objective;
};

LloydResult lloyd(const Matrix& x, Matrix centers, int max_iterations) {
  const Index n = x.rows();
  const auto k = static_cast<int>(centers.rows());
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  Vector dist(n);

  auto assign = [&]() {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      dist(i) = best_d;
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    return changed;
  };

  assign();
  for (int iter = 0; iter < max_iterations; ++iter) {
    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
      sums.row(static_cast<Index>(c)) += x.row(i);
      ++counts[c];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      } else {
        // empty cluster: reseed at the point farthest from its centroid
        Index far = 0;
        dist.maxCoeff(&far);
        centers.row(c) = x.row(far);
        dist(far) = 0.0;
      }
    }
    if (!assign()) break;
  }
  return {labels, dist.sum()};
}

}  // namespace

SpectralEmbedding rw_laplacian_embedding(const SquareMatrix& affinity, int k_max) {
  const Index n = affinity.size();
  require(n >= 1 && affinity.data.cols() == n, ErrorCode::Input, "affinity must be a non-empty square matrix");
  require(k_max >= 1, ErrorCode::Usage, "k_max must be >= 1");
  require(affinity.data.allFinite() && affinity.data.minCoeff() >= 0.0, ErrorCode::Input,
          "affinity must be finite and non-negative");
  const Matrix& a = affinity.data;
  const Index k = std::min<Index>(k_max, n);

  SpectralEmbedding out;
  Vector degree = a.rowwise().sum();
  for (Index i = 0; i < n; ++i) {
    if (degree(i) < kDegreeFloor) {
      degree(i) = kDegreeFloor;
      out.degree_clamped = true;
    }
  }
  if (out.degree_clamped) out.warnings.emplace_back("zero-degree rows clamped to 1e-12");

  const Vector inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd lsym = -(inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal());
  lsym.diagonal().array() += 1.0;
  lsym = 0.5 * (lsym + lsym.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lsym);
  require(solver.info() == Eigen::Success, ErrorCode::Numerical, "eigensolver did not converge");

  out.eigenvalues = solver.eigenvalues().head(k);
  out.vectors.resize(n, k);
  out.residuals.resize(k);
  for (Index c = 0; c < k; ++c) {
    double& lambda = out.eigenvalues(c);
    // absorb roundoff just outside the theoretical range [0, 2]
    if (lambda < 0.0 && lambda > -1e-9) lambda = 0.0;
    if (lambda > 2.0 && lambda < 2.0 + 1e-9) lambda = 2.0;

    Vector v = inv_sqrt.cwiseProduct(solver.eigenvectors().col(c));
    v.normalize();
    Index peak = 0;
    v.cwiseAbs().maxCoeff(&peak);
    if (v(peak) < 0.0) v = -v;
    out.vectors.col(c) = v;

    const Vector lv = v - (a * v).cwiseQuotient(degree);
    out.residuals(c) = (lv - lambda * v).norm();
    require(out.residuals(c) <= 1e-6 * static_cast<double>(n), ErrorCode::Numerical,
            "eigenvector residual " + std::to_string(out.residuals(c)) + " exceeds tolerance");
  }
  return out;
}

std::vector<int> canonicalize_labels(std::span<const int> labels) {
  std::vector<int> mapping;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const int l : labels) {
    if (l >= static_cast<int>(mapping.size())) mapping.resize(static_cast<std::size_t>(l) + 1, -1);
    auto& m = mapping[static_cast<std::size_t>(l)];
    if (m < 0) m = static_cast<int>(std::count_if(mapping.begin(), mapping.end(), [](int v) { return v >= 0; }));
    out.push_back(m);
  }
  return out;
}

double within_cluster_ss(const Matrix& points, std::span<const int> labels) {
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  Matrix sums = Matrix::Zero(k, points.cols());
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (Index i = 0; i < points.rows(); ++i) {
    sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
    counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] += 1.0;
  }
  double total = 0.0;
  for (Index i = 0; i < points.rows(); ++i) {
    const auto c = labels[static_cast<std::size_t>(i)];
    total += (points.row(i) - sums.row(c) / counts[static_cast<std::size_t>(c)]).squaredNorm();
  }
  return total;
}

KMeansResult kmeans_fit(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options) {
  const Index n = points.rows();
  require(k >= 1, ErrorCode::Usage, "k must be >= 1");
  require(k <= n, ErrorCode::Usage, "k (" + std::to_string(k) + ") exceeds number of points (" + std::to_string(n) + ")");
  require(options.restarts >= 1 && options.max_iterations >= 1, ErrorCode::Usage, "invalid k-means options");

  if (k == 1) {
    std::vector<int> zeros(static_cast<std::size_t>(n), 0);
    return {zeros, within_cluster_ss(points, zeros)};
  }

  Rng rng(seed);
  KMeansResult best{{}, std::numeric_limits<double>::infinity()};
  for (int r = 0; r < options.restarts; ++r) {
    auto run = lloyd(points, kmeanspp_init(points, k, rng), options.max_iterations);
    if (run.objective < best.objective) best = {std::move(run.labels), run.objective};
  }
  best.labels = canonicalize_labels(best.labels);
  return best;
}

Partition labels_to_partition(std::span<const int> labels, const TimeGrid& grid) {
  require(!labels.empty(), ErrorCode::Input, "empty label sequence");
  require(grid.framerate > 0.0 && grid.duration > 0.0, ErrorCode::Usage, "invalid time grid");
  Partition out;
  double start = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool last = i + 1 == labels.size();
    if (!last && labels[i + 1] == labels[i]) continue;
    double end = last ? grid.duration : grid.offset + static_cast<double>(i + 1) / grid.framerate;
    end = std::clamp(end, 0.0, grid.duration);
    if (end <= start) continue;
    const auto label = std::to_string(labels[i]);
    if (!out.empty() && out.back().label == label) {
      out.back().end = end;
    } else {
      out.push_back({start, end, label});
    }
    start = end;
  }
  return out;
}

Partition cluster_at_k(const SpectralEmbedding& embedding, int k, const TimeGrid& grid, std::uint64_t seed) {
  require(k >= 1 && k <= embedding.k_max(), ErrorCode::Usage,
          "k = " + std::to_string(k) + " exceeds embedding dimension " + std::to_string(embedding.k_max()));
  const Matrix features = embedding.vectors.leftCols(k);
  const auto labels = kmeans(features, k, seed);
  return labels_to_partition(labels, grid);
}

MultiLevelSegmentation build_hierarchy(const SpectralEmbedding& embedding, int k_lo, int k_hi, const TimeGrid& grid,
                                       std::uint64_t seed, std::vector<std::string>* warnings) {
  require(k_lo >= 2 && k_lo <= k_hi, ErrorCode::Usage, "invalid k range");
  MultiLevelSegmentation h;
  h.duration = grid.duration;
  h.levels.push_back(full_track_partition(grid.duration));
  const int top = std::min<int>(k_hi, static_cast<int>(embedding.k_max()));
  if (top < k_hi && warnings != nullptr) {
    warnings->push_back("hierarchy truncated at k = " + std::to_string(top) + " (only " +
                        std::to_string(embedding.vectors.rows()) + " frames)");
  }
  for (int k = k_lo; k <= top; ++k) h.levels.push_back(cluster_at_k(embedding, k, grid, seed));
  return h;
}

SquareMatrix meet_matrix(const MultiLevelSegmentation& h, double framerate) {
  const auto times = sample_grid(h.duration, framerate);
  const auto codes = label_codes(h, times);
  const auto n = static_cast<Index>(times.size());
  Matrix m = Matrix::Zero(n, n);
  for (Index t = 0; t < n; ++t) {
    for (Index u = t; u < n; ++u) {
      int depth = 0;
      for (std::size_t l = 0; l < codes.size(); ++l) {
        if (codes[l][static_cast<std::size_t>(t)] == codes[l][static_cast<std::size_t>(u)]) depth = static_cast<int>(l);
      }
      m(t, u) = depth;
      m(u, t) = depth;
    }
  }
  return {std::move(m), MatrixRole::Meet, framerate};
}

}  // namespace snfseg
