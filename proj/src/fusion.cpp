#include "snfseg/fusion.hpp"

#include <algorithm>
#include <numeric>

#include "snfseg/error.hpp"

namespace snfseg {

namespace {

using SparseRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

void require_valid_affinity(const SquareMatrix& w) {
  require(w.data.rows() == w.data.cols(), ErrorCode::Input, "affinity matrix must be square");
  require(w.size() >= 2, ErrorCode::Input, "affinity matrix needs at least 2 rows");
  require(w.data.allFinite(), ErrorCode::Input, "affinity matrix has non-finite entries");
}

SparseRow to_sparse(const Matrix& s) {
  std::vector<Eigen::Triplet<double>> entries;
  for (Index i = 0; i < s.rows(); ++i) {
    for (Index j = 0; j < s.cols(); ++j) {
      if (s(i, j) != 0.0) entries.emplace_back(i, j, s(i, j));
    }
  }
  SparseRow out(s.rows(), s.cols());
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

// Canonical processing order so that results do not depend on how the
// caller ordered the features (floating-point sums are not associative).
std::vector<std::size_t> canonical_order(std::span<const FusionInput> inputs) {
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = inputs[a].affinity.data;
    const auto& y = inputs[b].affinity.data;
    if (std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size())) return true;
    if (std::lexicographical_compare(y.data(), y.data() + y.size(), x.data(), x.data() + x.size())) return false;
    return inputs[a].neighbors.rows < inputs[b].neighbors.rows;
  });
  return order;
}

}  // namespace

SquareMatrix transition_matrix(const SquareMatrix& affinity) {
  require_valid_affinity(affinity);
  const Index n = affinity.size();
  const Matrix& w = affinity.data;
  Matrix p(n, n);
  for (Index i = 0; i < n; ++i) {
    const double off = w.row(i).sum() - w(i, i);
    require(off > 0.0, ErrorCode::Numerical, "degenerate affinity row " + std::to_string(i));
    p.row(i) = w.row(i) / (2.0 * off);
    p(i, i) = 0.5;
  }
  return {std::move(p), MatrixRole::Transition, affinity.framerate};
}

SquareMatrix kernel_matrix(const SquareMatrix& affinity, const NeighborSet& neighbors) {
  require_valid_affinity(affinity);
  const Index n = affinity.size();
  require(neighbors.size() == n, ErrorCode::Usage, "neighbour set does not match matrix size");
  const Matrix& w = affinity.data;
  Matrix s = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const auto& nn = neighbors.rows[static_cast<std::size_t>(i)];
    double total = 0.0;
    for (const Index k : nn) total += w(i, k);
    require(total > 0.0, ErrorCode::Numerical, "degenerate neighbor row " + std::to_string(i));
    for (const Index k : nn) s(i, k) = w(i, k) / (2.0 * total);
  }
  return {std::move(s), MatrixRole::KernelS, affinity.framerate};
}

FusionState::FusionState(std::span<const FusionInput> inputs) {
  require(inputs.size() >= 2, ErrorCode::Usage, "fusion requires at least two feature types");
  const Index n = inputs.front().affinity.size();
  for (const auto& in : inputs) {
    require(in.affinity.size() == n, ErrorCode::Input, "all affinity matrices must have the same size");
  }
  framerate_ = inputs.front().affinity.framerate;
  for (const auto idx : canonical_order(inputs)) {
    const auto& in = inputs[idx];
    p_.push_back(transition_matrix(in.affinity).data);
    s_.push_back(to_sparse(kernel_matrix(in.affinity, in.neighbors).data));
  }
}

void FusionState::step() {
  const std::size_t f_count = p_.size();
  const double denom = static_cast<double>(f_count - 1);
  std::vector<Matrix> next(f_count);
  for (std::size_t f = 0; f < f_count; ++f) {
    Matrix others = Matrix::Zero(p_[f].rows(), p_[f].cols());
    for (std::size_t k = 0; k < f_count; ++k) {
      if (k != f) others += p_[k];
    }
    others /= denom;
    const Matrix left = s_[f] * others;
    next[f] = left * s_[f].transpose();
  }
  p_ = std::move(next);
  ++iteration_;
}

SquareMatrix FusionState::fused() const {
  Matrix mean = Matrix::Zero(p_.front().rows(), p_.front().cols());
  for (const auto& p : p_) mean += p;
  mean /= static_cast<double>(p_.size());
  Matrix sym = 0.5 * (mean + mean.transpose());
  return {std::move(sym), MatrixRole::Fused, framerate_};
}

SquareMatrix snf_fuse(std::span<const FusionInput> inputs, int iterations) {
  require(iterations >= 1, ErrorCode::Usage, "iterations must be >= 1");
  FusionState state(inputs);
  for (int t = 0; t < iterations; ++t) state.step();
  return state.fused();
}

}  // namespace snfseg
