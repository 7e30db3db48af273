#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "snfseg/affinity.hpp"
#include "snfseg/error.hpp"
#include "snfseg/fusion.hpp"

using namespace snfseg;

namespace {

SquareMatrix as_affinity(const Eigen::MatrixXd& w) { return {Matrix(w), MatrixRole::Affinity, 1.0}; }

FusionInput input_from_distance(const Eigen::MatrixXd& d, int kappa) {
  const SquareMatrix dist{Matrix(d), MatrixRole::Distance, 1.0};
  auto nn = nearest_neighbors(dist, kappa);
  return {autotuned_affinity(dist, nn), std::move(nn)};
}

std::vector<std::vector<std::size_t>> to_oracle(const NeighborSet& nn) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& row : nn.rows) out.emplace_back(row.begin(), row.end());
  return out;
}

/// Two-block affinity (0.9 inside, 0.1 across) plus clipped Gaussian noise.
Eigen::MatrixXd noisy_blocks(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 0.2);
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i) {
    w(i, i) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const double base = ((i < n / 2) == (j < n / 2)) ? 0.9 : 0.1;
      w(i, j) = w(j, i) = std::clamp(base + g(rng), 1e-3, 1.0);
    }
  }
  return w;
}

double block_contrast(const Matrix& w) {
  const Index n = w.rows();
  double in = 0, across = 0;
  long n_in = 0, n_across = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if ((i < n / 2) == (j < n / 2)) {
        in += w(i, j);
        ++n_in;
      } else {
        across += w(i, j);
        ++n_across;
      }
    }
  return (in / n_in) / (across / n_across);
}

/// Neighbours taken from the affinity itself (largest off-diagonal entries).
NeighborSet neighbours_by_affinity(const Eigen::MatrixXd& w, int kappa) {
  Eigen::MatrixXd d = (1.0 - w.array()).matrix();
  d.diagonal().setZero();
  return nearest_neighbors(SquareMatrix{Matrix(d), MatrixRole::Distance, 1.0}, kappa);
}

}  // namespace

TEST_CASE("transition matrix") {
  SUBCASE("N = 2 always halves") {
    for (const double w : {0.01, 0.3, 1.0}) {
      Eigen::MatrixXd m(2, 2);
      m << 1, w, w, 1;
      CHECK(transition_matrix(as_affinity(m)).data.isApprox(Matrix::Constant(2, 2, 0.5)));
    }
  }
  SUBCASE("hand example") {
    Eigen::MatrixXd m(3, 3);
    m << 1, 0.2, 0.6,  //
        0.2, 1, 0.5,   //
        0.6, 0.5, 1;
    const auto p = transition_matrix(as_affinity(m)).data;
    CHECK(p(0, 0) == 0.5);
    CHECK(p(0, 1) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(p(0, 2) == doctest::Approx(0.375).epsilon(1e-15));
  }
  SUBCASE("rows sum to one") {
    std::mt19937_64 rng(1);
    const auto p = transition_matrix(as_affinity(oracle::random_affinity(rng, 20))).data;
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("zero row is rejected") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_WITH_AS(transition_matrix(as_affinity(m)), doctest::Contains("degenerate affinity row"), Error);
  }
}

TEST_CASE("kernel matrix") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd w = oracle::random_affinity(rng, 4);
  SUBCASE("kappa = N - 1 reproduces the off-diagonal of P") {
    const auto nn = neighbours_by_affinity(w, 3);
    const auto s = kernel_matrix(as_affinity(w), nn).data;
    const auto p = transition_matrix(as_affinity(w)).data;
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) CHECK(s(i, j) == doctest::Approx(i == j ? 0.0 : p(i, j)).epsilon(1e-14));
  }
  SUBCASE("N = 4, kappa = 2") {
    const auto nn = neighbours_by_affinity(w, 2);
    const auto s = kernel_matrix(as_affinity(w), nn).data;
    for (Index i = 0; i < 4; ++i) {
      CHECK(s.row(i).sum() == doctest::Approx(0.5).epsilon(1e-15));
      CHECK((s.row(i).array() != 0.0).count() == 2);
    }
    CHECK(oracle::max_abs_diff(oracle::kernel(oracle::from_eigen(w), to_oracle(nn)), s) < 1e-15);
  }
  SUBCASE("zero neighbour weights are rejected") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
    m(1, 2) = m(2, 1) = 0.5;
    NeighborSet nn{{{1}, {0}, {0}}};
    CHECK_THROWS_WITH_AS(kernel_matrix(as_affinity(m), nn), doctest::Contains("degenerate neighbor row"), Error);
  }
}

TEST_CASE("one fusion step matches the triple-loop oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 5 + trial;
    std::vector<FusionInput> inputs;
    std::vector<oracle::Grid> p, s;
    for (int f = 0; f < 2 + trial % 2; ++f) {
      inputs.push_back(input_from_distance(oracle::random_distance(rng, n), 3));
      const auto w = oracle::from_eigen(inputs.back().affinity.data);
      p.push_back(oracle::transition(w));
      s.push_back(oracle::kernel(w, to_oracle(inputs.back().neighbors)));
    }
    const auto expected = oracle::fused_mean(oracle::snf_step(p, s));
    CHECK(oracle::max_abs_diff(expected, snf_fuse(inputs, 1).data) < 1e-10);

    const auto twice = oracle::fused_mean(oracle::snf_step(oracle::snf_step(p, s), s));
    CHECK(oracle::max_abs_diff(twice, snf_fuse(inputs, 2).data) < 1e-10);
  }
}

TEST_CASE("identical inputs collapse to S P S^T") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd w = oracle::random_affinity(rng, 6);
  const auto nn = neighbours_by_affinity(w, 5);
  const FusionInput in{as_affinity(w), nn};
  const std::vector<FusionInput> inputs{in, in};
  const Matrix p = transition_matrix(in.affinity).data;
  const Matrix s = kernel_matrix(in.affinity, nn).data;
  const Matrix sps = s * p * s.transpose();
  CHECK((snf_fuse(inputs, 1).data - 0.5 * (sps + sps.transpose())).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("fusion state invariants") {
  std::mt19937_64 rng(5);
  std::vector<FusionInput> inputs;
  for (int f = 0; f < 3; ++f) inputs.push_back(input_from_distance(oracle::random_distance(rng, 30), 3));
  FusionState state(inputs);
  CHECK(state.iteration() == 0);
  for (const auto& p : state.transitions()) CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
  for (int t = 0; t < 10; ++t) state.step();
  CHECK(state.iteration() == 10);
  const auto fused = state.fused().data;
  CHECK(fused.minCoeff() >= 0.0);
  CHECK((fused - fused.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(fused == snf_fuse(inputs, 10).data);
}

TEST_CASE("fusion is independent of feature order") {
  std::mt19937_64 rng(6);
  std::vector<FusionInput> inputs;
  for (int f = 0; f < 3; ++f) inputs.push_back(input_from_distance(oracle::random_distance(rng, 25), 3));
  const auto base = snf_fuse(inputs, 10).data;
  std::vector<FusionInput> reversed(inputs.rbegin(), inputs.rend());
  CHECK(snf_fuse(reversed, 10).data == base);
  std::vector<FusionInput> rotated{inputs[1], inputs[2], inputs[0]};
  CHECK(snf_fuse(rotated, 10).data == base);
  std::vector<FusionInput> two{inputs[0], inputs[1]};
  std::vector<FusionInput> two_swapped{inputs[1], inputs[0]};
  CHECK(snf_fuse(two, 4).data == snf_fuse(two_swapped, 4).data);
}

TEST_CASE("fusion is equivariant under a common frame permutation") {
  std::mt19937_64 rng(7);
  const int n = 20;
  std::vector<Eigen::MatrixXd> ds;
  for (int f = 0; f < 2; ++f) ds.push_back(oracle::random_distance(rng, n));
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::vector<FusionInput> a, b;
  for (const auto& d : ds) {
    Eigen::MatrixXd pd(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) pd(i, j) = d(perm[i], perm[j]);
    a.push_back(input_from_distance(d, 3));
    b.push_back(input_from_distance(pd, 3));
  }
  const auto fa = snf_fuse(a, 5).data;
  const auto fb = snf_fuse(b, 5).data;
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(fb(i, j) - fa(perm[i], perm[j])));
  CHECK(worst < 1e-12 * fa.maxCoeff());
}

TEST_CASE("fusion converges quickly") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<FusionInput> inputs;
    for (int f = 0; f < 3; ++f) inputs.push_back(input_from_distance(oracle::random_distance(rng, 60), 3));
    CHECK((snf_fuse(inputs, 10).data - snf_fuse(inputs, 20).data).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("fusion sharpens a planted two-block structure") {
  std::mt19937_64 rng(9);
  double fused_total = 0.0, single_total[2] = {0.0, 0.0};
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    std::vector<FusionInput> inputs;
    for (int f = 0; f < 2; ++f) {
      const Eigen::MatrixXd w = noisy_blocks(rng, 40);
      single_total[f] += block_contrast(Matrix(w));
      inputs.push_back({as_affinity(w), neighbours_by_affinity(w, 3)});
    }
    fused_total += block_contrast(snf_fuse(inputs, 10).data);
  }
  CHECK(fused_total / seeds > single_total[0] / seeds);
  CHECK(fused_total / seeds > single_total[1] / seeds);
}

TEST_CASE("fusion preconditions") {
  std::mt19937_64 rng(10);
  const auto one = input_from_distance(oracle::random_distance(rng, 8), 3);
  const std::vector<FusionInput> single{one};
  CHECK_THROWS_WITH_AS(snf_fuse(single, 10), doctest::Contains("at least two feature types"), Error);
  const std::vector<FusionInput> mismatched{one, input_from_distance(oracle::random_distance(rng, 9), 3)};
  CHECK_THROWS_AS(snf_fuse(mismatched, 10), Error);
  const std::vector<FusionInput> pair{one, one};
  CHECK_THROWS_AS(snf_fuse(pair, 0), Error);
}
