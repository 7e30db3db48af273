#include <doctest.h>

#include <cmath>
#include <fstream>

#include "oracles.hpp"
#include "snfseg/config.hpp"
#include "snfseg/error.hpp"
#include "snfseg/features.hpp"
#include "snfseg/io.hpp"
#include "test_support.hpp"

using namespace snfseg;
using namespace testing_support;

namespace {

bool all_finite(const Matrix& m) { return m.allFinite(); }

double mean_pairwise(const Matrix& a, const Matrix& b, bool same) {
  double acc = 0.0;
  long count = 0;
  for (Index i = 0; i < a.rows(); i += 7) {
    for (Index j = 0; j < b.rows(); j += 7) {
      if (same && i == j) continue;
      acc += (a.row(i) - b.row(j)).norm();
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

}  // namespace

TEST_CASE("frame grid: centred frames, 1 + L / hop") {
  const PipelineConfig cfg;
  const auto audio = sine(440.0, 3.0);
  const auto mfcc = compute_mfcc(audio, cfg);
  CHECK(mfcc.frames() == 1 + static_cast<Index>(audio.samples.size()) / cfg.hop);
  CHECK(mfcc.dims() == 20);
  CHECK(mfcc.framerate == doctest::Approx(22050.0 / 512.0));
  CHECK(compute_chroma(audio, cfg).frames() == mfcc.frames());
  CHECK(compute_tempogram(audio, cfg).frames() == mfcc.frames());
}

TEST_CASE("lifter scales coefficient c by c^0.6") {
  Matrix ones = Matrix::Ones(1, 20);
  apply_lifter(ones, 0.6);
  for (int c = 0; c < 20; ++c) CHECK(ones(0, c) == doctest::Approx(std::pow(c + 1.0, 0.6)).epsilon(1e-14));
}

TEST_CASE("silence gives constant MFCC, zero chroma and zero tempogram") {
  const PipelineConfig cfg;
  const AudioBuffer silence(std::vector<double>(static_cast<std::size_t>(10 * kSampleRate), 0.0), kSampleRate);
  const auto mfcc = compute_mfcc(silence, cfg);
  for (Index i = 1; i < mfcc.frames(); ++i) CHECK((mfcc.data.row(i) - mfcc.data.row(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(compute_chroma(silence, cfg).data.cwiseAbs().maxCoeff() == 0.0);
  CHECK(onset_strength(silence, cfg).cwiseAbs().maxCoeff() == 0.0);
  CHECK(compute_tempogram(silence, cfg).data.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("MFCC separates a sine from white noise of equal RMS") {
  const PipelineConfig cfg;
  const auto tone = compute_mfcc(sine(440.0, 4.0, 0.5), cfg).data;
  const auto noise = compute_mfcc(white_noise(4.0, 0.5 / std::sqrt(2.0), 11), cfg).data;
  const double cross = mean_pairwise(tone, noise, false);
  CHECK(cross > mean_pairwise(tone, tone, true));
  CHECK(cross > mean_pairwise(noise, noise, true));
}

TEST_CASE("mel filterbank is non-negative and covers the spectrum in order") {
  const Matrix bank = mel_filterbank(22050.0, 2048, 128, 0.0, 11025.0);
  REQUIRE(bank.rows() == 128);
  REQUIRE(bank.cols() == 1025);
  CHECK(bank.minCoeff() >= 0.0);
  Index previous = -1;
  for (Index m = 0; m < bank.rows(); ++m) {
    Index peak = 0;
    bank.row(m).maxCoeff(&peak);
    CHECK(peak >= previous);
    previous = peak;
  }
}

TEST_CASE("constant-Q magnitudes match a direct time-domain evaluation") {
  PipelineConfig cfg;
  const auto audio = sine(261.63, 2.0, 0.5);
  const Matrix cq = constant_q_magnitude(audio, cfg);
  const double q = 1.0 / (std::pow(2.0, 1.0 / cfg.cqt_bins_per_octave) - 1.0);
  const Index frame = 40;
  double peak = 0.0;
  for (int b = 0; b < cq.cols(); ++b) peak = std::max(peak, cq(frame, b));
  for (int b : {36, 100, 108, 109, 110, 150, 200}) {
    const double f = cqt_frequency(cfg, b);
    const int len = static_cast<int>(std::ceil(q * cfg.sample_rate / f));
    const double direct = oracle::cq_magnitude(audio.samples, cfg.sample_rate, frame * cfg.hop, f, len);
    CAPTURE(b);
    // sparsified spectral kernels: agreement relative to the frame's peak bin
    CHECK(std::abs(cq(frame, b) - direct) <= 2e-3 * peak);
  }
}

TEST_CASE("chroma of C4 peaks at C and is octave invariant") {
  const PipelineConfig cfg;
  for (const double f : {261.63, 523.25}) {
    const Matrix chroma = compute_chroma(sine(f, 2.0), cfg).data;
    Index arg = -1;
    chroma.colwise().mean().maxCoeff(&arg);
    CAPTURE(f);
    CHECK(arg == 0);
    CHECK(chroma.maxCoeff() == doctest::Approx(1.0));
  }
}

TEST_CASE("autocorrelation tempogram matches brute-force windowed autocorrelation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector onset(60);
  for (Index i = 0; i < onset.size(); ++i) onset(i) = u(rng);
  const int window = 16;
  const Matrix tg = autocorrelation_tempogram(onset, window);
  REQUIRE(tg.rows() == 60);
  REQUIRE(tg.cols() == window);
  for (const Index t : {0, 7, 30, 59}) {
    std::vector<double> seg(window, 0.0);
    for (int n = 0; n < window; ++n) {
      const Index i = t - window / 2 + n;
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / window);
      seg[n] = (i >= 0 && i < onset.size()) ? w * onset(i) : 0.0;
    }
    const auto r = oracle::autocorrelation(seg);
    const double peak = *std::max_element(r.begin(), r.end());
    for (int lag = 0; lag < window; ++lag) CHECK(tg(t, lag) == doctest::Approx(r[lag] / peak).epsilon(1e-12));
  }
}

TEST_CASE("120 BPM clicks give a tempogram peak near 0.5 s") {
  const PipelineConfig cfg;
  const auto clicks = click_track(120.0, 20.0);
  const Matrix tg = compute_tempogram(clicks, cfg).data;
  const Vector mean = tg.middleRows(tg.rows() / 4, tg.rows() / 2).colwise().mean().transpose();
  Index best = 15;
  for (Index lag = 15; lag <= 30; ++lag)
    if (mean(lag) > mean(best)) best = lag;
  CHECK(best >= 21);
  CHECK(best <= 22);
  CHECK(mean(best) > mean(best - 1));
  CHECK(mean(best) > mean(best + 1));
}

TEST_CASE("a steady tone has a near-zero onset envelope and tempogram") {
  const PipelineConfig cfg;
  const auto tone = sine(440.0, 20.0, 0.5);
  const Vector onset = onset_strength(tone, cfg);
  // ignore the reflect-padded edges
  CHECK(onset.segment(10, onset.size() - 20).maxCoeff() < 0.05);
  const Matrix tg = compute_tempogram(tone, cfg).data;
  CHECK(tg.middleRows(200, tg.rows() - 400).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("input shorter than one window is rejected") {
  const PipelineConfig cfg;
  const auto tiny = sine(440.0, 1000.0 / kSampleRate);
  CHECK_THROWS_WITH_AS(compute_mfcc(tiny, cfg), doctest::Contains("input too short"), Error);
  CHECK_THROWS_WITH_AS(compute_chroma(tiny, cfg), doctest::Contains("input too short"), Error);
  CHECK_THROWS_WITH_AS(compute_tempogram(tiny, cfg), doctest::Contains("input too short"), Error);
}

TEST_CASE("audio at another sample rate is resampled before analysis") {
  const PipelineConfig cfg;
  const auto a = compute_chroma(sine(261.63, 2.0, 0.5, 44100.0), cfg);
  CHECK(a.framerate == doctest::Approx(cfg.base_framerate()));
  CHECK(a.frames() == doctest::Approx(1 + 2.0 * 22050 / 512).epsilon(0.02));
  Index arg = -1;
  a.data.colwise().mean().maxCoeff(&arg);
  CHECK(arg == 0);
}

TEST_CASE("nearest-neighbour resampling") {
  SUBCASE("10.7 Hz CREMA-rate file to the base rate") {
    Matrix x(107, 1);
    for (Index i = 0; i < 107; ++i) x(i, 0) = static_cast<double>(i);
    const FeatureMatrix f(x, 10.7, FeatureKind::CremaLike);
    const auto out = resample_nearest(f, 22050.0 / 512.0);
    CHECK(std::abs(out.frames() - 431) <= 1);
    for (Index j = 0; j < out.frames(); ++j) {
      const double t = j / out.framerate;
      if (t > 106.0 / 10.7) break;  // past the last source frame everything maps onto it
      const double src = out.data(j, 0);
      CHECK(std::abs(src / 10.7 - t) <= 0.5 / 10.7 + 1e-12);
    }
  }
  SUBCASE("same rate is the identity") {
    const FeatureMatrix f(Matrix::Random(9, 3), 43.0, FeatureKind::Mfcc);
    CHECK(resample_nearest(f, 43.0).data == f.data);
  }
  SUBCASE("ties go to the earlier frame") {
    Matrix x(2, 1);
    x << 0, 1;
    const auto out = resample_nearest(FeatureMatrix(x, 1.0, FeatureKind::Chroma), 4.0);
    REQUIRE(out.frames() == 8);
    // target times 0, .25, .5 (tie), .75, 1, ...
    CHECK(out.data(0, 0) == 0);
    CHECK(out.data(1, 0) == 0);
    CHECK(out.data(2, 0) == 0);
    CHECK(out.data(3, 0) == 1);
    CHECK(out.data(7, 0) == 1);
  }
}

TEST_CASE("chunk averaging") {
  Matrix x(4, 1);
  x << 0, 2, 4, 6;
  const FeatureMatrix f(x, 8.0, FeatureKind::Mfcc);
  CHECK(chunk_average(f, 1).data == f.data);
  const auto two = chunk_average(f, 2);
  CHECK(two.data(0, 0) == 1.0);
  CHECK(two.data(1, 0) == 5.0);
  CHECK(two.framerate == 4.0);

  Matrix y(23, 2);
  for (Index i = 0; i < 23; ++i) y.row(i) << i, -i;
  const auto c = chunk_average(FeatureMatrix(y, 10.0, FeatureKind::Mfcc), 10);
  REQUIRE(c.frames() == 3);
  CHECK(c.data(2, 0) == doctest::Approx(21.0));
  CHECK(c.data(2, 1) == doctest::Approx(-21.0));
}

TEST_CASE("stack delay") {
  Matrix x(3, 1);
  x << 1, 2, 3;
  const FeatureMatrix f(x, 1.0, FeatureKind::Mfcc);
  CHECK(stack_delay(f, 1).data == f.data);
  const auto s = stack_delay(f, 2);
  REQUIRE(s.frames() == 2);
  CHECK(s.data(0, 0) == 1);
  CHECK(s.data(0, 1) == 2);
  CHECK(s.data(1, 0) == 2);
  CHECK(s.data(1, 1) == 3);

  const auto big = stack_delay(FeatureMatrix(Matrix::Random(100, 20), 4.3, FeatureKind::Mfcc), 20);
  CHECK(big.frames() == 81);
  CHECK(big.dims() == 400);
  CHECK(big.framerate == 4.3);

  CHECK_THROWS_WITH_AS(stack_delay(f, 4), doctest::Contains("feature sequence shorter than delay window"), Error);
}

TEST_CASE("chunk then stack keeps constant rows constant") {
  Matrix x = Matrix::Zero(57, 4);
  x.rowwise() += Eigen::RowVector4d(1.5, -2.0, 0.25, 9.0);
  const auto out = stack_delay(chunk_average(FeatureMatrix(x, 43.0, FeatureKind::Tempogram), 10), 3);
  for (Index i = 1; i < out.frames(); ++i) CHECK(out.data.row(i) == out.data.row(0));
}

TEST_CASE("align_lengths truncates to the shortest feature") {
  std::vector<FeatureMatrix> fs;
  fs.emplace_back(Matrix::Random(10, 2), 1.0, FeatureKind::Mfcc);
  fs.emplace_back(Matrix::Random(7, 3), 1.0, FeatureKind::Chroma);
  align_lengths(fs);
  CHECK(fs[0].frames() == 7);
  CHECK(fs[1].frames() == 7);
}

TEST_CASE("external feature files") {
  const auto dir = scratch_dir("features");
  {
    std::ofstream(dir / "crema.json") << R"({"framerate_hz": 10.7, "kind": "crema", "data": [[1,0],[0,1],[1,1]]})";
    const auto f = ingest_external_features(dir / "crema.json", FeatureKind::CremaLike, 22050.0 / 512);
    CHECK(f.kind == FeatureKind::CremaLike);
    CHECK(f.distance == DistanceKind::Cosine);
    CHECK(f.framerate == doctest::Approx(43.066).epsilon(1e-4));
    CHECK(std::abs(f.frames() - 12) <= 1);
  }
  CHECK_THROWS_AS(ingest_external_features(dir / "crema.json", FeatureKind::Mfcc, 43.0), Error);

  std::ofstream(dir / "bad_rate.json") << R"({"framerate_hz": 0, "kind": "mfcc", "data": [[1]]})";
  CHECK_THROWS_AS(ingest_external_features(dir / "bad_rate.json", std::nullopt, 43.0), Error);

  std::ofstream(dir / "broken.json") << "{\"framerate_hz\": 10,\n \"kind\": \"mfcc\",\n \"data\": [[1, 2], [3]]}";
  try {
    (void)ingest_external_features(dir / "broken.json", std::nullopt, 43.0);
    FAIL("ragged data accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Input);
    CHECK(std::string(e.what()).find("broken.json") != std::string::npos);
  }
}

TEST_CASE("extractors produce finite output on finite input") {
  const PipelineConfig cfg;
  const auto noise = white_noise(3.0, 0.3, 2);
  CHECK(all_finite(compute_mfcc(noise, cfg).data));
  CHECK(all_finite(compute_chroma(noise, cfg).data));
  CHECK(all_finite(compute_tempogram(noise, cfg).data));
}
