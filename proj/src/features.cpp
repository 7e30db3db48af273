#include "snfseg/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "fft.hpp"
#include "snfseg/error.hpp"
#include "snfseg/io.hpp"

namespace snfseg {

namespace {

using detail::ComplexFft;
using detail::RealFft;

// Frames whose windowed onset energy falls below (floor * RMS-of-window)^2 are
// treated as silent. 0.01 dB of average flux is far below any audible attack.
constexpr double kOnsetRmsFloorDb = 1e-2;

// Constant-Q spectral kernels keep entries above this fraction of their peak.
constexpr double kCqtKernelThreshold = 1e-3;

AudioBuffer at_rate(const AudioBuffer& audio, const PipelineConfig& cfg) {
  audio.validate();
  require(!audio.empty(), ErrorCode::Input, "input too short: empty audio");
  if (audio.sample_rate == cfg.sample_rate) return audio;
  return resample(audio, cfg.sample_rate);
}

void require_window(const AudioBuffer& audio, const PipelineConfig& cfg) {
  require(audio.samples.size() >= static_cast<std::size_t>(cfg.window), ErrorCode::Input,
          "input too short: " + std::to_string(audio.samples.size()) + " samples < analysis window of " +
              std::to_string(cfg.window));
}

Index frame_count(std::size_t samples, int hop) { return 1 + static_cast<Index>(samples / static_cast<std::size_t>(hop)); }

std::vector<double> periodic_hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

double hz_to_mel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  return hz < min_log_hz ? hz / f_sp : min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double mel_to_hz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  return mel < min_log_mel ? f_sp * mel : min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

Matrix mel_power(const AudioBuffer& audio, const PipelineConfig& cfg) {
  const Matrix power = power_spectrogram(audio, cfg.window, cfg.hop);
  const Matrix bank = mel_filterbank(cfg.sample_rate, cfg.window, cfg.n_mels, 0.0, cfg.mel_fmax);
  return power * bank.transpose();
}

}  // namespace

void apply_lifter(Matrix& coefficients, double exponent) {
  for (Index c = 0; c < coefficients.cols(); ++c) {
    coefficients.col(c) *= std::pow(static_cast<double>(c + 1), exponent);
  }
}

Matrix power_spectrogram(const AudioBuffer& audio, int window, int hop) {
  const auto& x = audio.samples;
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const int pad = window / 2;
  require(n > pad, ErrorCode::Input, "input too short for reflect padding");

  auto padded_at = [&](std::ptrdiff_t i) {
    // reflect without repeating the edge sample
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
    return x[static_cast<std::size_t>(i)];
  };

  const Index frames = frame_count(x.size(), hop);
  const int bins = window / 2 + 1;
  const auto hann = periodic_hann(window);
  RealFft fft(static_cast<std::size_t>(window));
  auto in = fft.input();

  Matrix out(frames, bins);
  for (Index t = 0; t < frames; ++t) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t) * hop - pad;
    for (int k = 0; k < window; ++k) in[static_cast<std::size_t>(k)] = hann[static_cast<std::size_t>(k)] * padded_at(start + k);
    const auto spec = fft.execute();
    for (int b = 0; b < bins; ++b) out(t, b) = std::norm(spec[static_cast<std::size_t>(b)]);
  }
  return out;
}

Matrix mel_filterbank(double sample_rate, int n_fft, int n_mels, double fmin, double fmax) {
  const int bins = n_fft / 2 + 1;
  std::vector<double> edges(static_cast<std::size_t>(n_mels + 2));
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[static_cast<std::size_t>(i)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }

  Matrix bank = Matrix::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    const double enorm = 2.0 / (hi - lo);
    for (int k = 0; k < bins; ++k) {
      const double f = k * sample_rate / n_fft;
      const double rise = (f - lo) / (mid - lo);
      const double fall = (hi - f) / (hi - mid);
      bank(m, k) = std::max(0.0, std::min(rise, fall)) * enorm;
    }
  }
  return bank;
}

Matrix power_to_db(const Matrix& power) {
  static constexpr double amin = 1e-10;
  constexpr double top_db = 80.0;
  Matrix db = power.unaryExpr([](double v) { return 10.0 * std::log10(std::max(amin, v)); });
  const double floor = db.maxCoeff() - top_db;
  return db.unaryExpr([floor](double v) { return std::max(v, floor); });
}

FeatureMatrix compute_mfcc(const AudioBuffer& input, const PipelineConfig& cfg) {
  const AudioBuffer audio = at_rate(input, cfg);
  require_window(audio, cfg);

  const Matrix log_mel = power_to_db(mel_power(audio, cfg));
  const Index n_mels = log_mel.cols();

  // orthonormal DCT-II along the mel axis
  Matrix dct(n_mels, cfg.n_mfcc);
  for (Index m = 0; m < n_mels; ++m) {
    for (int c = 0; c < cfg.n_mfcc; ++c) {
      const double scale = c == 0 ? std::sqrt(1.0 / n_mels) : std::sqrt(2.0 / n_mels);
      dct(m, c) = scale * std::cos(std::numbers::pi * c * (2.0 * m + 1.0) / (2.0 * n_mels));
    }
  }
  Matrix mfcc = log_mel * dct;
  apply_lifter(mfcc, cfg.lifter_exponent);
  return FeatureMatrix(std::move(mfcc), cfg.base_framerate(), FeatureKind::Mfcc);
}

double cqt_frequency(const PipelineConfig& cfg, int b) {
  return cfg.cqt_fmin * std::pow(2.0, static_cast<double>(b) / cfg.cqt_bins_per_octave);
}

Matrix constant_q_magnitude(const AudioBuffer& input, const PipelineConfig& cfg) {
  const AudioBuffer audio = at_rate(input, cfg);
  require_window(audio, cfg);

  const int n_bins = cfg.cqt_octaves * cfg.cqt_bins_per_octave;
  const double q = 1.0 / (std::pow(2.0, 1.0 / cfg.cqt_bins_per_octave) - 1.0);
  std::vector<int> lengths(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    lengths[static_cast<std::size_t>(b)] = static_cast<int>(std::ceil(q * cfg.sample_rate / cqt_frequency(cfg, b)));
  }
  std::size_t fft_len = 1;
  while (fft_len < static_cast<std::size_t>(lengths.front())) fft_len <<= 1;
  const auto half = static_cast<std::ptrdiff_t>(fft_len / 2);

  // Sparse conjugate spectral kernels: X_b = (1/L) sum_j S[j] conj(K_b[j]).
  struct Entry {
    std::size_t bin;
    std::complex<double> weight;
  };
  std::vector<std::vector<Entry>> kernels(static_cast<std::size_t>(n_bins));
  {
    ComplexFft kfft(fft_len);
    auto buf = kfft.data();
    for (int b = 0; b < n_bins; ++b) {
      const int len = lengths[static_cast<std::size_t>(b)];
      const double f = cqt_frequency(cfg, b);
      std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
      double wsum = 0.0;
      for (int n = 0; n < len; ++n) wsum += 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (n + 0.5) / len);
      const std::ptrdiff_t first = half - len / 2;
      for (int n = 0; n < len; ++n) {
        const double w = (0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (n + 0.5) / len)) / wsum;
        const double phase = 2.0 * std::numbers::pi * f * static_cast<double>(first + n - half) / cfg.sample_rate;
        buf[static_cast<std::size_t>(first + n)] = std::polar(w, phase);
      }
      kfft.execute();
      double peak = 0.0;
      for (std::size_t j = 0; j <= fft_len / 2; ++j) peak = std::max(peak, std::abs(buf[j]));
      auto& kernel = kernels[static_cast<std::size_t>(b)];
      for (std::size_t j = 0; j <= fft_len / 2; ++j) {
        if (std::abs(buf[j]) >= kCqtKernelThreshold * peak) {
          kernel.push_back({j, std::conj(buf[j]) / static_cast<double>(fft_len)});
        }
      }
    }
  }

  const auto& x = audio.samples;
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  const Index frames = frame_count(x.size(), cfg.hop);
  Matrix out(frames, n_bins);
  RealFft fft(fft_len);
  auto in = fft.input();
  for (Index t = 0; t < frames; ++t) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t) * cfg.hop - half;
    for (std::size_t k = 0; k < fft_len; ++k) {
      const std::ptrdiff_t i = start + static_cast<std::ptrdiff_t>(k);
      in[k] = (i >= 0 && i < n) ? x[static_cast<std::size_t>(i)] : 0.0;
    }
    const auto spec = fft.execute();
    for (int b = 0; b < n_bins; ++b) {
      std::complex<double> acc(0.0, 0.0);
      for (const auto& e : kernels[static_cast<std::size_t>(b)]) acc += spec[e.bin] * e.weight;
      out(t, b) = std::abs(acc);
    }
  }
  return out;
}

FeatureMatrix compute_chroma(const AudioBuffer& audio, const PipelineConfig& cfg) {
  const Matrix cq = constant_q_magnitude(audio, cfg);
  Matrix chroma = Matrix::Zero(cq.rows(), 12);
  for (Index b = 0; b < cq.cols(); ++b) {
    const double midi = 12.0 * std::log2(cqt_frequency(cfg, static_cast<int>(b)) / 440.0) + 69.0;
    const auto pitch_class = static_cast<Index>(((std::lround(midi) % 12) + 12) % 12);
    chroma.col(pitch_class) += cq.col(b);
  }
  for (Index t = 0; t < chroma.rows(); ++t) {
    const double peak = chroma.row(t).maxCoeff();
    if (peak > 0.0) chroma.row(t) /= peak;
  }
  return FeatureMatrix(std::move(chroma), cfg.base_framerate(), FeatureKind::Chroma);
}

Vector onset_strength(const AudioBuffer& input, const PipelineConfig& cfg) {
  const AudioBuffer audio = at_rate(input, cfg);
  require_window(audio, cfg);

  const Matrix db = power_to_db(mel_power(audio, cfg));  // frames x bands
  const Index frames = db.rows();
  const Index bands = db.cols();
  const Index radius = cfg.superflux_max_size / 2;

  Vector onset = Vector::Zero(frames);
  for (Index t = 1; t < frames; ++t) {
    double acc = 0.0;
    for (Index f = 0; f < bands; ++f) {
      const Index lo = std::max<Index>(0, f - radius);
      const Index hi = std::min<Index>(bands - 1, f + radius);
      const double ref = db.row(t - 1).segment(lo, hi - lo + 1).maxCoeff();
      acc += std::max(0.0, db(t, f) - ref);
    }
    onset(t) = acc / static_cast<double>(bands);
  }
  return onset;
}

Matrix autocorrelation_tempogram(const Vector& onset, int window) {
  const Index frames = onset.size();
  const auto hann = periodic_hann(window);
  double window_energy = 0.0;
  for (const double w : hann) window_energy += w * w;
  const double floor = kOnsetRmsFloorDb * kOnsetRmsFloorDb * window_energy;
  const Index half = window / 2;

  Matrix out = Matrix::Zero(frames, window);
  std::vector<double> seg(static_cast<std::size_t>(window));
  for (Index t = 0; t < frames; ++t) {
    for (Index n = 0; n < window; ++n) {
      const Index i = t - half + n;
      seg[static_cast<std::size_t>(n)] = (i >= 0 && i < frames) ? hann[static_cast<std::size_t>(n)] * onset(i) : 0.0;
    }
    for (Index lag = 0; lag < window; ++lag) {
      double acc = 0.0;
      for (Index n = 0; n + lag < window; ++n) acc += seg[static_cast<std::size_t>(n)] * seg[static_cast<std::size_t>(n + lag)];
      out(t, lag) = acc;
    }
    const double peak = out.row(t).cwiseAbs().maxCoeff();
    if (out(t, 0) <= floor || peak <= 0.0) {
      out.row(t).setZero();
    } else {
      out.row(t) /= peak;
    }
  }
  return out;
}

FeatureMatrix compute_tempogram(const AudioBuffer& audio, const PipelineConfig& cfg) {
  Matrix tempogram = autocorrelation_tempogram(onset_strength(audio, cfg), cfg.tempo_window);
  return FeatureMatrix(std::move(tempogram), cfg.base_framerate(), FeatureKind::Tempogram);
}

FeatureMatrix resample_nearest(const FeatureMatrix& f, double target_rate) {
  require(target_rate > 0.0, ErrorCode::Usage, "target framerate must be positive");
  require(f.framerate > 0.0, ErrorCode::Input, "source framerate must be positive");
  if (f.framerate == target_rate) return f;

  const Index n_src = f.frames();
  const auto n_out = std::max<Index>(1, static_cast<Index>(std::llround(static_cast<double>(n_src) * target_rate / f.framerate)));
  Matrix out(n_out, f.dims());
  for (Index j = 0; j < n_out; ++j) {
    const double pos = static_cast<double>(j) * f.framerate / target_rate;
    const auto i = std::clamp<Index>(static_cast<Index>(std::ceil(pos - 0.5)), 0, n_src - 1);
    out.row(j) = f.data.row(i);
  }
  return FeatureMatrix(std::move(out), target_rate, f.kind);
}

FeatureMatrix ingest_external_features(const std::filesystem::path& path, std::optional<FeatureKind> expected,
                                       double target_rate) {
  FeatureMatrix f = parse_feature_json(read_text_file(path), path.string());
  if (expected) {
    require(f.kind == *expected, ErrorCode::Input,
            path.string() + ": expected kind '" + std::string(to_string(*expected)) + "' but file declares '" +
                std::string(to_string(f.kind)) + "'");
  }
  return resample_nearest(f, target_rate);
}

FeatureMatrix chunk_average(const FeatureMatrix& f, int chunk) {
  require(chunk >= 1, ErrorCode::Usage, "chunk must be >= 1");
  if (chunk == 1) return f;
  const Index n = f.frames();
  const Index out_rows = (n + chunk - 1) / chunk;
  Matrix out(out_rows, f.dims());
  for (Index i = 0; i < out_rows; ++i) {
    const Index start = i * chunk;
    const Index len = std::min<Index>(chunk, n - start);
    out.row(i) = f.data.middleRows(start, len).colwise().mean();
  }
  return FeatureMatrix(std::move(out), f.framerate / chunk, f.kind);
}

FeatureMatrix stack_delay(const FeatureMatrix& f, int m) {
  require(m >= 1, ErrorCode::Usage, "delay must be >= 1");
  const Index n = f.frames();
  require(n >= m, ErrorCode::Input,
          "feature sequence shorter than delay window (" + std::to_string(n) + " < " + std::to_string(m) + " frames)");
  if (m == 1) return f;
  const Index d = f.dims();
  Matrix out(n - m + 1, d * m);
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index l = 0; l < m; ++l) out.block(i, l * d, 1, d) = f.data.row(i + l);
  }
  return FeatureMatrix(std::move(out), f.framerate, f.kind);
}

void align_lengths(std::vector<FeatureMatrix>& features) {
  if (features.empty()) return;
  Index n = features.front().frames();
  for (const auto& f : features) n = std::min(n, f.frames());
  for (auto& f : features) {
    if (f.frames() > n) f.data.conservativeResize(n, Eigen::NoChange);
  }
}

}  // namespace snfseg
