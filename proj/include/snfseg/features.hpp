#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "snfseg/audio.hpp"
#include "snfseg/config.hpp"
#include "snfseg/types.hpp"

namespace snfseg {

// -- Frame-level extractors ---------------------------------------------------
//
// All extractors share one frame grid: centred frames every `hop` samples at
// `cfg.sample_rate`, so frame t is centred on sample t * hop and a signal of
// L samples yields 1 + L / hop frames. Input at another sample rate is
// resampled first. Signals shorter than one analysis window are rejected.

/// Lifted MFCCs (N x n_mfcc) from a Slaney mel filterbank over [0, mel_fmax].
FeatureMatrix compute_mfcc(const AudioBuffer& audio, const PipelineConfig& cfg);

/// Constant-Q chroma (N x 12), each frame max-normalised when its peak is positive.
FeatureMatrix compute_chroma(const AudioBuffer& audio, const PipelineConfig& cfg);

/// Autocorrelation tempogram (N x tempo_window) of the superflux onset envelope,
/// each frame peak-normalised.
FeatureMatrix compute_tempogram(const AudioBuffer& audio, const PipelineConfig& cfg);

/// Reads a feature file and resamples it to `target_rate` by nearest-neighbour
/// interpolation. When `expected` is set the file's kind must match it.
FeatureMatrix ingest_external_features(const std::filesystem::path& path, std::optional<FeatureKind> expected,
                                       double target_rate);

/// Nearest-neighbour resampling in time. Output covers the same duration
/// (round(N * target / source) frames); ties go to the earlier source frame.
FeatureMatrix resample_nearest(const FeatureMatrix& f, double target_rate);

/// Means over non-overlapping blocks of `chunk` rows; a trailing partial block is kept.
FeatureMatrix chunk_average(const FeatureMatrix& f, int chunk);

/// Row i of the output concatenates input rows i .. i + m - 1.
FeatureMatrix stack_delay(const FeatureMatrix& f, int m);

/// Truncates every matrix to the shortest frame count.
void align_lengths(std::vector<FeatureMatrix>& features);

// -- Building blocks (exposed for testing) ------------------------------------

/// Scales column c (0-based) by (c + 1)^exponent.
void apply_lifter(Matrix& coefficients, double exponent);

/// |STFT|^2 with a periodic Hann window and reflect padding; frames x (window / 2 + 1).
Matrix power_spectrogram(const AudioBuffer& audio, int window, int hop);

/// Slaney-style triangular mel filterbank, n_mels x (n_fft / 2 + 1), area-normalised.
Matrix mel_filterbank(double sample_rate, int n_fft, int n_mels, double fmin, double fmax);

/// 10 log10(max(S, 1e-10)) clipped to 80 dB below the global maximum.
Matrix power_to_db(const Matrix& power);

/// Magnitude constant-Q transform, frames x (octaves * bins_per_octave).
Matrix constant_q_magnitude(const AudioBuffer& audio, const PipelineConfig& cfg);

/// Centre frequency of constant-Q bin `b`.
double cqt_frequency(const PipelineConfig& cfg, int b);

/// Positive spectral flux of the dB mel spectrogram against a frequency-wise
/// max filter of the previous frame, averaged over bands. Length = frame count.
Vector onset_strength(const AudioBuffer& audio, const PipelineConfig& cfg);

/// Windowed local autocorrelation of an onset envelope (N x window), peak-normalised.
Matrix autocorrelation_tempogram(const Vector& onset, int window);

}  // namespace snfseg
