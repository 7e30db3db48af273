#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace snfseg {

/// Mono signal with amplitudes nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  double sample_rate = 0.0;

  AudioBuffer() = default;
  AudioBuffer(std::vector<double> values, double rate);

  double duration() const { return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
  bool empty() const { return samples.empty(); }

  void validate() const;
};

/// Reads PCM 16/24/32-bit integer or 32/64-bit float WAV; multichannel input is downmixed by averaging.
AudioBuffer read_wav(const std::filesystem::path& path);

enum class WavEncoding { Pcm16, Float32 };

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio, WavEncoding encoding = WavEncoding::Pcm16);

/// Band-limited (windowed-sinc) sample rate conversion.
AudioBuffer resample(const AudioBuffer& audio, double target_rate);

}  // namespace snfseg
