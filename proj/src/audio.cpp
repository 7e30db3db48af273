#include "snfseg/audio.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>

#include "snfseg/error.hpp"
#include "snfseg/io.hpp"

namespace snfseg {

namespace {

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

AudioBuffer::AudioBuffer(std::vector<double> values, double rate) : samples(std::move(values)), sample_rate(rate) {
  validate();
}

void AudioBuffer::validate() const {
  require(sample_rate > 0.0 && std::isfinite(sample_rate), ErrorCode::Input, "sample rate must be positive");
  require(std::all_of(samples.begin(), samples.end(), [](double x) { return std::isfinite(x); }), ErrorCode::Input,
          "audio contains non-finite samples");
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Input, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();

  require(bytes.size() >= 12 && std::memcmp(bytes.data(), "RIFF", 4) == 0 && std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
          ErrorCode::Input, name + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      require(available >= 16, ErrorCode::Input, name + ": truncated fmt chunk");
      format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      rate = le32(bytes.data() + body + 4);
      bits = le16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        require(available >= 26, ErrorCode::Input, name + ": truncated WAVE_FORMAT_EXTENSIBLE header");
        format = le16(bytes.data() + body + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = available;
    }
    pos = body + size + (size & 1u);
  }

  require(channels > 0 && rate > 0, ErrorCode::Input, name + ": missing or invalid fmt chunk");
  require(data != nullptr, ErrorCode::Input, name + ": missing data chunk");
  const bool pcm = format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32);
  const bool flt = format == kFormatFloat && (bits == 32 || bits == 64);
  require(pcm || flt, ErrorCode::Input,
          name + ": unsupported encoding (format " + std::to_string(format) + ", " + std::to_string(bits) + " bits)");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  std::vector<double> mono(frames, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (f * channels + c) * width;
      double v = 0.0;
      if (flt && bits == 32) {
        float x;
        std::uint32_t raw = le32(p);
        std::memcpy(&x, &raw, sizeof x);
        v = x;
      } else if (flt) {
        double x;
        std::uint64_t raw = static_cast<std::uint64_t>(le32(p)) | (static_cast<std::uint64_t>(le32(p + 4)) << 32);
        std::memcpy(&x, &raw, sizeof x);
        v = x;
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t x = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
        if (x & 0x800000) x -= 0x1000000;
        v = x / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(le32(p)) / 2147483648.0;
      }
      acc += v;
    }
    mono[f] = acc / channels;
  }
  return AudioBuffer(std::move(mono), static_cast<double>(rate));
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio, WavEncoding encoding) {
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t format = encoding == WavEncoding::Pcm16 ? kFormatPcm : kFormatFloat;
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * (bits / 8));

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, format);
  put16(out, 1);
  put32(out, rate);
  put32(out, rate * (bits / 8));
  put16(out, bits / 8);
  put16(out, bits);
  out += "data";
  put32(out, data_bytes);
  for (const double s : audio.samples) {
    if (encoding == WavEncoding::Pcm16) {
      const double clipped = std::clamp(s, -1.0, 32767.0 / 32768.0);
      put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clipped * 32768.0))));
    } else {
      const float x = static_cast<float>(s);
      std::uint32_t raw;
      std::memcpy(&raw, &x, sizeof raw);
      put32(out, raw);
    }
  }
  write_file_atomic(path, out);
}

AudioBuffer resample(const AudioBuffer& audio, double target_rate) {
  require(target_rate > 0.0, ErrorCode::Usage, "target sample rate must be positive");
  if (audio.sample_rate == target_rate || audio.samples.empty()) return AudioBuffer(audio.samples, target_rate);

  constexpr int kZeroCrossings = 32;
  const double step = audio.sample_rate / target_rate;
  const double cutoff = std::min(1.0, target_rate / audio.sample_rate);
  const double half_width = kZeroCrossings / cutoff;
  const auto n_in = static_cast<std::ptrdiff_t>(audio.samples.size());
  const auto n_out = static_cast<std::size_t>(std::floor(static_cast<double>(n_in) * target_rate / audio.sample_rate));

  std::vector<double> out(n_out, 0.0);
  for (std::size_t n = 0; n < n_out; ++n) {
    const double t = static_cast<double>(n) * step;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(t - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(n_in - 1, static_cast<std::ptrdiff_t>(std::floor(t + half_width)));
    double acc = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) {
      const double x = t - static_cast<double>(k);
      const double arg = cutoff * x;
      const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
      const double window = 0.5 + 0.5 * std::cos(std::numbers::pi * x / half_width);
      acc += audio.samples[static_cast<std::size_t>(k)] * cutoff * sinc * window;
    }
    out[n] = acc;
  }
  return AudioBuffer(std::move(out), target_rate);
}

}  // namespace snfseg
