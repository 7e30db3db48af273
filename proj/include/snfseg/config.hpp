#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "snfseg/types.hpp"

namespace snfseg {

/// Every tunable of the segmentation and evaluation pipeline.
struct PipelineConfig {
  // Fusion
  int kappa = 3;
  int iterations = 10;

  // Spectral clustering sweep
  int k_min = 2;
  int k_max = 10;
  unsigned long long seed = 0;

  // Frame-level post-processing
  int chunk = 10;
  int delay = 20;
  int median_taps = 9;  // 0 disables the diagonal median filter

  std::vector<FeatureKind> features = {FeatureKind::Mfcc, FeatureKind::Chroma, FeatureKind::Tempogram};

  // Evaluation grid
  double eval_rate = 5.0;

  // Audio analysis
  double sample_rate = 22050.0;
  int window = 2048;
  int hop = 512;
  int n_mfcc = 20;
  int n_mels = 128;
  double mel_fmax = 11025.0;
  double lifter_exponent = 0.6;
  double cqt_fmin = 32.70;
  int cqt_octaves = 7;
  int cqt_bins_per_octave = 36;
  int tempo_window = 384;
  int superflux_max_size = 5;

  int jobs = 1;

  double base_framerate() const { return sample_rate / hop; }

  /// Throws Error(Usage) on out-of-range values.
  void validate() const;
};

/// Applies `key = value` lines (blank lines and `#` comments ignored) on top of `cfg`.
void apply_config_text(PipelineConfig& cfg, std::string_view text, const std::string& origin = "<config>");
void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path);

std::vector<FeatureKind> parse_feature_list(std::string_view csv);
std::string feature_list_string(const std::vector<FeatureKind>& kinds);

}  // namespace snfseg
