#pragma once

#include <string>
#include <vector>

#include "snfseg/audio.hpp"
#include "snfseg/clustering.hpp"
#include "snfseg/config.hpp"
#include "snfseg/types.hpp"

namespace snfseg {

/// Runs the selected audio extractors (CremaLike cannot be computed from audio
/// and must be ingested from a feature file instead).
std::vector<FeatureMatrix> extract_audio_features(const AudioBuffer& audio, const PipelineConfig& cfg,
                                                  const std::vector<FeatureKind>& kinds);

struct SegmentationResult {
  std::vector<FeatureKind> kinds;
  std::vector<SquareMatrix> affinities;  // per feature, after the optional median filter
  SquareMatrix graph;                    // fused affinity (or the single affinity)
  SpectralEmbedding embedding;
  TimeGrid grid;
  MultiLevelSegmentation hierarchy;
  std::vector<std::string> warnings;
};

/// Chunk averaging, stack delay, SSMs, affinities, fusion and the k sweep.
/// Inputs are frame-level features sharing one framerate; `duration` is the
/// track length in seconds. Requires at least two features.
SegmentationResult segment_features(std::vector<FeatureMatrix> features, double duration, const PipelineConfig& cfg);

/// Same pipeline on one feature without fusion (spectral clustering of its affinity).
SegmentationResult segment_single_feature(FeatureMatrix feature, double duration, const PipelineConfig& cfg);

}  // namespace snfseg
