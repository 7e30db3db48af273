#include "snfseg/pipeline.hpp"

#include <cmath>

#include "snfseg/affinity.hpp"
#include "snfseg/error.hpp"
#include "snfseg/features.hpp"
#include "snfseg/fusion.hpp"

namespace snfseg {

namespace {

SegmentationResult run(std::vector<FeatureMatrix> features, double duration, const PipelineConfig& cfg, bool fuse) {
  cfg.validate();
  require(!features.empty(), ErrorCode::Usage, "no features supplied");
  require(duration > 0.0, ErrorCode::Input, "track duration must be positive");
  const double base_rate = features.front().framerate;
  for (const auto& f : features) {
    require(std::abs(f.framerate - base_rate) <= 1e-9 * base_rate, ErrorCode::Input,
            "features must share one framerate before segmentation");
  }

  SegmentationResult out;
  std::vector<FusionInput> inputs;
  for (auto& f : features) {
    out.kinds.push_back(f.kind);
    f = stack_delay(chunk_average(f, cfg.chunk), cfg.delay);
  }
  align_lengths(features);

  for (const auto& f : features) {
    const SquareMatrix distance = compute_ssm(f);
    require(distance.size() >= cfg.kappa + 1, ErrorCode::Input,
            "input too short: " + std::to_string(distance.size()) + " frames after stacking, need at least " +
                std::to_string(cfg.kappa + 1));
    NeighborSet neighbors = nearest_neighbors(distance, cfg.kappa);
    SquareMatrix affinity = autotuned_affinity(distance, neighbors);
    if (cfg.median_taps > 1) affinity = diagonal_median_filter(affinity, cfg.median_taps);
    out.affinities.push_back(affinity);
    inputs.push_back({std::move(affinity), std::move(neighbors)});
  }

  if (fuse) {
    out.graph = snf_fuse(inputs, cfg.iterations);
  } else {
    out.graph = out.affinities.front();
  }

  const double rate = out.graph.framerate;
  out.grid = {rate, 0.5 * (cfg.delay - 1) / rate, duration};
  out.embedding = rw_laplacian_embedding(out.graph, cfg.k_max);
  out.warnings = out.embedding.warnings;
  out.hierarchy = build_hierarchy(out.embedding, cfg.k_min, cfg.k_max, out.grid, cfg.seed, &out.warnings);
  return out;
}

}  // namespace

std::vector<FeatureMatrix> extract_audio_features(const AudioBuffer& audio, const PipelineConfig& cfg,
                                                  const std::vector<FeatureKind>& kinds) {
  std::vector<FeatureMatrix> out;
  for (const auto kind : kinds) {
    switch (kind) {
      case FeatureKind::Mfcc:
        out.push_back(compute_mfcc(audio, cfg));
        break;
      case FeatureKind::Chroma:
        out.push_back(compute_chroma(audio, cfg));
        break;
      case FeatureKind::Tempogram:
        out.push_back(compute_tempogram(audio, cfg));
        break;
      case FeatureKind::CremaLike:
        fail(ErrorCode::Usage, "crema features cannot be computed from audio; supply a feature file");
    }
  }
  return out;
}

SegmentationResult segment_features(std::vector<FeatureMatrix> features, double duration, const PipelineConfig& cfg) {
  require(features.size() >= 2, ErrorCode::Usage,
          "fusion requires at least two feature types (got " + std::to_string(features.size()) + ")");
  return run(std::move(features), duration, cfg, true);
}

SegmentationResult segment_single_feature(FeatureMatrix feature, double duration, const PipelineConfig& cfg) {
  std::vector<FeatureMatrix> one;
  one.push_back(std::move(feature));
  return run(std::move(one), duration, cfg, false);
}

}  // namespace snfseg
