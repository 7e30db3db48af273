#include "snfseg/types.hpp"

#include <cmath>

#include "snfseg/error.hpp"

namespace snfseg {

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Mfcc:
      return "mfcc";
    case FeatureKind::Chroma:
      return "chroma";
    case FeatureKind::Tempogram:
      return "tempogram";
    case FeatureKind::CremaLike:
      return "crema";
  }
  return "unknown";
}

FeatureKind parse_feature_kind(std::string_view name) {
  if (name == "mfcc") return FeatureKind::Mfcc;
  if (name == "chroma") return FeatureKind::Chroma;
  if (name == "tempogram") return FeatureKind::Tempogram;
  if (name == "crema") return FeatureKind::CremaLike;
  fail(ErrorCode::Usage, "unknown feature kind '" + std::string(name) + "'");
}

DistanceKind distance_for(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Mfcc:
    case FeatureKind::Tempogram:
      return DistanceKind::Euclidean;
    case FeatureKind::Chroma:
    case FeatureKind::CremaLike:
      return DistanceKind::Cosine;
  }
  return DistanceKind::Euclidean;
}

std::string_view to_string(MatrixRole role) {
  switch (role) {
    case MatrixRole::Distance:
      return "distance";
    case MatrixRole::Affinity:
      return "affinity";
    case MatrixRole::Transition:
      return "transition";
    case MatrixRole::KernelS:
      return "kernel";
    case MatrixRole::Fused:
      return "fused";
    case MatrixRole::Meet:
      return "meet";
  }
  return "unknown";
}

FeatureMatrix::FeatureMatrix(Matrix values, double rate, FeatureKind feature_kind)
    : data(std::move(values)), framerate(rate), kind(feature_kind), distance(distance_for(feature_kind)) {
  validate();
}

void FeatureMatrix::validate() const {
  require(data.rows() >= 1, ErrorCode::Input, "feature matrix has no frames");
  require(framerate > 0.0 && std::isfinite(framerate), ErrorCode::Input, "feature framerate must be positive");
  require(data.allFinite(), ErrorCode::Input, "feature matrix contains non-finite values");
  require(distance == distance_for(kind), ErrorCode::Input, "distance kind does not match feature kind");
}

}  // namespace snfseg
