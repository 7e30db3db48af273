#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace snfseg {

struct Segment {
  double start = 0.0;
  double end = 0.0;
  std::string label;

  bool operator==(const Segment&) const = default;
};

/// One level: labelled intervals partitioning [0, duration].
using Partition = std::vector<Segment>;

/// Coarse-to-fine list of partitions; level 0 is the single full-track interval.
struct MultiLevelSegmentation {
  std::vector<Partition> levels;
  double duration = 0.0;

  bool operator==(const MultiLevelSegmentation&) const = default;

  std::size_t depth() const { return levels.size(); }

  /// Throws Error(Input) naming the level and interval index of the first violation.
  void validate() const;

  /// Interval index within `level` containing time t (half-open, last interval closed).
  std::size_t interval_at(std::size_t level, double t) const;
};

Partition full_track_partition(double duration, std::string label = "0");

/// Contiguous, non-empty intervals covering [0, duration]; `name` prefixes error messages.
void validate_partition(const Partition& level, double duration, const std::string& name);

/// codes[l][i] is an integer id of the label that level l assigns to times[i];
/// equal ids mean equal labels within a level. Throws for times outside [0, duration].
std::vector<std::vector<int>> label_codes(const MultiLevelSegmentation& h, std::span<const double> times);

/// Times i / rate for every i with i / rate < duration.
std::vector<double> sample_grid(double duration, double rate);

/// True if the first level already is a single interval over the whole track.
bool has_root_level(const MultiLevelSegmentation& h);

/// Reads annotation JSON. Accepts either
///   {"duration": d, "levels": [[{"start","end","label"}, ...], ...]}
/// or the two-level convention {"duration": d, "coarse": [...], "fine": [...]}.
/// The root level is inserted when absent.
MultiLevelSegmentation parse_segmentation_json(std::string_view text, const std::string& origin = "<json>");
MultiLevelSegmentation read_segmentation(const std::filesystem::path& path);

nlohmann::json segmentation_to_json(const MultiLevelSegmentation& h);
std::string format_segmentation_json(const MultiLevelSegmentation& h, const nlohmann::json& extra = nullptr);

}  // namespace snfseg
