#include "snfseg/segmentation.hpp"

#include <cmath>
#include <map>

#include "snfseg/error.hpp"
#include "snfseg/io.hpp"

namespace snfseg {

using nlohmann::json;

namespace {

constexpr double kTimeTolerance = 1e-6;

Partition parse_partition(const json& items, const std::string& origin, const std::string& name) {
  require(items.is_array(), ErrorCode::Input, origin + ": " + name + " must be an array of intervals");
  Partition out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    const std::string ctx = origin + ": " + name + ", interval " + std::to_string(i);
    require(item.is_object(), ErrorCode::Input, ctx + ": expected an object");
    require(item.contains("start") && item["start"].is_number(), ErrorCode::Input, ctx + ": missing numeric 'start'");
    require(item.contains("end") && item["end"].is_number(), ErrorCode::Input, ctx + ": missing numeric 'end'");
    require(item.contains("label"), ErrorCode::Input, ctx + ": missing 'label'");
    const auto& label = item["label"];
    out.push_back(
        {item["start"].get<double>(), item["end"].get<double>(), label.is_string() ? label.get<std::string>() : label.dump()});
  }
  return out;
}

}  // namespace

void validate_partition(const Partition& level, double duration, const std::string& name) {
  require(!level.empty(), ErrorCode::Input, name + " has no intervals");
  auto at = [&](std::size_t i) { return name + ", interval " + std::to_string(i); };
  require(std::abs(level.front().start) <= kTimeTolerance, ErrorCode::Input, at(0) + ": must start at 0");
  for (std::size_t i = 0; i < level.size(); ++i) {
    const auto& seg = level[i];
    require(std::isfinite(seg.start) && std::isfinite(seg.end) && seg.end > seg.start, ErrorCode::Input,
            at(i) + ": end must exceed start");
    if (i > 0) {
      require(std::abs(seg.start - level[i - 1].end) <= kTimeTolerance, ErrorCode::Input,
              at(i) + ": not contiguous with the previous interval");
    }
  }
  require(std::abs(level.back().end - duration) <= kTimeTolerance, ErrorCode::Input,
          at(level.size() - 1) + ": must end at the track duration");
}

void MultiLevelSegmentation::validate() const {
  require(duration > 0.0 && std::isfinite(duration), ErrorCode::Input, "segmentation duration must be positive");
  require(!levels.empty(), ErrorCode::Input, "segmentation has no levels");
  for (std::size_t l = 0; l < levels.size(); ++l) validate_partition(levels[l], duration, "level " + std::to_string(l));
  require(has_root_level(*this), ErrorCode::Input, "level 0 must be a single interval spanning the track");
}

std::size_t MultiLevelSegmentation::interval_at(std::size_t level, double t) const {
  const auto& part = levels.at(level);
  require(t >= -kTimeTolerance && t <= duration + kTimeTolerance, ErrorCode::Input,
          "time " + std::to_string(t) + " outside [0, " + std::to_string(duration) + "]");
  // binary search on interval ends: first interval with t < end
  std::size_t lo = 0, hi = part.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (t < part[mid].end) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

std::vector<std::vector<int>> label_codes(const MultiLevelSegmentation& h, std::span<const double> times) {
  std::vector<std::vector<int>> codes(h.levels.size(), std::vector<int>(times.size()));
  for (std::size_t l = 0; l < h.levels.size(); ++l) {
    std::map<std::string, int> ids;
    std::vector<int> interval_ids;
    for (const auto& seg : h.levels[l]) {
      interval_ids.push_back(ids.try_emplace(seg.label, static_cast<int>(ids.size())).first->second);
    }
    for (std::size_t i = 0; i < times.size(); ++i) codes[l][i] = interval_ids[h.interval_at(l, times[i])];
  }
  return codes;
}

std::vector<double> sample_grid(double duration, double rate) {
  require(rate > 0.0, ErrorCode::Usage, "sampling rate must be positive");
  std::vector<double> times;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) / rate;
    if (t >= duration) break;
    times.push_back(t);
  }
  return times;
}

Partition full_track_partition(double duration, std::string label) { return {{0.0, duration, std::move(label)}}; }

bool has_root_level(const MultiLevelSegmentation& h) {
  return !h.levels.empty() && h.levels.front().size() == 1 && std::abs(h.levels.front().front().start) <= kTimeTolerance &&
         std::abs(h.levels.front().front().end - h.duration) <= kTimeTolerance;
}

MultiLevelSegmentation parse_segmentation_json(std::string_view text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Input, origin + ": " + e.what());
  }
  require(doc.is_object(), ErrorCode::Input, origin + ": top-level value must be an object");
  require(doc.contains("duration") && doc["duration"].is_number(), ErrorCode::Input,
          origin + ": missing numeric field 'duration'");

  MultiLevelSegmentation h;
  h.duration = doc["duration"].get<double>();
  require(h.duration > 0.0, ErrorCode::Input, origin + ": duration must be positive");
  auto add_level = [&](const json& items, const std::string& name) {
    Partition part = parse_partition(items, origin, name);
    try {
      validate_partition(part, h.duration, name);
    } catch (const Error& e) {
      fail(ErrorCode::Input, origin + ": " + e.what());
    }
    h.levels.push_back(std::move(part));
  };
  if (doc.contains("levels")) {
    const auto& levels = doc["levels"];
    require(levels.is_array() && !levels.empty(), ErrorCode::Input, origin + ": 'levels' must be a non-empty array");
    for (std::size_t l = 0; l < levels.size(); ++l) add_level(levels[l], "level " + std::to_string(l));
  } else if (doc.contains("coarse") && doc.contains("fine")) {
    add_level(doc["coarse"], "coarse");
    add_level(doc["fine"], "fine");
  } else {
    fail(ErrorCode::Input, origin + ": expected 'levels' or a 'coarse'/'fine' pair");
  }
  if (!has_root_level(h)) h.levels.insert(h.levels.begin(), full_track_partition(h.duration));
  return h;
}

MultiLevelSegmentation read_segmentation(const std::filesystem::path& path) {
  return parse_segmentation_json(read_text_file(path), path.string());
}

json segmentation_to_json(const MultiLevelSegmentation& h) {
  json levels = json::array();
  for (const auto& part : h.levels) {
    json items = json::array();
    for (const auto& seg : part) items.push_back({{"start", seg.start}, {"end", seg.end}, {"label", seg.label}});
    levels.push_back(std::move(items));
  }
  return {{"duration", h.duration}, {"levels", std::move(levels)}};
}

std::string format_segmentation_json(const MultiLevelSegmentation& h, const json& extra) {
  json doc = segmentation_to_json(h);
  if (extra.is_object()) {
    for (const auto& [key, value] : extra.items()) doc[key] = value;
  }
  return doc.dump(2) + "\n";
}

}  // namespace snfseg
