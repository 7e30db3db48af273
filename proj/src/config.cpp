#include "snfseg/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "snfseg/error.hpp"

namespace snfseg {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view value, const std::string& where) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars for double is unavailable on older libstdc++
    try {
      std::size_t used = 0;
      const std::string s(value);
      out = static_cast<T>(std::stod(s, &used));
      if (used != s.size()) fail(ErrorCode::Usage, where + ": invalid number '" + s + "'");
    } catch (const std::logic_error&) {
      fail(ErrorCode::Usage, where + ": invalid number '" + std::string(value) + "'");
    }
  } else {
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
      fail(ErrorCode::Usage, where + ": invalid integer '" + std::string(value) + "'");
    }
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  require(kappa >= 1, ErrorCode::Usage, "kappa must be >= 1");
  require(iterations >= 1, ErrorCode::Usage, "iterations must be >= 1");
  require(k_min >= 2, ErrorCode::Usage, "k-min must be >= 2");
  require(k_min <= k_max, ErrorCode::Usage, "k-min must not exceed k-max");
  require(chunk >= 1, ErrorCode::Usage, "chunk must be >= 1");
  require(delay >= 1, ErrorCode::Usage, "delay must be >= 1");
  require(median_taps == 0 || median_taps % 2 == 1, ErrorCode::Usage, "median-taps must be odd (or 0 to disable)");
  require(median_taps >= 0, ErrorCode::Usage, "median-taps must be non-negative");
  require(eval_rate > 0.0, ErrorCode::Usage, "eval-rate must be positive");
  require(sample_rate > 0.0, ErrorCode::Usage, "sample rate must be positive");
  require(window >= 2 && hop >= 1, ErrorCode::Usage, "window/hop must be positive");
  require(n_mfcc >= 1 && n_mfcc <= n_mels, ErrorCode::Usage, "n_mfcc must be in [1, n_mels]");
  require(mel_fmax > 0.0 && mel_fmax <= sample_rate / 2.0, ErrorCode::Usage, "mel fmax must be in (0, Nyquist]");
  require(cqt_fmin > 0.0 && cqt_octaves >= 1 && cqt_bins_per_octave >= 12 && cqt_bins_per_octave % 12 == 0,
          ErrorCode::Usage, "invalid constant-Q parameters");
  require(cqt_fmin * std::pow(2.0, cqt_octaves) <= sample_rate / 2.0, ErrorCode::Usage,
          "constant-Q range exceeds Nyquist");
  require(tempo_window >= 2, ErrorCode::Usage, "tempogram window must be >= 2");
  require(superflux_max_size >= 1, ErrorCode::Usage, "superflux max filter size must be >= 1");
  require(jobs >= 1, ErrorCode::Usage, "jobs must be >= 1");
  require(!features.empty(), ErrorCode::Usage, "no features selected");
}

std::vector<FeatureKind> parse_feature_list(std::string_view csv) {
  std::vector<FeatureKind> kinds;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto comma = csv.find(',', pos);
    const auto item = trim(csv.substr(pos, comma == std::string_view::npos ? csv.size() - pos : comma - pos));
    if (!item.empty()) {
      const auto kind = parse_feature_kind(item);
      if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) kinds.push_back(kind);
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  require(!kinds.empty(), ErrorCode::Usage, "empty feature list");
  return kinds;
}

std::string feature_list_string(const std::vector<FeatureKind>& kinds) {
  std::string out;
  for (const auto kind : kinds) {
    if (!out.empty()) out += ',';
    out += to_string(kind);
  }
  return out;
}

void apply_config_text(PipelineConfig& cfg, std::string_view text, const std::string& origin) {
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    require(eq != std::string_view::npos, ErrorCode::Usage, where + ": expected key=value");
    const std::string key(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));

    if (key == "kappa") {
      cfg.kappa = parse_number<int>(value, where);
    } else if (key == "iterations") {
      cfg.iterations = parse_number<int>(value, where);
    } else if (key == "k_min" || key == "k-min") {
      cfg.k_min = parse_number<int>(value, where);
    } else if (key == "k_max" || key == "k-max") {
      cfg.k_max = parse_number<int>(value, where);
    } else if (key == "seed") {
      cfg.seed = parse_number<unsigned long long>(value, where);
    } else if (key == "chunk") {
      cfg.chunk = parse_number<int>(value, where);
    } else if (key == "delay") {
      cfg.delay = parse_number<int>(value, where);
    } else if (key == "median_taps" || key == "median-taps") {
      cfg.median_taps = parse_number<int>(value, where);
    } else if (key == "features") {
      cfg.features = parse_feature_list(value);
    } else if (key == "eval_rate" || key == "eval-rate") {
      cfg.eval_rate = parse_number<double>(value, where);
    } else if (key == "sample_rate") {
      cfg.sample_rate = parse_number<double>(value, where);
    } else if (key == "window") {
      cfg.window = parse_number<int>(value, where);
    } else if (key == "hop") {
      cfg.hop = parse_number<int>(value, where);
    } else if (key == "jobs") {
      cfg.jobs = parse_number<int>(value, where);
    } else {
      fail(ErrorCode::Usage, where + ": unknown key '" + key + "'");
    }
  }
}

void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Input, "cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_config_text(cfg, buffer.str(), path.string());
}

}  // namespace snfseg
