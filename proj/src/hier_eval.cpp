#include "snfseg/hier_eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "snfseg/error.hpp"

namespace snfseg {

using nlohmann::json;

namespace {

constexpr double kDurationTolerance = 0.5;

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void append(MeasureSamples& s, double p, double r, double l) {
  s.precision.push_back(p);
  s.recall.push_back(r);
  s.lmeasure.push_back(l);
}

// Runs fn(i) for i in [0, count) on up to `jobs` threads.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(jobs, static_cast<int>(count))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

double harmonic_mean(double a, double b) { return (a > 0.0 && b > 0.0) ? 2.0 * a * b / (a + b) : 0.0; }

std::vector<std::vector<int>> depth_function(const MultiLevelSegmentation& h, std::span<const double> times) {
  for (const double t : times) {
    require(t >= 0.0 && t <= h.duration, ErrorCode::Input,
            "time " + std::to_string(t) + " outside [0, " + std::to_string(h.duration) + "]");
  }
  const auto codes = label_codes(h, times);
  const std::size_t n = times.size();
  std::vector<std::vector<int>> d(n, std::vector<int>(n, 0));
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t u = t; u < n; ++u) {
      int depth = 0;
      for (std::size_t l = 0; l < codes.size(); ++l) {
        if (codes[l][t] == codes[l][u]) depth = static_cast<int>(l);
      }
      d[t][u] = depth;
      d[u][t] = depth;
    }
  }
  return d;
}

TripleCounts count_triples(const std::vector<std::vector<int>>& ref_depth, const std::vector<std::vector<int>>& est_depth) {
  const std::size_t n = ref_depth.size();
  require(est_depth.size() == n, ErrorCode::Usage, "depth matrices differ in size");
  int ref_levels = 1, est_levels = 1;
  for (std::size_t t = 0; t < n; ++t) {
    ref_levels = std::max(ref_levels, 1 + *std::max_element(ref_depth[t].begin(), ref_depth[t].end()));
    est_levels = std::max(est_levels, 1 + *std::max_element(est_depth[t].begin(), est_depth[t].end()));
  }
  const auto rl = static_cast<std::size_t>(ref_levels);
  const auto el = static_cast<std::size_t>(est_levels);

  TripleCounts out;
  std::vector<std::uint64_t> hist(rl * el);
  std::vector<std::uint64_t> below(rl * el);  // strictly smaller in both coordinates
  std::vector<std::uint64_t> ref_count(rl), est_count(el);
  for (std::size_t t = 0; t < n; ++t) {
    std::fill(hist.begin(), hist.end(), 0);
    std::fill(ref_count.begin(), ref_count.end(), 0);
    std::fill(est_count.begin(), est_count.end(), 0);
    for (std::size_t u = 0; u < n; ++u) {
      if (u == t) continue;
      const auto r = static_cast<std::size_t>(ref_depth[t][u]);
      const auto e = static_cast<std::size_t>(est_depth[t][u]);
      ++hist[r * el + e];
      ++ref_count[r];
      ++est_count[e];
    }
    // below[r][e] = sum over r' < r, e' < e of hist[r'][e']
    for (std::size_t r = 0; r < rl; ++r) {
      for (std::size_t e = 0; e < el; ++e) {
        std::uint64_t v = 0;
        if (r > 0 && e > 0) {
          v = hist[(r - 1) * el + (e - 1)] + below[(r - 1) * el + e] + below[r * el + (e - 1)] -
              below[(r - 1) * el + (e - 1)];
        }
        below[r * el + e] = v;
      }
    }
    for (std::size_t i = 0; i < rl * el; ++i) out.agreeing += hist[i] * below[i];

    std::uint64_t seen = 0;
    for (std::size_t r = 0; r < rl; ++r) {
      out.reference += ref_count[r] * seen;
      seen += ref_count[r];
    }
    seen = 0;
    for (std::size_t e = 0; e < el; ++e) {
      out.estimate += est_count[e] * seen;
      seen += est_count[e];
    }
  }
  return out;
}

ScoreTriple l_scores(const MultiLevelSegmentation& reference, const MultiLevelSegmentation& estimate,
                     double sample_rate) {
  require(sample_rate > 0.0, ErrorCode::Usage, "evaluation rate must be positive");
  require(std::abs(reference.duration - estimate.duration) <= kDurationTolerance, ErrorCode::Input,
          "duration mismatch: reference " + std::to_string(reference.duration) + " s vs estimate " +
              std::to_string(estimate.duration) + " s");
  const auto times = sample_grid(std::min(reference.duration, estimate.duration), sample_rate);
  const auto counts = count_triples(depth_function(reference, times), depth_function(estimate, times));

  ScoreTriple s;
  s.reference_has_no_triples = counts.reference == 0;
  s.estimate_has_no_triples = counts.estimate == 0;
  if (counts.reference > 0) s.recall = static_cast<double>(counts.agreeing) / static_cast<double>(counts.reference);
  if (counts.estimate > 0) s.precision = static_cast<double>(counts.agreeing) / static_cast<double>(counts.estimate);
  s.lmeasure = harmonic_mean(s.precision, s.recall);
  return s;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), ErrorCode::Input, "KS statistic needs two non-empty samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const auto na = static_cast<double>(x.size());
  const auto nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < x.size() || j < y.size()) {
    // next breakpoint: advance both CDFs past every value equal to it
    const double v = (j >= y.size() || (i < x.size() && x[i] <= y[j])) ? x[i] : y[j];
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

Summary summarize(const MeasureSamples& sample, const MeasureSamples& inter_annotator) {
  Summary s;
  s.mean_precision = mean_of(sample.precision);
  s.mean_recall = mean_of(sample.recall);
  s.mean_lmeasure = mean_of(sample.lmeasure);
  if (inter_annotator.empty() || sample.empty()) {
    s.ks_precision = s.ks_recall = s.ks_lmeasure = std::numeric_limits<double>::quiet_NaN();
  } else {
    s.ks_precision = ks_statistic(sample.precision, inter_annotator.precision);
    s.ks_recall = ks_statistic(sample.recall, inter_annotator.recall);
    s.ks_lmeasure = ks_statistic(sample.lmeasure, inter_annotator.lmeasure);
  }
  return s;
}

BatchReport batch_evaluate(const std::map<std::string, MultiLevelSegmentation>& estimates,
                           const std::map<std::string, std::vector<NamedSegmentation>>& references, double sample_rate,
                           const std::string& tag, int jobs) {
  require(!estimates.empty(), ErrorCode::Input, "batch evaluation needs at least one track");

  struct TrackResult {
    std::vector<TrackScore> estimate_scores;
    std::vector<TrackScore> pair_scores;
  };

  std::vector<std::string> tracks;
  for (const auto& [track, refs] : references) tracks.push_back(track);
  for (const auto& [track, est] : estimates) {
    if (!references.contains(track)) tracks.push_back(track);
  }
  std::sort(tracks.begin(), tracks.end());

  std::vector<TrackResult> results(tracks.size());
  parallel_for(tracks.size(), jobs, [&](std::size_t i) {
    const auto& track = tracks[i];
    const auto ref_it = references.find(track);
    if (ref_it == references.end()) return;
    const auto& refs = ref_it->second;
    if (const auto est_it = estimates.find(track); est_it != estimates.end()) {
      for (const auto& ref : refs) {
        results[i].estimate_scores.push_back({track, ref.name, l_scores(ref.hierarchy, est_it->second, sample_rate)});
      }
    }
    for (std::size_t a = 0; a < refs.size(); ++a) {
      for (std::size_t b = a + 1; b < refs.size(); ++b) {
        results[i].pair_scores.push_back(
            {track, refs[a].name + "|" + refs[b].name, l_scores(refs[a].hierarchy, refs[b].hierarchy, sample_rate)});
      }
    }
  });

  BatchReport report;
  report.estimator.tag = tag;
  report.inter_annotator.tag = "inter-annotator";
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto& track = tracks[i];
    if (estimates.contains(track) && (!references.contains(track) || references.at(track).empty())) {
      report.skipped.push_back(track);
    }
    for (auto& s : results[i].estimate_scores) {
      append(report.estimator, s.score.precision, s.score.recall, s.score.lmeasure);
      report.per_track.push_back(std::move(s));
    }
    for (auto& s : results[i].pair_scores) {
      // (A, B) and (B, A): precision(B, A) = recall(A, B)
      report.inter_annotator.precision.push_back(s.score.precision);
      report.inter_annotator.precision.push_back(s.score.recall);
      report.inter_annotator.recall.push_back(s.score.recall);
      report.inter_annotator.recall.push_back(s.score.precision);
      report.inter_annotator.lmeasure.push_back(s.score.lmeasure);
      report.inter_annotator_pairs.push_back(std::move(s));
    }
  }
  report.estimator_summary = summarize(report.estimator, report.inter_annotator);
  report.inter_annotator_summary = summarize(report.inter_annotator, report.inter_annotator);
  return report;
}

json to_json(const ScoreTriple& s) {
  json j = {{"precision", s.precision}, {"recall", s.recall}, {"lmeasure", s.lmeasure}};
  if (s.reference_has_no_triples) j["reference_has_no_triples"] = true;
  if (s.estimate_has_no_triples) j["estimate_has_no_triples"] = true;
  return j;
}

json to_json(const MeasureSamples& s) {
  return {{"tag", s.tag}, {"precision", s.precision}, {"recall", s.recall}, {"lmeasure", s.lmeasure}};
}

json to_json(const Summary& s) {
  return {{"mean_precision", s.mean_precision}, {"mean_recall", s.mean_recall}, {"mean_lmeasure", s.mean_lmeasure},
          {"ks_precision", s.ks_precision},     {"ks_recall", s.ks_recall},     {"ks_lmeasure", s.ks_lmeasure}};
}

json to_json(const BatchReport& r) {
  auto scores = [](const std::vector<TrackScore>& v) {
    json arr = json::array();
    for (const auto& s : v) {
      json j = to_json(s.score);
      j["track"] = s.track;
      j["reference"] = s.reference;
      arr.push_back(std::move(j));
    }
    return arr;
  };
  return {{"per_track", scores(r.per_track)},
          {"inter_annotator_pairs", scores(r.inter_annotator_pairs)},
          {"estimator_sample", to_json(r.estimator)},
          {"inter_annotator_sample", to_json(r.inter_annotator)},
          {"estimator_summary", to_json(r.estimator_summary)},
          {"skipped", r.skipped}};
}

MeasureSamples measure_samples_from_json(const json& j, const std::string& origin) {
  require(j.is_object(), ErrorCode::Input, origin + ": score sample must be an object");
  MeasureSamples s;
  if (j.contains("tag") && j["tag"].is_string()) s.tag = j["tag"].get<std::string>();
  auto read = [&](const char* key, std::vector<double>& out) {
    require(j.contains(key) && j[key].is_array(), ErrorCode::Input, origin + ": missing array '" + key + "'");
    for (std::size_t i = 0; i < j[key].size(); ++i) {
      const auto& v = j[key][i];
      require(v.is_number(), ErrorCode::Input, origin + ": " + key + "[" + std::to_string(i) + "] is not a number");
      out.push_back(v.get<double>());
    }
  };
  read("precision", s.precision);
  read("recall", s.recall);
  read("lmeasure", s.lmeasure);
  return s;
}

}  // namespace snfseg
