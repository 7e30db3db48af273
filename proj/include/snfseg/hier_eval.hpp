#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "snfseg/segmentation.hpp"

namespace snfseg {

/// L-precision, L-recall and their harmonic mean.
struct ScoreTriple {
  double precision = 0.0;
  double recall = 0.0;
  double lmeasure = 0.0;
  // A hierarchy that induces no strictly ordered triples gives a zero denominator.
  bool reference_has_no_triples = false;
  bool estimate_has_no_triples = false;
};

double harmonic_mean(double a, double b);

/// d[i][j] = deepest level at which times[i] and times[j] carry the same label.
std::vector<std::vector<int>> depth_function(const MultiLevelSegmentation& h, std::span<const double> times);

/// Raw triple counts behind the L-measures.
struct TripleCounts {
  std::uint64_t reference = 0;  // |{(t,u,v): d_R(t,u) > d_R(t,v)}|
  std::uint64_t estimate = 0;   // |{(t,u,v): d_E(t,u) > d_E(t,v)}|
  std::uint64_t agreeing = 0;   // both of the above
};

/// Counts triples (t, u, v) with u != t, v != t on a common grid.
TripleCounts count_triples(const std::vector<std::vector<int>>& ref_depth, const std::vector<std::vector<int>>& est_depth);

/// Samples both hierarchies at `sample_rate` over the shorter duration. Durations
/// must agree within 0.5 s.
ScoreTriple l_scores(const MultiLevelSegmentation& reference, const MultiLevelSegmentation& estimate,
                     double sample_rate);

/// Values with a free-form tag ("inter-annotator", an estimator name, ...).
struct ScoreSample {
  std::vector<double> values;
  std::string tag;
};

/// sup_x |F_a(x) - F_b(x)| over the two empirical CDFs.
double ks_statistic(std::span<const double> a, std::span<const double> b);
inline double ks_statistic(const ScoreSample& a, const ScoreSample& b) { return ks_statistic(a.values, b.values); }

/// Precision / recall / L-measure samples for one estimator (or the annotators).
struct MeasureSamples {
  std::string tag;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> lmeasure;

  bool empty() const { return precision.empty(); }
};

struct TrackScore {
  std::string track;
  std::string reference;  // reference index or name
  ScoreTriple score;
};

struct Summary {
  double mean_precision = 0.0;
  double mean_recall = 0.0;
  double mean_lmeasure = 0.0;
  // against the inter-annotator sample; NaN when that sample is empty
  double ks_precision = 0.0;
  double ks_recall = 0.0;
  double ks_lmeasure = 0.0;
};

struct BatchReport {
  std::vector<TrackScore> per_track;
  std::vector<TrackScore> inter_annotator_pairs;
  MeasureSamples estimator;
  MeasureSamples inter_annotator;
  Summary estimator_summary;
  Summary inter_annotator_summary;  // K fields are 0 by definition
  std::vector<std::string> skipped;
};

struct NamedSegmentation {
  std::string name;
  MultiLevelSegmentation hierarchy;
};

/// Scores every estimate against all of its track's references, and every pair
/// of references against each other. `jobs` tracks are processed concurrently.
BatchReport batch_evaluate(const std::map<std::string, MultiLevelSegmentation>& estimates,
                           const std::map<std::string, std::vector<NamedSegmentation>>& references, double sample_rate,
                           const std::string& tag = "estimate", int jobs = 1);

Summary summarize(const MeasureSamples& sample, const MeasureSamples& inter_annotator);

nlohmann::json to_json(const ScoreTriple& s);
nlohmann::json to_json(const MeasureSamples& s);
nlohmann::json to_json(const Summary& s);
nlohmann::json to_json(const BatchReport& r);

MeasureSamples measure_samples_from_json(const nlohmann::json& j, const std::string& origin);

}  // namespace snfseg
