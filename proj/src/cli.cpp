#include "snfseg/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "snfseg/affinity.hpp"
#include "snfseg/error.hpp"
#include "snfseg/features.hpp"
#include "snfseg/fusion.hpp"
#include "snfseg/hier_eval.hpp"
#include "snfseg/io.hpp"
#include "snfseg/pipeline.hpp"
#include "snfseg/svg.hpp"

namespace snfseg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Flags shared by every subcommand. Values are only applied when given,
/// so that precedence is flags > config file > defaults.
struct CommonFlags {
  std::string config_path;
  int kappa = 0;
  int iterations = 0;
  int k_min = 0;
  int k_max = 0;
  std::string features;
  int median_taps = 0;
  double eval_rate = 0.0;
  unsigned long long seed = 0;
  int jobs = 1;

  CLI::Option* config_opt = nullptr;
  CLI::Option* kappa_opt = nullptr;
  CLI::Option* iterations_opt = nullptr;
  CLI::Option* k_min_opt = nullptr;
  CLI::Option* k_max_opt = nullptr;
  CLI::Option* features_opt = nullptr;
  CLI::Option* median_opt = nullptr;
  CLI::Option* eval_rate_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;

  void attach(CLI::App* app) {
    config_opt = app->add_option("--config", config_path, "key=value configuration file");
    kappa_opt = app->add_option("--kappa", kappa, "nearest neighbours for bandwidth and fusion kernel (default 3)");
    iterations_opt = app->add_option("--iterations", iterations, "fusion iterations T (default 10)");
    k_min_opt = app->add_option("--k-min", k_min, "smallest cluster count (default 2)");
    k_max_opt = app->add_option("--k-max", k_max, "largest cluster count (default 10)");
    features_opt = app->add_option("--features", features, "comma-separated subset of mfcc,chroma,tempogram,crema");
    median_opt = app->add_option("--median-taps", median_taps, "diagonal median filter length, 0 disables (default 9)");
    eval_rate_opt = app->add_option("--eval-rate", eval_rate, "evaluation grid rate in Hz (default 5)");
    seed_opt = app->add_option("--seed", seed, "k-means seed (default 0)");
    jobs_opt = app->add_option("--jobs", jobs, "parallel tracks for batch work (default 1)");
  }

  bool features_given(const PipelineConfig& defaults_plus_file, const PipelineConfig& defaults) const {
    return features_opt->count() > 0 || defaults_plus_file.features != defaults.features;
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (config_opt->count() > 0) apply_config_file(cfg, config_path);
    if (kappa_opt->count() > 0) cfg.kappa = kappa;
    if (iterations_opt->count() > 0) cfg.iterations = iterations;
    if (k_min_opt->count() > 0) cfg.k_min = k_min;
    if (k_max_opt->count() > 0) cfg.k_max = k_max;
    if (features_opt->count() > 0) cfg.features = parse_feature_list(features);
    if (median_opt->count() > 0) cfg.median_taps = median_taps;
    if (eval_rate_opt->count() > 0) cfg.eval_rate = eval_rate;
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (jobs_opt->count() > 0) cfg.jobs = jobs;
    cfg.validate();
    return cfg;
  }
};

std::string lower_extension(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

json config_json(const PipelineConfig& cfg) {
  return {{"kappa", cfg.kappa},         {"iterations", cfg.iterations},
          {"k_min", cfg.k_min},         {"k_max", cfg.k_max},
          {"chunk", cfg.chunk},         {"delay", cfg.delay},
          {"median_taps", cfg.median_taps}, {"seed", cfg.seed},
          {"sample_rate", cfg.sample_rate}, {"window", cfg.window},
          {"hop", cfg.hop}};
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::Input, "cannot create directory " + dir.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// segment

struct SegmentArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::string export_dir;
  std::string plot_dir;
};

int cmd_segment(const SegmentArgs& args, const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const PipelineConfig defaults;
  PipelineConfig cfg = flags.resolve();
  PipelineConfig file_only;
  if (flags.config_opt->count() > 0) apply_config_file(file_only, flags.config_path);
  const bool explicit_features = flags.features_given(file_only, defaults);

  std::optional<AudioBuffer> audio;
  std::map<FeatureKind, FeatureMatrix> from_files;
  double duration = 0.0;
  for (const auto& input : args.inputs) {
    const fs::path path(input);
    const auto ext = lower_extension(path);
    if (ext == ".wav") {
      require(!audio.has_value(), ErrorCode::Usage, "only one audio file per track");
      audio = read_wav(path);
    } else if (ext == ".json") {
      FeatureMatrix f = ingest_external_features(path, std::nullopt, cfg.base_framerate());
      duration = std::max(duration, static_cast<double>(f.frames()) / f.framerate);
      const auto kind = f.kind;
      require(!from_files.contains(kind), ErrorCode::Usage, "duplicate feature file for kind " + std::string(to_string(kind)));
      from_files.emplace(kind, std::move(f));
    } else {
      fail(ErrorCode::Usage, "unsupported input '" + input + "' (expected .wav or feature .json)");
    }
  }
  if (audio) duration = audio->duration();

  std::vector<FeatureKind> kinds;
  if (explicit_features) {
    kinds = cfg.features;
  } else {
    if (audio) kinds = defaults.features;
    for (const auto& [kind, f] : from_files) {
      if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) kinds.push_back(kind);
    }
  }
  require(kinds.size() >= 2, ErrorCode::Usage,
          "fusion requires at least two feature types (F >= 2); selected: " + feature_list_string(kinds));

  std::vector<FeatureKind> to_compute;
  for (const auto kind : kinds) {
    if (!from_files.contains(kind)) {
      require(audio.has_value() && kind != FeatureKind::CremaLike, ErrorCode::Usage,
              "no source for feature '" + std::string(to_string(kind)) + "' (supply audio or a feature file)");
      to_compute.push_back(kind);
    }
  }
  std::vector<FeatureMatrix> computed;
  if (!to_compute.empty()) computed = extract_audio_features(*audio, cfg, to_compute);

  std::vector<FeatureMatrix> features;
  std::size_t next_computed = 0;
  for (const auto kind : kinds) {
    if (const auto it = from_files.find(kind); it != from_files.end()) {
      features.push_back(it->second);
    } else {
      features.push_back(std::move(computed[next_computed++]));
    }
  }

  const auto result = segment_features(std::move(features), duration, cfg);

  json extra;
  extra["config"] = config_json(cfg);
  extra["features"] = feature_list_string(result.kinds);
  extra["frame_rate"] = result.grid.framerate;
  extra["frame_offset"] = result.grid.offset;
  extra["warnings"] = result.warnings;
  const auto text = format_segmentation_json(result.hierarchy, extra);
  if (args.out.empty() || args.out == "-") {
    out << text;
  } else {
    write_file_atomic(args.out, text);
  }

  if (!args.export_dir.empty() || !args.plot_dir.empty()) {
    const auto meet = meet_matrix(result.hierarchy, result.grid.framerate);
    std::vector<std::pair<std::string, const Matrix*>> matrices;
    for (std::size_t i = 0; i < result.kinds.size(); ++i) {
      matrices.emplace_back("affinity_" + std::string(to_string(result.kinds[i])), &result.affinities[i].data);
    }
    matrices.emplace_back("fused", &result.graph.data);
    matrices.emplace_back("meet", &meet.data);
    if (!args.export_dir.empty()) {
      ensure_directory(args.export_dir);
      for (const auto& [name, m] : matrices) write_matrix_csv(fs::path(args.export_dir) / (name + ".csv"), *m);
    }
    if (!args.plot_dir.empty()) {
      ensure_directory(args.plot_dir);
      for (const auto& [name, m] : matrices) {
        write_file_atomic(fs::path(args.plot_dir) / (name + ".svg"), svg::heatmap(*m, name));
      }
    }
  }
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fuse

struct FuseArgs {
  std::vector<std::string> matrices;
  std::string out;
};

int cmd_fuse(const FuseArgs& args, const CommonFlags& flags, std::ostream& out) {
  PipelineConfig cfg = flags.resolve();
  require(args.matrices.size() >= 2, ErrorCode::Usage,
          "fusion requires at least two feature types (got " + std::to_string(args.matrices.size()) + " matrix)");
  // Precomputed distances are fused as-is unless a median filter is requested explicitly.
  const int taps = flags.median_opt->count() > 0 ? cfg.median_taps : 0;

  std::vector<FusionInput> inputs;
  Index n = -1;
  std::string first;
  for (const auto& path : args.matrices) {
    SquareMatrix distance{read_matrix_csv(path), MatrixRole::Distance, 1.0};
    require(distance.data.minCoeff() >= 0.0, ErrorCode::Input, path + ": distances must be non-negative");
    require((distance.data - distance.data.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + distance.data.cwiseAbs().maxCoeff()),
            ErrorCode::Input, path + ": distance matrix is not symmetric");
    if (n < 0) {
      n = distance.size();
      first = path;
    }
    require(distance.size() == n, ErrorCode::Input,
            "size mismatch: " + first + " is " + std::to_string(n) + "x" + std::to_string(n) + " but " + path + " is " +
                std::to_string(distance.size()) + "x" + std::to_string(distance.size()));
    require(n >= cfg.kappa + 1, ErrorCode::Input, path + ": need at least kappa + 1 rows");
    NeighborSet neighbors = nearest_neighbors(distance, cfg.kappa);
    SquareMatrix w = autotuned_affinity(distance, neighbors);
    if (taps > 1) w = diagonal_median_filter(w, taps);
    inputs.push_back({std::move(w), std::move(neighbors)});
  }
  const auto fused = snf_fuse(inputs, cfg.iterations);
  if (args.out.empty() || args.out == "-") {
    out << format_matrix_csv(fused.data);
  } else {
    write_matrix_csv(args.out, fused.data);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string estimate;
  std::vector<std::string> references;
  std::string estimates_dir;
  std::string references_dir;
  std::string tag = "estimate";
  std::string out;
};

std::string fixed3(double v) {
  if (!std::isfinite(v)) return "  ---";
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << v;
  return s.str();
}

std::map<std::string, std::vector<NamedSegmentation>> load_reference_dir(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCode::Input, dir.string() + ": not a directory");
  std::map<std::string, std::vector<NamedSegmentation>> refs;
  std::vector<fs::directory_entry> entries(fs::directory_iterator(dir), fs::directory_iterator{});
  std::sort(entries.begin(), entries.end());
  for (const auto& entry : entries) {
    if (entry.is_directory()) {
      std::vector<fs::path> files;
      for (const auto& f : fs::directory_iterator(entry.path())) {
        if (lower_extension(f.path()) == ".json") files.push_back(f.path());
      }
      std::sort(files.begin(), files.end());
      auto& list = refs[entry.path().filename().string()];
      for (const auto& f : files) list.push_back({f.stem().string(), read_segmentation(f)});
    } else if (lower_extension(entry.path()) == ".json") {
      refs[entry.path().stem().string()].push_back({"0", read_segmentation(entry.path())});
    }
  }
  return refs;
}

std::map<std::string, MultiLevelSegmentation> load_estimate_dir(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorCode::Input, dir.string() + ": not a directory");
  std::map<std::string, MultiLevelSegmentation> est;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && lower_extension(entry.path()) == ".json") {
      est.emplace(entry.path().stem().string(), read_segmentation(entry.path()));
    }
  }
  return est;
}

int cmd_evaluate(const EvaluateArgs& args, const CommonFlags& flags, std::ostream& out) {
  const PipelineConfig cfg = flags.resolve();

  if (!args.estimates_dir.empty() || !args.references_dir.empty()) {
    require(!args.estimates_dir.empty() && !args.references_dir.empty(), ErrorCode::Usage,
            "batch mode needs both --estimates and --references");
    const auto report =
        batch_evaluate(load_estimate_dir(args.estimates_dir), load_reference_dir(args.references_dir), cfg.eval_rate,
                       args.tag, cfg.jobs);
    const auto& s = report.estimator_summary;
    out << "tracks scored: " << report.per_track.size() << " estimate/reference pairs, "
        << report.inter_annotator_pairs.size() << " annotator pairs\n";
    out << "mean P " << fixed3(s.mean_precision) << "  R " << fixed3(s.mean_recall) << "  L " << fixed3(s.mean_lmeasure)
        << "\n";
    out << "K    P " << fixed3(s.ks_precision) << "  R " << fixed3(s.ks_recall) << "  L " << fixed3(s.ks_lmeasure) << "\n";
    for (const auto& track : report.skipped) out << "skipped (no reference): " << track << "\n";
    if (!args.out.empty()) write_file_atomic(args.out, to_json(report).dump(2) + "\n");
    return 0;
  }

  require(!args.estimate.empty(), ErrorCode::Usage, "missing estimate file");
  require(!args.references.empty(), ErrorCode::Usage, "at least one --reference is required");
  const auto estimate = read_segmentation(args.estimate);
  json scores = json::array();
  double sp = 0.0, sr = 0.0, sl = 0.0;
  out << std::left << std::setw(40) << "reference" << "  P      R      L\n";
  for (const auto& ref_path : args.references) {
    const auto score = l_scores(read_segmentation(ref_path), estimate, cfg.eval_rate);
    sp += score.precision;
    sr += score.recall;
    sl += score.lmeasure;
    out << std::left << std::setw(40) << ref_path << "  " << fixed3(score.precision) << "  " << fixed3(score.recall)
        << "  " << fixed3(score.lmeasure);
    if (score.estimate_has_no_triples) out << "  [estimate induces no triples]";
    if (score.reference_has_no_triples) out << "  [reference induces no triples]";
    out << "\n";
    json j = to_json(score);
    j["reference"] = ref_path;
    scores.push_back(std::move(j));
  }
  const double n = static_cast<double>(args.references.size());
  const ScoreTriple mean{sp / n, sr / n, sl / n};
  out << std::left << std::setw(40) << "mean" << "  " << fixed3(mean.precision) << "  " << fixed3(mean.recall) << "  "
      << fixed3(mean.lmeasure) << "\n";
  if (!args.out.empty()) {
    const json doc = {{"estimate", args.estimate}, {"scores", scores}, {"mean", to_json(mean)}};
    write_file_atomic(args.out, doc.dump(2) + "\n");
  }
  return 0;
}

// ---------------------------------------------------------------------------
// compare-distributions

struct CompareArgs {
  std::string annotators;
  std::vector<std::string> estimators;
  std::string out;
  std::string plot;
};

/// Reads either a bare score sample or a batch report (picking the requested role).
MeasureSamples load_samples(const std::string& spec, bool annotator_role) {
  std::string tag;
  std::string path = spec;
  if (const auto eq = spec.find('='); eq != std::string::npos && !annotator_role) {
    tag = spec.substr(0, eq);
    path = spec.substr(eq + 1);
  }
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Input, path + ": " + e.what());
  }
  MeasureSamples s;
  const char* key = annotator_role ? "inter_annotator_sample" : "estimator_sample";
  if (doc.is_object() && doc.contains(key)) {
    s = measure_samples_from_json(doc[key], path);
  } else {
    s = measure_samples_from_json(doc, path);
  }
  if (!tag.empty()) s.tag = tag;
  if (s.tag.empty()) s.tag = fs::path(path).stem().string();
  require(!s.precision.empty() && !s.recall.empty() && !s.lmeasure.empty(), ErrorCode::Input,
          path + ": empty score sample");
  return s;
}

struct TableRow {
  std::string name;
  Summary summary;
  bool reference = false;
};

std::string format_table(const std::vector<TableRow>& rows) {
  std::ostringstream s;
  std::size_t width = 12;
  for (const auto& r : rows) width = std::max(width, r.name.size() + 2);
  auto k = [](const TableRow& r, double v) { return r.reference ? std::string("  ---") : fixed3(v); };
  s << std::left << std::setw(static_cast<int>(width)) << "" << std::right << std::setw(8) << "mu(P)" << std::setw(8)
    << "K(P)" << std::setw(8) << "mu(R)" << std::setw(8) << "K(R)" << std::setw(8) << "mu(L)" << std::setw(8) << "K(L)"
    << "\n";
  for (const auto& r : rows) {
    s << std::left << std::setw(static_cast<int>(width)) << r.name << std::right << std::setw(8)
      << fixed3(r.summary.mean_precision) << std::setw(8) << k(r, r.summary.ks_precision) << std::setw(8)
      << fixed3(r.summary.mean_recall) << std::setw(8) << k(r, r.summary.ks_recall) << std::setw(8)
      << fixed3(r.summary.mean_lmeasure) << std::setw(8) << k(r, r.summary.ks_lmeasure) << "\n";
  }
  return s.str();
}

int cmd_compare(const CompareArgs& args, const CommonFlags& flags, std::ostream& out) {
  (void)flags.resolve();
  require(!args.estimators.empty(), ErrorCode::Usage, "at least one --estimator sample is required");
  const MeasureSamples annotators = load_samples(args.annotators, true);
  std::vector<MeasureSamples> estimators;
  for (const auto& e : args.estimators) estimators.push_back(load_samples(e, false));

  std::vector<TableRow> rows;
  rows.push_back({"Inter-Anno", summarize(annotators, annotators), true});
  for (const auto& e : estimators) rows.push_back({e.tag, summarize(e, annotators), false});
  out << format_table(rows);

  if (!args.out.empty()) {
    json table_rows = json::array();
    for (const auto& r : rows) {
      json j = to_json(r.summary);
      j["name"] = r.name;
      if (r.reference) j["ks_precision"] = j["ks_recall"] = j["ks_lmeasure"] = nullptr;
      table_rows.push_back(std::move(j));
    }
    const json doc = {{"columns", {"mu(P)", "K(P)", "mu(R)", "K(R)", "mu(L)", "K(L)"}}, {"rows", table_rows}};
    write_file_atomic(args.out, doc.dump(2) + "\n");
  }

  if (!args.plot.empty()) {
    std::vector<svg::DensityPanel> panels = {{"L-precision", {}}, {"L-recall", {}}, {"L-measure", {}}};
    auto add = [&](const MeasureSamples& s, const Summary& sum, bool reference) {
      auto label = [&](double ks, double mu) {
        std::string text = s.tag + " (";
        if (!reference) text += "K=" + fixed3(ks) + ", ";
        return text + "mean=" + fixed3(mu) + ")";
      };
      panels[0].series.push_back({label(sum.ks_precision, sum.mean_precision), s.precision});
      panels[1].series.push_back({label(sum.ks_recall, sum.mean_recall), s.recall});
      panels[2].series.push_back({label(sum.ks_lmeasure, sum.mean_lmeasure), s.lmeasure});
    };
    MeasureSamples named = annotators;
    named.tag = "Inter-Anno";
    add(named, rows[0].summary, true);
    for (std::size_t i = 0; i < estimators.size(); ++i) add(estimators[i], rows[i + 1].summary, false);
    write_file_atomic(args.plot, svg::density_panels(panels));
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("snfseg");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical music structure analysis with similarity network fusion and spectral clustering"};
  app.require_subcommand(1);

  SegmentArgs seg_args;
  CommonFlags seg_flags;
  auto* seg = app.add_subcommand("segment", "segment a track (WAV and/or feature files) into a multi-level hierarchy");
  seg->add_option("inputs", seg_args.inputs, "WAV file and/or feature JSON files of one track")->required();
  seg->add_option("--out,-o", seg_args.out, "segmentation JSON output (default stdout)");
  seg->add_option("--export-matrices", seg_args.export_dir, "directory for affinity/fused/meet CSV matrices");
  seg->add_option("--plot", seg_args.plot_dir, "directory for SVG heatmaps");
  seg_flags.attach(seg);

  FuseArgs fuse_args;
  CommonFlags fuse_flags;
  auto* fuse = app.add_subcommand("fuse", "fuse precomputed distance matrices (CSV) into one affinity");
  fuse->add_option("matrices", fuse_args.matrices, "square distance matrices, one CSV per feature")->required();
  fuse->add_option("--out,-o", fuse_args.out, "fused matrix CSV output (default stdout)");
  fuse_flags.attach(fuse);

  EvaluateArgs eval_args;
  CommonFlags eval_flags;
  auto* evaluate = app.add_subcommand("evaluate", "L-measures of an estimate against reference annotations");
  evaluate->add_option("estimate", eval_args.estimate, "estimated segmentation JSON");
  evaluate->add_option("--reference,-r", eval_args.references, "reference annotation JSON (repeatable)");
  evaluate->add_option("--estimates", eval_args.estimates_dir, "batch mode: directory of <track>.json estimates");
  evaluate->add_option("--references", eval_args.references_dir,
                       "batch mode: directory of <track>/<annotator>.json (or <track>.json) references");
  evaluate->add_option("--tag", eval_args.tag, "estimator name in batch reports");
  evaluate->add_option("--out,-o", eval_args.out, "JSON output");
  eval_flags.attach(evaluate);

  CompareArgs cmp_args;
  CommonFlags cmp_flags;
  auto* compare = app.add_subcommand("compare-distributions", "means and KS statistics against inter-annotator scores");
  compare->add_option("--annotators", cmp_args.annotators, "inter-annotator score sample or batch report")->required();
  compare->add_option("--estimator", cmp_args.estimators, "[TAG=]score sample or batch report (repeatable)");
  compare->add_option("--out,-o", cmp_args.out, "table JSON output");
  compare->add_option("--plot", cmp_args.plot, "SVG density plot output");
  cmp_flags.attach(compare);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorCode::Usage);
  }

  try {
    if (seg->parsed()) return cmd_segment(seg_args, seg_flags, out, err);
    if (fuse->parsed()) return cmd_fuse(fuse_args, fuse_flags, out);
    if (evaluate->parsed()) return cmd_evaluate(eval_args, eval_flags, out);
    if (compare->parsed()) return cmd_compare(cmp_args, cmp_flags, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorCode::Input);
  }
  err << app.help();
  return static_cast<int>(ErrorCode::Usage);
}

}  // namespace snfseg::cli
