#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "oracles.hpp"
#include "snfseg/cli.hpp"
#include "snfseg/config.hpp"
#include "snfseg/error.hpp"
#include "snfseg/hier_eval.hpp"
#include "snfseg/io.hpp"
#include "snfseg/pipeline.hpp"
#include "test_support.hpp"

using namespace snfseg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run snfseg_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void write(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

/// Planted streams as feature files; the second stream is relabelled as chroma
/// so that the two files carry distinct kinds.
std::vector<std::string> planted_feature_files(const fs::path& dir, std::uint64_t seed) {
  auto track = testing_support::planted_track(seed);
  track.streams[1].kind = FeatureKind::Chroma;
  track.streams[1].data = track.streams[1].data.cwiseAbs();
  std::vector<std::string> paths;
  for (const auto& f : track.streams) {
    const auto path = dir / (std::string(to_string(f.kind)) + ".json");
    write(path, format_feature_json(f));
    paths.push_back(path.string());
  }
  return paths;
}

}  // namespace

TEST_CASE("configuration text") {
  PipelineConfig cfg;
  apply_config_text(cfg, "# tuned\nkappa = 10\n\nk_max=6\nfeatures = mfcc, tempogram\nmedian_taps = 0\n");
  CHECK(cfg.kappa == 10);
  CHECK(cfg.k_max == 6);
  CHECK(cfg.median_taps == 0);
  CHECK(cfg.features == std::vector<FeatureKind>{FeatureKind::Mfcc, FeatureKind::Tempogram});
  CHECK(cfg.iterations == 10);
  CHECK(feature_list_string(cfg.features) == "mfcc,tempogram");

  CHECK_THROWS_WITH_AS(apply_config_text(cfg, "kapa = 3", "run.cfg"), doctest::Contains("unknown key 'kapa'"), Error);
  CHECK_THROWS_AS(apply_config_text(cfg, "kappa = three"), Error);
  CHECK_THROWS_AS(parse_feature_list("mfcc,loudness"), Error);

  PipelineConfig bad;
  bad.k_min = 5;
  bad.k_max = 3;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = PipelineConfig{};
  bad.median_taps = 4;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = PipelineConfig{};
  bad.kappa = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("matrix CSV round trip is exact") {
  std::mt19937_64 rng(1);
  const Matrix m = oracle::random_affinity(rng, 17) * 1e-3;
  const Matrix back = parse_matrix_csv(format_matrix_csv(m));
  CHECK((back - m).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(back == m);
  CHECK_THROWS_WITH_AS(parse_matrix_csv("1,2\n3\n", "d.csv"), doctest::Contains("d.csv"), Error);
  CHECK_THROWS_AS(parse_matrix_csv("1,x\n3,4\n"), Error);
  CHECK_THROWS_AS(parse_matrix_csv("1,2,3\n4,5,6\n"), Error);
}

TEST_CASE("segmentation and feature JSON round trips") {
  MultiLevelSegmentation h;
  h.duration = 3.5;
  h.levels = {full_track_partition(3.5), {{0.0, 1.25, "0"}, {1.25, 3.5, "1"}}};
  const auto text = format_segmentation_json(h, json{{"frame_rate", 4.3}});
  CHECK(parse_segmentation_json(text) == h);
  CHECK(json::parse(text)["frame_rate"] == 4.3);

  const FeatureMatrix f(Matrix::Random(7, 3), 21.5, FeatureKind::Tempogram);
  const auto g = parse_feature_json(format_feature_json(f));
  CHECK(g.kind == f.kind);
  CHECK(g.framerate == f.framerate);
  CHECK(g.data == f.data);
}

TEST_CASE("pipeline on planted features") {
  const auto track = testing_support::planted_track(3);
  PipelineConfig cfg;
  const auto result = segment_features(track.streams, track.duration, cfg);
  result.hierarchy.validate();
  CHECK(result.hierarchy.levels.size() == 10);
  CHECK(result.hierarchy.duration == track.duration);
  CHECK(result.affinities.size() == 2);
  CHECK(result.graph.data.rows() == result.embedding.vectors.rows());
  CHECK(result.grid.framerate == doctest::Approx(cfg.base_framerate() / cfg.chunk));
  CHECK(result.grid.offset == doctest::Approx((cfg.delay - 1) / 2.0 / result.grid.framerate));

  const auto again = segment_features(track.streams, track.duration, cfg);
  CHECK(again.hierarchy == result.hierarchy);

  const auto score = l_scores(track.reference, result.hierarchy, cfg.eval_rate);
  CHECK(score.recall > 0.8);

  const auto single = segment_single_feature(track.streams[0], track.duration, cfg);
  single.hierarchy.validate();
  CHECK(single.affinities.size() == 1);

  CHECK_THROWS_WITH_AS(segment_features({track.streams[0]}, track.duration, cfg), doctest::Contains("at least two feature types"), Error);
  auto short_stream = track.streams[1];
  short_stream.data.conservativeResize(100, Eigen::NoChange);
  CHECK_THROWS_AS(segment_features({track.streams[0], short_stream}, track.duration, cfg), Error);
}

TEST_CASE("cli usage") {
  CHECK(snfseg_cli({"--help"}).code == 0);
  CHECK(snfseg_cli({"segment", "--help"}).code == 0);
  CHECK(snfseg_cli({}).code == 1);
  CHECK(snfseg_cli({"bogus"}).code == 1);
  CHECK(snfseg_cli({"segment", "x.json", "--kappa", "abc"}).code == 1);
}

TEST_CASE("cli segment") {
  const auto dir = testing_support::scratch_dir("cli_segment");
  const auto files = planted_feature_files(dir, 4);

  const auto first = snfseg_cli({"segment", files[0], files[1], "--out", (dir / "a.json").string()});
  REQUIRE(first.code == 0);
  const auto second = snfseg_cli({"segment", files[1], files[0], "--out", (dir / "b.json").string()});
  REQUIRE(second.code == 0);
  CHECK(read_text_file(dir / "a.json") == read_text_file(dir / "b.json"));

  const auto doc = json::parse(read_text_file(dir / "a.json"));
  CHECK(doc["config"]["kappa"] == 3);
  CHECK(doc["features"] == "mfcc,chroma");
  CHECK(doc["levels"].size() == 10);
  CHECK_NOTHROW(read_segmentation(dir / "a.json").validate());

  const auto k10 = snfseg_cli({"segment", files[0], files[1], "--kappa", "10"});
  REQUIRE(k10.code == 0);
  CHECK(json::parse(k10.out)["config"]["kappa"] == 10);

  SUBCASE("config file sits between defaults and flags") {
    write(dir / "run.cfg", "kappa = 5\niterations = 4\n");
    const auto from_file = snfseg_cli({"segment", files[0], files[1], "--config", (dir / "run.cfg").string()});
    REQUIRE(from_file.code == 0);
    CHECK(json::parse(from_file.out)["config"]["kappa"] == 5);
    const auto overridden =
        snfseg_cli({"segment", files[0], files[1], "--config", (dir / "run.cfg").string(), "--kappa", "7"});
    REQUIRE(overridden.code == 0);
    const auto cfg = json::parse(overridden.out)["config"];
    CHECK(cfg["kappa"] == 7);
    CHECK(cfg["iterations"] == 4);
  }
  SUBCASE("matrices and plots") {
    const auto run = snfseg_cli({"segment", files[0], files[1], "--export-matrices", (dir / "m").string(), "--plot",
                          (dir / "p").string()});
    REQUIRE(run.code == 0);
    for (const char* name : {"affinity_mfcc", "affinity_chroma", "fused", "meet"}) {
      CHECK(fs::exists(dir / "m" / (std::string(name) + ".csv")));
      CHECK(fs::exists(dir / "p" / (std::string(name) + ".svg")));
    }
    const Matrix fused = read_matrix_csv(dir / "m" / "fused.csv");
    CHECK((fused - fused.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("one feature type is refused") {
    const auto run = snfseg_cli({"segment", files[0]});
    CHECK(run.code == 1);
    CHECK(run.err.find("F >= 2") != std::string::npos);
  }
  SUBCASE("bad inputs") {
    CHECK(snfseg_cli({"segment", (dir / "missing.json").string(), files[0]}).code == 2);
    write(dir / "ragged.json", R"({"framerate_hz": 43, "kind": "tempogram", "data": [[1, 2], [3]]})");
    const auto ragged = snfseg_cli({"segment", files[0], (dir / "ragged.json").string()});
    CHECK(ragged.code == 2);
    CHECK(ragged.err.find("ragged.json") != std::string::npos);
    CHECK(snfseg_cli({"segment", files[0], files[1], "--features", "mfcc,crema"}).code == 1);
    CHECK(snfseg_cli({"segment", "track.mp3"}).code == 1);
  }
}

TEST_CASE("cli fuse") {
  const auto dir = testing_support::scratch_dir("cli_fuse");
  std::mt19937_64 rng(5);
  write_matrix_csv(dir / "a.csv", oracle::random_distance(rng, 12));
  write_matrix_csv(dir / "b.csv", oracle::random_distance(rng, 12));
  write_matrix_csv(dir / "c.csv", oracle::random_distance(rng, 10));

  const auto run = snfseg_cli({"fuse", (dir / "a.csv").string(), (dir / "b.csv").string()});
  REQUIRE(run.code == 0);
  const Matrix fused = parse_matrix_csv(run.out);
  CHECK(fused.rows() == 12);
  CHECK(fused.minCoeff() >= 0.0);

  const auto mismatch = snfseg_cli({"fuse", (dir / "a.csv").string(), (dir / "c.csv").string()});
  CHECK(mismatch.code == 2);
  CHECK(mismatch.err.find("a.csv") != std::string::npos);
  CHECK(mismatch.err.find("c.csv") != std::string::npos);

  const auto one = snfseg_cli({"fuse", (dir / "a.csv").string()});
  CHECK(one.code == 1);
  CHECK(one.err.find("at least two feature types") != std::string::npos);

  Matrix neg = read_matrix_csv(dir / "a.csv");
  neg(0, 1) = neg(1, 0) = -1.0;
  write_matrix_csv(dir / "neg.csv", neg);
  CHECK(snfseg_cli({"fuse", (dir / "a.csv").string(), (dir / "neg.csv").string()}).code == 2);
}

TEST_CASE("cli evaluate and compare-distributions") {
  const auto dir = testing_support::scratch_dir("cli_eval");
  MultiLevelSegmentation ref;
  ref.duration = 8.0;
  ref.levels = {full_track_partition(8.0), {{0, 4, "A"}, {4, 8, "B"}}, {{0, 2, "a"}, {2, 4, "b"}, {4, 8, "a"}}};
  MultiLevelSegmentation est;
  est.duration = 8.0;
  est.levels = {full_track_partition(8.0), {{0, 3, "0"}, {3, 8, "1"}}};
  MultiLevelSegmentation flat;
  flat.duration = 8.0;
  flat.levels = {full_track_partition(8.0)};
  write(dir / "ref.json", format_segmentation_json(ref));
  write(dir / "est.json", format_segmentation_json(est));
  write(dir / "flat.json", format_segmentation_json(flat));

  SUBCASE("single estimate") {
    const auto run = snfseg_cli({"evaluate", (dir / "est.json").string(), "-r", (dir / "ref.json").string(), "--out",
                          (dir / "scores.json").string()});
    REQUIRE(run.code == 0);
    const auto expected = l_scores(ref, est, 5.0);
    const auto doc = json::parse(read_text_file(dir / "scores.json"));
    CHECK(doc["scores"][0]["precision"].get<double>() == expected.precision);
    CHECK(doc["mean"]["lmeasure"].get<double>() == doctest::Approx(expected.lmeasure));
    CHECK(run.out.find("mean") != std::string::npos);

    const auto no_triples = snfseg_cli({"evaluate", (dir / "flat.json").string(), "-r", (dir / "ref.json").string()});
    REQUIRE(no_triples.code == 0);
    CHECK(no_triples.out.find("estimate induces no triples") != std::string::npos);
    CHECK(snfseg_cli({"evaluate", (dir / "est.json").string()}).code == 1);
  }

  SUBCASE("batch, then the distribution table") {
    fs::create_directories(dir / "est");
    fs::create_directories(dir / "refs");
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<int> cut(1, 7);
    auto random_two_level = [&] {
      MultiLevelSegmentation h;
      h.duration = 8.0;
      const double c = cut(rng);
      h.levels = {full_track_partition(8.0), {{0, c, "A"}, {c, 8, "B"}}};
      return h;
    };
    for (int t = 0; t < 4; ++t) {
      const std::string track = "track" + std::to_string(t);
      write(dir / "est" / (track + ".json"), format_segmentation_json(random_two_level()));
      fs::create_directories(dir / "refs" / track);
      write(dir / "refs" / track / "a1.json", format_segmentation_json(random_two_level()));
      write(dir / "refs" / track / "a2.json", format_segmentation_json(random_two_level()));
    }
    write(dir / "est" / "lonely.json", format_segmentation_json(est));

    const auto batch = snfseg_cli({"evaluate", "--estimates", (dir / "est").string(), "--references", (dir / "refs").string(),
                            "--tag", "fused", "--jobs", "2", "--out", (dir / "report.json").string()});
    REQUIRE(batch.code == 0);
    CHECK(batch.out.find("skipped (no reference): lonely") != std::string::npos);
    const auto report = json::parse(read_text_file(dir / "report.json"));
    CHECK(report["per_track"].size() == 8);
    CHECK(report["inter_annotator_sample"]["precision"].size() == 8);
    CHECK(report["inter_annotator_sample"]["lmeasure"].size() == 4);

    const auto cmp = snfseg_cli({"compare-distributions", "--annotators", (dir / "report.json").string(), "--estimator",
                          "fused=" + (dir / "report.json").string(), "--out", (dir / "table.json").string(), "--plot",
                          (dir / "dist.svg").string()});
    REQUIRE(cmp.code == 0);
    CHECK(cmp.out.find("mu(P)") != std::string::npos);
    CHECK(cmp.out.find("Inter-Anno") != std::string::npos);
    const auto table = json::parse(read_text_file(dir / "table.json"));
    CHECK(table["columns"].size() == 6);
    REQUIRE(table["rows"].size() == 2);
    CHECK(table["rows"][0]["ks_lmeasure"].is_null());
    CHECK(table["rows"][1]["name"] == "fused");
    std::vector<double> pe, pa;
    for (const auto& v : report["estimator_sample"]["lmeasure"]) pe.push_back(v.get<double>());
    for (const auto& v : report["inter_annotator_sample"]["lmeasure"]) pa.push_back(v.get<double>());
    CHECK(table["rows"][1]["ks_lmeasure"].get<double>() == ks_statistic(pe, pa));
    const auto svg = read_text_file(dir / "dist.svg");
    CHECK(svg.find("L-precision") != std::string::npos);
    CHECK(svg.find("L-recall") != std::string::npos);
    CHECK(svg.find("L-measure") != std::string::npos);
    CHECK(svg.find("fused (K=") != std::string::npos);

    CHECK(snfseg_cli({"compare-distributions", "--annotators", (dir / "report.json").string()}).code == 1);
    write(dir / "empty.json", R"({"precision": [], "recall": [], "lmeasure": []})");
    CHECK(snfseg_cli({"compare-distributions", "--annotators", (dir / "empty.json").string(), "--estimator",
               (dir / "report.json").string()})
              .code == 2);
  }
}
