#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "snfseg/affinity.hpp"
#include "snfseg/audio.hpp"
#include "snfseg/clustering.hpp"
#include "snfseg/error.hpp"
#include "snfseg/features.hpp"
#include "snfseg/fusion.hpp"
#include "snfseg/hier_eval.hpp"
#include "snfseg/pipeline.hpp"

namespace py = pybind11;
using namespace snfseg;

namespace {

using Level = std::vector<std::tuple<double, double, std::string>>;

MultiLevelSegmentation to_hierarchy(const std::vector<Level>& levels, double duration) {
  MultiLevelSegmentation h;
  h.duration = duration;
  for (const auto& level : levels) {
    Partition p;
    for (const auto& [start, end, label] : level) p.push_back({start, end, label});
    h.levels.push_back(std::move(p));
  }
  if (!has_root_level(h)) h.levels.insert(h.levels.begin(), full_track_partition(duration));
  h.validate();
  return h;
}

std::vector<Level> from_hierarchy(const MultiLevelSegmentation& h) {
  std::vector<Level> out;
  for (const auto& p : h.levels) {
    Level level;
    for (const auto& s : p) level.emplace_back(s.start, s.end, s.label);
    out.push_back(std::move(level));
  }
  return out;
}

SquareMatrix distance_matrix(const Matrix& d) { return {d, MatrixRole::Distance, 1.0}; }
SquareMatrix affinity_matrix(const Matrix& w) { return {w, MatrixRole::Affinity, 1.0}; }

NeighborSet to_neighbors(const std::vector<std::vector<Index>>& rows) { return NeighborSet{rows}; }

PipelineConfig make_config(const py::dict& options) {
  PipelineConfig cfg;
  std::string text;
  for (const auto& [key, value] : options) {
    std::string v;
    if (py::isinstance<py::list>(value) || py::isinstance<py::tuple>(value)) {
      for (const auto& item : value) v += (v.empty() ? "" : ",") + py::str(item).cast<std::string>();
    } else {
      v = py::str(value).cast<std::string>();
    }
    text += py::str(key).cast<std::string>() + "=" + v + "\n";
  }
  apply_config_text(cfg, text, "<python>");
  cfg.validate();
  return cfg;
}

AudioBuffer make_audio(std::vector<double> samples, double sample_rate) {
  AudioBuffer a(std::move(samples), sample_rate);
  a.validate();
  return a;
}

py::dict result_dict(const SegmentationResult& r) {
  py::dict d;
  d["levels"] = from_hierarchy(r.hierarchy);
  d["duration"] = r.hierarchy.duration;
  d["fused"] = r.graph.data;
  std::vector<Matrix> affinities;
  for (const auto& a : r.affinities) affinities.push_back(a.data);
  d["affinities"] = affinities;
  d["eigenvalues"] = r.embedding.eigenvalues;
  d["embedding"] = r.embedding.vectors;
  d["frame_rate"] = r.grid.framerate;
  d["frame_offset"] = r.grid.offset;
  d["warnings"] = r.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_snfseg, m) {
  m.doc() = "Similarity network fusion and spectral clustering for hierarchical music structure";

  static py::exception<Error> error_type(m, "SnfsegError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error_type, e.what());
    }
  });

  py::enum_<FeatureKind>(m, "FeatureKind")
      .value("mfcc", FeatureKind::Mfcc)
      .value("chroma", FeatureKind::Chroma)
      .value("tempogram", FeatureKind::Tempogram)
      .value("crema", FeatureKind::CremaLike);

  // features
  m.def(
      "compute_mfcc",
      [](std::vector<double> samples, double sr, const py::dict& options) {
        return compute_mfcc(make_audio(std::move(samples), sr), make_config(options)).data;
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("options") = py::dict());
  m.def(
      "compute_chroma",
      [](std::vector<double> samples, double sr, const py::dict& options) {
        return compute_chroma(make_audio(std::move(samples), sr), make_config(options)).data;
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("options") = py::dict());
  m.def(
      "compute_tempogram",
      [](std::vector<double> samples, double sr, const py::dict& options) {
        return compute_tempogram(make_audio(std::move(samples), sr), make_config(options)).data;
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("options") = py::dict());
  m.def("read_wav", [](const std::string& path) {
    const auto a = read_wav(path);
    return py::make_tuple(a.samples, a.sample_rate);
  });

  // affinity
  m.def(
      "compute_ssm", [](const Matrix& x, FeatureKind kind) { return compute_ssm(FeatureMatrix(x, 1.0, kind)).data; },
      py::arg("features"), py::arg("kind") = FeatureKind::Mfcc);
  m.def("nearest_neighbors", [](const Matrix& d, int kappa) { return nearest_neighbors(distance_matrix(d), kappa).rows; },
        py::arg("distance"), py::arg("kappa") = 3);
  m.def("autotuned_affinity", [](const Matrix& d, int kappa) { return autotuned_affinity(distance_matrix(d), kappa).data; },
        py::arg("distance"), py::arg("kappa") = 3);
  m.def("diagonal_median_filter",
        [](const Matrix& w, int taps) { return diagonal_median_filter(affinity_matrix(w), taps).data; },
        py::arg("affinity"), py::arg("taps") = 9);

  // fusion
  m.def("transition_matrix", [](const Matrix& w) { return transition_matrix(affinity_matrix(w)).data; });
  m.def("kernel_matrix", [](const Matrix& w, const std::vector<std::vector<Index>>& neighbors) {
    return kernel_matrix(affinity_matrix(w), to_neighbors(neighbors)).data;
  });
  m.def(
      "snf_fuse",
      [](const std::vector<Matrix>& distances, int kappa, int iterations) {
        std::vector<FusionInput> inputs;
        for (const auto& d : distances) {
          const auto dist = distance_matrix(d);
          auto nn = nearest_neighbors(dist, kappa);
          auto w = autotuned_affinity(dist, nn);
          inputs.push_back({std::move(w), std::move(nn)});
        }
        return snf_fuse(inputs, iterations).data;
      },
      py::arg("distances"), py::arg("kappa") = 3, py::arg("iterations") = 10,
      "Fuses distance matrices: autotuned affinities, kappa-neighbour kernels, `iterations` updates.");

  // clustering
  m.def(
      "rw_laplacian_embedding",
      [](const Matrix& a, int k_max) {
        const auto e = rw_laplacian_embedding(affinity_matrix(a), k_max);
        return py::make_tuple(e.eigenvalues, e.vectors, e.residuals);
      },
      py::arg("affinity"), py::arg("k_max") = 10);
  m.def("kmeans", [](const Matrix& x, int k, std::uint64_t seed) { return kmeans(x, k, seed); }, py::arg("points"),
        py::arg("k"), py::arg("seed") = 0);

  // evaluation
  m.def(
      "l_scores",
      [](const std::vector<Level>& reference, const std::vector<Level>& estimate, double duration, double rate) {
        const auto s = l_scores(to_hierarchy(reference, duration), to_hierarchy(estimate, duration), rate);
        return py::make_tuple(s.precision, s.recall, s.lmeasure);
      },
      py::arg("reference"), py::arg("estimate"), py::arg("duration"), py::arg("sample_rate") = 5.0,
      "Levels are lists of (start, end, label) tuples; returns (precision, recall, L-measure).");
  m.def("ks_statistic",
        [](const std::vector<double>& a, const std::vector<double>& b) { return ks_statistic(a, b); });

  // pipeline
  m.def(
      "segment_features",
      [](const std::vector<std::pair<Matrix, FeatureKind>>& features, double framerate, double duration,
         const py::dict& options) {
        std::vector<FeatureMatrix> fs;
        for (const auto& [x, kind] : features) fs.emplace_back(x, framerate, kind);
        if (fs.size() == 1) return result_dict(segment_single_feature(fs.front(), duration, make_config(options)));
        return result_dict(segment_features(std::move(fs), duration, make_config(options)));
      },
      py::arg("features"), py::arg("framerate"), py::arg("duration"), py::arg("options") = py::dict(),
      "Segments frame-level features [(array, kind), ...]. A single feature skips fusion.");
  m.def(
      "segment_audio",
      [](std::vector<double> samples, double sr, const py::dict& options) {
        const auto cfg = make_config(options);
        const auto audio = make_audio(std::move(samples), sr);
        return result_dict(segment_features(extract_audio_features(audio, cfg, cfg.features), audio.duration(), cfg));
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("options") = py::dict());
}
