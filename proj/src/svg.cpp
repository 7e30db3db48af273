#include "snfseg/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

namespace snfseg::svg {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

Matrix block_average(const Matrix& m, Index cells) {
  const Index rows = std::min(m.rows(), cells);
  const Index cols = std::min(m.cols(), cells);
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Index r0 = i * m.rows() / rows;
    const Index r1 = std::max(r0 + 1, (i + 1) * m.rows() / rows);
    for (Index j = 0; j < cols; ++j) {
      const Index c0 = j * m.cols() / cols;
      const Index c1 = std::max(c0 + 1, (j + 1) * m.cols() / cols);
      out(i, j) = m.block(r0, c0, r1 - r0, c1 - c0).mean();
    }
  }
  return out;
}

constexpr std::array<const char*, 8> kPalette = {"#000000", "#d62728", "#1f77b4", "#2ca02c",
                                                 "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

}  // namespace

std::string heatmap(const Matrix& input, const std::string& title, Index max_cells) {
  const Matrix m = (input.rows() > max_cells || input.cols() > max_cells) ? block_average(input, max_cells) : input;
  const double lo = m.size() ? m.minCoeff() : 0.0;
  const double hi = m.size() ? m.maxCoeff() : 1.0;
  const double span = hi > lo ? hi - lo : 1.0;
  const int top = 24;

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(m.cols()) + "\" height=\"" +
         std::to_string(m.rows() + top) + "\" viewBox=\"0 0 " + std::to_string(m.cols()) + " " +
         std::to_string(m.rows() + top) + "\" shape-rendering=\"crispEdges\">\n";
  out += "<text x=\"2\" y=\"16\" font-family=\"sans-serif\" font-size=\"12\">" + escape(title) + "</text>\n";
  for (Index i = 0; i < m.rows(); ++i) {
    Index j = 0;
    while (j < m.cols()) {
      const int gray = static_cast<int>(std::lround(255.0 * (1.0 - (m(i, j) - lo) / span)));
      Index run = 1;
      while (j + run < m.cols() &&
             static_cast<int>(std::lround(255.0 * (1.0 - (m(i, j + run) - lo) / span))) == gray) {
        ++run;
      }
      char buf[128];
      std::snprintf(buf, sizeof buf, "<rect x=\"%ld\" y=\"%ld\" width=\"%ld\" height=\"1\" fill=\"rgb(%d,%d,%d)\"/>\n",
                    static_cast<long>(j), static_cast<long>(i + top), static_cast<long>(run), gray, gray, gray);
      out += buf;
      j += run;
    }
  }
  out += "</svg>\n";
  return out;
}

double scott_bandwidth(std::span<const double> sample) {
  const auto n = static_cast<double>(sample.size());
  if (sample.size() < 2) return 0.05;
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
  double var = 0.0;
  for (const double v : sample) var += (v - mean) * (v - mean);
  var /= n - 1.0;
  const double h = std::sqrt(var) * std::pow(n, -0.2);
  // degenerate (constant) samples get a narrow spike instead of a zero-width kernel
  return h > 1e-3 ? h : 1e-2;
}

std::vector<double> gaussian_kde(std::span<const double> sample, std::span<const double> xs) {
  std::vector<double> out(xs.size(), 0.0);
  if (sample.empty()) return out;
  const double h = scott_bandwidth(sample);
  const double norm = 1.0 / (static_cast<double>(sample.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double acc = 0.0;
    for (const double v : sample) {
      const double z = (xs[i] - v) / h;
      acc += std::exp(-0.5 * z * z);
    }
    out[i] = acc * norm;
  }
  return out;
}

std::string density_panels(std::span<const DensityPanel> panels) {
  constexpr int kWidth = 320, kHeight = 240, kMargin = 36, kGrid = 201, kLegendLine = 14;
  std::size_t max_series = 0;
  for (const auto& p : panels) max_series = std::max(max_series, p.series.size());
  const int legend = static_cast<int>(max_series) * kLegendLine + 8;
  const int total_w = static_cast<int>(panels.size()) * kWidth;
  const int total_h = kHeight + legend;

  std::vector<double> xs(kGrid);
  for (int i = 0; i < kGrid; ++i) xs[static_cast<std::size_t>(i)] = static_cast<double>(i) / (kGrid - 1);

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(total_w) + "\" height=\"" +
                    std::to_string(total_h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    const int x0 = static_cast<int>(p) * kWidth;
    const int plot_w = kWidth - 2 * kMargin;
    const int plot_h = kHeight - 2 * kMargin;
    out += "<g class=\"panel\" transform=\"translate(" + std::to_string(x0) + ",0)\">\n";
    out += "<text x=\"" + std::to_string(kWidth / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" +
           escape(panel.title) + "</text>\n";
    out += "<rect x=\"" + std::to_string(kMargin) + "\" y=\"" + std::to_string(kMargin) + "\" width=\"" +
           std::to_string(plot_w) + "\" height=\"" + std::to_string(plot_h) + "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
      const double tx = kMargin + plot_w * tick / 4.0;
      out += "<text x=\"" + fmt("%.1f", tx) + "\" y=\"" + std::to_string(kMargin + plot_h + 14) +
             "\" text-anchor=\"middle\">" + fmt("%.2f", tick / 4.0) + "</text>\n";
    }

    std::vector<std::vector<double>> curves;
    double peak = 0.0;
    for (const auto& s : panel.series) {
      curves.push_back(gaussian_kde(s.values, xs));
      for (const double v : curves.back()) peak = std::max(peak, v);
    }
    if (peak <= 0.0) peak = 1.0;

    for (std::size_t s = 0; s < panel.series.size(); ++s) {
      const char* colour = kPalette[s % kPalette.size()];
      std::string points;
      for (int i = 0; i < kGrid; ++i) {
        const double px = kMargin + plot_w * xs[static_cast<std::size_t>(i)];
        const double py = kMargin + plot_h * (1.0 - curves[s][static_cast<std::size_t>(i)] / peak);
        points += fmt("%.2f", px) + "," + fmt("%.2f", py) + " ";
      }
      out += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.5\" points=\"" + points +
             "\"/>\n";
      const int ly = kHeight + static_cast<int>(s) * kLegendLine;
      out += "<line x1=\"" + std::to_string(kMargin) + "\" y1=\"" + std::to_string(ly - 4) + "\" x2=\"" +
             std::to_string(kMargin + 16) + "\" y2=\"" + std::to_string(ly - 4) + "\" stroke=\"" + colour +
             "\" stroke-width=\"2\"/>\n";
      out += "<text class=\"legend\" x=\"" + std::to_string(kMargin + 20) + "\" y=\"" + std::to_string(ly) + "\">" +
             escape(panel.series[s].label) + "</text>\n";
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace snfseg::svg
