#pragma once

#include <span>
#include <string>
#include <vector>

#include "snfseg/types.hpp"

namespace snfseg::svg {

/// Grayscale heatmap, darker = larger. Matrices above `max_cells` per side are
/// block-averaged down first.
std::string heatmap(const Matrix& m, const std::string& title, Index max_cells = 800);

/// Scott's-rule Gaussian kernel density estimate evaluated at `xs`.
std::vector<double> gaussian_kde(std::span<const double> sample, std::span<const double> xs);
double scott_bandwidth(std::span<const double> sample);

struct DensitySeries {
  std::string label;  // legend text
  std::vector<double> values;
};

struct DensityPanel {
  std::string title;
  std::vector<DensitySeries> series;
};

/// Side-by-side density curves over [0, 1], one panel per measure.
std::string density_panels(std::span<const DensityPanel> panels);

}  // namespace snfseg::svg
