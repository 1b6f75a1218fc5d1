#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "tgraph/core.hpp"

namespace tgraph::graph {

// 8-bit grayscale raster, row-major, used for optional patch features.
struct ImageGray {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
};

struct FeatureConfig {
  bool include_log_size = true;
  std::optional<int> patch_grid;

  int dimension() const {
    int d = include_log_size ? 6 : 4;
    if (patch_grid) d += *patch_grid * *patch_grid;
    return d;
  }
};

struct WeightedAdjacency {
  Eigen::MatrixXd a_row;
  Eigen::MatrixXd a_col;
};

// Rows are per-cell feature vectors: (cx/W, cy/H, w/W, h/H), optionally
// extended with log sizes and patch mean intensities.
Eigen::MatrixXd node_features(const TableGraph& t, const FeatureConfig& cfg,
                              const ImageGray* image = nullptr);

// Gaussian distance weights between cell centers: a_row from vertical
// distance, a_col from horizontal distance, zero diagonal.
WeightedAdjacency build_adjacency(const TableGraph& t, double alpha);

// Keeps the k*N largest-weight undirected edges per matrix, zeroing the rest.
WeightedAdjacency prune_edges(const WeightedAdjacency& a, int k);

// D^(-1/2) (A + I) D^(-1/2) with D the degree matrix of A + I.
Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& a);

// Greedy descending-IoU assignment of candidate boxes to gt cells,
// keeping pairs with IoU strictly above 0.5.
std::vector<std::pair<int, int>> select_training_nodes(
    const std::vector<CornerBox>& candidates, const TableGraph& gt);

// Keeps ceil(keep_fraction * N) cells chosen uniformly by the seeded
// generator; surviving cells stay in their original order.
TableGraph ablate_nodes(const TableGraph& t, double keep_fraction, std::uint64_t seed);

}  // namespace tgraph::graph
