#include "tgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tgraph/metrics.hpp"
#include "tgraph/rng.hpp"

namespace tgraph::graph {

namespace {

// Mean intensity of the image pixels covered by [x0, x1) x [y0, y1),
// normalized to [0, 1]; 0 when the window covers no pixels.
double patch_mean(const ImageGray& image, double x0, double x1, double y0, double y1) {
  const int cx0 = std::max(0, static_cast<int>(std::floor(x0)));
  const int cx1 = std::min(image.width, static_cast<int>(std::ceil(x1)));
  const int cy0 = std::max(0, static_cast<int>(std::floor(y0)));
  const int cy1 = std::min(image.height, static_cast<int>(std::ceil(y1)));
  if (cx0 >= cx1 || cy0 >= cy1) return 0.0;
  double sum = 0.0;
  for (int y = cy0; y < cy1; ++y) {
    for (int x = cx0; x < cx1; ++x) sum += image.at(y, x);
  }
  return sum / (255.0 * (cx1 - cx0) * (cy1 - cy0));
}

}  // namespace

Eigen::MatrixXd node_features(const TableGraph& t, const FeatureConfig& cfg,
                              const ImageGray* image) {
  if (t.width <= 0 || t.height <= 0) {
    throw Error(ErrorCode::InvalidBox, "table dimensions must be positive");
  }
  if (cfg.patch_grid) {
    if (*cfg.patch_grid < 1) {
      throw Error(ErrorCode::InvalidK, "patch_grid must be at least 1");
    }
    if (image == nullptr) {
      throw Error(ErrorCode::MissingImage, "patch features require an image");
    }
  }
  const auto n = static_cast<Eigen::Index>(t.cells.size());
  Eigen::MatrixXd x(n, cfg.dimension());
  const double w_img = t.width;
  const double h_img = t.height;
  for (Eigen::Index i = 0; i < n; ++i) {
    const CenterBox& box = t.cells[static_cast<std::size_t>(i)].box;
    Eigen::Index col = 0;
    x(i, col++) = box.cx / w_img;
    x(i, col++) = box.cy / h_img;
    x(i, col++) = box.w / w_img;
    x(i, col++) = box.h / h_img;
    if (cfg.include_log_size) {
      x(i, col++) = std::log(box.w / w_img);
      x(i, col++) = std::log(box.h / h_img);
    }
    if (cfg.patch_grid) {
      const int g = *cfg.patch_grid;
      const CornerBox corner = center_to_corner(box);
      for (int py = 0; py < g; ++py) {
        for (int px = 0; px < g; ++px) {
          const double x0 = corner.x_min + corner.width * px / g;
          const double x1 = corner.x_min + corner.width * (px + 1) / g;
          const double y0 = corner.y_min + corner.height * py / g;
          const double y1 = corner.y_min + corner.height * (py + 1) / g;
          x(i, col++) = patch_mean(*image, x0, x1, y0, y1);
        }
      }
    }
  }
  return x;
}

WeightedAdjacency build_adjacency(const TableGraph& t, double alpha) {
  if (alpha <= 0.0) {
    throw Error(ErrorCode::InvalidAlpha, "alpha must be positive");
  }
  if (t.width <= 0 || t.height <= 0) {
    throw Error(ErrorCode::InvalidBox, "table dimensions must be positive");
  }
  const auto n = static_cast<Eigen::Index>(t.cells.size());
  WeightedAdjacency adj;
  adj.a_row = Eigen::MatrixXd::Zero(n, n);
  adj.a_col = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const CenterBox& bi = t.cells[static_cast<std::size_t>(i)].box;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const CenterBox& bj = t.cells[static_cast<std::size_t>(j)].box;
      const double dy = (bi.cy - bj.cy) / t.height * alpha;
      const double dx = (bi.cx - bj.cx) / t.width * alpha;
      adj.a_row(i, j) = std::exp(-dy * dy);
      adj.a_row(j, i) = adj.a_row(i, j);
      adj.a_col(i, j) = std::exp(-dx * dx);
      adj.a_col(j, i) = adj.a_col(i, j);
    }
  }
  return adj;
}

namespace {

Eigen::MatrixXd prune_matrix(const Eigen::MatrixXd& a, long long budget) {
  const Eigen::Index n = a.rows();
  const long long total = static_cast<long long>(n) * (n - 1) / 2;
  if (total <= budget) return a;

  struct Edge {
    double weight;
    Eigen::Index i;
    Eigen::Index j;
  };
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) edges.push_back({a(i, j), i, j});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (long long k = 0; k < budget; ++k) {
    const Edge& e = edges[static_cast<std::size_t>(k)];
    out(e.i, e.j) = e.weight;
    out(e.j, e.i) = e.weight;
  }
  return out;
}

}  // namespace

WeightedAdjacency prune_edges(const WeightedAdjacency& a, int k) {
  if (k < 1) {
    throw Error(ErrorCode::InvalidK, "edge budget k must be at least 1");
  }
  const long long budget = static_cast<long long>(k) * a.a_row.rows();
  WeightedAdjacency out;
  out.a_row = prune_matrix(a.a_row, budget);
  out.a_col = prune_matrix(a.a_col, budget);
  return out;
}

Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd b = a + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd inv_sqrt_deg = b.rowwise().sum().array().rsqrt();
  return inv_sqrt_deg.asDiagonal() * b * inv_sqrt_deg.asDiagonal();
}

std::vector<std::pair<int, int>> select_training_nodes(
    const std::vector<CornerBox>& candidates, const TableGraph& gt) {
  struct Candidate {
    double iou;
    int index;
    int gt_id;
    std::size_t gt_pos;
  };
  std::vector<Candidate> overlaps;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    for (std::size_t g = 0; g < gt.cells.size(); ++g) {
      const double overlap =
          metrics::iou(candidates[c], center_to_corner(gt.cells[g].box));
      if (overlap > 0.5) {
        overlaps.push_back({overlap, static_cast<int>(c), gt.cells[g].id, g});
      }
    }
  }
  std::sort(overlaps.begin(), overlaps.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.index != b.index) return a.index < b.index;
    return a.gt_id < b.gt_id;
  });

  std::vector<std::pair<int, int>> pairs;
  std::vector<bool> cand_used(candidates.size(), false);
  std::vector<bool> gt_used(gt.cells.size(), false);
  for (const Candidate& c : overlaps) {
    if (cand_used[static_cast<std::size_t>(c.index)] || gt_used[c.gt_pos]) continue;
    cand_used[static_cast<std::size_t>(c.index)] = true;
    gt_used[c.gt_pos] = true;
    pairs.emplace_back(c.index, c.gt_id);
  }
  return pairs;
}

TableGraph ablate_nodes(const TableGraph& t, double keep_fraction, std::uint64_t seed) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidFraction, "keep_fraction must be in (0, 1]");
  }
  const std::size_t n = t.cells.size();
  // The epsilon keeps ceil from rounding up exact products that land a hair
  // above an integer in floating point (0.8 * 10 and the like).
  const auto keep =
      static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(n) - 1e-9));
  if (keep >= n) return t;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(order[i], order[j]);
  }
  order.resize(keep);
  std::sort(order.begin(), order.end());

  TableGraph out;
  out.table_id = t.table_id;
  out.width = t.width;
  out.height = t.height;
  out.cells.reserve(keep);
  for (std::size_t idx : order) out.cells.push_back(t.cells[idx]);
  return out;
}

}  // namespace tgraph::graph
