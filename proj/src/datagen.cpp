#include "tgraph/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "tgraph/parallel.hpp"
#include "tgraph/rng.hpp"

namespace tgraph::datagen {

namespace {

void validate_config(const GenConfig& cfg) {
  if (cfg.count < 1) {
    throw Error(ErrorCode::InvalidK, "count must be at least 1");
  }
  if (cfg.max_rows < 1 || cfg.max_cols < 1) {
    throw Error(ErrorCode::InvalidK, "max_rows and max_cols must be at least 1");
  }
  if (!(cfg.span_prob >= 0.0 && cfg.span_prob <= 1.0)) {
    throw Error(ErrorCode::InvalidFraction, "span_prob must be in [0, 1]");
  }
  if (!(cfg.jitter >= 0.0 && cfg.jitter < 0.4)) {
    throw Error(ErrorCode::InvalidFraction, "jitter must be in [0, 0.4)");
  }
  if (cfg.image_w <= 0 || cfg.image_h <= 0) {
    throw Error(ErrorCode::InvalidBox, "image dimensions must be positive");
  }
}

int draw_size(Rng& rng, int max_size, RowWeighting weighting) {
  if (weighting == RowWeighting::Uniform) {
    return 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_size)));
  }
  double total = 0.0;
  for (int s = 1; s <= max_size; ++s) total += 1.0 / s;
  const double u = rng.real() * total;
  double cumulative = 0.0;
  for (int s = 1; s <= max_size; ++s) {
    cumulative += 1.0 / s;
    if (u < cumulative) return s;
  }
  return max_size;
}

// Grid separators: evenly spaced, with interior ones perturbed by up to
// jitter * (extent / n) in either direction. The outer two stay pinned.
std::vector<int> separators(Rng& rng, int n, int extent, double jitter) {
  std::vector<int> sep(static_cast<std::size_t>(n) + 1);
  sep[0] = 0;
  sep[static_cast<std::size_t>(n)] = extent;
  const double step = static_cast<double>(extent) / n;
  for (int k = 1; k < n; ++k) {
    const double offset = (2.0 * rng.real() - 1.0) * jitter * step;
    sep[static_cast<std::size_t>(k)] = static_cast<int>(std::llround(k * step + offset));
  }
  for (int k = 0; k < n; ++k) {
    if (sep[static_cast<std::size_t>(k) + 1] - sep[static_cast<std::size_t>(k)] < 3) {
      throw Error(ErrorCode::GeometryError,
                  "grid slot thinner than 3 px; reduce rows/cols or jitter");
    }
  }
  return sep;
}

DatasetRecord make_table(const GenConfig& cfg, std::size_t index) {
  Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(index)));
  const int rows = draw_size(rng, cfg.max_rows, cfg.row_weighting);
  const int cols = draw_size(rng, cfg.max_cols, cfg.row_weighting);
  const std::vector<int> ys = separators(rng, rows, cfg.image_h, cfg.jitter);
  const std::vector<int> xs = separators(rng, cols, cfg.image_w, cfg.jitter);

  // Merge pass: each uncovered slot may absorb its right or lower neighbor,
  // producing only 1x2 / 2x1 cells. Covered slots are never candidates.
  const auto slot = [cols](int r, int c) {
    return static_cast<std::size_t>(r) * cols + c;
  };
  std::vector<bool> covered(static_cast<std::size_t>(rows) * cols, false);
  std::vector<int> row_end(covered.size());
  std::vector<int> col_end(covered.size());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      row_end[slot(r, c)] = r;
      col_end[slot(r, c)] = c;
    }
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (covered[slot(r, c)]) continue;
      if (rng.real() >= cfg.span_prob) continue;
      const bool prefer_horizontal = rng.real() < 0.5;
      const bool can_right = c + 1 < cols && !covered[slot(r, c + 1)];
      const bool can_down = r + 1 < rows && !covered[slot(r + 1, c)];
      if (prefer_horizontal ? can_right : !can_down && can_right) {
        covered[slot(r, c + 1)] = true;
        col_end[slot(r, c)] = c + 1;
      } else if (can_down) {
        covered[slot(r + 1, c)] = true;
        row_end[slot(r, c)] = r + 1;
      }
    }
  }

  TableGraph table;
  char id_buf[16];
  std::snprintf(id_buf, sizeof(id_buf), "t%06zu", index);
  table.table_id = id_buf;
  table.width = cfg.image_w;
  table.height = cfg.image_h;
  int next_id = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (covered[slot(r, c)]) continue;
      const int re = row_end[slot(r, c)];
      const int ce = col_end[slot(r, c)];
      CornerBox corner;
      corner.x_min = xs[static_cast<std::size_t>(c)] + 1;
      corner.y_min = ys[static_cast<std::size_t>(r)] + 1;
      corner.width = xs[static_cast<std::size_t>(ce) + 1] - xs[static_cast<std::size_t>(c)] - 2;
      corner.height = ys[static_cast<std::size_t>(re) + 1] - ys[static_cast<std::size_t>(r)] - 2;

      CellNode cell;
      cell.id = next_id++;
      cell.box = corner_to_center(corner);
      cell.logical = LogicalLocation{r, re, c, ce};
      if (cfg.with_text) {
        cell.text = "r" + std::to_string(r) + "c" + std::to_string(c);
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return DatasetRecord{std::move(table), std::nullopt};
}

}  // namespace

std::vector<DatasetRecord> generate(const GenConfig& cfg) {
  validate_config(cfg);
  std::vector<DatasetRecord> records(static_cast<std::size_t>(cfg.count));
  parallel_for(records.size(), [&](std::size_t i) { records[i] = make_table(cfg, i); });
  return records;
}

SegMap render_segmap(const TableGraph& t) {
  if (t.width <= 0 || t.height <= 0) {
    throw Error(ErrorCode::InvalidBox, "table dimensions must be positive");
  }
  SegMap map;
  map.width = t.width;
  map.height = t.height;
  map.labels.assign(static_cast<std::size_t>(t.width) * t.height, 0);

  struct PixelRect {
    int x0, y0, x1, y1;  // half-open
  };
  std::vector<PixelRect> rects;
  rects.reserve(t.cells.size());
  for (const CellNode& cell : t.cells) {
    const CornerBox corner = center_to_corner(cell.box);
    PixelRect rect;
    rect.x0 = static_cast<int>(std::llround(corner.x_min));
    rect.y0 = static_cast<int>(std::llround(corner.y_min));
    rect.x1 = rect.x0 + static_cast<int>(std::llround(corner.width));
    rect.y1 = rect.y0 + static_cast<int>(std::llround(corner.height));
    rects.push_back(rect);

    const int cx0 = std::max(0, rect.x0);
    const int cy0 = std::max(0, rect.y0);
    const int cx1 = std::min(t.width, rect.x1);
    const int cy1 = std::min(t.height, rect.y1);
    for (int y = cy0; y < cy1; ++y) {
      for (int x = cx0; x < cx1; ++x) {
        auto& label = map.labels[static_cast<std::size_t>(y) * t.width + x];
        if (label == 1) {
          throw Error(ErrorCode::GeometryError,
                      "cell " + std::to_string(cell.id) +
                          " overlaps a previously rendered cell");
        }
        label = 1;
      }
    }
  }

  // Frames go over background only, so they never cut into interiors.
  for (const PixelRect& rect : rects) {
    const int fx0 = rect.x0 - 1;
    const int fy0 = rect.y0 - 1;
    const int fx1 = rect.x1;  // inclusive frame coordinates
    const int fy1 = rect.y1;
    auto paint = [&](int x, int y) {
      if (x < 0 || x >= t.width || y < 0 || y >= t.height) return;
      auto& label = map.labels[static_cast<std::size_t>(y) * t.width + x];
      if (label == 0) label = 2;
    };
    for (int x = fx0; x <= fx1; ++x) {
      paint(x, fy0);
      paint(x, fy1);
    }
    for (int y = fy0; y <= fy1; ++y) {
      paint(fx0, y);
      paint(fx1, y);
    }
  }
  return map;
}

}  // namespace tgraph::datagen
