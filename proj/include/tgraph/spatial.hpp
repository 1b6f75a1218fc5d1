#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tgraph/core.hpp"

namespace tgraph::spatial {

// One 4-connected region of a single class, pixels in (row, col) grid
// coordinates.
struct Component {
  int label = 0;
  std::vector<std::pair<int, int>> pixels;
  int min_row = 0;
  int min_col = 0;
  int max_row = 0;
  int max_col = 0;
};

// Binary opening (3x3 all-ones erosion then dilation) of the class_id
// indicator. Pixels the opening removes become background; other classes are
// untouched. Outside the image counts as background.
SegMap morph_open(const SegMap& map, int class_id);

// 4-connected components of the class_id indicator, ordered by the
// component-wide (min row, min col).
std::vector<Component> connected_components(const SegMap& map, int class_id);

// Tight axis-aligned box per component, same order; components smaller than
// min_area pixels are dropped.
std::vector<CornerBox> min_bounding_boxes(const std::vector<Component>& comps,
                                          int min_area = 4);

// Full extraction: optional opening on the cell class, then components, then
// boxes.
std::vector<CornerBox> detect_cells(const SegMap& map, bool open_first = false,
                                    int min_area = 4);

// Binary PGM (P5, maxval 255) with gray values used directly as class ids.
SegMap load_pgm(const std::string& path);
void save_pgm(const SegMap& map, const std::string& path);

}  // namespace tgraph::spatial
