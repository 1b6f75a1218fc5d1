#include "tgraph/spatial.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace tgraph::spatial {

namespace {

std::vector<std::uint8_t> indicator(const SegMap& map, int class_id) {
  std::vector<std::uint8_t> mask(map.labels.size(), 0);
  for (std::size_t i = 0; i < map.labels.size(); ++i) {
    mask[i] = map.labels[i] == class_id ? 1 : 0;
  }
  return mask;
}

// 3x3 erosion with zero padding: a pixel survives iff its full neighborhood
// is set.
std::vector<std::uint8_t> erode3x3(const std::vector<std::uint8_t>& mask,
                                   int width, int height) {
  std::vector<std::uint8_t> out(mask.size(), 0);
  for (int y = 1; y + 1 < height; ++y) {
    for (int x = 1; x + 1 < width; ++x) {
      bool all = true;
      for (int dy = -1; dy <= 1 && all; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if (!mask[static_cast<std::size_t>(y + dy) * width + (x + dx)]) {
            all = false;
            break;
          }
        }
      }
      if (all) out[static_cast<std::size_t>(y) * width + x] = 1;
    }
  }
  return out;
}

std::vector<std::uint8_t> dilate3x3(const std::vector<std::uint8_t>& mask,
                                    int width, int height) {
  std::vector<std::uint8_t> out(mask.size(), 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!mask[static_cast<std::size_t>(y) * width + x]) continue;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int ny = y + dy;
          const int nx = x + dx;
          if (ny < 0 || ny >= height || nx < 0 || nx >= width) continue;
          out[static_cast<std::size_t>(ny) * width + nx] = 1;
        }
      }
    }
  }
  return out;
}

int read_pgm_token(std::istream& in) {
  // Skips whitespace and '#' comment lines, then reads one decimal token.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) {
    throw Error(ErrorCode::ParseError, "malformed PGM header");
  }
  int value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    c = in.get();
  }
  return value;
}

}  // namespace

SegMap morph_open(const SegMap& map, int class_id) {
  if (class_id < 0 || class_id >= SegMap::kNumClasses) {
    throw Error(ErrorCode::InvalidIndex, "class id out of range");
  }
  const std::vector<std::uint8_t> mask = indicator(map, class_id);
  const std::vector<std::uint8_t> opened =
      dilate3x3(erode3x3(mask, map.width, map.height), map.width, map.height);
  SegMap out = map;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && !opened[i]) out.labels[i] = 0;
  }
  return out;
}

std::vector<Component> connected_components(const SegMap& map, int class_id) {
  if (class_id < 0 || class_id >= SegMap::kNumClasses) {
    throw Error(ErrorCode::InvalidIndex, "class id out of range");
  }
  const int w = map.width;
  const int h = map.height;
  std::vector<int> comp_of(map.labels.size(), -1);
  std::vector<Component> comps;
  std::vector<std::pair<int, int>> stack;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (map.labels[idx] != class_id || comp_of[idx] >= 0) continue;
      Component comp;
      comp.min_row = comp.max_row = y;
      comp.min_col = comp.max_col = x;
      const int comp_index = static_cast<int>(comps.size());
      comp_of[idx] = comp_index;
      stack.clear();
      stack.emplace_back(y, x);
      while (!stack.empty()) {
        const auto [cy, cx] = stack.back();
        stack.pop_back();
        comp.pixels.emplace_back(cy, cx);
        comp.min_row = std::min(comp.min_row, cy);
        comp.max_row = std::max(comp.max_row, cy);
        comp.min_col = std::min(comp.min_col, cx);
        comp.max_col = std::max(comp.max_col, cx);
        constexpr int kDy[4] = {-1, 1, 0, 0};
        constexpr int kDx[4] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
          const int ny = cy + kDy[d];
          const int nx = cx + kDx[d];
          if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
          const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
          if (map.labels[nidx] != class_id || comp_of[nidx] >= 0) continue;
          comp_of[nidx] = comp_index;
          stack.emplace_back(ny, nx);
        }
      }
      comps.push_back(std::move(comp));
    }
  }

  // The scan finds a component at its first row-major pixel, whose column is
  // only the min within that row; order by the component-wide minima instead.
  std::stable_sort(comps.begin(), comps.end(),
                   [](const Component& a, const Component& b) {
                     if (a.min_row != b.min_row) return a.min_row < b.min_row;
                     return a.min_col < b.min_col;
                   });
  for (std::size_t i = 0; i < comps.size(); ++i) {
    comps[i].label = static_cast<int>(i);
  }
  return comps;
}

std::vector<CornerBox> min_bounding_boxes(const std::vector<Component>& comps,
                                          int min_area) {
  if (min_area < 0) throw Error(ErrorCode::InvalidIndex, "min_area must be >= 0");
  std::vector<CornerBox> boxes;
  for (const Component& comp : comps) {
    if (static_cast<int>(comp.pixels.size()) < min_area) continue;
    boxes.push_back(CornerBox{static_cast<double>(comp.min_col),
                              static_cast<double>(comp.min_row),
                              static_cast<double>(comp.max_col - comp.min_col + 1),
                              static_cast<double>(comp.max_row - comp.min_row + 1)});
  }
  return boxes;
}

std::vector<CornerBox> detect_cells(const SegMap& map, bool open_first,
                                    int min_area) {
  const SegMap& source = map;
  if (open_first) {
    SegMap opened = morph_open(source, 1);
    return min_bounding_boxes(connected_components(opened, 1), min_area);
  }
  return min_bounding_boxes(connected_components(source, 1), min_area);
}

SegMap load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open PGM file: " + path);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') {
    throw Error(ErrorCode::ParseError, "not a binary PGM (P5) file: " + path);
  }
  SegMap map;
  map.width = read_pgm_token(in);
  map.height = read_pgm_token(in);
  const int maxval = read_pgm_token(in);
  if (map.width <= 0 || map.height <= 0 || maxval != 255) {
    throw Error(ErrorCode::ParseError, "unsupported PGM geometry or maxval: " + path);
  }
  // read_pgm_token already consumed the single whitespace byte after maxval,
  // so the stream sits at the first pixel.
  map.labels.resize(static_cast<std::size_t>(map.width) * map.height);
  in.read(reinterpret_cast<char*>(map.labels.data()),
          static_cast<std::streamsize>(map.labels.size()));
  if (in.gcount() != static_cast<std::streamsize>(map.labels.size())) {
    throw Error(ErrorCode::ParseError, "truncated PGM pixel data: " + path);
  }
  for (std::uint8_t v : map.labels) {
    if (v >= SegMap::kNumClasses) {
      throw Error(ErrorCode::ParseError,
                  "PGM gray value is not a segmentation class id: " + path);
    }
  }
  return map;
}

void save_pgm(const SegMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write PGM file: " + path);
  out << "P5\n" << map.width << " " << map.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(map.labels.data()),
            static_cast<std::streamsize>(map.labels.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing PGM file: " + path);
}

}  // namespace tgraph::spatial
