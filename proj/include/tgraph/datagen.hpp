#pragma once

#include <cstdint>
#include <vector>

#include "tgraph/core.hpp"

namespace tgraph::datagen {

enum class RowWeighting { Uniform, LongTail };

struct GenConfig {
  int count = 1;
  int max_rows = 8;
  int max_cols = 8;
  double span_prob = 0.0;
  int image_w = 960;
  int image_h = 960;
  double jitter = 0.1;
  RowWeighting row_weighting = RowWeighting::Uniform;
  std::uint64_t seed = 0;
  bool with_text = false;
};

// Deterministic synthetic tables: jittered grid partitions with optional
// rectangular 1x2 / 2x1 merges. Table i draws from mix_seed(seed, i), so
// output is identical whether tables are produced sequentially or in
// parallel, and different seeds produce unrelated table sets.
std::vector<DatasetRecord> generate(const GenConfig& cfg);

// Rasterizes cell interiors as class 1 and a 1-px frame around each cell as
// class 2 over a class-0 background.
SegMap render_segmap(const TableGraph& t);

}  // namespace tgraph::datagen
