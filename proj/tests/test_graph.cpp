#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "tgraph/core.hpp"
#include "tgraph/graph.hpp"
#include "tgraph/rng.hpp"

using namespace tgraph;
using graph::FeatureConfig;
using graph::ImageGray;
using graph::WeightedAdjacency;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a tgraph::Error");
  return ErrorCode::IoError;
}

CellNode cell(int id, double cx, double cy, double w, double h) {
  CellNode c;
  c.id = id;
  c.box = CenterBox{cx, cy, w, h};
  return c;
}

TableGraph table(int width, int height, std::vector<CellNode> cells) {
  TableGraph t;
  t.table_id = "t";
  t.width = width;
  t.height = height;
  t.cells = std::move(cells);
  return t;
}

}  // namespace

TEST_CASE("node_features normalizes position and size by the image extent") {
  const TableGraph t = table(100, 80, {cell(0, 50, 40, 50, 40), cell(1, 25, 20, 10, 8)});
  FeatureConfig cfg;
  cfg.include_log_size = false;
  const Eigen::MatrixXd x = graph::node_features(t, cfg);
  REQUIRE(x.rows() == 2);
  REQUIRE(x.cols() == 4);
  CHECK(x(0, 0) == 0.5);
  CHECK(x(0, 1) == 0.5);
  CHECK(x(0, 2) == 0.5);
  CHECK(x(0, 3) == 0.5);
  CHECK(x(1, 0) == 0.25);
  CHECK(x(1, 1) == 0.25);
  CHECK(x(1, 2) == 0.1);
  CHECK(x(1, 3) == 0.1);
}

TEST_CASE("node_features appends log sizes when enabled") {
  const TableGraph t = table(100, 80, {cell(0, 50, 40, 50, 40)});
  FeatureConfig cfg;
  cfg.include_log_size = true;
  CHECK(cfg.dimension() == 6);
  const Eigen::MatrixXd x = graph::node_features(t, cfg);
  REQUIRE(x.cols() == 6);
  CHECK(x(0, 4) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(x(0, 5) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("node_features reads patch means from the image") {
  ImageGray image;
  image.width = 2;
  image.height = 2;
  image.pixels = {0, 255, 255, 0};
  const TableGraph t = table(2, 2, {cell(0, 1, 1, 2, 2)});

  FeatureConfig quad;
  quad.include_log_size = false;
  quad.patch_grid = 2;
  CHECK(quad.dimension() == 8);
  const Eigen::MatrixXd x = graph::node_features(t, quad, &image);
  REQUIRE(x.cols() == 8);
  CHECK(x(0, 4) == 0.0);
  CHECK(x(0, 5) == 1.0);
  CHECK(x(0, 6) == 1.0);
  CHECK(x(0, 7) == 0.0);

  FeatureConfig whole;
  whole.include_log_size = false;
  whole.patch_grid = 1;
  const Eigen::MatrixXd y = graph::node_features(t, whole, &image);
  CHECK(y(0, 4) == 0.5);
}

TEST_CASE("node_features patch windows clip to the image") {
  ImageGray image;
  image.width = 2;
  image.height = 2;
  image.pixels = {0, 255, 255, 0};
  FeatureConfig cfg;
  cfg.include_log_size = false;
  cfg.patch_grid = 1;

  // A sub-pixel box inside pixel (0, 0).
  const TableGraph inside = table(2, 2, {cell(0, 0.5, 0.5, 0.6, 0.6)});
  CHECK(graph::node_features(inside, cfg, &image)(0, 4) == 0.0);

  // A box entirely past the raster: the window covers no pixels.
  const TableGraph outside = table(100, 100, {cell(0, 50, 50, 2, 2)});
  CHECK(graph::node_features(outside, cfg, &image)(0, 4) == 0.0);
}

TEST_CASE("node_features rejects bad inputs") {
  const TableGraph t = table(10, 10, {cell(0, 5, 5, 2, 2)});
  FeatureConfig patches;
  patches.patch_grid = 2;
  CHECK(code_of([&] { graph::node_features(t, patches, nullptr); }) ==
        ErrorCode::MissingImage);

  FeatureConfig zero_grid;
  zero_grid.patch_grid = 0;
  ImageGray image;
  image.width = 1;
  image.height = 1;
  image.pixels = {0};
  CHECK(code_of([&] { graph::node_features(t, zero_grid, &image); }) == ErrorCode::InvalidK);

  const TableGraph flat = table(10, 0, {cell(0, 5, 5, 2, 2)});
  CHECK(code_of([&] { graph::node_features(flat, FeatureConfig{}); }) ==
        ErrorCode::InvalidBox);
}

TEST_CASE("build_adjacency matches the closed form on worked distances") {
  // Vertical gap of a third of the image at alpha 3: weight e^-1.
  const TableGraph t1 =
      table(480, 480, {cell(0, 100, 100, 10, 10), cell(1, 100, 260, 10, 10)});
  const WeightedAdjacency a1 = graph::build_adjacency(t1, 3.0);
  CHECK(a1.a_row(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(a1.a_col(0, 1) == 1.0);
  CHECK(a1.a_row(0, 0) == 0.0);
  CHECK(a1.a_row(1, 1) == 0.0);
  CHECK(a1.a_col(0, 0) == 0.0);
  CHECK(a1.a_row(1, 0) == a1.a_row(0, 1));

  // Horizontal gap of the full image width: weight e^-9.
  const TableGraph t2 =
      table(480, 480, {cell(0, 0, 100, 10, 10), cell(1, 480, 100, 10, 10)});
  const WeightedAdjacency a2 = graph::build_adjacency(t2, 3.0);
  CHECK(a2.a_col(0, 1) == doctest::Approx(std::exp(-9.0)).epsilon(1e-12));
  CHECK(a2.a_row(0, 1) == 1.0);
}

TEST_CASE("build_adjacency weights fall as distance grows and alpha sharpens") {
  const TableGraph t = table(100, 100,
                             {cell(0, 50, 10, 4, 4), cell(1, 50, 20, 4, 4),
                              cell(2, 50, 45, 4, 4), cell(3, 50, 90, 4, 4)});
  const WeightedAdjacency a = graph::build_adjacency(t, 3.0);
  CHECK(a.a_row(0, 1) > a.a_row(0, 2));
  CHECK(a.a_row(0, 2) > a.a_row(0, 3));
  CHECK(a.a_col(0, 3) == 1.0);

  const WeightedAdjacency sharp = graph::build_adjacency(t, 10.0);
  CHECK(sharp.a_row(0, 1) < a.a_row(0, 1));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      CHECK(a.a_row(i, j) == a.a_row(j, i));
      CHECK(a.a_col(i, j) == a.a_col(j, i));
      if (i != j) {
        CHECK(a.a_row(i, j) > 0.0);
        CHECK(a.a_row(i, j) <= 1.0);
      }
    }
  }
}

TEST_CASE("build_adjacency is invariant under uniform scaling") {
  Rng rng(3);
  TableGraph small = table(100, 80, {});
  TableGraph big = table(400, 320, {});
  for (int i = 0; i < 6; ++i) {
    const double cx = rng.real(5.0, 95.0);
    const double cy = rng.real(5.0, 75.0);
    small.cells.push_back(cell(i, cx, cy, 4, 4));
    big.cells.push_back(cell(i, 4.0 * cx, 4.0 * cy, 16, 16));
  }
  const WeightedAdjacency a = graph::build_adjacency(small, 3.0);
  const WeightedAdjacency b = graph::build_adjacency(big, 3.0);
  // Scaling by a power of two is exact in floating point.
  CHECK((a.a_row.array() == b.a_row.array()).all());
  CHECK((a.a_col.array() == b.a_col.array()).all());
}

TEST_CASE("build_adjacency rejects bad inputs") {
  const TableGraph t = table(10, 10, {cell(0, 5, 5, 2, 2)});
  CHECK(code_of([&] { graph::build_adjacency(t, 0.0); }) == ErrorCode::InvalidAlpha);
  CHECK(code_of([&] { graph::build_adjacency(t, -1.0); }) == ErrorCode::InvalidAlpha);
  const TableGraph flat = table(0, 10, {cell(0, 5, 5, 2, 2)});
  CHECK(code_of([&] { graph::build_adjacency(flat, 3.0); }) == ErrorCode::InvalidBox);
}

TEST_CASE("prune_edges keeps the k*N strongest edges, ties by index") {
  WeightedAdjacency a;
  a.a_row = Eigen::MatrixXd::Zero(4, 4);
  a.a_col = Eigen::MatrixXd::Zero(4, 4);
  auto set = [&](int i, int j, double w) {
    a.a_row(i, j) = w;
    a.a_row(j, i) = w;
  };
  set(0, 2, 0.9);
  set(1, 3, 0.8);
  set(0, 3, 0.7);
  set(0, 1, 0.5);
  set(2, 3, 0.5);

  const WeightedAdjacency pruned = graph::prune_edges(a, 1);
  CHECK(pruned.a_row(0, 2) == 0.9);
  CHECK(pruned.a_row(1, 3) == 0.8);
  CHECK(pruned.a_row(0, 3) == 0.7);
  CHECK(pruned.a_row(0, 1) == 0.5);  // tie broken toward the smaller index pair
  CHECK(pruned.a_row(2, 3) == 0.0);
  CHECK(pruned.a_row(3, 2) == 0.0);
  CHECK(pruned.a_row(1, 2) == 0.0);
  CHECK((pruned.a_row.array() == pruned.a_row.transpose().eval().array()).all());
  CHECK(pruned.a_col.isZero(0.0));
}

TEST_CASE("prune_edges leaves graphs within budget untouched") {
  const TableGraph t = table(100, 100,
                             {cell(0, 10, 10, 4, 4), cell(1, 50, 50, 4, 4),
                              cell(2, 90, 90, 4, 4)});
  const WeightedAdjacency a = graph::build_adjacency(t, 3.0);
  const WeightedAdjacency pruned = graph::prune_edges(a, 1);
  CHECK((a.a_row.array() == pruned.a_row.array()).all());
  CHECK((a.a_col.array() == pruned.a_col.array()).all());
}

TEST_CASE("prune_edges rejects a nonpositive budget") {
  WeightedAdjacency a;
  a.a_row = Eigen::MatrixXd::Zero(2, 2);
  a.a_col = Eigen::MatrixXd::Zero(2, 2);
  CHECK(code_of([&] { graph::prune_edges(a, 0); }) == ErrorCode::InvalidK);
}

TEST_CASE("normalize_adjacency matches hand-computed values") {
  Eigen::MatrixXd single(1, 1);
  single << 0.0;
  CHECK(graph::normalize_adjacency(single)(0, 0) == 1.0);

  Eigen::MatrixXd pair(2, 2);
  pair << 0.0, 1.0, 1.0, 0.0;
  const Eigen::MatrixXd norm = graph::normalize_adjacency(pair);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) CHECK(norm(i, j) == doctest::Approx(0.5).epsilon(1e-12));
  }

  const Eigen::MatrixXd disconnected = Eigen::MatrixXd::Zero(3, 3);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(3, 3);
  CHECK((graph::normalize_adjacency(disconnected).array() == identity.array()).all());
}

TEST_CASE("normalize_adjacency equals the per-entry closed form") {
  Rng rng(5);
  const int n = 7;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      a(i, j) = rng.real(0.0, 1.0);
      a(j, i) = a(i, j);
    }
  }
  const Eigen::MatrixXd norm = graph::normalize_adjacency(a);
  Eigen::MatrixXd b = a + Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double deg_i = b.row(i).sum();
      const double deg_j = b.row(j).sum();
      CHECK(norm(i, j) == doctest::Approx(b(i, j) / std::sqrt(deg_i * deg_j)).epsilon(1e-12));
      CHECK(norm(i, j) == doctest::Approx(norm(j, i)).epsilon(1e-14));
    }
  }
}

TEST_CASE("select_training_nodes keeps only overlaps strictly above half") {
  TableGraph gt = table(10, 10, {});
  gt.cells.push_back(cell(7, 0.5, 1.0, 1.0, 2.0));  // corner (0, 0, 1, 2)
  gt.cells.push_back(cell(9, 6.0, 6.0, 2.0, 2.0));  // corner (5, 5, 2, 2)

  const std::vector<CornerBox> candidates = {
      CornerBox{0, 0, 1, 1},  // IoU exactly 0.5 with cell 7: excluded
      CornerBox{5, 5, 2, 2},  // exact copy of cell 9
      CornerBox{0, 0, 1, 2},  // exact copy of cell 7
  };
  const auto pairs = graph::select_training_nodes(candidates, gt);
  REQUIRE(pairs.size() == 2);
  CHECK((pairs[0] == std::pair<int, int>{1, 9}));
  CHECK((pairs[1] == std::pair<int, int>{2, 7}));
}

TEST_CASE("select_training_nodes assigns each gt cell at most once") {
  TableGraph gt = table(10, 10, {});
  gt.cells.push_back(cell(3, 6.0, 6.0, 2.0, 2.0));  // corner (5, 5, 2, 2)
  const std::vector<CornerBox> candidates = {
      CornerBox{5, 5, 2, 2},
      CornerBox{5, 5, 2, 2.5},  // IoU 0.8, loses to the exact copy
  };
  const auto pairs = graph::select_training_nodes(candidates, gt);
  REQUIRE(pairs.size() == 1);
  CHECK((pairs[0] == std::pair<int, int>{0, 3}));
}

TEST_CASE("ablate_nodes keeps ceil(fraction * n) cells in original order") {
  TableGraph t = table(100, 100, {});
  for (int i = 0; i < 10; ++i) t.cells.push_back(cell(i, 5.0 + i * 9.0, 50, 4, 4));

  const TableGraph quarter = graph::ablate_nodes(t, 0.25, 42);
  CHECK(quarter.cells.size() == 3);
  const TableGraph most = graph::ablate_nodes(t, 0.8, 42);
  CHECK(most.cells.size() == 8);

  for (std::size_t i = 1; i < most.cells.size(); ++i) {
    CHECK(most.cells[i - 1].id < most.cells[i].id);
  }
  CHECK(most.table_id == t.table_id);
  CHECK(most.width == t.width);
  CHECK(most.height == t.height);
}

TEST_CASE("ablate_nodes keeps everything at fraction one") {
  TableGraph t = table(100, 100, {});
  for (int i = 0; i < 5; ++i) t.cells.push_back(cell(i, 10.0 + i * 20.0, 50, 4, 4));
  const TableGraph kept = graph::ablate_nodes(t, 1.0, 0);
  CHECK(kept.cells.size() == 5);
}

TEST_CASE("ablate_nodes is seed-deterministic and seed-sensitive") {
  TableGraph t = table(100, 100, {});
  for (int i = 0; i < 20; ++i) t.cells.push_back(cell(i, 2.5 + i * 4.875, 50, 4, 4));

  auto kept_ids = [&](std::uint64_t seed) {
    std::vector<int> ids;
    for (const CellNode& c : graph::ablate_nodes(t, 0.5, seed).cells) ids.push_back(c.id);
    return ids;
  };
  CHECK(kept_ids(1) == kept_ids(1));
  bool any_different = false;
  for (std::uint64_t seed = 2; seed < 10 && !any_different; ++seed) {
    any_different = kept_ids(1) != kept_ids(seed);
  }
  CHECK(any_different);
}

TEST_CASE("ablate_nodes rejects fractions outside (0, 1]") {
  const TableGraph t = table(10, 10, {cell(0, 5, 5, 2, 2)});
  CHECK(code_of([&] { graph::ablate_nodes(t, 0.0, 0); }) == ErrorCode::InvalidFraction);
  CHECK(code_of([&] { graph::ablate_nodes(t, -0.5, 0); }) == ErrorCode::InvalidFraction);
  CHECK(code_of([&] { graph::ablate_nodes(t, 1.5, 0); }) == ErrorCode::InvalidFraction);
}
