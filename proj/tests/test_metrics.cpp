#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "tgraph/core.hpp"
#include "tgraph/datagen.hpp"
#include "tgraph/metrics.hpp"
#include "tgraph/rng.hpp"

namespace fs = std::filesystem;
using namespace tgraph;

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

CornerBox corner(double x, double y, double w, double h) { return {x, y, w, h}; }

CellNode cell(int id, CenterBox box, LogicalLocation logical) {
  CellNode c;
  c.id = id;
  c.box = box;
  c.logical = logical;
  return c;
}

// 2x2 grid, one cell per slot, boxes tiling a 100x80 image.
TableGraph grid_table() {
  TableGraph t;
  t.table_id = "grid";
  t.width = 100;
  t.height = 80;
  t.cells.push_back(cell(0, {25, 20, 46, 36}, {0, 0, 0, 0}));
  t.cells.push_back(cell(1, {75, 20, 46, 36}, {0, 0, 1, 1}));
  t.cells.push_back(cell(2, {25, 60, 46, 36}, {1, 1, 0, 0}));
  t.cells.push_back(cell(3, {75, 60, 46, 36}, {1, 1, 1, 1}));
  return t;
}

using Relation = metrics::AdjacencyRelation;
constexpr auto kH = metrics::Direction::Horizontal;
constexpr auto kV = metrics::Direction::Vertical;

}  // namespace

TEST_CASE("iou matches hand-computed overlaps") {
  CHECK(metrics::iou(corner(0, 0, 2, 2), corner(0, 0, 2, 2)) == 1.0);
  CHECK(metrics::iou(corner(0, 0, 2, 2), corner(5, 5, 2, 2)) == 0.0);
  CHECK(metrics::iou(corner(0, 0, 2, 2), corner(2, 0, 2, 2)) == 0.0);
  CHECK(metrics::iou(corner(0, 0, 1, 2), corner(0, 0, 1, 1)) == 0.5);
  CHECK(metrics::iou(corner(0, 0, 2, 1), corner(1, 0, 2, 1)) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(metrics::iou(corner(0, 0, 2, 2), corner(1, 1, 2, 2)) ==
        doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("match_boxes validates the threshold") {
  const std::vector<CornerBox> one = {corner(0, 0, 2, 2)};
  CHECK(code_of([&] { metrics::match_boxes(one, one, 0.0); }) ==
        ErrorCode::InvalidFraction);
  CHECK(code_of([&] { metrics::match_boxes(one, one, 1.1); }) ==
        ErrorCode::InvalidFraction);
  const metrics::Matching exact = metrics::match_boxes(one, one, 1.0);
  REQUIRE(exact.pairs.size() == 1);
  CHECK(exact.pairs[0].iou == 1.0);
}

TEST_CASE("match_boxes breaks IoU ties by detection index") {
  const std::vector<CornerBox> gts = {corner(0, 0, 4, 4)};
  const std::vector<CornerBox> dets = {corner(0, 0, 4, 2), corner(0, 2, 4, 2),
                                       corner(0, 0, 4, 4)};
  const metrics::Matching m = metrics::match_boxes(dets, gts, 0.5);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].det == 2);
  CHECK(m.pairs[0].gt == 0);

  const std::vector<CornerBox> halves = {corner(0, 0, 4, 2), corner(0, 2, 4, 2)};
  const metrics::Matching tie = metrics::match_boxes(halves, gts, 0.5);
  REQUIRE(tie.pairs.size() == 1);
  CHECK(tie.pairs[0].det == 0);  // equal IoU, lower index wins
}

TEST_CASE("greedy matching is optimal when ground truths are disjoint") {
  Rng rng(99);
  for (int trial = 0; trial < 150; ++trial) {
    const int n_gt = 1 + static_cast<int>(rng.below(4));
    std::vector<CornerBox> gts;
    for (int g = 0; g < n_gt; ++g) gts.push_back(corner(30.0 * g, 10.0, 20.0, 20.0));

    std::vector<CornerBox> dets;
    for (int g = 0; g < n_gt; ++g) {
      const int copies = static_cast<int>(rng.below(3));
      for (int c = 0; c < copies; ++c) {
        dets.push_back(corner(30.0 * g + rng.real(-4.0, 4.0), 10.0 + rng.real(-4.0, 4.0),
                              20.0 + rng.real(-3.0, 3.0), 20.0 + rng.real(-3.0, 3.0)));
      }
    }
    dets.push_back(corner(500.0 + rng.real(0.0, 10.0), 500.0, 5.0, 5.0));

    // With disjoint gts no detection clears the 0.5 bar for two of them, so
    // the best detection per gt is the unique optimum.
    std::set<std::pair<int, int>> expected;
    for (int g = 0; g < n_gt; ++g) {
      int best = -1;
      double best_iou = 0.0;
      for (std::size_t d = 0; d < dets.size(); ++d) {
        const double v = metrics::iou(dets[d], gts[static_cast<std::size_t>(g)]);
        if (v >= 0.5 && v > best_iou) {
          best_iou = v;
          best = static_cast<int>(d);
        }
      }
      if (best >= 0) expected.insert({best, g});
    }

    const metrics::Matching m = metrics::match_boxes(dets, gts, 0.5);
    std::set<std::pair<int, int>> got;
    for (const metrics::MatchPair& p : m.pairs) got.insert({p.det, p.gt});
    CHECK(got == expected);
  }
}

TEST_CASE("detection_prh pools precision, recall, and their harmonic mean") {
  std::vector<CornerBox> gts;
  for (int g = 0; g < 4; ++g) gts.push_back(corner(30.0 * g, 0.0, 20.0, 20.0));
  const std::vector<CornerBox> dets = {gts[0], corner(900, 900, 5, 5)};

  const metrics::Prh prh = metrics::detection_prh(dets, gts);
  CHECK(prh.precision == 0.5);
  CHECK(prh.recall == 0.25);
  CHECK(prh.hmean == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const metrics::Prh perfect = metrics::detection_prh(gts, gts);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.hmean == 1.0);

  const metrics::Prh nothing = metrics::detection_prh({}, gts);
  CHECK(nothing.precision == 0.0);
  CHECK(nothing.recall == 0.0);
  CHECK(nothing.hmean == 0.0);
}

TEST_CASE("logical_accuracy scores per head over ground-truth cells") {
  const TableGraph gt = grid_table();
  CHECK(metrics::logical_accuracy(gt, gt).a_all == 1.0);

  TableGraph pred = grid_table();
  pred.cells[3].logical = LogicalLocation{1, 1, 0, 1};
  metrics::LogicalAccuracy acc = metrics::logical_accuracy(pred, gt);
  CHECK(acc.a_row_start == 1.0);
  CHECK(acc.a_row_end == 1.0);
  CHECK(acc.a_col_start == 0.75);
  CHECK(acc.a_col_end == 1.0);
  CHECK(acc.a_all == 0.75);

  TableGraph missing = grid_table();
  missing.cells.pop_back();
  acc = metrics::logical_accuracy(missing, gt);
  CHECK(acc.a_row_start == 0.75);
  CHECK(acc.a_all == 0.75);

  TableGraph unlabeled = grid_table();
  unlabeled.cells[0].logical.reset();
  acc = metrics::logical_accuracy(unlabeled, gt);
  CHECK(acc.a_all == 0.75);

  TableGraph bad_gt = grid_table();
  bad_gt.cells[2].logical.reset();
  CHECK(code_of([&] { metrics::logical_accuracy(pred, bad_gt); }) ==
        ErrorCode::MissingLabels);
}

TEST_CASE("f_beta weighs detection and structure like its definition says") {
  CHECK(std::abs(metrics::f_beta(0.667, 0.275) - 0.519) <= 0.0005);
  CHECK(std::abs(metrics::f_beta(0.906, 0.832) - 0.890) <= 0.0005);
  CHECK(metrics::f_beta(0.0, 0.0) == 0.0);
  CHECK(metrics::f_beta(1.0, 1.0) == 1.0);

  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const double x = rng.real(0.01, 1.0);
    CHECK(metrics::f_beta(x, x) == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK(metrics::f_beta(0.8, 0.5) < metrics::f_beta(0.9, 0.5));
  CHECK(metrics::f_beta(0.8, 0.5) < metrics::f_beta(0.8, 0.6));
}

TEST_CASE("adjacency_relations links nearest filled neighbors") {
  const std::set<Relation> expected = {
      {0, 1, kH}, {2, 3, kH}, {0, 2, kV}, {1, 3, kV}};
  CHECK(metrics::adjacency_relations(grid_table()) == expected);

  TableGraph empty;
  empty.table_id = "e";
  empty.width = 10;
  empty.height = 10;
  CHECK(metrics::adjacency_relations(empty).empty());
}

TEST_CASE("adjacency_relations handles spans, gaps, and duplicate contacts") {
  TableGraph span;
  span.table_id = "span";
  span.width = 100;
  span.height = 80;
  span.cells.push_back(cell(0, {50, 20, 96, 36}, {0, 0, 0, 1}));
  span.cells.push_back(cell(1, {25, 60, 46, 36}, {1, 1, 0, 0}));
  span.cells.push_back(cell(2, {75, 60, 46, 36}, {1, 1, 1, 1}));
  const std::set<Relation> span_expected = {{1, 2, kH}, {0, 1, kV}, {0, 2, kV}};
  CHECK(metrics::adjacency_relations(span) == span_expected);

  TableGraph hop;
  hop.table_id = "hop";
  hop.width = 100;
  hop.height = 40;
  hop.cells.push_back(cell(0, {15, 20, 20, 20}, {0, 0, 0, 0}));
  hop.cells.push_back(cell(1, {85, 20, 20, 20}, {0, 0, 2, 2}));
  const std::set<Relation> hop_expected = {{0, 1, kH}};
  CHECK(metrics::adjacency_relations(hop) == hop_expected);

  TableGraph tall;
  tall.table_id = "tall";
  tall.width = 100;
  tall.height = 80;
  tall.cells.push_back(cell(0, {25, 40, 46, 76}, {0, 1, 0, 0}));
  tall.cells.push_back(cell(1, {75, 40, 46, 76}, {0, 1, 1, 1}));
  const std::set<Relation> tall_expected = {{0, 1, kH}};
  CHECK(metrics::adjacency_relations(tall) == tall_expected);

  TableGraph clash = grid_table();
  clash.cells[3].logical = LogicalLocation{0, 0, 0, 0};
  CHECK(code_of([&] { metrics::adjacency_relations(clash); }) ==
        ErrorCode::OverlapConflict);
}

TEST_CASE("waf is exactly one on identical tables") {
  CHECK(metrics::waf(grid_table(), grid_table()) == 1.0);

  datagen::GenConfig cfg;
  cfg.count = 5;
  cfg.max_rows = 4;
  cfg.max_cols = 4;
  cfg.span_prob = 0.5;
  cfg.seed = 23;
  for (const DatasetRecord& rec : datagen::generate(cfg)) {
    CHECK(metrics::waf(rec.table, rec.table) == 1.0);
  }
}

TEST_CASE("waf isolates the matching thresholds") {
  const TableGraph gt = grid_table();
  TableGraph shifted = gt;
  // IoU of every pred/gt pair becomes (46-9.5)/(46+9.5) ~ 0.658: inside the
  // 0.6 threshold, outside 0.7 and up.
  for (CellNode& c : shifted.cells) c.box.cx += 9.5;
  CHECK(metrics::waf(shifted, gt) == doctest::Approx(0.2).epsilon(1e-12));

  TableGraph far = gt;
  for (CellNode& c : far.cells) c.box.cx += 500.0;
  CHECK(metrics::waf(far, gt) == 0.0);
}

TEST_CASE("waf_weighted applies the documented threshold weights") {
  CHECK(metrics::waf_weighted({1.0, 1.0, 1.0, 1.0}) == 1.0);
  CHECK(metrics::waf_weighted({0.0, 0.0, 0.0, 0.0}) == 0.0);
  CHECK(std::abs(metrics::waf_weighted({0.8, 0.6, 0.4, 0.2}) - 0.466667) <= 1e-6);
}

TEST_CASE("report counts pool tables independent of order") {
  const TableGraph gt_a = grid_table();
  TableGraph pred_a = gt_a;
  pred_a.cells[3].logical = LogicalLocation{1, 1, 0, 1};

  TableGraph gt_b = grid_table();
  gt_b.table_id = "b";
  TableGraph pred_b = gt_b;
  pred_b.cells.pop_back();

  const TableGraph gt_c = grid_table();
  const TableGraph pred_c = gt_c;

  metrics::ReportCounts forward;
  forward.add(pred_a, gt_a);
  forward.add(pred_b, gt_b);
  forward.add(pred_c, gt_c);

  metrics::ReportCounts left;
  left.add(pred_c, gt_c);
  metrics::ReportCounts right;
  right.add(pred_b, gt_b);
  right.add(pred_a, gt_a);
  left.merge(right);

  CHECK(forward.tables == 3);
  CHECK(left.tables == 3);
  const EvalReport fr = forward.report();
  const EvalReport lr = left.report();
  CHECK(fr.precision == lr.precision);
  CHECK(fr.recall == lr.recall);
  CHECK(fr.a_all == lr.a_all);
  CHECK(fr.f_beta == lr.f_beta);
  CHECK(fr.waf == lr.waf);

  // Pooled counts over 12 gt cells: 11 detected, 10 fully correct.
  CHECK(fr.recall == doctest::Approx(11.0 / 12.0).epsilon(1e-12));
  CHECK(fr.a_all == doctest::Approx(10.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("a single-table report matches full_report") {
  const TableGraph gt = grid_table();
  TableGraph pred = gt;
  pred.cells[1].logical = LogicalLocation{0, 0, 1, 0};

  metrics::ReportCounts counts;
  counts.add(pred, gt);
  const EvalReport pooled = counts.report();
  const EvalReport direct = metrics::full_report(pred, gt);
  CHECK(pooled.precision == direct.precision);
  CHECK(pooled.recall == direct.recall);
  CHECK(pooled.hmean == direct.hmean);
  CHECK(pooled.a_all == direct.a_all);
  CHECK(pooled.f_beta == direct.f_beta);
  CHECK(pooled.waf == direct.waf);
  CHECK(direct.a_col_end == 0.75);
}

TEST_CASE("conflicted predictions lose their relations but keep cell scores") {
  const TableGraph gt = grid_table();
  TableGraph pred = gt;
  pred.cells[3].logical = LogicalLocation{0, 0, 0, 0};  // clashes with cell 0

  metrics::ReportCounts counts;
  counts.add(pred, gt);
  const EvalReport report = counts.report();
  CHECK(report.precision == 1.0);
  CHECK(report.a_row_start == 0.75);
  CHECK(report.a_col_start == 0.75);
  CHECK(report.a_all == 0.75);
  CHECK(report.waf == 0.0);
}

TEST_CASE("reports serialize with a format tag and stable field order") {
  EvalReport report;
  report.precision = 0.5;
  report.recall = 0.25;
  report.hmean = 1.0 / 3.0;
  report.a_all = 0.75;
  report.f_beta = 0.4;
  report.waf = 0.1;

  const fs::path dir = fs::temp_directory_path() / "tgraph_test_metrics";
  fs::create_directories(dir);
  const fs::path path = dir / "report.json";
  metrics::save_report(path, report, 7);

  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  REQUIRE(!text.empty());
  CHECK(text.back() == '\n');
  CHECK(text.rfind("{\"format\":\"tgraph-report/1\",\"tables\":7,\"precision\":0.5", 0) == 0);

  const nlohmann::json doc = nlohmann::json::parse(text);
  CHECK(doc["recall"] == 0.25);
  CHECK(doc["a_all"] == 0.75);
  CHECK(doc["waf"] == 0.1);

  CHECK(code_of([&] {
          metrics::save_report(dir / "no_dir" / "r.json", report, 1);
        }) == ErrorCode::IoError);
}
