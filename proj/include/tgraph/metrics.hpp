#pragma once

#include <array>
#include <compare>
#include <filesystem>
#include <set>
#include <vector>

#include "tgraph/core.hpp"

namespace tgraph::metrics {

// One-to-one box matching: det/gt are indices into the caller's lists.
struct MatchPair {
  int det = 0;
  int gt = 0;
  double iou = 0.0;
};

struct Matching {
  std::vector<MatchPair> pairs;
};

enum class Direction { Horizontal, Vertical };

// Neighbor relation between two cells, normalized so cell_a < cell_b.
struct AdjacencyRelation {
  int cell_a = 0;
  int cell_b = 0;
  Direction direction = Direction::Horizontal;

  auto operator<=>(const AdjacencyRelation&) const = default;
};

struct Prh {
  double precision = 0.0;
  double recall = 0.0;
  double hmean = 0.0;
};

struct LogicalAccuracy {
  double a_row_start = 0.0;
  double a_row_end = 0.0;
  double a_col_start = 0.0;
  double a_col_end = 0.0;
  double a_all = 0.0;
};

double iou(const CornerBox& a, const CornerBox& b);

// Greedy descending-IoU matching; keeps pairs with IoU >= threshold,
// breaking IoU ties by (det index, gt index).
Matching match_boxes(const std::vector<CornerBox>& dets, const std::vector<CornerBox>& gts,
                     double threshold);

Prh detection_prh(const std::vector<CornerBox>& dets, const std::vector<CornerBox>& gts,
                  double threshold = 0.5);

// Per-index accuracies over all gt cells; unmatched gt cells count as wrong.
LogicalAccuracy logical_accuracy(const TableGraph& pred, const TableGraph& gt,
                                 double threshold = 0.5);

// F_{beta=0.5} combining detection hmean with a_all.
double f_beta(double hmean, double a_all);

// Nearest non-empty neighbor to the right / below for every grid line a cell
// spans, deduplicated.
std::set<AdjacencyRelation> adjacency_relations(const TableGraph& t);

inline constexpr std::array<double, 4> kWafThresholds = {0.6, 0.7, 0.8, 0.9};

// Weighted average of per-threshold relation F-scores: sum(t_i * f_i) / 3.
double waf_weighted(const std::array<double, 4>& f_scores);

double waf(const TableGraph& pred, const TableGraph& gt);

// Pooled counts for micro-averaged dataset reports.  Per-table counts are
// added (in any order) and turned into ratios once at the end.
struct ReportCounts {
  long long tables = 0;
  long long dets = 0;
  long long gts = 0;
  long long tp = 0;
  long long gt_cells = 0;
  long long correct_row_start = 0;
  long long correct_row_end = 0;
  long long correct_col_start = 0;
  long long correct_col_end = 0;
  long long correct_all = 0;
  std::array<long long, 4> rel_correct = {0, 0, 0, 0};
  std::array<long long, 4> rel_pred = {0, 0, 0, 0};
  std::array<long long, 4> rel_gt = {0, 0, 0, 0};

  void add(const TableGraph& pred, const TableGraph& gt, double threshold = 0.5);
  void merge(const ReportCounts& other);
  EvalReport report() const;
};

EvalReport full_report(const TableGraph& pred, const TableGraph& gt);

void save_report(const std::filesystem::path& path, const EvalReport& report,
                 long long tables);

}  // namespace tgraph::metrics
