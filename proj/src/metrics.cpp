#include "tgraph/metrics.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "tgraph/transform.hpp"

namespace tgraph::metrics {

namespace {

struct LogicalCounts {
  long long gt_cells = 0;
  long long row_start = 0;
  long long row_end = 0;
  long long col_start = 0;
  long long col_end = 0;
  long long all = 0;
};

struct RelationCounts {
  long long correct = 0;
  long long pred_total = 0;
  long long gt_total = 0;
};

std::vector<CornerBox> corner_boxes(const TableGraph& table) {
  std::vector<CornerBox> boxes;
  boxes.reserve(table.cells.size());
  for (const CellNode& cell : table.cells) boxes.push_back(center_to_corner(cell.box));
  return boxes;
}

// gt cell index -> matched pred cell index, -1 when unmatched.
std::vector<int> gt_to_det(const Matching& matching, std::size_t gt_count) {
  std::vector<int> map(gt_count, -1);
  for (const MatchPair& pair : matching.pairs) map[pair.gt] = pair.det;
  return map;
}

LogicalCounts count_logical(const TableGraph& pred, const TableGraph& gt,
                            double threshold) {
  for (const CellNode& cell : gt.cells) {
    if (!cell.logical) {
      throw Error(ErrorCode::MissingLabels,
                  "gt cell " + std::to_string(cell.id) + " has no logical location");
    }
  }
  const Matching matching = match_boxes(corner_boxes(pred), corner_boxes(gt), threshold);
  const std::vector<int> matched = gt_to_det(matching, gt.cells.size());

  LogicalCounts counts;
  counts.gt_cells = static_cast<long long>(gt.cells.size());
  for (std::size_t gi = 0; gi < gt.cells.size(); ++gi) {
    if (matched[gi] < 0) continue;
    const CellNode& pred_cell = pred.cells[static_cast<std::size_t>(matched[gi])];
    if (!pred_cell.logical) continue;
    const LogicalLocation& p = *pred_cell.logical;
    const LogicalLocation& g = *gt.cells[gi].logical;
    const bool rs = p.row_start == g.row_start;
    const bool re = p.row_end == g.row_end;
    const bool cs = p.col_start == g.col_start;
    const bool ce = p.col_end == g.col_end;
    counts.row_start += rs;
    counts.row_end += re;
    counts.col_start += cs;
    counts.col_end += ce;
    counts.all += rs && re && cs && ce;
  }
  return counts;
}

RelationCounts count_relations(const TableGraph& pred, const TableGraph& gt,
                               const std::set<AdjacencyRelation>& pred_rel,
                               const std::set<AdjacencyRelation>& gt_rel,
                               double threshold) {
  const Matching matching = match_boxes(corner_boxes(pred), corner_boxes(gt), threshold);
  // pred cell id -> matched gt cell id
  int max_id = -1;
  for (const CellNode& cell : pred.cells) max_id = std::max(max_id, cell.id);
  std::vector<int> id_to_gt(static_cast<std::size_t>(max_id + 1), -1);
  std::vector<int> det_to_gt(pred.cells.size(), -1);
  for (const MatchPair& pair : matching.pairs) det_to_gt[pair.det] = pair.gt;
  for (std::size_t di = 0; di < pred.cells.size(); ++di) {
    if (det_to_gt[di] >= 0) {
      id_to_gt[static_cast<std::size_t>(pred.cells[di].id)] =
          gt.cells[static_cast<std::size_t>(det_to_gt[di])].id;
    }
  }

  RelationCounts counts;
  counts.pred_total = static_cast<long long>(pred_rel.size());
  counts.gt_total = static_cast<long long>(gt_rel.size());
  for (const AdjacencyRelation& rel : pred_rel) {
    const int ga = id_to_gt[static_cast<std::size_t>(rel.cell_a)];
    const int gb = id_to_gt[static_cast<std::size_t>(rel.cell_b)];
    if (ga < 0 || gb < 0) continue;
    const AdjacencyRelation mapped{std::min(ga, gb), std::max(ga, gb), rel.direction};
    if (gt_rel.count(mapped) > 0) ++counts.correct;
  }
  return counts;
}

double relation_f_score(const RelationCounts& counts) {
  if (counts.pred_total == 0 && counts.gt_total == 0) return 1.0;
  const double p = counts.pred_total > 0
                       ? static_cast<double>(counts.correct) / counts.pred_total
                       : 0.0;
  const double r =
      counts.gt_total > 0 ? static_cast<double>(counts.correct) / counts.gt_total : 0.0;
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

double ratio(long long num, long long den) {
  return den > 0 ? static_cast<double>(num) / den : 0.0;
}

}  // namespace

double iou(const CornerBox& a, const CornerBox& b) {
  const double ix = std::max(0.0, std::min(a.x_min + a.width, b.x_min + b.width) -
                                      std::max(a.x_min, b.x_min));
  const double iy = std::max(0.0, std::min(a.y_min + a.height, b.y_min + b.height) -
                                      std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double uni = a.width * a.height + b.width * b.height - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Matching match_boxes(const std::vector<CornerBox>& dets, const std::vector<CornerBox>& gts,
                     double threshold) {
  if (threshold <= 0.0 || threshold > 1.0) {
    throw Error(ErrorCode::InvalidFraction, "matching threshold must be in (0, 1]");
  }
  struct Candidate {
    double iou;
    int det;
    int gt;
  };
  std::vector<Candidate> candidates;
  for (std::size_t d = 0; d < dets.size(); ++d) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double overlap = iou(dets[d], gts[g]);
      if (overlap >= threshold) {
        candidates.push_back({overlap, static_cast<int>(d), static_cast<int>(g)});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.det != b.det) return a.det < b.det;
    return a.gt < b.gt;
  });

  Matching matching;
  std::vector<bool> det_used(dets.size(), false);
  std::vector<bool> gt_used(gts.size(), false);
  for (const Candidate& c : candidates) {
    if (det_used[static_cast<std::size_t>(c.det)] || gt_used[static_cast<std::size_t>(c.gt)]) {
      continue;
    }
    det_used[static_cast<std::size_t>(c.det)] = true;
    gt_used[static_cast<std::size_t>(c.gt)] = true;
    matching.pairs.push_back({c.det, c.gt, c.iou});
  }
  return matching;
}

Prh detection_prh(const std::vector<CornerBox>& dets, const std::vector<CornerBox>& gts,
                  double threshold) {
  const Matching matching = match_boxes(dets, gts, threshold);
  const auto tp = static_cast<long long>(matching.pairs.size());
  Prh prh;
  prh.precision = ratio(tp, static_cast<long long>(dets.size()));
  prh.recall = ratio(tp, static_cast<long long>(gts.size()));
  prh.hmean = prh.precision + prh.recall > 0.0
                  ? 2.0 * prh.precision * prh.recall / (prh.precision + prh.recall)
                  : 0.0;
  return prh;
}

LogicalAccuracy logical_accuracy(const TableGraph& pred, const TableGraph& gt,
                                 double threshold) {
  const LogicalCounts counts = count_logical(pred, gt, threshold);
  LogicalAccuracy acc;
  acc.a_row_start = ratio(counts.row_start, counts.gt_cells);
  acc.a_row_end = ratio(counts.row_end, counts.gt_cells);
  acc.a_col_start = ratio(counts.col_start, counts.gt_cells);
  acc.a_col_end = ratio(counts.col_end, counts.gt_cells);
  acc.a_all = ratio(counts.all, counts.gt_cells);
  return acc;
}

double f_beta(double hmean, double a_all) {
  const double den = 0.25 * hmean + a_all;
  return den > 0.0 ? 1.25 * hmean * a_all / den : 0.0;
}

std::set<AdjacencyRelation> adjacency_relations(const TableGraph& t) {
  const transform::LogicalGrid grid = transform::to_grid(t);
  std::set<AdjacencyRelation> relations;
  for (const CellNode& cell : t.cells) {
    const LogicalLocation& l = *cell.logical;
    for (int r = l.row_start; r <= l.row_end; ++r) {
      for (int c = l.col_end + 1; c < grid.cols; ++c) {
        const auto& slot = grid.at(r, c);
        if (!slot) continue;
        relations.insert({std::min(cell.id, *slot), std::max(cell.id, *slot),
                          Direction::Horizontal});
        break;
      }
    }
    for (int c = l.col_start; c <= l.col_end; ++c) {
      for (int r = l.row_end + 1; r < grid.rows; ++r) {
        const auto& slot = grid.at(r, c);
        if (!slot) continue;
        relations.insert({std::min(cell.id, *slot), std::max(cell.id, *slot),
                          Direction::Vertical});
        break;
      }
    }
  }
  return relations;
}

double waf_weighted(const std::array<double, 4>& f_scores) {
  // 10x the thresholds are exact binary integers (6, 7, 8, 9), so an all-ones
  // input scores exactly 1.0 rather than 30*eps below it.
  double sum = 0.0;
  for (std::size_t i = 0; i < f_scores.size(); ++i) {
    sum += (kWafThresholds[i] * 10.0) * f_scores[i];
  }
  return sum / 30.0;
}

double waf(const TableGraph& pred, const TableGraph& gt) {
  const std::set<AdjacencyRelation> pred_rel = adjacency_relations(pred);
  const std::set<AdjacencyRelation> gt_rel = adjacency_relations(gt);
  std::array<double, 4> f_scores{};
  for (std::size_t i = 0; i < kWafThresholds.size(); ++i) {
    f_scores[i] =
        relation_f_score(count_relations(pred, gt, pred_rel, gt_rel, kWafThresholds[i]));
  }
  return waf_weighted(f_scores);
}

void ReportCounts::add(const TableGraph& pred, const TableGraph& gt, double threshold) {
  ++tables;
  const Matching matching = match_boxes(corner_boxes(pred), corner_boxes(gt), threshold);
  dets += static_cast<long long>(pred.cells.size());
  gts += static_cast<long long>(gt.cells.size());
  tp += static_cast<long long>(matching.pairs.size());

  const LogicalCounts logical = count_logical(pred, gt, threshold);
  gt_cells += logical.gt_cells;
  correct_row_start += logical.row_start;
  correct_row_end += logical.row_end;
  correct_col_start += logical.col_start;
  correct_col_end += logical.col_end;
  correct_all += logical.all;

  // A prediction without a coherent logical grid (slot conflicts, inverted or
  // missing intervals) contributes no relations instead of aborting the
  // dataset-level evaluation.
  std::set<AdjacencyRelation> pred_rel;
  try {
    pred_rel = adjacency_relations(pred);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OverlapConflict &&
        e.code() != ErrorCode::InvalidIndex &&
        e.code() != ErrorCode::MissingLabels) {
      throw;
    }
  }
  const std::set<AdjacencyRelation> gt_rel = adjacency_relations(gt);
  for (std::size_t i = 0; i < kWafThresholds.size(); ++i) {
    const RelationCounts rel =
        count_relations(pred, gt, pred_rel, gt_rel, kWafThresholds[i]);
    rel_correct[i] += rel.correct;
    rel_pred[i] += rel.pred_total;
    rel_gt[i] += rel.gt_total;
  }
}

void ReportCounts::merge(const ReportCounts& other) {
  tables += other.tables;
  dets += other.dets;
  gts += other.gts;
  tp += other.tp;
  gt_cells += other.gt_cells;
  correct_row_start += other.correct_row_start;
  correct_row_end += other.correct_row_end;
  correct_col_start += other.correct_col_start;
  correct_col_end += other.correct_col_end;
  correct_all += other.correct_all;
  for (std::size_t i = 0; i < rel_correct.size(); ++i) {
    rel_correct[i] += other.rel_correct[i];
    rel_pred[i] += other.rel_pred[i];
    rel_gt[i] += other.rel_gt[i];
  }
}

EvalReport ReportCounts::report() const {
  EvalReport out;
  out.precision = ratio(tp, dets);
  out.recall = ratio(tp, gts);
  out.hmean = out.precision + out.recall > 0.0
                  ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                  : 0.0;
  out.a_row_start = ratio(correct_row_start, gt_cells);
  out.a_row_end = ratio(correct_row_end, gt_cells);
  out.a_col_start = ratio(correct_col_start, gt_cells);
  out.a_col_end = ratio(correct_col_end, gt_cells);
  out.a_all = ratio(correct_all, gt_cells);
  out.f_beta = f_beta(out.hmean, out.a_all);
  std::array<double, 4> f_scores{};
  for (std::size_t i = 0; i < f_scores.size(); ++i) {
    f_scores[i] = relation_f_score({rel_correct[i], rel_pred[i], rel_gt[i]});
  }
  out.waf = waf_weighted(f_scores);
  return out;
}

EvalReport full_report(const TableGraph& pred, const TableGraph& gt) {
  ReportCounts counts;
  counts.add(pred, gt);
  return counts.report();
}

void save_report(const std::filesystem::path& path, const EvalReport& report,
                 long long tables) {
  nlohmann::ordered_json doc;
  doc["format"] = "tgraph-report/1";
  doc["tables"] = tables;
  doc["precision"] = report.precision;
  doc["recall"] = report.recall;
  doc["hmean"] = report.hmean;
  doc["a_row_start"] = report.a_row_start;
  doc["a_row_end"] = report.a_row_end;
  doc["a_col_start"] = report.a_col_start;
  doc["a_col_end"] = report.a_col_end;
  doc["a_all"] = report.a_all;
  doc["f_beta"] = report.f_beta;
  doc["waf"] = report.waf;
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out << doc.dump() << "\n";
}

}  // namespace tgraph::metrics
