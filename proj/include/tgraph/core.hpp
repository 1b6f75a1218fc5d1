#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tgraph {

enum class ErrorCode {
  InvalidBox,
  InvalidAlpha,
  InvalidK,
  InvalidFraction,
  InvalidIndex,
  InvalidPrior,
  EmptyBatch,
  ShapeError,
  MissingImage,
  MissingLabels,
  OverlapConflict,
  GeometryError,
  TrainingDiverged,
  ParseError,
  IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Axis-aligned box in file convention: top-left origin, y grows downward.
struct CornerBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double width = 0.0;
  double height = 0.0;
};

// The in-memory box form all math runs on: center point plus size.
struct CenterBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

struct LogicalLocation {
  int row_start = 0;
  int row_end = 0;
  int col_start = 0;
  int col_end = 0;

  bool operator==(const LogicalLocation&) const = default;
};

struct CellNode {
  int id = 0;
  CenterBox box;
  std::optional<LogicalLocation> logical;
  std::optional<std::string> text;
};

struct TableGraph {
  std::string table_id;
  int width = 0;
  int height = 0;
  std::vector<CellNode> cells;
};

// Per-pixel class grid, row-major. Classes: 0 background, 1 cell, 2 boundary.
struct SegMap {
  static constexpr int kNumClasses = 3;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;

  std::uint8_t at(int row, int col) const {
    return labels[static_cast<std::size_t>(row) * width + col];
  }
  std::uint8_t& at(int row, int col) {
    return labels[static_cast<std::size_t>(row) * width + col];
  }
};

struct DatasetRecord {
  TableGraph table;
  std::optional<std::string> segmap_path;
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double hmean = 0.0;
  double a_row_start = 0.0;
  double a_row_end = 0.0;
  double a_col_start = 0.0;
  double a_col_end = 0.0;
  double a_all = 0.0;
  double f_beta = 0.0;
  double waf = 0.0;
};

CenterBox corner_to_center(const CornerBox& box);
CornerBox center_to_corner(const CenterBox& box);

enum class Rule {
  InvalidBox,
  OutOfBounds,
  DuplicateId,
  MissingLogical,
  NegativeIndex,
  InvertedInterval,
  OverlapConflict,
};

const char* to_string(Rule rule);

struct Violation {
  int cell_id = 0;
  int other_id = -1;  // second participant for pairwise rules, -1 otherwise
  Rule rule = Rule::InvalidBox;
  std::string message;
};

// Returns all broken invariants, ordered by ascending cell id. Violations are
// data, not failures: a bad table never throws here.
std::vector<Violation> validate_table(const TableGraph& table,
                                      bool require_logical,
                                      bool require_grid_consistent);

// JSON-lines dataset file, one table per line. Strict mode rejects unknown
// fields; otherwise they are ignored.
DatasetRecord record_from_json_line(const std::string& line, bool strict = false);
std::string record_to_json_line(const DatasetRecord& record);
std::vector<DatasetRecord> load_dataset(const std::string& path, bool strict = false);
void save_dataset(const std::vector<DatasetRecord>& records, const std::string& path);

}  // namespace tgraph
