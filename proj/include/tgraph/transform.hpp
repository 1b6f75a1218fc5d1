#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tgraph/core.hpp"

namespace tgraph::transform {

// The logical grid: every cell occupies exactly its index rectangle of slots.
struct LogicalGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::optional<int>> slots;  // row-major cell ids

  const std::optional<int>& at(int row, int col) const {
    return slots[static_cast<std::size_t>(row) * cols + col];
  }
  std::optional<int>& at(int row, int col) {
    return slots[static_cast<std::size_t>(row) * cols + col];
  }
};

enum class Axis { Row, Column };

// Fills the grid from the cells' logical rectangles. Two cells claiming one
// slot raise OverlapConflict naming both ids.
LogicalGrid to_grid(const TableGraph& table);

// entry (i, j) true iff the two cells' index intervals on the axis intersect;
// diagonal true.
std::vector<std::vector<bool>> same_axis_matrix(const TableGraph& table, Axis axis);

// One line per grid row, RFC-4180-style quoting, LF endings. A spanning
// cell's text appears at its top-left slot only.
std::string to_csv(const TableGraph& table);

// <table> element with one <cell> per cell in id order; logical indices and
// corner-form boxes as attributes.
std::string to_xml(const TableGraph& table);

// <table>/<tr>/<td> fragment with rowspan/colspan; empty slots render as
// empty <td></td> placeholders.
std::string to_html(const TableGraph& table);

}  // namespace tgraph::transform
