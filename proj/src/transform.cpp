#include "tgraph/transform.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

namespace tgraph::transform {

namespace {

// Shortest round-trip decimal form, matching the JSON writers.
std::string format_number(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += "\"\"";
    else quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string html_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

const CellNode* cell_by_id(const TableGraph& table, int id) {
  for (const CellNode& cell : table.cells) {
    if (cell.id == id) return &cell;
  }
  return nullptr;
}

}  // namespace

LogicalGrid to_grid(const TableGraph& table) {
  LogicalGrid grid;
  for (const CellNode& cell : table.cells) {
    if (!cell.logical) {
      throw Error(ErrorCode::MissingLabels,
                  "cell " + std::to_string(cell.id) + " has no logical location");
    }
    const LogicalLocation& l = *cell.logical;
    if (l.row_start < 0 || l.col_start < 0 || l.row_start > l.row_end ||
        l.col_start > l.col_end) {
      throw Error(ErrorCode::InvalidIndex,
                  "cell " + std::to_string(cell.id) + " has an invalid logical rectangle");
    }
    grid.rows = std::max(grid.rows, l.row_end + 1);
    grid.cols = std::max(grid.cols, l.col_end + 1);
  }
  grid.slots.assign(static_cast<std::size_t>(grid.rows) * grid.cols, std::nullopt);
  for (const CellNode& cell : table.cells) {
    const LogicalLocation& l = *cell.logical;
    for (int r = l.row_start; r <= l.row_end; ++r) {
      for (int c = l.col_start; c <= l.col_end; ++c) {
        auto& slot = grid.at(r, c);
        if (slot) {
          std::ostringstream msg;
          msg << "cells " << *slot << " and " << cell.id << " overlap at grid slot ("
              << r << ", " << c << ")";
          throw Error(ErrorCode::OverlapConflict, msg.str());
        }
        slot = cell.id;
      }
    }
  }
  return grid;
}

std::vector<std::vector<bool>> same_axis_matrix(const TableGraph& table, Axis axis) {
  const std::size_t n = table.cells.size();
  std::vector<std::vector<bool>> out(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    if (!table.cells[i].logical) {
      throw Error(ErrorCode::MissingLabels,
                  "cell " + std::to_string(table.cells[i].id) + " has no logical location");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const LogicalLocation& a = *table.cells[i].logical;
    for (std::size_t j = i; j < n; ++j) {
      const LogicalLocation& b = *table.cells[j].logical;
      bool same = false;
      if (axis == Axis::Row) {
        same = a.row_start <= b.row_end && b.row_start <= a.row_end;
      } else {
        same = a.col_start <= b.col_end && b.col_start <= a.col_end;
      }
      out[i][j] = same;
      out[j][i] = same;
    }
  }
  return out;
}

std::string to_csv(const TableGraph& table) {
  const LogicalGrid grid = to_grid(table);
  std::string out;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      if (c > 0) out += ',';
      const auto& slot = grid.at(r, c);
      if (!slot) continue;
      const CellNode* cell = cell_by_id(table, *slot);
      if (cell->logical->row_start == r && cell->logical->col_start == c && cell->text) {
        out += csv_field(*cell->text);
      }
    }
    out += '\n';
  }
  return out;
}

std::string to_xml(const TableGraph& table) {
  const LogicalGrid grid = to_grid(table);
  std::vector<const CellNode*> ordered;
  ordered.reserve(table.cells.size());
  for (const CellNode& cell : table.cells) ordered.push_back(&cell);
  std::sort(ordered.begin(), ordered.end(),
            [](const CellNode* a, const CellNode* b) { return a->id < b->id; });

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<table id=\"" + xml_escape(table.table_id) + "\" width=\"" +
         std::to_string(table.width) + "\" height=\"" + std::to_string(table.height) +
         "\" rows=\"" + std::to_string(grid.rows) + "\" cols=\"" +
         std::to_string(grid.cols) + "\">\n";
  for (const CellNode* cell : ordered) {
    const LogicalLocation& l = *cell->logical;
    const CornerBox corner = center_to_corner(cell->box);
    out += "  <cell id=\"" + std::to_string(cell->id) + "\" start-row=\"" +
           std::to_string(l.row_start) + "\" end-row=\"" + std::to_string(l.row_end) +
           "\" start-col=\"" + std::to_string(l.col_start) + "\" end-col=\"" +
           std::to_string(l.col_end) + "\" x=\"" + format_number(corner.x_min) +
           "\" y=\"" + format_number(corner.y_min) + "\" w=\"" +
           format_number(corner.width) + "\" h=\"" + format_number(corner.height) +
           "\">" + xml_escape(cell->text.value_or("")) + "</cell>\n";
  }
  out += "</table>\n";
  return out;
}

std::string to_html(const TableGraph& table) {
  const LogicalGrid grid = to_grid(table);
  std::string out = "<table>\n";
  for (int r = 0; r < grid.rows; ++r) {
    out += "  <tr>";
    for (int c = 0; c < grid.cols; ++c) {
      const auto& slot = grid.at(r, c);
      if (!slot) {
        out += "<td></td>";
        continue;
      }
      const CellNode* cell = cell_by_id(table, *slot);
      const LogicalLocation& l = *cell->logical;
      if (l.row_start != r || l.col_start != c) continue;  // covered slot
      out += "<td";
      const int rowspan = l.row_end - l.row_start + 1;
      const int colspan = l.col_end - l.col_start + 1;
      if (rowspan > 1) out += " rowspan=\"" + std::to_string(rowspan) + "\"";
      if (colspan > 1) out += " colspan=\"" + std::to_string(colspan) + "\"";
      out += ">" + html_escape(cell->text.value_or("")) + "</td>";
    }
    out += "</tr>\n";
  }
  out += "</table>\n";
  return out;
}

}  // namespace tgraph::transform
