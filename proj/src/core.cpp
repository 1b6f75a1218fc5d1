#include "tgraph/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace tgraph {

namespace {

using ordered_json = nlohmann::ordered_json;

bool finite_box(const CornerBox& b) {
  return std::isfinite(b.x_min) && std::isfinite(b.y_min) &&
         std::isfinite(b.width) && std::isfinite(b.height) &&
         std::isfinite(b.x_min + b.width) && std::isfinite(b.y_min + b.height);
}

bool intervals_overlap(int a_start, int a_end, int b_start, int b_end) {
  return a_start <= b_end && b_start <= a_end;
}

}  // namespace

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::InvalidFraction: return "InvalidFraction";
    case ErrorCode::InvalidIndex: return "InvalidIndex";
    case ErrorCode::InvalidPrior: return "InvalidPrior";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::MissingImage: return "MissingImage";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::OverlapConflict: return "OverlapConflict";
    case ErrorCode::GeometryError: return "GeometryError";
    case ErrorCode::TrainingDiverged: return "TrainingDiverged";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

const char* to_string(Rule rule) {
  switch (rule) {
    case Rule::InvalidBox: return "InvalidBox";
    case Rule::OutOfBounds: return "OutOfBounds";
    case Rule::DuplicateId: return "DuplicateId";
    case Rule::MissingLogical: return "MissingLogical";
    case Rule::NegativeIndex: return "NegativeIndex";
    case Rule::InvertedInterval: return "InvertedInterval";
    case Rule::OverlapConflict: return "OverlapConflict";
  }
  return "Unknown";
}

CenterBox corner_to_center(const CornerBox& box) {
  if (!(box.width > 0.0) || !(box.height > 0.0) || !finite_box(box)) {
    throw Error(ErrorCode::InvalidBox, "corner box must have positive finite size");
  }
  return CenterBox{box.x_min + box.width / 2.0, box.y_min + box.height / 2.0,
                   box.width, box.height};
}

CornerBox center_to_corner(const CenterBox& box) {
  if (!(box.w > 0.0) || !(box.h > 0.0) || !std::isfinite(box.cx) ||
      !std::isfinite(box.cy) || !std::isfinite(box.w) || !std::isfinite(box.h)) {
    throw Error(ErrorCode::InvalidBox, "center box must have positive finite size");
  }
  return CornerBox{box.cx - box.w / 2.0, box.cy - box.h / 2.0, box.w, box.h};
}

std::vector<Violation> validate_table(const TableGraph& table,
                                      bool require_logical,
                                      bool require_grid_consistent) {
  std::vector<Violation> out;

  std::vector<std::size_t> order(table.cells.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return table.cells[a].id < table.cells[b].id;
  });

  for (std::size_t k = 0; k < order.size(); ++k) {
    const CellNode& cell = table.cells[order[k]];

    if (k > 0 && table.cells[order[k - 1]].id == cell.id) {
      out.push_back({cell.id, -1, Rule::DuplicateId, "cell id used more than once"});
    }

    const CenterBox& b = cell.box;
    if (!(b.w > 0.0) || !(b.h > 0.0) || !std::isfinite(b.cx) || !std::isfinite(b.cy) ||
        !std::isfinite(b.w) || !std::isfinite(b.h)) {
      out.push_back({cell.id, -1, Rule::InvalidBox, "box has nonpositive or non-finite size"});
    } else {
      const double x0 = b.cx - b.w / 2.0;
      const double y0 = b.cy - b.h / 2.0;
      if (x0 < 0.0 || y0 < 0.0 || x0 + b.w > table.width || y0 + b.h > table.height) {
        out.push_back({cell.id, -1, Rule::OutOfBounds, "box extends outside the table image"});
      }
    }

    if (cell.logical) {
      const LogicalLocation& l = *cell.logical;
      if (l.row_start < 0 || l.row_end < 0 || l.col_start < 0 || l.col_end < 0) {
        out.push_back({cell.id, -1, Rule::NegativeIndex, "logical index below zero"});
      } else if (l.row_start > l.row_end || l.col_start > l.col_end) {
        out.push_back({cell.id, -1, Rule::InvertedInterval,
                       "start index exceeds end index"});
      }
    } else if (require_logical) {
      out.push_back({cell.id, -1, Rule::MissingLogical, "cell has no logical location"});
    }

    if (require_grid_consistent && cell.logical) {
      for (std::size_t m = k + 1; m < order.size(); ++m) {
        const CellNode& other = table.cells[order[m]];
        if (!other.logical) continue;
        const LogicalLocation& a = *cell.logical;
        const LogicalLocation& o = *other.logical;
        if (intervals_overlap(a.row_start, a.row_end, o.row_start, o.row_end) &&
            intervals_overlap(a.col_start, a.col_end, o.col_start, o.col_end)) {
          std::ostringstream msg;
          msg << "cells " << cell.id << " and " << other.id
              << " claim overlapping logical rectangles";
          out.push_back({cell.id, other.id, Rule::OverlapConflict, msg.str()});
        }
      }
    }
  }
  return out;
}

namespace {

void check_known_fields(const ordered_json& obj,
                        std::initializer_list<const char*> known,
                        const char* where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) {
      if (it.key() == k) { ok = true; break; }
    }
    if (!ok) {
      throw Error(ErrorCode::ParseError,
                  std::string("unknown field \"") + it.key() + "\" in " + where);
    }
  }
}

}  // namespace

DatasetRecord record_from_json_line(const std::string& line, bool strict) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad JSON record: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "record is not a JSON object");
  if (strict) check_known_fields(j, {"id", "width", "height", "cells", "segmap"}, "record");

  DatasetRecord rec;
  try {
    rec.table.table_id = j.at("id").get<std::string>();
    rec.table.width = j.at("width").get<int>();
    rec.table.height = j.at("height").get<int>();
    if (rec.table.width <= 0 || rec.table.height <= 0) {
      throw Error(ErrorCode::ParseError, "table dimensions must be positive");
    }
    for (const auto& cj : j.at("cells")) {
      if (strict) check_known_fields(cj, {"id", "bbox", "logical", "text"}, "cell");
      CellNode cell;
      cell.id = cj.at("id").get<int>();
      const auto& bbox = cj.at("bbox");
      if (!bbox.is_array() || bbox.size() != 4) {
        throw Error(ErrorCode::ParseError, "bbox must be [x_min, y_min, width, height]");
      }
      CornerBox corner{bbox[0].get<double>(), bbox[1].get<double>(),
                       bbox[2].get<double>(), bbox[3].get<double>()};
      cell.box = corner_to_center(corner);
      if (cj.contains("logical") && !cj.at("logical").is_null()) {
        const auto& lj = cj.at("logical");
        if (!lj.is_array() || lj.size() != 4) {
          throw Error(ErrorCode::ParseError, "logical must be [rs, re, cs, ce]");
        }
        LogicalLocation l{lj[0].get<int>(), lj[1].get<int>(), lj[2].get<int>(),
                          lj[3].get<int>()};
        if (l.row_start < 0 || l.row_end < 0 || l.col_start < 0 || l.col_end < 0) {
          throw Error(ErrorCode::ParseError, "logical indices must be nonnegative");
        }
        cell.logical = l;
      }
      if (cj.contains("text") && !cj.at("text").is_null()) {
        cell.text = cj.at("text").get<std::string>();
      }
      rec.table.cells.push_back(std::move(cell));
    }
    if (j.contains("segmap") && !j.at("segmap").is_null()) {
      rec.segmap_path = j.at("segmap").get<std::string>();
    }
  } catch (const Error&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad record field: ") + e.what());
  }
  return rec;
}

std::string record_to_json_line(const DatasetRecord& record) {
  ordered_json j;
  j["id"] = record.table.table_id;
  j["width"] = record.table.width;
  j["height"] = record.table.height;
  ordered_json cells = ordered_json::array();
  for (const CellNode& cell : record.table.cells) {
    ordered_json cj;
    cj["id"] = cell.id;
    const CornerBox corner = center_to_corner(cell.box);
    cj["bbox"] = {corner.x_min, corner.y_min, corner.width, corner.height};
    if (cell.logical) {
      cj["logical"] = {cell.logical->row_start, cell.logical->row_end,
                       cell.logical->col_start, cell.logical->col_end};
    } else {
      cj["logical"] = nullptr;
    }
    if (cell.text) {
      cj["text"] = *cell.text;
    } else {
      cj["text"] = nullptr;
    }
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  if (record.segmap_path) {
    j["segmap"] = *record.segmap_path;
  } else {
    j["segmap"] = nullptr;
  }
  return j.dump();
}

std::vector<DatasetRecord> load_dataset(const std::string& path, bool strict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open dataset file: " + path);
  std::vector<DatasetRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json_line(line, strict));
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << path << ":" << line_no << ": " << e.what();
      throw Error(e.code(), msg.str());
    }
  }
  return records;
}

void save_dataset(const std::vector<DatasetRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write dataset file: " + path);
  for (const DatasetRecord& rec : records) {
    out << record_to_json_line(rec) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing dataset file: " + path);
}

}  // namespace tgraph
