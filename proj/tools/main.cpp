#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tgraph/core.hpp"
#include "tgraph/datagen.hpp"
#include "tgraph/graph.hpp"
#include "tgraph/metrics.hpp"
#include "tgraph/model.hpp"
#include "tgraph/parallel.hpp"
#include "tgraph/spatial.hpp"
#include "tgraph/transform.hpp"

namespace {

namespace fs = std::filesystem;

// Bad invocations (flags, config keys, missing required values) exit 1;
// unreadable or unparsable data files exit 2; data that parses but breaks
// invariants exits 3; training divergence exits 4.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(tgraph::ErrorCode code) {
  switch (code) {
    case tgraph::ErrorCode::ParseError:
    case tgraph::ErrorCode::IoError:
    case tgraph::ErrorCode::InvalidBox:
      return 2;
    case tgraph::ErrorCode::MissingLabels:
    case tgraph::ErrorCode::OverlapConflict:
    case tgraph::ErrorCode::GeometryError:
    case tgraph::ErrorCode::ShapeError:
    case tgraph::ErrorCode::EmptyBatch:
    case tgraph::ErrorCode::MissingImage:
    case tgraph::ErrorCode::InvalidIndex:
      return 3;
    case tgraph::ErrorCode::TrainingDiverged:
      return 4;
    default:
      return 1;
  }
}

std::string format_number(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

// Flat JSON config mirroring flag names. Precedence per knob:
// defaults < profile < config file < explicit flags.
class Knobs {
 public:
  explicit Knobs(CLI::App* cmd) : cmd_(cmd) {}

  void load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path);
    try {
      in >> doc_;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config file " + path + ": " + e.what());
    }
    if (!doc_.is_object()) {
      throw UsageError("config file " + path + " must hold a JSON object");
    }
  }

  template <typename T>
  void merge(const std::string& flag, T& value) {
    merge_impl(flag, value, static_cast<const T*>(nullptr));
  }

  template <typename T>
  void merge(const std::string& flag, T& value, const T& profile_value,
             bool profile_active) {
    merge_impl(flag, value, profile_active ? &profile_value : nullptr);
  }

  void merge_optional_int(const std::string& flag, std::optional<int>& value,
                          std::optional<int> profile_value, bool profile_active) {
    const std::string key = flag.substr(2);
    if (doc_.contains(key)) {
      consumed_.insert(key);
      if (cmd_->count(flag) == 0) {
        const auto& entry = doc_[key];
        if (entry.is_null()) {
          value = std::nullopt;
        } else {
          value = get_as<int>(key, entry);
        }
      }
      return;
    }
    if (cmd_->count(flag) == 0 && profile_active) value = profile_value;
  }

  // Every merged flag has now claimed its config key; anything left is a typo
  // or a knob of a different subcommand.
  void finish() const {
    for (const auto& [key, entry] : doc_.items()) {
      if (consumed_.count(key) == 0) {
        throw UsageError("config key \"" + key + "\" is not a " +
                         cmd_->get_name() + " option");
      }
    }
  }

 private:
  template <typename T>
  T get_as(const std::string& key, const nlohmann::json& entry) {
    try {
      return entry.get<T>();
    } catch (const nlohmann::json::exception&) {
      throw UsageError("config key \"" + key + "\" has the wrong type");
    }
  }

  template <typename T>
  void merge_impl(const std::string& flag, T& value, const T* profile_value) {
    const std::string key = flag.substr(2);
    if (doc_.contains(key)) {
      consumed_.insert(key);
      if (cmd_->count(flag) == 0) value = get_as<T>(key, doc_[key]);
      return;
    }
    if (cmd_->count(flag) == 0 && profile_value != nullptr) value = *profile_value;
  }

  CLI::App* cmd_;
  nlohmann::json doc_ = nlohmann::json::object();
  std::set<std::string> consumed_;
};

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError(flag + " is required");
}

// ---------------------------------------------------------------- datagen --

struct DatagenOpts {
  std::string out;
  std::string config;
  int count = 100;
  int max_rows = 8;
  int max_cols = 8;
  double span_prob = 0.0;
  int image_w = 960;
  int image_h = 960;
  double jitter = 0.1;
  std::string row_weighting = "uniform";
  std::uint64_t seed = 0;
  bool with_text = false;
  bool segmaps = false;
};

int run_datagen(CLI::App* cmd, DatagenOpts& o) {
  Knobs knobs(cmd);
  if (!o.config.empty()) knobs.load_config(o.config);
  knobs.merge("--out", o.out);
  knobs.merge("--count", o.count);
  knobs.merge("--max-rows", o.max_rows);
  knobs.merge("--max-cols", o.max_cols);
  knobs.merge("--span-prob", o.span_prob);
  knobs.merge("--image-w", o.image_w);
  knobs.merge("--image-h", o.image_h);
  knobs.merge("--jitter", o.jitter);
  knobs.merge("--row-weighting", o.row_weighting);
  knobs.merge("--seed", o.seed);
  knobs.merge("--with-text", o.with_text);
  knobs.merge("--segmaps", o.segmaps);
  knobs.finish();
  require(o.out, "--out");
  if (o.row_weighting != "uniform" && o.row_weighting != "long_tail") {
    throw UsageError("--row-weighting must be uniform or long_tail");
  }

  tgraph::datagen::GenConfig cfg;
  cfg.count = o.count;
  cfg.max_rows = o.max_rows;
  cfg.max_cols = o.max_cols;
  cfg.span_prob = o.span_prob;
  cfg.image_w = o.image_w;
  cfg.image_h = o.image_h;
  cfg.jitter = o.jitter;
  cfg.row_weighting = o.row_weighting == "uniform"
                          ? tgraph::datagen::RowWeighting::Uniform
                          : tgraph::datagen::RowWeighting::LongTail;
  cfg.seed = o.seed;
  cfg.with_text = o.with_text;

  std::vector<tgraph::DatasetRecord> records = tgraph::datagen::generate(cfg);
  if (o.segmaps) {
    const fs::path dir = fs::path(o.out).parent_path();
    std::vector<tgraph::SegMap> maps(records.size());
    tgraph::parallel_for(records.size(), [&](std::size_t i) {
      maps[i] = tgraph::datagen::render_segmap(records[i].table);
    });
    for (std::size_t i = 0; i < records.size(); ++i) {
      const std::string name = records[i].table.table_id + ".pgm";
      tgraph::spatial::save_pgm(maps[i], (dir / name).string());
      records[i].segmap_path = name;
    }
  }
  tgraph::save_dataset(records, o.out);
  std::cerr << "wrote " << records.size() << " tables to " << o.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ train --

struct ModelKnobOpts {
  std::string profile = "default";
  double alpha = 3.0;
  std::optional<int> prune_k;
  double decode_threshold = 0.5;
};

void merge_model_knobs(Knobs& knobs, ModelKnobOpts& o) {
  const bool historical = o.profile == "historical";
  knobs.merge("--alpha", o.alpha, 10.0, historical);
  knobs.merge_optional_int("--prune-k", o.prune_k, 8, historical);
  knobs.merge("--decode-threshold", o.decode_threshold);
}

struct TrainOpts {
  std::string data;
  std::string out;
  std::string config;
  ModelKnobOpts model;
  double learning_rate = tgraph::model::TrainConfig{}.learning_rate;
  double momentum = tgraph::model::TrainConfig{}.momentum;
  int epochs = tgraph::model::TrainConfig{}.epochs;
  std::uint64_t seed = 0;
  int hidden = tgraph::model::TrainConfig{}.hidden;
  std::string loss = "focal";
  std::string focal_variant = "conventional";
  std::optional<int> t_row;
  std::optional<int> t_col;
  bool include_log_size = true;
};

int run_train(CLI::App* cmd, TrainOpts& o) {
  Knobs knobs(cmd);
  if (!o.config.empty()) knobs.load_config(o.config);
  knobs.merge("--data", o.data);
  knobs.merge("--out", o.out);
  knobs.merge("--learning-rate", o.learning_rate);
  knobs.merge("--momentum", o.momentum);
  knobs.merge("--epochs", o.epochs);
  knobs.merge("--seed", o.seed);
  knobs.merge("--hidden", o.hidden);
  knobs.merge("--loss", o.loss);
  knobs.merge("--focal-variant", o.focal_variant);
  knobs.merge_optional_int("--t-row", o.t_row, std::nullopt, false);
  knobs.merge_optional_int("--t-col", o.t_col, std::nullopt, false);
  knobs.merge("--include-log-size", o.include_log_size);
  merge_model_knobs(knobs, o.model);
  knobs.finish();
  require(o.data, "--data");
  require(o.out, "--out");
  if (o.loss != "ce" && o.loss != "focal") {
    throw UsageError("--loss must be ce or focal");
  }
  if (o.focal_variant != "as-printed" && o.focal_variant != "conventional") {
    throw UsageError("--focal-variant must be as-printed or conventional");
  }

  tgraph::model::TrainConfig cfg;
  cfg.learning_rate = o.learning_rate;
  cfg.momentum = o.momentum;
  cfg.epochs = o.epochs;
  cfg.seed = o.seed;
  cfg.hidden = o.hidden;
  cfg.loss = o.loss == "ce" ? tgraph::model::LossKind::Ce : tgraph::model::LossKind::Focal;
  cfg.focal_variant = o.focal_variant == "as-printed"
                          ? tgraph::model::FocalVariant::AsPrinted
                          : tgraph::model::FocalVariant::Conventional;
  cfg.decode_threshold = o.model.decode_threshold;
  cfg.alpha = o.model.alpha;
  cfg.prune_k = o.model.prune_k;
  cfg.t_row = o.t_row;
  cfg.t_col = o.t_col;
  cfg.features.include_log_size = o.include_log_size;

  const std::vector<tgraph::DatasetRecord> records = tgraph::load_dataset(o.data);
  std::vector<tgraph::TableGraph> tables;
  tables.reserve(records.size());
  for (const tgraph::DatasetRecord& record : records) tables.push_back(record.table);

  const tgraph::model::ModelParams params = tgraph::model::train(tables, cfg);
  tgraph::model::save_model(o.out, params);
  std::cerr << "trained on " << tables.size() << " tables (T_row=" << params.t_row
            << ", T_col=" << params.t_col << ", epochs=" << cfg.epochs << "); model at "
            << o.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- predict --

struct PredictOpts {
  std::string model_path;
  std::string in;
  std::string out;
  std::string config;
  ModelKnobOpts model;
};

int run_predict(CLI::App* cmd, PredictOpts& o) {
  Knobs knobs(cmd);
  if (!o.config.empty()) knobs.load_config(o.config);
  knobs.merge("--model", o.model_path);
  knobs.merge("--in", o.in);
  knobs.merge("--out", o.out);
  merge_model_knobs(knobs, o.model);
  knobs.finish();
  require(o.model_path, "--model");
  require(o.in, "--in");
  require(o.out, "--out");

  const tgraph::model::ModelParams params = tgraph::model::load_model(o.model_path);
  tgraph::model::TrainConfig cfg;
  cfg.alpha = o.model.alpha;
  cfg.prune_k = o.model.prune_k;
  cfg.decode_threshold = o.model.decode_threshold;

  std::vector<tgraph::DatasetRecord> records = tgraph::load_dataset(o.in);
  tgraph::parallel_for(records.size(), [&](std::size_t i) {
    records[i].table = tgraph::model::predict(params, records[i].table, cfg);
  });

  long long inverted = 0;
  for (const tgraph::DatasetRecord& record : records) {
    for (const tgraph::CellNode& cell : record.table.cells) {
      if (cell.logical && (cell.logical->row_start > cell.logical->row_end ||
                           cell.logical->col_start > cell.logical->col_end)) {
        ++inverted;
      }
    }
  }
  tgraph::save_dataset(records, o.out);
  std::cerr << "predicted " << records.size() << " tables; " << inverted
            << " cells with inverted index intervals\n";
  return 0;
}

// ------------------------------------------------------------------ boxes --

struct BoxesOpts {
  std::string map_path;
  std::string out;
  std::string id;
  std::string config;
  std::string profile = "default";
  bool open = false;
  int min_area = 4;
  bool as_table = false;
};

int run_boxes(CLI::App* cmd, BoxesOpts& o) {
  Knobs knobs(cmd);
  if (!o.config.empty()) knobs.load_config(o.config);
  knobs.merge("--map", o.map_path);
  knobs.merge("--out", o.out);
  knobs.merge("--id", o.id);
  knobs.merge("--open", o.open, true, o.profile == "historical");
  knobs.merge("--min-area", o.min_area);
  knobs.merge("--as-table", o.as_table);
  knobs.finish();
  require(o.map_path, "--map");

  const tgraph::SegMap map = tgraph::spatial::load_pgm(o.map_path);
  const std::vector<tgraph::CornerBox> boxes =
      tgraph::spatial::detect_cells(map, o.open, o.min_area);

  std::string text;
  if (o.as_table) {
    tgraph::TableGraph table;
    table.table_id = o.id.empty() ? fs::path(o.map_path).stem().string() : o.id;
    table.width = map.width;
    table.height = map.height;
    int next_id = 0;
    for (const tgraph::CornerBox& box : boxes) {
      tgraph::CellNode cell;
      cell.id = next_id++;
      cell.box = tgraph::corner_to_center(box);
      table.cells.push_back(cell);
    }
    text = tgraph::record_to_json_line({table, std::nullopt}) + "\n";
  } else {
    for (const tgraph::CornerBox& box : boxes) {
      text += format_number(box.x_min) + " " + format_number(box.y_min) + " " +
              format_number(box.width) + " " + format_number(box.height) + "\n";
    }
  }
  if (o.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(o.out);
    if (!out) throw tgraph::Error(tgraph::ErrorCode::IoError, "cannot write " + o.out);
    out << text;
  }
  std::cerr << "extracted " << boxes.size() << " boxes from " << o.map_path << "\n";
  return 0;
}

// ------------------------------------------------------------------- eval --

struct EvalOpts {
  std::string gt;
  std::string pred;
  std::string report;
  std::string config;
  ModelKnobOpts model;
  double drop_fraction = 0.0;
  std::uint64_t drop_seed = 0;
};

int run_eval(CLI::App* cmd, EvalOpts& o) {
  Knobs knobs(cmd);
  if (!o.config.empty()) knobs.load_config(o.config);
  knobs.merge("--gt", o.gt);
  knobs.merge("--pred", o.pred);
  knobs.merge("--report", o.report);
  knobs.merge("--drop-fraction", o.drop_fraction);
  knobs.merge("--drop-seed", o.drop_seed);
  merge_model_knobs(knobs, o.model);
  knobs.finish();
  require(o.gt, "--gt");
  require(o.pred, "--pred");
  if (!(o.drop_fraction >= 0.0 && o.drop_fraction < 1.0)) {
    throw UsageError("--drop-fraction must be in [0, 1)");
  }

  const std::vector<tgraph::DatasetRecord> gt_records = tgraph::load_dataset(o.gt);
  const std::vector<tgraph::DatasetRecord> pred_records = tgraph::load_dataset(o.pred);
  std::map<std::string, const tgraph::TableGraph*> pred_by_id;
  for (const tgraph::DatasetRecord& record : pred_records) {
    pred_by_id[record.table.table_id] = &record.table;
  }

  long long missing = 0;
  std::vector<tgraph::metrics::ReportCounts> slots(gt_records.size());
  tgraph::parallel_for(gt_records.size(), [&](std::size_t i) {
    const tgraph::TableGraph& gt_table = gt_records[i].table;
    tgraph::TableGraph pred_table;
    const auto it = pred_by_id.find(gt_table.table_id);
    if (it != pred_by_id.end()) {
      pred_table = *it->second;
    } else {
      pred_table.table_id = gt_table.table_id;
      pred_table.width = gt_table.width;
      pred_table.height = gt_table.height;
    }
    if (o.drop_fraction > 0.0) {
      pred_table = tgraph::graph::ablate_nodes(
          pred_table, 1.0 - o.drop_fraction,
          tgraph::mix_seed(o.drop_seed, static_cast<std::uint64_t>(i)));
    }
    slots[i].add(pred_table, gt_table);
  });
  for (std::size_t i = 0; i < gt_records.size(); ++i) {
    const auto it = pred_by_id.find(gt_records[i].table.table_id);
    if (it == pred_by_id.end()) ++missing;
  }
  if (missing > 0) {
    std::cerr << missing << " gt tables had no prediction and scored as empty\n";
  }

  tgraph::metrics::ReportCounts counts;
  for (const tgraph::metrics::ReportCounts& slot : slots) counts.merge(slot);
  const tgraph::EvalReport report = counts.report();
  if (o.report.empty()) {
    tgraph::metrics::save_report("/dev/stdout", report, counts.tables);
  } else {
    tgraph::metrics::save_report(o.report, report, counts.tables);
  }
  std::fprintf(stderr, "tables=%lld hmean=%.6f a_all=%.6f f_beta=%.6f waf=%.6f\n",
               counts.tables, report.hmean, report.a_all, report.f_beta, report.waf);
  return 0;
}

// ---------------------------------------------------------------- convert --

struct ConvertOpts {
  std::string in;
  std::string format;
  std::string out;
  std::string config;
};

int run_convert(CLI::App* cmd, ConvertOpts& o) {
  Knobs knobs(cmd);
  if (!o.config.empty()) knobs.load_config(o.config);
  knobs.merge("--in", o.in);
  knobs.merge("--format", o.format);
  knobs.merge("--out", o.out);
  knobs.finish();
  require(o.in, "--in");
  require(o.format, "--format");
  if (o.format != "csv" && o.format != "xml" && o.format != "html" &&
      o.format != "adjacency") {
    throw UsageError("--format must be csv, xml, html, or adjacency");
  }

  const std::vector<tgraph::DatasetRecord> records = tgraph::load_dataset(o.in);
  std::string text;
  for (const tgraph::DatasetRecord& record : records) {
    const tgraph::TableGraph& table = record.table;
    if (o.format == "csv") {
      text += tgraph::transform::to_csv(table);
    } else if (o.format == "xml") {
      text += tgraph::transform::to_xml(table);
    } else if (o.format == "html") {
      text += tgraph::transform::to_html(table);
    } else {
      nlohmann::ordered_json line;
      line["id"] = table.table_id;
      auto matrix_json = [](const std::vector<std::vector<bool>>& m) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& row : m) {
          nlohmann::ordered_json cols = nlohmann::ordered_json::array();
          for (bool v : row) cols.push_back(v ? 1 : 0);
          rows.push_back(std::move(cols));
        }
        return rows;
      };
      line["same_row"] =
          matrix_json(tgraph::transform::same_axis_matrix(table, tgraph::transform::Axis::Row));
      line["same_col"] = matrix_json(
          tgraph::transform::same_axis_matrix(table, tgraph::transform::Axis::Column));
      text += line.dump() + "\n";
    }
  }
  if (o.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(o.out);
    if (!out) throw tgraph::Error(tgraph::ErrorCode::IoError, "cannot write " + o.out);
    out << text;
  }
  return 0;
}

// --------------------------------------------------------------- validate --

struct ValidateOpts {
  std::string in;
  std::string config;
  bool require_logical = true;
  bool require_grid = true;
  bool strict = false;
};

int run_validate(CLI::App* cmd, ValidateOpts& o) {
  Knobs knobs(cmd);
  if (!o.config.empty()) knobs.load_config(o.config);
  knobs.merge("--in", o.in);
  knobs.merge("--require-logical", o.require_logical);
  knobs.merge("--require-grid", o.require_grid);
  knobs.merge("--strict", o.strict);
  knobs.finish();
  require(o.in, "--in");

  const std::vector<tgraph::DatasetRecord> records = tgraph::load_dataset(o.in, o.strict);
  const fs::path dir = fs::path(o.in).parent_path();
  long long findings = 0;
  for (const tgraph::DatasetRecord& record : records) {
    const tgraph::TableGraph& table = record.table;
    for (const tgraph::Violation& v :
         tgraph::validate_table(table, o.require_logical, o.require_grid)) {
      std::cout << table.table_id << " cell " << v.cell_id << ": "
                << tgraph::to_string(v.rule) << ": " << v.message << "\n";
      ++findings;
    }
    if (record.segmap_path) {
      try {
        const tgraph::SegMap map =
            tgraph::spatial::load_pgm((dir / *record.segmap_path).string());
        if (map.width != table.width || map.height != table.height) {
          std::cout << table.table_id << ": segmap is " << map.width << "x"
                    << map.height << " but the table is " << table.width << "x"
                    << table.height << "\n";
          ++findings;
        }
      } catch (const tgraph::Error& e) {
        std::cout << table.table_id << ": segmap unreadable: " << e.what() << "\n";
        ++findings;
      }
    }
  }
  std::cerr << findings << " problems in " << records.size() << " tables\n";
  return findings == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"table graph toolkit: synthesize, train, predict, evaluate, convert"};
  app.require_subcommand(1);

  DatagenOpts datagen_opts;
  CLI::App* datagen_cmd =
      app.add_subcommand("datagen", "generate a synthetic labeled dataset");
  datagen_cmd->add_option("--out", datagen_opts.out, "output JSONL path");
  datagen_cmd->add_option("--config", datagen_opts.config, "flat JSON config file");
  datagen_cmd->add_option("--count", datagen_opts.count, "number of tables")
      ->capture_default_str();
  datagen_cmd->add_option("--max-rows", datagen_opts.max_rows, "maximum grid rows")
      ->capture_default_str();
  datagen_cmd->add_option("--max-cols", datagen_opts.max_cols, "maximum grid columns")
      ->capture_default_str();
  datagen_cmd
      ->add_option("--span-prob", datagen_opts.span_prob,
                   "merge probability per candidate slot")
      ->capture_default_str();
  datagen_cmd->add_option("--image-w", datagen_opts.image_w, "image width in px")
      ->capture_default_str();
  datagen_cmd->add_option("--image-h", datagen_opts.image_h, "image height in px")
      ->capture_default_str();
  datagen_cmd
      ->add_option("--jitter", datagen_opts.jitter,
                   "separator perturbation as a fraction of slot size")
      ->capture_default_str();
  datagen_cmd
      ->add_option("--row-weighting", datagen_opts.row_weighting,
                   "size distribution: uniform or long_tail")
      ->capture_default_str();
  datagen_cmd->add_option("--seed", datagen_opts.seed, "generator seed")
      ->capture_default_str();
  datagen_cmd->add_flag("--with-text", datagen_opts.with_text,
                        "fill cell texts with r{row}c{col}");
  datagen_cmd->add_flag("--segmaps", datagen_opts.segmaps,
                        "render PGM segmentation maps beside the dataset");

  TrainOpts train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "fit a model on a labeled dataset");
  train_cmd->add_option("--data", train_opts.data, "training JSONL path");
  train_cmd->add_option("--out", train_opts.out, "output model JSON path");
  train_cmd->add_option("--config", train_opts.config, "flat JSON config file");
  train_cmd->add_option("--profile", train_opts.model.profile, "default or historical")
      ->check(CLI::IsMember({"default", "historical"}))
      ->capture_default_str();
  train_cmd
      ->add_option("--learning-rate", train_opts.learning_rate, "gradient step size")
      ->capture_default_str();
  train_cmd->add_option("--momentum", train_opts.momentum, "momentum coefficient")
      ->capture_default_str();
  train_cmd->add_option("--epochs", train_opts.epochs, "full-batch epochs")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_opts.seed, "initialization seed")
      ->capture_default_str();
  train_cmd->add_option("--hidden", train_opts.hidden, "hidden width")
      ->capture_default_str();
  train_cmd->add_option("--loss", train_opts.loss, "ce or focal")
      ->capture_default_str();
  train_cmd
      ->add_option("--focal-variant", train_opts.focal_variant,
                   "as-printed or conventional")
      ->capture_default_str();
  train_cmd
      ->add_option("--decode-threshold", train_opts.model.decode_threshold,
                   "ordinal decoding threshold")
      ->capture_default_str();
  train_cmd->add_option("--alpha", train_opts.model.alpha, "adjacency distance factor")
      ->capture_default_str();
  train_cmd->add_option("--prune-k", train_opts.model.prune_k,
                        "keep only k*N strongest edges per graph");
  train_cmd->add_option("--t-row", train_opts.t_row,
                        "row index count override (default: data maximum + 1)");
  train_cmd->add_option("--t-col", train_opts.t_col,
                        "column index count override (default: data maximum + 1)");
  train_cmd->add_flag("--include-log-size,!--no-include-log-size",
                      train_opts.include_log_size, "append log-size node features")
      ->capture_default_str();

  PredictOpts predict_opts;
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "fill logical locations using a trained model");
  predict_cmd->add_option("--model", predict_opts.model_path, "model JSON path");
  predict_cmd->add_option("--in", predict_opts.in, "input JSONL path");
  predict_cmd->add_option("--out", predict_opts.out, "output JSONL path");
  predict_cmd->add_option("--config", predict_opts.config, "flat JSON config file");
  predict_cmd->add_option("--profile", predict_opts.model.profile, "default or historical")
      ->check(CLI::IsMember({"default", "historical"}))
      ->capture_default_str();
  predict_cmd->add_option("--alpha", predict_opts.model.alpha, "adjacency distance factor")
      ->capture_default_str();
  predict_cmd->add_option("--prune-k", predict_opts.model.prune_k,
                          "keep only k*N strongest edges per graph");
  predict_cmd
      ->add_option("--decode-threshold", predict_opts.model.decode_threshold,
                   "ordinal decoding threshold")
      ->capture_default_str();

  BoxesOpts boxes_opts;
  CLI::App* boxes_cmd =
      app.add_subcommand("boxes", "extract cell boxes from a segmentation map");
  boxes_cmd->add_option("--map", boxes_opts.map_path, "PGM segmentation map path");
  boxes_cmd->add_option("--out", boxes_opts.out, "output path (default: stdout)");
  boxes_cmd->add_option("--id", boxes_opts.id, "table id for --as-table output");
  boxes_cmd->add_option("--config", boxes_opts.config, "flat JSON config file");
  boxes_cmd->add_option("--profile", boxes_opts.profile, "default or historical")
      ->check(CLI::IsMember({"default", "historical"}))
      ->capture_default_str();
  boxes_cmd->add_flag("--open,!--no-open", boxes_opts.open,
                      "apply 3x3 morphological opening first");
  boxes_cmd->add_option("--min-area", boxes_opts.min_area, "drop smaller components")
      ->capture_default_str();
  boxes_cmd->add_flag("--as-table", boxes_opts.as_table,
                      "emit a dataset JSONL line instead of box rows");

  EvalOpts eval_opts;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score predictions against ground truth");
  eval_cmd->add_option("--gt", eval_opts.gt, "ground-truth JSONL path");
  eval_cmd->add_option("--pred", eval_opts.pred, "prediction JSONL path");
  eval_cmd->add_option("--report", eval_opts.report,
                       "report JSON path (default: stdout)");
  eval_cmd->add_option("--config", eval_opts.config, "flat JSON config file");
  eval_cmd->add_option("--profile", eval_opts.model.profile, "default or historical")
      ->check(CLI::IsMember({"default", "historical"}))
      ->capture_default_str();
  eval_cmd
      ->add_option("--drop-fraction", eval_opts.drop_fraction,
                   "randomly drop this fraction of predicted cells before scoring")
      ->capture_default_str();
  eval_cmd->add_option("--drop-seed", eval_opts.drop_seed, "seed for the drop draw")
      ->capture_default_str();
  eval_cmd->add_option("--alpha", eval_opts.model.alpha, "accepted for config parity")
      ->capture_default_str();
  eval_cmd->add_option("--prune-k", eval_opts.model.prune_k, "accepted for config parity");
  eval_cmd->add_option("--decode-threshold", eval_opts.model.decode_threshold,
                       "accepted for config parity")
      ->capture_default_str();

  ConvertOpts convert_opts;
  CLI::App* convert_cmd =
      app.add_subcommand("convert", "render tables as csv, xml, html, or adjacency");
  convert_cmd->add_option("--in", convert_opts.in, "input JSONL path");
  convert_cmd->add_option("--format", convert_opts.format,
                          "csv, xml, html, or adjacency");
  convert_cmd->add_option("--out", convert_opts.out, "output path (default: stdout)");
  convert_cmd->add_option("--config", convert_opts.config, "flat JSON config file");

  ValidateOpts validate_opts;
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "report invariant violations in a dataset");
  validate_cmd->add_option("--in", validate_opts.in, "input JSONL path");
  validate_cmd->add_option("--config", validate_opts.config, "flat JSON config file");
  validate_cmd->add_flag("--require-logical,!--no-require-logical",
                         validate_opts.require_logical,
                         "require logical locations on every cell");
  validate_cmd->add_flag("--require-grid,!--no-require-grid",
                         validate_opts.require_grid,
                         "require a conflict-free logical grid");
  validate_cmd->add_flag("--strict", validate_opts.strict,
                         "reject unknown JSON fields while parsing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (datagen_cmd->parsed()) return run_datagen(datagen_cmd, datagen_opts);
    if (train_cmd->parsed()) return run_train(train_cmd, train_opts);
    if (predict_cmd->parsed()) return run_predict(predict_cmd, predict_opts);
    if (boxes_cmd->parsed()) return run_boxes(boxes_cmd, boxes_opts);
    if (eval_cmd->parsed()) return run_eval(eval_cmd, eval_opts);
    if (convert_cmd->parsed()) return run_convert(convert_cmd, convert_opts);
    if (validate_cmd->parsed()) return run_validate(validate_cmd, validate_opts);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const tgraph::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
