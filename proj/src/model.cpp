#include "tgraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <utility>

#include "json.hpp"
#include "tgraph/parallel.hpp"

namespace tgraph::model {

namespace {

constexpr double kClampLo = 1e-7;
constexpr double kClampHi = 1.0 - 1e-7;

double clamp_p(double p) { return std::clamp(p, kClampLo, kClampHi); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Per-element loss term, negated and node-averaged by the caller.
double focal_term(double p, bool positive, double gamma, FocalVariant variant) {
  if (positive) return std::pow(1.0 - p, gamma) * std::log(p);
  if (variant == FocalVariant::AsPrinted) {
    return std::pow(1.0 - p, gamma) * std::log(1.0 - p);
  }
  return std::pow(p, gamma) * std::log(1.0 - p);
}

double focal_term_dp(double p, bool positive, double gamma, FocalVariant variant) {
  if (positive) {
    return -gamma * std::pow(1.0 - p, gamma - 1.0) * std::log(p) +
           std::pow(1.0 - p, gamma) / p;
  }
  if (variant == FocalVariant::AsPrinted) {
    return -std::pow(1.0 - p, gamma - 1.0) * (gamma * std::log(1.0 - p) + 1.0);
  }
  return gamma * std::pow(p, gamma - 1.0) * std::log(1.0 - p) -
         std::pow(p, gamma) / (1.0 - p);
}

void check_labels(const Eigen::MatrixXd& p, const std::vector<int>& r) {
  if (p.rows() == 0) {
    throw Error(ErrorCode::EmptyBatch, "loss needs at least one node");
  }
  if (static_cast<Eigen::Index>(r.size()) != p.rows()) {
    throw Error(ErrorCode::ShapeError, "one label per probability row required");
  }
  const int t_count = static_cast<int>(p.cols()) + 1;
  for (int ri : r) {
    if (ri < 0 || ri > t_count - 1) {
      throw Error(ErrorCode::InvalidIndex,
                  "label " + std::to_string(ri) + " outside [0, " +
                      std::to_string(t_count - 1) + "]");
    }
  }
}

double ordinal_loss(const Eigen::MatrixXd& p, const std::vector<int>& r,
                    const Eigen::VectorXd& gamma, FocalVariant variant) {
  check_labels(p, r);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index t = 0; t < p.cols(); ++t) {
      const bool positive = t < r[static_cast<std::size_t>(i)];
      sum += focal_term(clamp_p(p(i, t)), positive, gamma(t), variant);
    }
  }
  return -sum / static_cast<double>(p.rows());
}

struct HeadGrad {
  double loss = 0.0;
  Eigen::MatrixXd dlogits;  // dL/dz
};

// p holds raw sigmoid outputs; the clamp saturates, so elements at the clamp
// boundary get zero gradient.
HeadGrad head_loss_grad(const Eigen::MatrixXd& p, const std::vector<int>& r,
                        const Eigen::VectorXd& gamma, FocalVariant variant) {
  check_labels(p, r);
  const double inv_n = 1.0 / static_cast<double>(p.rows());
  HeadGrad out;
  out.dlogits = Eigen::MatrixXd::Zero(p.rows(), p.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index t = 0; t < p.cols(); ++t) {
      const bool positive = t < r[static_cast<std::size_t>(i)];
      const double raw = p(i, t);
      const double clamped = clamp_p(raw);
      sum += focal_term(clamped, positive, gamma(t), variant);
      if (raw > kClampLo && raw < kClampHi) {
        out.dlogits(i, t) =
            -inv_n * focal_term_dp(raw, positive, gamma(t), variant) * raw * (1.0 - raw);
      }
    }
  }
  out.loss = -sum * inv_n;
  return out;
}

Eigen::VectorXd head_gamma(const Eigen::VectorXd& prior, int t_count, LossKind loss) {
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(t_count - 1);
  if (loss == LossKind::Focal) {
    if (prior.size() != t_count) {
      throw Error(ErrorCode::ShapeError, "prior length must equal index count");
    }
    for (int t = 0; t < t_count - 1; ++t) gamma(t) = focal_gamma(prior(t));
  }
  return gamma;
}

Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.real(-limit, limit);
  }
  return m;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  z.w_row.setZero();
  z.w_col.setZero();
  z.b_row.setZero();
  z.b_col.setZero();
  z.w_row_start.setZero();
  z.w_row_end.setZero();
  z.w_col_start.setZero();
  z.w_col_end.setZero();
  z.b_row_start.setZero();
  z.b_row_end.setZero();
  z.b_col_start.setZero();
  z.b_col_end.setZero();
  return z;
}

template <typename Fn>
void for_each_param(ModelParams& a, const ModelParams& b, Fn&& fn) {
  fn(a.w_row, b.w_row);
  fn(a.w_col, b.w_col);
  fn(a.w_row_start, b.w_row_start);
  fn(a.w_row_end, b.w_row_end);
  fn(a.w_col_start, b.w_col_start);
  fn(a.w_col_end, b.w_col_end);
  fn(a.b_row, b.b_row);
  fn(a.b_col, b.b_col);
  fn(a.b_row_start, b.b_row_start);
  fn(a.b_row_end, b.b_row_end);
  fn(a.b_col_start, b.b_col_start);
  fn(a.b_col_end, b.b_col_end);
}

void validate_config(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) {
    throw Error(ErrorCode::InvalidFraction, "learning_rate must be positive");
  }
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
    throw Error(ErrorCode::InvalidFraction, "momentum must be in [0, 1)");
  }
  if (cfg.epochs < 1) {
    throw Error(ErrorCode::InvalidK, "epochs must be at least 1");
  }
  if (cfg.hidden < 1) {
    throw Error(ErrorCode::InvalidK, "hidden width must be at least 1");
  }
  if (!(cfg.decode_threshold > 0.0 && cfg.decode_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidFraction, "decode_threshold must be in (0, 1)");
  }
}

std::vector<int> head_labels(const std::vector<LogicalLocation>& labels,
                             int LogicalLocation::* field) {
  std::vector<int> r;
  r.reserve(labels.size());
  for (const LogicalLocation& l : labels) r.push_back(l.*field);
  return r;
}

}  // namespace

std::vector<int> encode(int r, int t_count) {
  if (t_count < 2) {
    throw Error(ErrorCode::InvalidIndex, "index count must be at least 2");
  }
  if (r < 0 || r > t_count - 1) {
    throw Error(ErrorCode::InvalidIndex,
                "index " + std::to_string(r) + " outside [0, " +
                    std::to_string(t_count - 1) + "]");
  }
  std::vector<int> q(static_cast<std::size_t>(t_count) - 1, 0);
  for (int t = 0; t < r; ++t) q[static_cast<std::size_t>(t)] = 1;
  return q;
}

int decode(const std::vector<double>& p, double tau) {
  int count = 0;
  for (double v : p) count += v > tau;
  return count;
}

int decode(const Eigen::RowVectorXd& p, double tau) {
  int count = 0;
  for (Eigen::Index t = 0; t < p.size(); ++t) count += p(t) > tau;
  return count;
}

double ordinal_ce_loss(const Eigen::MatrixXd& p, const std::vector<int>& r) {
  return ordinal_loss(p, r, Eigen::VectorXd::Zero(p.cols()), FocalVariant::AsPrinted);
}

double focal_gamma(double lambda) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw Error(ErrorCode::InvalidPrior, "class prior must be in [0, 1]");
  }
  if (lambda == 0.0) return 2.0;
  const double one_minus = 1.0 - lambda;
  return std::min(2.0, -one_minus * one_minus * std::log(lambda) + 1.0);
}

double ordinal_focal_loss(const Eigen::MatrixXd& p, const std::vector<int>& r,
                          const Eigen::VectorXd& gamma, FocalVariant variant) {
  if (gamma.size() != p.cols()) {
    throw Error(ErrorCode::ShapeError, "one gamma per threshold required");
  }
  for (Eigen::Index t = 0; t < gamma.size(); ++t) {
    if (gamma(t) < 0.0) {
      throw Error(ErrorCode::InvalidPrior, "gamma must be nonnegative");
    }
  }
  return ordinal_loss(p, r, gamma, variant);
}

ClassPriors class_priors(const std::vector<TableGraph>& dataset, int t_row, int t_col) {
  if (t_row < 2 || t_col < 2) {
    throw Error(ErrorCode::InvalidIndex, "index counts must be at least 2");
  }
  ClassPriors priors;
  priors.row_start = Eigen::VectorXd::Zero(t_row);
  priors.row_end = Eigen::VectorXd::Zero(t_row);
  priors.col_start = Eigen::VectorXd::Zero(t_col);
  priors.col_end = Eigen::VectorXd::Zero(t_col);
  long long total = 0;
  auto tally = [](Eigen::VectorXd& prior, int index) {
    if (index < 0 || index >= prior.size()) {
      throw Error(ErrorCode::InvalidIndex,
                  "logical index " + std::to_string(index) + " outside [0, " +
                      std::to_string(prior.size() - 1) + "]");
    }
    prior(index) += 1.0;
  };
  for (const TableGraph& table : dataset) {
    for (const CellNode& cell : table.cells) {
      if (!cell.logical) {
        throw Error(ErrorCode::MissingLabels,
                    "cell " + std::to_string(cell.id) + " has no logical location");
      }
      tally(priors.row_start, cell.logical->row_start);
      tally(priors.row_end, cell.logical->row_end);
      tally(priors.col_start, cell.logical->col_start);
      tally(priors.col_end, cell.logical->col_end);
      ++total;
    }
  }
  if (total == 0) {
    throw Error(ErrorCode::EmptyBatch, "class priors need at least one cell");
  }
  priors.row_start /= static_cast<double>(total);
  priors.row_end /= static_cast<double>(total);
  priors.col_start /= static_cast<double>(total);
  priors.col_end /= static_cast<double>(total);
  return priors;
}

ModelParams init_params(int d, int h, int t_row, int t_col,
                        const graph::FeatureConfig& features, Rng& rng) {
  if (d < 1 || h < 1 || t_row < 2 || t_col < 2) {
    throw Error(ErrorCode::ShapeError, "invalid parameter dimensions");
  }
  ModelParams params;
  params.d = d;
  params.h = h;
  params.t_row = t_row;
  params.t_col = t_col;
  params.features = features;
  params.w_row = glorot(d, h, rng);
  params.w_col = glorot(d, h, rng);
  params.w_row_start = glorot(h, t_row - 1, rng);
  params.w_row_end = glorot(h, t_row - 1, rng);
  params.w_col_start = glorot(h, t_col - 1, rng);
  params.w_col_end = glorot(h, t_col - 1, rng);
  params.b_row = Eigen::RowVectorXd::Zero(h);
  params.b_col = Eigen::RowVectorXd::Zero(h);
  params.b_row_start = Eigen::RowVectorXd::Zero(t_row - 1);
  params.b_row_end = Eigen::RowVectorXd::Zero(t_row - 1);
  params.b_col_start = Eigen::RowVectorXd::Zero(t_col - 1);
  params.b_col_end = Eigen::RowVectorXd::Zero(t_col - 1);
  return params;
}

namespace {

struct HiddenState {
  Eigen::MatrixXd m;   // Ahat * X
  Eigen::MatrixXd z;   // pre-activation
  Eigen::MatrixXd h;   // ReLU(z)
};

HiddenState hidden_state(const Eigen::MatrixXd& ahat, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& w, const Eigen::RowVectorXd& b) {
  HiddenState s;
  s.m = ahat * x;
  s.z = (s.m * w).rowwise() + b;
  s.h = s.z.cwiseMax(0.0);
  return s;
}

Eigen::MatrixXd head_probs(const Eigen::MatrixXd& hidden, const Eigen::MatrixXd& w,
                           const Eigen::RowVectorXd& b) {
  Eigen::MatrixXd logits = (hidden * w).rowwise() + b;
  return logits.unaryExpr([](double z) { return sigmoid(z); });
}

void check_forward_shapes(const ModelParams& params, const Eigen::MatrixXd& x,
                          const Eigen::MatrixXd& ahat_row,
                          const Eigen::MatrixXd& ahat_col) {
  const Eigen::Index n = x.rows();
  if (x.cols() != params.d) {
    throw Error(ErrorCode::ShapeError, "feature width does not match model");
  }
  if (ahat_row.rows() != n || ahat_row.cols() != n || ahat_col.rows() != n ||
      ahat_col.cols() != n) {
    throw Error(ErrorCode::ShapeError, "adjacency must be N x N");
  }
}

}  // namespace

ForwardResult forward(const ModelParams& params, const Eigen::MatrixXd& x,
                      const Eigen::MatrixXd& ahat_row, const Eigen::MatrixXd& ahat_col) {
  check_forward_shapes(params, x, ahat_row, ahat_col);
  const HiddenState row = hidden_state(ahat_row, x, params.w_row, params.b_row);
  const HiddenState col = hidden_state(ahat_col, x, params.w_col, params.b_col);
  ForwardResult out;
  out.p_row_start = head_probs(row.h, params.w_row_start, params.b_row_start);
  out.p_row_end = head_probs(row.h, params.w_row_end, params.b_row_end);
  out.p_col_start = head_probs(col.h, params.w_col_start, params.b_col_start);
  out.p_col_end = head_probs(col.h, params.w_col_end, params.b_col_end);
  return out;
}

std::pair<double, ModelParams> loss_and_grad(const ModelParams& params,
                                             const Eigen::MatrixXd& x,
                                             const Eigen::MatrixXd& ahat_row,
                                             const Eigen::MatrixXd& ahat_col,
                                             const std::vector<LogicalLocation>& labels,
                                             const TrainConfig& cfg,
                                             const ClassPriors& priors) {
  check_forward_shapes(params, x, ahat_row, ahat_col);
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw Error(ErrorCode::ShapeError, "one label per node required");
  }

  const HiddenState row = hidden_state(ahat_row, x, params.w_row, params.b_row);
  const HiddenState col = hidden_state(ahat_col, x, params.w_col, params.b_col);

  const Eigen::VectorXd gamma_rs = head_gamma(priors.row_start, params.t_row, cfg.loss);
  const Eigen::VectorXd gamma_re = head_gamma(priors.row_end, params.t_row, cfg.loss);
  const Eigen::VectorXd gamma_cs = head_gamma(priors.col_start, params.t_col, cfg.loss);
  const Eigen::VectorXd gamma_ce = head_gamma(priors.col_end, params.t_col, cfg.loss);

  const HeadGrad rs =
      head_loss_grad(head_probs(row.h, params.w_row_start, params.b_row_start),
                     head_labels(labels, &LogicalLocation::row_start), gamma_rs,
                     cfg.focal_variant);
  const HeadGrad re = head_loss_grad(head_probs(row.h, params.w_row_end, params.b_row_end),
                                     head_labels(labels, &LogicalLocation::row_end),
                                     gamma_re, cfg.focal_variant);
  const HeadGrad cs =
      head_loss_grad(head_probs(col.h, params.w_col_start, params.b_col_start),
                     head_labels(labels, &LogicalLocation::col_start), gamma_cs,
                     cfg.focal_variant);
  const HeadGrad ce = head_loss_grad(head_probs(col.h, params.w_col_end, params.b_col_end),
                                     head_labels(labels, &LogicalLocation::col_end),
                                     gamma_ce, cfg.focal_variant);

  ModelParams grads = zeros_like(params);
  grads.w_row_start = row.h.transpose() * rs.dlogits;
  grads.b_row_start = rs.dlogits.colwise().sum();
  grads.w_row_end = row.h.transpose() * re.dlogits;
  grads.b_row_end = re.dlogits.colwise().sum();
  grads.w_col_start = col.h.transpose() * cs.dlogits;
  grads.b_col_start = cs.dlogits.colwise().sum();
  grads.w_col_end = col.h.transpose() * ce.dlogits;
  grads.b_col_end = ce.dlogits.colwise().sum();

  const Eigen::MatrixXd relu_row = (row.z.array() > 0.0).cast<double>();
  const Eigen::MatrixXd relu_col = (col.z.array() > 0.0).cast<double>();
  const Eigen::MatrixXd gz_row =
      (rs.dlogits * params.w_row_start.transpose() +
       re.dlogits * params.w_row_end.transpose())
          .cwiseProduct(relu_row);
  const Eigen::MatrixXd gz_col =
      (cs.dlogits * params.w_col_start.transpose() +
       ce.dlogits * params.w_col_end.transpose())
          .cwiseProduct(relu_col);
  grads.w_row = row.m.transpose() * gz_row;
  grads.b_row = gz_row.colwise().sum();
  grads.w_col = col.m.transpose() * gz_col;
  grads.b_col = gz_col.colwise().sum();

  return {rs.loss + re.loss + cs.loss + ce.loss, grads};
}

namespace {

struct TableInputs {
  Eigen::MatrixXd x;
  Eigen::MatrixXd ahat_row;
  Eigen::MatrixXd ahat_col;
  std::vector<LogicalLocation> labels;
};

TableInputs prepare_table(const TableGraph& table, const TrainConfig& cfg) {
  TableInputs inputs;
  inputs.x = graph::node_features(table, cfg.features);
  graph::WeightedAdjacency adj = graph::build_adjacency(table, cfg.alpha);
  if (cfg.prune_k) adj = graph::prune_edges(adj, *cfg.prune_k);
  inputs.ahat_row = graph::normalize_adjacency(adj.a_row);
  inputs.ahat_col = graph::normalize_adjacency(adj.a_col);
  inputs.labels.reserve(table.cells.size());
  for (const CellNode& cell : table.cells) {
    if (!cell.logical) {
      throw Error(ErrorCode::MissingLabels,
                  "cell " + std::to_string(cell.id) + " has no logical location");
    }
    inputs.labels.push_back(*cell.logical);
  }
  return inputs;
}

int max_index_plus_one(const std::vector<TableGraph>& dataset, bool rows) {
  int max_index = 0;
  for (const TableGraph& table : dataset) {
    for (const CellNode& cell : table.cells) {
      if (!cell.logical) {
        throw Error(ErrorCode::MissingLabels,
                    "cell " + std::to_string(cell.id) + " has no logical location");
      }
      const LogicalLocation& l = *cell.logical;
      max_index = std::max(max_index, rows ? l.row_end : l.col_end);
      max_index = std::max(max_index, rows ? l.row_start : l.col_start);
    }
  }
  return std::max(2, max_index + 1);
}

}  // namespace

ModelParams train(const std::vector<TableGraph>& dataset, const TrainConfig& cfg) {
  validate_config(cfg);
  if (dataset.empty()) {
    throw Error(ErrorCode::EmptyBatch, "training needs at least one table");
  }
  const int t_row = cfg.t_row ? *cfg.t_row : max_index_plus_one(dataset, true);
  const int t_col = cfg.t_col ? *cfg.t_col : max_index_plus_one(dataset, false);
  const ClassPriors priors = class_priors(dataset, t_row, t_col);

  std::vector<TableInputs> tables;
  tables.reserve(dataset.size());
  for (const TableGraph& table : dataset) {
    if (table.cells.empty()) continue;
    tables.push_back(prepare_table(table, cfg));
  }
  if (tables.empty()) {
    throw Error(ErrorCode::EmptyBatch, "training needs at least one non-empty table");
  }

  Rng rng(cfg.seed);
  ModelParams params =
      init_params(cfg.features.dimension(), cfg.hidden, t_row, t_col, cfg.features, rng);
  ModelParams velocity = zeros_like(params);

  std::vector<std::pair<double, ModelParams>> slots(tables.size());
  const double inv_k = 1.0 / static_cast<double>(tables.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    parallel_for(tables.size(), [&](std::size_t i) {
      const TableInputs& t = tables[i];
      slots[i] = loss_and_grad(params, t.x, t.ahat_row, t.ahat_col, t.labels, cfg, priors);
    });
    double loss = 0.0;
    ModelParams grads = zeros_like(params);
    for (const auto& [table_loss, table_grads] : slots) {
      loss += table_loss;
      for_each_param(grads, table_grads, [](auto& g, const auto& tg) { g += tg; });
    }
    loss *= inv_k;
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::TrainingDiverged,
                  "loss became non-finite at epoch " + std::to_string(epoch));
    }
    for_each_param(grads, grads, [&](auto& g, const auto&) { g *= inv_k; });
    for_each_param(velocity, grads, [&](auto& v, const auto& g) {
      v = cfg.momentum * v - cfg.learning_rate * g;
    });
    for_each_param(params, velocity, [](auto& p, const auto& v) { p += v; });
  }
  return params;
}

TableGraph predict(const ModelParams& params, const TableGraph& t, const TrainConfig& cfg) {
  TableGraph out = t;
  if (t.cells.empty()) return out;
  const Eigen::MatrixXd x = graph::node_features(t, params.features);
  graph::WeightedAdjacency adj = graph::build_adjacency(t, cfg.alpha);
  if (cfg.prune_k) adj = graph::prune_edges(adj, *cfg.prune_k);
  const ForwardResult probs = forward(params, x, graph::normalize_adjacency(adj.a_row),
                                      graph::normalize_adjacency(adj.a_col));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    LogicalLocation l;
    l.row_start = decode(Eigen::RowVectorXd(probs.p_row_start.row(i)), cfg.decode_threshold);
    l.row_end = decode(Eigen::RowVectorXd(probs.p_row_end.row(i)), cfg.decode_threshold);
    l.col_start = decode(Eigen::RowVectorXd(probs.p_col_start.row(i)), cfg.decode_threshold);
    l.col_end = decode(Eigen::RowVectorXd(probs.p_col_end.row(i)), cfg.decode_threshold);
    out.cells[static_cast<std::size_t>(i)].logical = l;
  }
  return out;
}

namespace {

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::ordered_json entry;
  entry["shape"] = {m.rows(), m.cols()};
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  entry["data"] = data;
  return entry;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& entry, Eigen::Index rows,
                                 Eigen::Index cols, const std::string& name) {
  if (!entry.contains("shape") || !entry.contains("data")) {
    throw Error(ErrorCode::ParseError, "parameter " + name + " missing shape or data");
  }
  const auto& shape = entry["shape"];
  if (!shape.is_array() || shape.size() != 2 ||
      shape[0].get<Eigen::Index>() != rows || shape[1].get<Eigen::Index>() != cols) {
    throw Error(ErrorCode::ShapeError, "parameter " + name + " has unexpected shape");
  }
  const auto& data = entry["data"];
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw Error(ErrorCode::ShapeError, "parameter " + name + " has unexpected length");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = data[k++].get<double>();
  }
  return m;
}

}  // namespace

void save_model(const std::filesystem::path& path, const ModelParams& params) {
  nlohmann::ordered_json doc;
  doc["format"] = "tgraph-model/1";
  nlohmann::ordered_json config;
  config["d"] = params.d;
  config["h"] = params.h;
  config["T_row"] = params.t_row;
  config["T_col"] = params.t_col;
  nlohmann::ordered_json features;
  features["include_log_size"] = params.features.include_log_size;
  if (params.features.patch_grid) {
    features["patch_grid"] = *params.features.patch_grid;
  } else {
    features["patch_grid"] = nullptr;
  }
  config["feature_config"] = features;
  doc["config"] = config;

  nlohmann::ordered_json weights;
  weights["w_row"] = matrix_json(params.w_row);
  weights["b_row"] = matrix_json(params.b_row);
  weights["w_col"] = matrix_json(params.w_col);
  weights["b_col"] = matrix_json(params.b_col);
  weights["w_row_start"] = matrix_json(params.w_row_start);
  weights["b_row_start"] = matrix_json(params.b_row_start);
  weights["w_row_end"] = matrix_json(params.w_row_end);
  weights["b_row_end"] = matrix_json(params.b_row_end);
  weights["w_col_start"] = matrix_json(params.w_col_start);
  weights["b_col_start"] = matrix_json(params.b_col_start);
  weights["w_col_end"] = matrix_json(params.w_col_end);
  weights["b_col_end"] = matrix_json(params.b_col_end);
  doc["params"] = weights;

  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  out << doc.dump() << "\n";
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot read " + path.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  if (!doc.contains("format") || doc["format"] != "tgraph-model/1") {
    throw Error(ErrorCode::ParseError, path.string() + ": not a tgraph-model/1 file");
  }
  if (!doc.contains("config") || !doc.contains("params")) {
    throw Error(ErrorCode::ParseError, path.string() + ": missing config or params");
  }
  const auto& config = doc["config"];
  ModelParams params;
  try {
    params.d = config.at("d").get<int>();
    params.h = config.at("h").get<int>();
    params.t_row = config.at("T_row").get<int>();
    params.t_col = config.at("T_col").get<int>();
    const auto& features = config.at("feature_config");
    params.features.include_log_size = features.at("include_log_size").get<bool>();
    if (!features.at("patch_grid").is_null()) {
      params.features.patch_grid = features.at("patch_grid").get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": bad config: " + e.what());
  }
  if (params.d < 1 || params.h < 1 || params.t_row < 2 || params.t_col < 2) {
    throw Error(ErrorCode::ShapeError, path.string() + ": invalid model dimensions");
  }
  if (params.features.dimension() != params.d) {
    throw Error(ErrorCode::ShapeError,
                path.string() + ": feature config does not produce d features");
  }

  const auto& weights = doc["params"];
  auto read = [&](const char* name, Eigen::Index rows, Eigen::Index cols) {
    if (!weights.contains(name)) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ": missing parameter " + name);
    }
    return matrix_from_json(weights[name], rows, cols, name);
  };
  params.w_row = read("w_row", params.d, params.h);
  params.b_row = read("b_row", 1, params.h);
  params.w_col = read("w_col", params.d, params.h);
  params.b_col = read("b_col", 1, params.h);
  params.w_row_start = read("w_row_start", params.h, params.t_row - 1);
  params.b_row_start = read("b_row_start", 1, params.t_row - 1);
  params.w_row_end = read("w_row_end", params.h, params.t_row - 1);
  params.b_row_end = read("b_row_end", 1, params.t_row - 1);
  params.w_col_start = read("w_col_start", params.h, params.t_col - 1);
  params.b_col_start = read("b_col_start", 1, params.t_col - 1);
  params.w_col_end = read("w_col_end", params.h, params.t_col - 1);
  params.b_col_end = read("b_col_end", 1, params.t_col - 1);
  return params;
}

}  // namespace tgraph::model
