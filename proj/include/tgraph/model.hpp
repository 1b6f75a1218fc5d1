#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "tgraph/core.hpp"
#include "tgraph/graph.hpp"
#include "tgraph/rng.hpp"

namespace tgraph::model {

enum class LossKind { Ce, Focal };

// AsPrinted modulates both loss terms by (1-p)^gamma; Conventional uses the
// standard p^gamma on the negative term. AsPrinted has a degenerate optimum:
// for gamma above ~1.4 a wrong-side probability of 0.5 is already past the
// point where its penalty decreases toward zero, so whole heads saturate
// wrong with near-zero loss. Training therefore defaults to Conventional.
enum class FocalVariant { AsPrinted, Conventional };

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  int epochs = 3000;
  std::uint64_t seed = 0;
  int hidden = 64;
  LossKind loss = LossKind::Focal;
  FocalVariant focal_variant = FocalVariant::Conventional;
  double decode_threshold = 0.5;
  double alpha = 3.0;
  std::optional<int> prune_k;
  std::optional<int> t_row;
  std::optional<int> t_col;
  graph::FeatureConfig features;
};

struct ModelParams {
  int d = 0;
  int h = 0;
  int t_row = 2;
  int t_col = 2;
  graph::FeatureConfig features;

  Eigen::MatrixXd w_row, w_col;        // d x h
  Eigen::RowVectorXd b_row, b_col;     // h
  Eigen::MatrixXd w_row_start, w_row_end;  // h x (t_row - 1)
  Eigen::MatrixXd w_col_start, w_col_end;  // h x (t_col - 1)
  Eigen::RowVectorXd b_row_start, b_row_end, b_col_start, b_col_end;
};

// Per-index empirical frequencies over the training cells; each vector sums
// to 1 and has length T for its axis.
struct ClassPriors {
  Eigen::VectorXd row_start, row_end, col_start, col_end;
};

struct ForwardResult {
  Eigen::MatrixXd p_row_start, p_row_end;  // N x (t_row - 1)
  Eigen::MatrixXd p_col_start, p_col_end;  // N x (t_col - 1)
};

// Binary threshold targets: q[t] = 1 iff t < r, length t_count - 1.
std::vector<int> encode(int r, int t_count);

// Number of probabilities strictly above tau; inconsistent runs are counted,
// not repaired.
int decode(const std::vector<double>& p, double tau = 0.5);
int decode(const Eigen::RowVectorXd& p, double tau = 0.5);

double ordinal_ce_loss(const Eigen::MatrixXd& p, const std::vector<int>& r);

// min(2, -(1-lambda)^2 ln(lambda) + 1); lambda = 0 (absent class) maps to
// the clip value 2.
double focal_gamma(double lambda);

double ordinal_focal_loss(const Eigen::MatrixXd& p, const std::vector<int>& r,
                          const Eigen::VectorXd& gamma,
                          FocalVariant variant = FocalVariant::AsPrinted);

ClassPriors class_priors(const std::vector<TableGraph>& dataset, int t_row, int t_col);

// Glorot-uniform weights drawn in a fixed order (w_row, w_col, then the four
// output maps), biases zero.
ModelParams init_params(int d, int h, int t_row, int t_col,
                        const graph::FeatureConfig& features, Rng& rng);

ForwardResult forward(const ModelParams& params, const Eigen::MatrixXd& x,
                      const Eigen::MatrixXd& ahat_row, const Eigen::MatrixXd& ahat_col);

// Loss is the sum of the four heads' node-averaged ordinal losses; grads are
// the exact analytic derivatives, returned in a ModelParams-shaped container.
std::pair<double, ModelParams> loss_and_grad(const ModelParams& params,
                                             const Eigen::MatrixXd& x,
                                             const Eigen::MatrixXd& ahat_row,
                                             const Eigen::MatrixXd& ahat_col,
                                             const std::vector<LogicalLocation>& labels,
                                             const TrainConfig& cfg,
                                             const ClassPriors& priors);

ModelParams train(const std::vector<TableGraph>& dataset, const TrainConfig& cfg);

// Returns the table with every cell's logical location replaced by the
// decoded head outputs.
TableGraph predict(const ModelParams& params, const TableGraph& t, const TrainConfig& cfg);

void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace tgraph::model
