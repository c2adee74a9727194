#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ishne/attention.hpp"
#include "ishne/fusion.hpp"
#include "ishne/hetgraph.hpp"

namespace ishne {

struct TrainConfig {
  int hidden_dim = 8;    // F'
  int heads = 8;         // K
  int fusion_dim = 128;  // d
  double learning_rate = 5e-3;
  double weight_decay = 5e-4;
  int max_epochs = 1000;
  int patience = 100;
  std::uint64_t seed = 0;
  // Inverted dropout on attention coefficients during training; 0 disables.
  double attention_dropout = 0.0;
  Activation attention_activation = Activation::LeakyRelu;
  Activation aggregation_activation = Activation::Elu;
};

void validate_config(const TrainConfig& config);

// "P-A-P" -> "PAP"; the label used in parameter names and reports.
std::string metapath_label(const std::string& spec);

// All learnable state: one attention parameter set per meta-path, the shared
// fusion parameters, and the linear classifier.
struct IshneModel {
  std::vector<std::string> metapath_specs;  // "P-A-P" forms
  std::vector<std::string> metapath_names;  // "PAP" labels, derived
  std::vector<MetaPathAttentionParams> metapaths;
  FusionParams fusion;
  Mat classifier;  // num_classes x (K*F')

  int feature_dim = 0;
  int hidden_dim = 0;
  int heads = 0;
  int fusion_dim = 0;
  int num_classes = 0;
  Activation attention_activation = Activation::LeakyRelu;
  Activation aggregation_activation = Activation::Elu;
};

// Seeded bounded-uniform init, s = sqrt(6 / (fan_in + fan_out)) per tensor.
// Every meta-path starts from the same values, so structurally identical
// meta-paths stay interchangeable.
IshneModel init_model(int feature_dim, int num_classes,
                      std::vector<std::string> metapath_specs,
                      const TrainConfig& config);

// Canonical parameter enumeration: per meta-path M.<name>, P.<name>,
// a.<name>.head<k>; then W_Q, W_K, W_V, q, C. Checkpoints, the optimizer and
// the gradient checks all rely on this order.
void visit_parameters(IshneModel& model,
                      const std::function<void(const std::string&, Mat&)>& fn);
void visit_parameters(const IshneModel& model,
                      const std::function<void(const std::string&, const Mat&)>& fn);

struct Split {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;
};

struct ForwardResult {
  Tensor fused;   // X
  Tensor beta;    // P x 1
  Tensor logits;  // N x num_classes
  std::vector<MetaPathAttentionResult> attentions;
  // Tape handles for every parameter, in canonical order.
  std::vector<std::pair<std::string, Tensor>> bound;
};

// Endpoint node type shared by all neighborhoods (they must agree).
std::string target_type_name(const std::vector<MetaPathNeighborhood>& hoods);

// Per-meta-path, per-head dropout masks (values 0 or 1/(1-p)), built by the
// trainer for one epoch.
using DropoutMasks = std::vector<std::vector<Mat>>;

// Full forward pass: per-meta-path influence attention, semantic fusion, and
// classifier logits Z = X C^T. `features` has one row per target node.
ForwardResult forward(Tape& tape, const IshneModel& model, const Mat& features,
                      const std::vector<MetaPathNeighborhood>& hoods,
                      const DropoutMasks* dropout = nullptr);

struct EpochStats {
  int epoch;
  double train_loss;
  double val_loss;
  double val_micro_f1;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = -1;
  double best_val_loss = 0.0;
};

// Adam loop over full-graph epochs with early stopping on validation loss.
// The model is left holding the parameters of the best validation epoch.
// When `epoch_log` is given, one `epoch\ttrain\tval\tval_micro_f1` line is
// written per epoch.
TrainResult train(IshneModel& model, const HetGraph& graph,
                  const std::vector<MetaPathNeighborhood>& hoods,
                  const Split& split, const TrainConfig& config,
                  std::ostream* epoch_log = nullptr);

// Argmax class per requested row; ties break toward the lowest class id.
std::vector<ClassId> predict(const IshneModel& model, const Mat& features,
                             const std::vector<MetaPathNeighborhood>& hoods,
                             const std::vector<int>& rows);

struct EvalMetrics {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
};

// Metrics over a labeled node-id set.
EvalMetrics evaluate(const IshneModel& model, const HetGraph& graph,
                     const std::vector<MetaPathNeighborhood>& hoods,
                     const std::vector<NodeId>& nodes);

// Local row index + label for each node id; rejects unlabeled nodes.
void gather_labeled_rows(const HetGraph& graph, const std::string& target_type,
                         const std::vector<NodeId>& nodes,
                         std::vector<int>& rows, std::vector<int>& labels);

}  // namespace ishne
