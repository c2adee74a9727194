#include "ishne/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "ishne/format.hpp"
#include "ishne/metrics.hpp"
#include "ishne/rng.hpp"

namespace ishne {

namespace {

Mat glorot(Rng& rng, Index rows, Index cols, Index fan_in, Index fan_out) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return rng.uniform_matrix(rows, cols, -s, s);
}

ClassId argmax_row(const Mat& logits, Index row) {
  ClassId best = 0;
  for (Index c = 1; c < logits.cols(); ++c)
    if (logits(row, c) > logits(row, best)) best = static_cast<ClassId>(c);
  return best;
}

}  // namespace

void validate_config(const TrainConfig& c) {
  if (c.hidden_dim < 1 || c.heads < 1 || c.fusion_dim < 1)
    fail(ErrorCode::invalid_argument, "dimensions and head count must be positive");
  if (c.learning_rate < 0.0 || c.weight_decay < 0.0)
    fail(ErrorCode::invalid_argument, "negative learning rate or weight decay");
  if (c.max_epochs < 1 || c.patience < 1)
    fail(ErrorCode::invalid_argument, "epochs and patience must be positive");
  if (c.patience > c.max_epochs)
    fail(ErrorCode::invalid_argument, "patience exceeds max epochs");
  if (!(c.attention_dropout >= 0.0 && c.attention_dropout < 1.0))
    fail(ErrorCode::invalid_argument, "attention dropout must sit in [0, 1)");
}

std::string metapath_label(const std::string& spec) {
  std::string label;
  for (char c : spec)
    if (c != '-') label += c;
  return label;
}

IshneModel init_model(int feature_dim, int num_classes,
                      std::vector<std::string> metapath_specs,
                      const TrainConfig& config) {
  validate_config(config);
  if (feature_dim < 1 || num_classes < 2)
    fail(ErrorCode::invalid_argument, "need features and at least two classes");
  if (metapath_specs.empty())
    fail(ErrorCode::fewer_than_one_metapath, "no meta-paths configured");

  const Index f = feature_dim, fp = config.hidden_dim, k = config.heads;
  const Index d = config.fusion_dim, kfp = k * fp;

  IshneModel m;
  m.metapath_specs = std::move(metapath_specs);
  for (const std::string& s : m.metapath_specs)
    m.metapath_names.push_back(metapath_label(s));
  m.feature_dim = feature_dim;
  m.hidden_dim = config.hidden_dim;
  m.heads = config.heads;
  m.fusion_dim = config.fusion_dim;
  m.num_classes = num_classes;
  m.attention_activation = config.attention_activation;
  m.aggregation_activation = config.aggregation_activation;

  Rng rng(config.seed);
  MetaPathAttentionParams shared;
  shared.feature_proj = glorot(rng, fp, f, f, fp);
  shared.influence_proj = glorot(rng, fp, f, f, fp);
  for (int h = 0; h < config.heads; ++h)
    shared.attention.push_back(glorot(rng, 2 * fp, 1, 2 * fp, 1));
  m.metapaths.assign(m.metapath_names.size(), shared);

  m.fusion.w_query = glorot(rng, d, kfp, kfp, d);
  m.fusion.w_key = glorot(rng, d, kfp, kfp, d);
  m.fusion.w_value = glorot(rng, d, kfp, kfp, d);
  m.fusion.attn = glorot(rng, d, 1, d, 1);
  m.classifier = glorot(rng, num_classes, kfp, kfp, num_classes);
  return m;
}

void visit_parameters(IshneModel& model,
                      const std::function<void(const std::string&, Mat&)>& fn) {
  for (std::size_t p = 0; p < model.metapaths.size(); ++p) {
    const std::string& name = model.metapath_names[p];
    fn("M." + name, model.metapaths[p].feature_proj);
    fn("P." + name, model.metapaths[p].influence_proj);
    for (std::size_t h = 0; h < model.metapaths[p].attention.size(); ++h)
      fn("a." + name + ".head" + std::to_string(h),
         model.metapaths[p].attention[h]);
  }
  fn("W_Q", model.fusion.w_query);
  fn("W_K", model.fusion.w_key);
  fn("W_V", model.fusion.w_value);
  fn("q", model.fusion.attn);
  fn("C", model.classifier);
}

void visit_parameters(const IshneModel& model,
                      const std::function<void(const std::string&, const Mat&)>& fn) {
  // The const walk shares the mutable one so the orders cannot drift.
  visit_parameters(const_cast<IshneModel&>(model),
                   [&fn](const std::string& name, Mat& value) {
                     fn(name, value);
                   });
}

std::string target_type_name(const std::vector<MetaPathNeighborhood>& hoods) {
  if (hoods.empty())
    fail(ErrorCode::fewer_than_one_metapath, "no meta-path neighborhoods");
  const std::string& t = hoods.front().schema.node_types.front();
  for (const auto& h : hoods)
    if (h.schema.node_types.front() != t)
      fail(ErrorCode::invalid_argument,
           "meta-paths do not share an endpoint node type");
  return t;
}

ForwardResult forward(Tape& tape, const IshneModel& model, const Mat& features,
                      const std::vector<MetaPathNeighborhood>& hoods,
                      const DropoutMasks* dropout) {
  if (hoods.size() != model.metapaths.size())
    fail(ErrorCode::invalid_argument,
         "model has " + std::to_string(model.metapaths.size()) +
             " meta-paths, got " + std::to_string(hoods.size()) +
             " neighborhoods");
  if (features.cols() != model.feature_dim)
    fail(ErrorCode::shape_mismatch,
         "feature dim " + std::to_string(features.cols()) + ", model expects " +
             std::to_string(model.feature_dim));

  ForwardResult r;
  std::vector<MetaPathAttentionTensors> path_tensors(model.metapaths.size());
  FusionTensors fusion_tensors;
  Tensor classifier_tensor;
  {
    std::size_t path = 0, head = 0;
    visit_parameters(model, [&](const std::string& name, const Mat& value) {
      Tensor t = tape.parameter(value);
      r.bound.emplace_back(name, t);
      if (name.rfind("M.", 0) == 0) {
        path_tensors[path].feature_proj = t;
      } else if (name.rfind("P.", 0) == 0) {
        path_tensors[path].influence_proj = t;
      } else if (name.rfind("a.", 0) == 0) {
        path_tensors[path].attention.push_back(t);
        if (++head == model.metapaths[path].attention.size()) {
          head = 0;
          ++path;
        }
      } else if (name == "W_Q") {
        fusion_tensors.w_query = t;
      } else if (name == "W_K") {
        fusion_tensors.w_key = t;
      } else if (name == "W_V") {
        fusion_tensors.w_value = t;
      } else if (name == "q") {
        fusion_tensors.attn = t;
      } else if (name == "C") {
        classifier_tensor = t;
      }
    });
  }

  const Tensor h = tape.input(features);
  std::vector<Tensor> embeddings;
  for (std::size_t p = 0; p < hoods.size(); ++p) {
    std::vector<Tensor> masks;
    if (dropout) {
      for (const Mat& m : (*dropout)[p]) masks.push_back(tape.input(m));
    }
    r.attentions.push_back(multihead_embed(
        h, path_tensors[p], hoods[p], model.attention_activation,
        model.aggregation_activation, dropout ? &masks : nullptr));
    embeddings.push_back(r.attentions.back().embedding);
  }

  FusionResult fused = fuse_metapaths(embeddings, fusion_tensors);
  r.fused = fused.fused;
  r.beta = fused.beta;
  r.logits = matmul(r.fused, transpose(classifier_tensor));
  return r;
}

void gather_labeled_rows(const HetGraph& graph, const std::string& target_type,
                         const std::vector<NodeId>& nodes,
                         std::vector<int>& rows, std::vector<int>& labels) {
  const TypeId t = graph.node_type_id(target_type);
  rows.clear();
  labels.clear();
  for (NodeId id : nodes) {
    const auto cls = graph.label(id);
    if (!cls)
      fail(ErrorCode::invalid_argument,
           "node " + std::to_string(id) + " has no label");
    rows.push_back(graph.local_index(t, id));
    labels.push_back(*cls);
  }
}

TrainResult train(IshneModel& model, const HetGraph& graph,
                  const std::vector<MetaPathNeighborhood>& hoods,
                  const Split& split, const TrainConfig& config,
                  std::ostream* epoch_log) {
  validate_config(config);
  const std::string target = target_type_name(hoods);
  const Mat features = graph.feature_matrix(graph.node_type_id(target));

  std::vector<int> train_rows, train_labels, val_rows, val_labels;
  gather_labeled_rows(graph, target, split.train, train_rows, train_labels);
  gather_labeled_rows(graph, target, split.val, val_rows, val_labels);
  if (train_rows.empty())
    fail(ErrorCode::empty_train_set, "training split is empty");

  // Collect mutable parameter storage once; forward() binds tensors in the
  // same canonical order.
  std::vector<Mat*> params;
  visit_parameters(model, [&params](const std::string&, Mat& m) {
    params.push_back(&m);
  });

  // Adam moments.
  std::vector<Mat> moment1, moment2;
  for (Mat* p : params) {
    moment1.push_back(Mat::Zero(p->rows(), p->cols()));
    moment2.push_back(Mat::Zero(p->rows(), p->cols()));
  }
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Mat> best_params;
  int epochs_since_best = 0;
  Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    DropoutMasks masks;
    if (config.attention_dropout > 0.0) {
      const double keep = 1.0 - config.attention_dropout;
      for (const auto& hood : hoods) {
        std::vector<Mat> per_head;
        for (int h = 0; h < config.heads; ++h) {
          Mat m(hood.edge_count(), 1);
          for (Index e = 0; e < m.rows(); ++e)
            m(e, 0) = dropout_rng.uniform() < keep ? 1.0 / keep : 0.0;
          per_head.push_back(std::move(m));
        }
        masks.push_back(std::move(per_head));
      }
    }

    Tape tape;
    ForwardResult fw = forward(tape, model, features, hoods,
                               masks.empty() ? nullptr : &masks);
    const Tensor loss =
        softmax_cross_entropy(fw.logits, train_rows, train_labels);
    const double train_loss = loss.value()(0, 0);
    if (!std::isfinite(train_loss))
      fail(ErrorCode::non_finite_loss,
           "training loss is not finite at epoch " + std::to_string(epoch) +
               " (lr=" + format_double(config.learning_rate) + ")");

    // Validation metrics describe the parameters at the top of this epoch.
    // With dropout active they come from a clean forward pass; with an empty
    // validation split the train loss is monitored instead.
    double val_loss = train_loss;
    double val_f1 = 0.0;
    if (!val_rows.empty()) {
      Tape clean_tape;
      const ForwardResult* eval_fw = &fw;
      ForwardResult clean_fw;
      if (!masks.empty()) {
        clean_fw = forward(clean_tape, model, features, hoods);
        eval_fw = &clean_fw;
      }
      val_loss = softmax_cross_entropy(eval_fw->logits, val_rows, val_labels)
                     .value()(0, 0);
      long hits = 0;
      for (std::size_t k = 0; k < val_rows.size(); ++k)
        if (argmax_row(eval_fw->logits.value(), val_rows[k]) == val_labels[k])
          hits++;
      val_f1 = static_cast<double>(hits) / static_cast<double>(val_rows.size());
    }

    result.history.push_back({epoch, train_loss, val_loss, val_f1});
    if (epoch_log)
      (*epoch_log) << epoch << '\t' << format_double(train_loss) << '\t'
                   << format_double(val_loss) << '\t' << format_double(val_f1)
                   << '\n';

    if (val_loss < best_val) {
      best_val = val_loss;
      result.best_epoch = epoch;
      best_params.clear();
      for (Mat* p : params) best_params.push_back(*p);
      epochs_since_best = 0;
    } else if (++epochs_since_best >= config.patience) {
      break;
    }

    tape.backward(loss);
    const double t = static_cast<double>(epoch + 1);
    const double corr1 = 1.0 - std::pow(beta1, t);
    const double corr2 = 1.0 - std::pow(beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
      Mat g = fw.bound[k].second.grad();
      if (config.weight_decay != 0.0) g += config.weight_decay * (*params[k]);
      moment1[k] = beta1 * moment1[k] + (1.0 - beta1) * g;
      moment2[k] = beta2 * moment2[k] + (1.0 - beta2) * g.cwiseProduct(g);
      const Mat mhat = moment1[k] / corr1;
      const Mat vhat = moment2[k] / corr2;
      *params[k] -= config.learning_rate *
                    (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
    }
  }

  result.best_val_loss = best_val;
  if (!best_params.empty())
    for (std::size_t k = 0; k < params.size(); ++k) *params[k] = best_params[k];
  return result;
}

std::vector<ClassId> predict(const IshneModel& model, const Mat& features,
                             const std::vector<MetaPathNeighborhood>& hoods,
                             const std::vector<int>& rows) {
  Tape tape;
  const ForwardResult fw = forward(tape, model, features, hoods);
  std::vector<ClassId> out;
  out.reserve(rows.size());
  for (int r : rows) {
    if (r < 0 || r >= fw.logits.rows())
      fail(ErrorCode::invalid_argument, "prediction row out of range");
    out.push_back(argmax_row(fw.logits.value(), r));
  }
  return out;
}

EvalMetrics evaluate(const IshneModel& model, const HetGraph& graph,
                     const std::vector<MetaPathNeighborhood>& hoods,
                     const std::vector<NodeId>& nodes) {
  const std::string target = target_type_name(hoods);
  const Mat features = graph.feature_matrix(graph.node_type_id(target));
  std::vector<int> rows, labels;
  gather_labeled_rows(graph, target, nodes, rows, labels);
  const std::vector<ClassId> pred = predict(model, features, hoods, rows);
  EvalMetrics m;
  m.micro_f1 = micro_f1(pred, labels);
  m.macro_f1 = macro_f1(pred, labels);
  return m;
}

}  // namespace ishne
