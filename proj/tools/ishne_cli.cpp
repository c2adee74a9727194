// ishne: train / eval / embed / gensynth for heterogeneous graph embeddings.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "ishne/checkpoint.hpp"
#include "ishne/graph_io.hpp"
#include "ishne/metrics.hpp"
#include "ishne/model.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ishne;

namespace {

int verbosity() {
  const char* env = std::getenv("ISHNE_LOG");
  if (!env) return 1;
  const std::string v(env);
  if (v == "0" || v == "quiet") return 0;
  if (v == "2" || v == "debug") return 2;
  return 1;
}

void info(const std::string& msg) {
  if (verbosity() >= 1) std::cerr << "ishne: " << msg << '\n';
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error:
      return 2;
    case ErrorCode::dangling_edge:
    case ErrorCode::dimension_mismatch:
    case ErrorCode::unknown_type:
      return 3;
    case ErrorCode::shape_mismatch:
    case ErrorCode::invalid_argument:
    case ErrorCode::empty_input:
    case ErrorCode::non_scalar_loss:
    case ErrorCode::empty_neighborhood:
    case ErrorCode::fewer_than_one_metapath:
      return 4;
    case ErrorCode::infeasible_spec:
    case ErrorCode::split_too_large:
    case ErrorCode::empty_train_set:
      return 5;
    case ErrorCode::non_finite_loss:
      return 6;
    case ErrorCode::checkpoint_mismatch:
      return 7;
  }
  return 1;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string part;
  for (char c : csv) {
    if (c == ',') {
      if (!part.empty()) out.push_back(part);
      part.clear();
    } else {
      part += c;
    }
  }
  if (!part.empty()) out.push_back(part);
  return out;
}

std::vector<MetaPathNeighborhood> build_neighborhoods(
    const HetGraph& graph, const std::vector<std::string>& specs) {
  std::vector<MetaPathNeighborhood> hoods;
  for (const std::string& spec : specs) {
    hoods.push_back(metapath_neighbors(graph, parse_metapath(spec)));
    if (verbosity() >= 2)
      std::cerr << "ishne: " << spec << " -> "
                << hoods.back().edge_count() << " neighbor pairs\n";
  }
  return hoods;
}

struct TrainFlags {
  std::string graph_path;
  std::string metapaths;
  std::string out_dir = "run";
  int hidden = 8;
  int heads = 8;
  int fusion_dim = 128;
  double lr = 5e-3;
  double weight_decay = 5e-4;
  int epochs = 1000;
  int patience = 100;
  int train_n = 0;
  int val_n = 0;
  std::uint64_t seed = 0;
  double attention_dropout = 0.0;
  std::string activation_attn = "leaky-relu";
  std::string activation_agg = "elu";
};

int cmd_train(const TrainFlags& f) {
  const HetGraph graph = load_graph(f.graph_path);
  info("loaded graph: " + std::to_string(graph.node_count()) + " nodes, " +
       std::to_string(graph.edge_count()) + " edges");

  const std::vector<std::string> specs = split_list(f.metapaths);
  const auto hoods = build_neighborhoods(graph, specs);
  const std::string target = target_type_name(hoods);
  const TypeId target_id = graph.node_type_id(target);
  const Mat features = graph.feature_matrix(target_id);
  const int classes = graph.num_classes(target_id);
  if (classes < 2) fail(ErrorCode::invalid_argument, "need at least two classes");

  TrainConfig config;
  config.hidden_dim = f.hidden;
  config.heads = f.heads;
  config.fusion_dim = f.fusion_dim;
  config.learning_rate = f.lr;
  config.weight_decay = f.weight_decay;
  config.max_epochs = f.epochs;
  config.patience = f.patience;
  config.seed = f.seed;
  config.attention_dropout = f.attention_dropout;
  config.attention_activation = activation_from_name(f.activation_attn);
  config.aggregation_activation = activation_from_name(f.activation_agg);
  validate_config(config);

  const Split split = make_split(graph, f.train_n, f.val_n, f.seed);
  IshneModel model = init_model(static_cast<int>(features.cols()), classes,
                                specs, config);

  fs::create_directories(f.out_dir);
  const fs::path out(f.out_dir);
  std::ofstream epoch_log(out / "epochs.tsv", std::ios::binary);
  if (!epoch_log) fail(ErrorCode::parse_error, "cannot write epoch log");

  const TrainResult result =
      train(model, graph, hoods, split, config, &epoch_log);
  epoch_log.close();
  info("stopped after " + std::to_string(result.history.size()) +
       " epochs, best epoch " + std::to_string(result.best_epoch));

  save_checkpoint((out / "checkpoint.txt").string(), model);
  write_split((out / "train.ids").string(), split.train);
  write_split((out / "val.ids").string(), split.val);
  write_split((out / "test.ids").string(), split.test);

  EvalMetrics val, test;
  if (!split.val.empty()) {
    val = evaluate(model, graph, hoods, split.val);
    std::cout << "val Micro-F1 " << format_percent(val.micro_f1)
              << "  Macro-F1 " << format_percent(val.macro_f1) << '\n';
  }
  if (!split.test.empty()) {
    test = evaluate(model, graph, hoods, split.test);
    std::cout << "test Micro-F1 " << format_percent(test.micro_f1)
              << "  Macro-F1 " << format_percent(test.macro_f1) << '\n';
  }

  // beta report from the trained parameters
  Tape tape;
  const ForwardResult fw = forward(tape, model, features, hoods);
  json beta = json::object();
  for (std::size_t p = 0; p < specs.size(); ++p)
    beta[model.metapath_names[p]] = fw.beta.value()(static_cast<Index>(p), 0);

  json manifest;
  manifest["command"] = "train";
  manifest["graph"] = f.graph_path;
  manifest["metapaths"] = specs;
  manifest["config"] = {{"hidden", f.hidden},
                        {"heads", f.heads},
                        {"fusion_dim", f.fusion_dim},
                        {"lr", f.lr},
                        {"weight_decay", f.weight_decay},
                        {"epochs", f.epochs},
                        {"patience", f.patience},
                        {"attention_dropout", f.attention_dropout},
                        {"activation_attn", f.activation_attn},
                        {"activation_agg", f.activation_agg}};
  manifest["seed"] = f.seed;
  manifest["split"] = {{"train", split.train.size()},
                       {"val", split.val.size()},
                       {"test", split.test.size()}};
  manifest["out"] = f.out_dir;
  manifest["epochs_run"] = result.history.size();
  manifest["best_epoch"] = result.best_epoch;
  manifest["best_val_loss"] = result.best_val_loss;
  manifest["beta"] = beta;
  manifest["metrics"] = {{"val_micro_f1", val.micro_f1},
                         {"val_macro_f1", val.macro_f1},
                         {"test_micro_f1", test.micro_f1},
                         {"test_macro_f1", test.macro_f1}};
  std::ofstream(out / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';
  return 0;
}

int cmd_eval(const std::string& graph_path, const std::string& checkpoint_path,
             const std::string& split_path) {
  const HetGraph graph = load_graph(graph_path);
  const IshneModel model = load_checkpoint(checkpoint_path);
  const auto hoods = build_neighborhoods(graph, model.metapath_specs);
  const std::string target = target_type_name(hoods);
  const TypeId target_id = graph.node_type_id(target);
  require_compatible(model, graph.feature_matrix(target_id).cols(),
                     graph.num_classes(target_id));

  const std::vector<NodeId> nodes = split_path.empty()
                                        ? graph.labeled_nodes(target_id)
                                        : load_split(split_path);
  const EvalMetrics m = evaluate(model, graph, hoods, nodes);
  std::cout << "Micro-F1 " << format_percent(m.micro_f1) << "  Macro-F1 "
            << format_percent(m.macro_f1) << '\n';
  return 0;
}

int cmd_embed(const std::string& graph_path, const std::string& checkpoint_path,
              const std::string& out_path) {
  const HetGraph graph = load_graph(graph_path);
  const IshneModel model = load_checkpoint(checkpoint_path);
  const auto hoods = build_neighborhoods(graph, model.metapath_specs);
  const std::string target = target_type_name(hoods);
  const TypeId target_id = graph.node_type_id(target);
  const Mat features = graph.feature_matrix(target_id);
  require_compatible(model, features.cols(), graph.num_classes(target_id));

  Tape tape;
  const ForwardResult fw = forward(tape, model, features, hoods);
  write_embedding(out_path, graph, target, fw.fused.value(),
                  model.metapath_names, fw.beta.value().col(0));
  std::cout << "wrote " << fw.fused.value().rows() << " embeddings, beta";
  for (Index p = 0; p < fw.beta.value().rows(); ++p)
    std::cout << ' ' << model.metapath_names[static_cast<size_t>(p)] << '='
              << fw.beta.value()(p, 0);
  std::cout << '\n';
  return 0;
}

int cmd_gensynth(const SynthSpec& spec, const std::string& out_path) {
  const HetGraph graph = generate_synthetic(spec);
  write_graph(out_path, graph);
  std::cout << "wrote " << out_path << ": " << spec.num_targets
            << " targets, 2x" << spec.num_intermediates << " intermediates, "
            << spec.num_classes << " classes, " << graph.edge_count()
            << " edges\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ISHNE: influence self-attention heterogeneous network embedding"};
  app.require_subcommand(1);

  TrainFlags tf;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--graph", tf.graph_path, "graph file")->required();
  train_cmd->add_option("--metapaths", tf.metapaths,
                        "comma-separated type strings, e.g. P-A-P,P-S-P")
      ->required();
  train_cmd->add_option("--hidden", tf.hidden, "per-head hidden dim F'");
  train_cmd->add_option("--heads", tf.heads, "attention heads K");
  train_cmd->add_option("--fusion-dim", tf.fusion_dim, "fusion dim d");
  train_cmd->add_option("--lr", tf.lr, "learning rate");
  train_cmd->add_option("--weight-decay", tf.weight_decay, "L2 coefficient");
  train_cmd->add_option("--epochs", tf.epochs, "max epochs");
  train_cmd->add_option("--patience", tf.patience, "early-stopping patience");
  train_cmd->add_option("--train", tf.train_n, "training nodes")->required();
  train_cmd->add_option("--val", tf.val_n, "validation nodes")->required();
  train_cmd->add_option("--seed", tf.seed, "rng seed");
  train_cmd->add_option("--out", tf.out_dir, "output directory");
  train_cmd->add_option("--attention-dropout", tf.attention_dropout,
                        "dropout on attention coefficients, 0 disables");
  train_cmd->add_option("--activation-attn", tf.activation_attn,
                        "attention activation (leaky-relu|elu|tanh)");
  train_cmd->add_option("--activation-agg", tf.activation_agg,
                        "aggregation activation (leaky-relu|elu|tanh)");
  train_cmd->set_config("--config", "", "key=value defaults; flags win");

  std::string eval_graph, eval_ckpt, eval_split;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--graph", eval_graph, "graph file")->required();
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--split", eval_split,
                       "node-id file; defaults to all labeled nodes");

  std::string embed_graph, embed_ckpt, embed_out = "embeddings.tsv";
  CLI::App* embed_cmd = app.add_subcommand("embed", "export fused embeddings");
  embed_cmd->add_option("--graph", embed_graph, "graph file")->required();
  embed_cmd->add_option("--checkpoint", embed_ckpt, "checkpoint file")->required();
  embed_cmd->add_option("--out", embed_out, "output file");

  SynthSpec spec;
  std::string synth_out = "synthetic.graph";
  CLI::App* synth_cmd =
      app.add_subcommand("gensynth", "generate a planted-community graph");
  synth_cmd->add_option("--targets", spec.num_targets, "target nodes");
  synth_cmd->add_option("--intermediates", spec.num_intermediates,
                        "intermediate nodes per type");
  synth_cmd->add_option("--classes", spec.num_classes, "class count");
  synth_cmd->add_option("--feature-dim", spec.feature_dim, "feature dimension");
  synth_cmd->add_option("--p-in", spec.p_in, "same-class link probability");
  synth_cmd->add_option("--p-out", spec.p_out, "cross-class link probability");
  synth_cmd->add_option("--snr", spec.snr, "feature signal-to-noise ratio");
  synth_cmd->add_option("--seed", spec.seed, "rng seed");
  synth_cmd->add_option("--out", synth_out, "output graph file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(tf);
    if (eval_cmd->parsed()) return cmd_eval(eval_graph, eval_ckpt, eval_split);
    if (embed_cmd->parsed()) return cmd_embed(embed_graph, embed_ckpt, embed_out);
    if (synth_cmd->parsed()) return cmd_gensynth(spec, synth_out);
  } catch (const Error& e) {
    std::cerr << "ishne: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "ishne: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
