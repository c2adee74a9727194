// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria marked optional are skipped (not failed) when their
// input data is absent.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "ishne/checkpoint.hpp"
#include "ishne/graph_io.hpp"
#include "ishne/metrics.hpp"
#include "ishne/model.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace ishne;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SmallInstance {
  HetGraph graph;
  std::vector<MetaPathNeighborhood> hoods;
  Mat features;
};

SmallInstance small_instance(std::uint64_t seed, int targets, int intermediates,
                             int feature_dim, double p_in, double p_out) {
  SynthSpec spec;
  spec.num_targets = targets;
  spec.num_intermediates = intermediates;
  spec.feature_dim = feature_dim;
  spec.p_in = p_in;
  spec.p_out = p_out;
  spec.seed = seed;
  SmallInstance inst{generate_synthetic(spec), {}, {}};
  for (const std::string& mp : synthetic_metapaths())
    inst.hoods.push_back(metapath_neighbors(inst.graph, parse_metapath(mp)));
  inst.features = inst.graph.feature_matrix(inst.graph.node_type_id("P"));
  return inst;
}

// ---- criteria ---------------------------------------------------------

bool gradient_oracle(std::string& detail) {
  const auto start = Clock::now();
  SmallInstance inst = small_instance(11, 8, 4, 5, 0.6, 0.1);

  TrainConfig config;
  config.hidden_dim = 3;
  config.heads = 2;
  config.fusion_dim = 6;
  config.seed = 11;
  IshneModel model = init_model(5, 2, synthetic_metapaths(), config);

  std::vector<int> rows, labels;
  gather_labeled_rows(inst.graph, "P",
                      inst.graph.labeled_nodes(inst.graph.node_type_id("P")),
                      rows, labels);
  const auto report = oracle::finite_difference_check(
      model, inst.features, inst.hoods, rows, labels, 1e-5);

  const double elapsed = seconds_since(start);
  std::ostringstream ss;
  ss << report.entries_checked << " parameter entries, max rel err "
     << report.max_rel_err << " (worst " << report.worst_param << "), "
     << elapsed << " s";
  detail = ss.str();
  return report.max_rel_err < 1e-4 && elapsed < 60.0;
}

bool attention_normalization(std::string& detail) {
  const auto start = Clock::now();
  Rng rng(2024);
  double worst_attention = 0.0, worst_beta = 0.0;
  for (int instance = 0; instance < 100; ++instance) {
    const int n = 3 + static_cast<int>(rng.below(8));
    const int f = 3, fp = 2, heads = 2;
    std::vector<MetaPathNeighborhood> hoods{testutil::random_hood(rng, n, 0.4),
                                            testutil::random_hood(rng, n, 0.4)};
    Tape tape;
    Tensor features = tape.input(rng.uniform_matrix(n, f, -2, 2));
    std::vector<Tensor> embeddings;
    for (const auto& hood : hoods) {
      const auto params = testutil::random_attention_params(rng, f, fp, heads);
      MetaPathAttentionTensors bound{tape.parameter(params.feature_proj),
                                     tape.parameter(params.influence_proj),
                                     {}};
      for (const Mat& a : params.attention) bound.attention.push_back(tape.parameter(a));
      const auto result = multihead_embed(features, bound, hood,
                                          Activation::LeakyRelu, Activation::Elu);
      embeddings.push_back(result.embedding);
      for (const Tensor& coeff : result.coefficients)
        for (std::size_t i = 0; i + 1 < hood.offsets.size(); ++i) {
          double total = 0.0;
          for (int e = hood.offsets[i]; e < hood.offsets[i + 1]; ++e)
            total += coeff.value()(e, 0);
          worst_attention = std::max(worst_attention, std::abs(total - 1.0));
        }
    }
    const auto fusion = testutil::random_fusion_params(rng, fp * heads, 4);
    const FusionResult fused = fuse_metapaths(
        embeddings, {tape.parameter(fusion.w_query), tape.parameter(fusion.w_key),
                     tape.parameter(fusion.w_value), tape.parameter(fusion.attn)});
    worst_beta = std::max(worst_beta,
                          std::abs(fused.beta.value().col(0).sum() - 1.0));
  }
  const double elapsed = seconds_since(start);
  std::ostringstream ss;
  ss << "100 instances, worst |sum(a)-1| " << worst_attention
     << ", worst |sum(beta)-1| " << worst_beta << ", " << elapsed << " s";
  detail = ss.str();
  return worst_attention <= 1e-12 && worst_beta <= 1e-12 && elapsed < 10.0;
}

bool influence_off_equivalence(std::string& detail) {
  Rng rng(303);
  long compared = 0;
  for (int instance = 0; instance < 20; ++instance) {
    const int n = 3 + static_cast<int>(rng.below(6));
    const int f = 4, fp = 3;
    const auto hood = testutil::random_hood(rng, n, 0.5);
    const Mat features = rng.uniform_matrix(n, f, -1, 1);
    const Mat proj = rng.uniform_matrix(fp, f, -1, 1);
    const Mat attn = rng.uniform_matrix(2 * fp, 1, -1, 1);

    Tape tape;
    Tensor h = tape.input(features);
    Tensor h_prime = project(h, tape.parameter(proj));
    Tensor h_infl = influence_component(h, tape.parameter(Mat::Zero(fp, f)));
    const Tensor coeff = attention_coefficients(
        h_prime, h_infl, tape.parameter(attn), hood, Activation::LeakyRelu);

    // HAN-style influence-free reference, mirroring the evaluation order of
    // the implementation with the influence term dropped.
    const Mat proj_t = proj.transpose();
    const Mat hp = features * proj_t;
    const Mat a_self = attn.block(0, 0, fp, 1);
    const Mat a_neigh = attn.block(fp, 0, fp, 1);
    const Mat s_self = hp * a_self;
    const Mat s_neigh = hp * a_neigh;
    for (std::size_t i = 0; i + 1 < hood.offsets.size(); ++i) {
      const int b = hood.offsets[i], e = hood.offsets[i + 1];
      Vec scores(e - b);
      for (int k = b; k < e; ++k) {
        const double raw =
            s_self(static_cast<Index>(i), 0) +
            s_neigh(hood.neighbors[static_cast<size_t>(k)], 0);
        scores(k - b) = raw > 0.0 ? raw : 0.01 * raw;
      }
      const double m = scores.maxCoeff();
      Vec ex = (scores.array() - m).exp();
      const double total = ex.sum();
      for (int k = b; k < e; ++k) {
        ++compared;
        if (coeff.value()(k, 0) != ex(k - b) / total) {
          detail = "mismatch at instance " + std::to_string(instance);
          return false;
        }
      }
    }
  }
  detail = "20 instances, " + std::to_string(compared) + " coefficients bit-equal";
  return true;
}

bool asymmetry_witness(std::string& detail) {
  Rng rng(404);
  for (int instance = 0; instance < 20; ++instance) {
    const int n = 5, f = 4, fp = 3;
    const auto hood = testutil::random_hood(rng, n, 0.7);
    const auto params = testutil::random_attention_params(rng, f, fp, 1);
    Tape tape;
    Tensor h = tape.input(rng.uniform_matrix(n, f, -2, 2));
    Tensor h_prime = project(h, tape.parameter(params.feature_proj));
    Tensor h_infl = influence_component(h, tape.parameter(params.influence_proj));
    const Tensor coeff =
        attention_coefficients(h_prime, h_infl, tape.parameter(params.attention[0]),
                               hood, Activation::LeakyRelu);
    const auto weight = [&](int i, int j) {
      for (int e = hood.offsets[static_cast<size_t>(i)];
           e < hood.offsets[static_cast<size_t>(i) + 1]; ++e)
        if (hood.neighbors[static_cast<size_t>(e)] == j)
          return coeff.value()(e, 0);
      return -1.0;
    };
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (!hood.contains(i, j) || !hood.contains(j, i)) continue;
        const double gap = std::abs(weight(i, j) - weight(j, i));
        if (gap > 1e-3) {
          detail = "instance " + std::to_string(instance) + ": |a_ij - a_ji| = " +
                   std::to_string(gap);
          return true;
        }
      }
  }
  detail = "no asymmetric pair found in 20 instances";
  return false;
}

bool metapath_oracle(std::string& detail) {
  Rng rng(505);
  long neighborhoods = 0;
  for (int graph_idx = 0; graph_idx < 50; ++graph_idx) {
    const int np = 20 + static_cast<int>(rng.below(81));   // up to 100
    const int na = 10 + static_cast<int>(rng.below(51));   // up to 60
    const int ns = 5 + static_cast<int>(rng.below(36));    // up to 40
    const HetGraph g =
        testutil::random_typed_graph(rng, np, na, ns, 0.05, 0.08, 0.05);
    for (const char* spec : {"P-A-P", "P-S-P", "P-A-S-A-P"}) {
      const auto hood = metapath_neighbors(g, parse_metapath(spec));
      const auto expect = oracle::typed_bfs_neighbors(g, hood.schema);
      for (std::size_t i = 0; i < expect.size(); ++i) {
        ++neighborhoods;
        const std::vector<int> got(
            hood.neighbors.begin() + hood.offsets[i],
            hood.neighbors.begin() + hood.offsets[i + 1]);
        if (got != expect[i]) {
          detail = "divergence on graph " + std::to_string(graph_idx) +
                   " schema " + spec + " node " + std::to_string(i);
          return false;
        }
      }
    }
  }
  detail = "50 graphs, " + std::to_string(neighborhoods) +
           " neighborhoods equal to typed BFS";
  return true;
}

bool learnability(std::string& detail) {
  const auto start = Clock::now();
  SynthSpec spec;  // 200 targets, 2 classes, p_in 0.3, p_out 0.05, snr 2.0
  spec.seed = 7;
  const HetGraph graph = generate_synthetic(spec);
  std::vector<MetaPathNeighborhood> hoods;
  for (const std::string& mp : synthetic_metapaths())
    hoods.push_back(metapath_neighbors(graph, parse_metapath(mp)));
  const Split split = make_split(graph, 60, 40, 7);

  TrainConfig config;
  config.hidden_dim = 8;
  config.heads = 2;
  config.fusion_dim = 16;
  config.max_epochs = 300;
  config.patience = 60;
  config.seed = 7;
  IshneModel model =
      init_model(spec.feature_dim, 2, synthetic_metapaths(), config);
  train(model, graph, hoods, split, config);

  const EvalMetrics test = evaluate(model, graph, hoods, split.test);

  // majority-class baseline: predict the most frequent training label
  long ones = 0;
  for (NodeId id : split.train) ones += *graph.label(id);
  const ClassId majority = ones * 2 > static_cast<long>(split.train.size()) ? 1 : 0;
  long hits = 0;
  for (NodeId id : split.test) hits += *graph.label(id) == majority;
  const double baseline = static_cast<double>(hits) /
                          static_cast<double>(split.test.size());

  const double elapsed = seconds_since(start);
  std::ostringstream ss;
  ss << "test Micro-F1 " << format_percent(test.micro_f1) << "%, baseline "
     << format_percent(baseline) << "%, " << elapsed << " s";
  detail = ss.str();
  return test.micro_f1 >= 0.90 && test.micro_f1 - baseline >= 0.30 &&
         elapsed < 300.0;
}

bool exchangeability(std::string& detail) {
  SmallInstance inst = small_instance(606, 40, 12, 6, 0.5, 0.1);
  const Split split = make_split(inst.graph, 16, 8, 606);

  TrainConfig config;
  config.hidden_dim = 4;
  config.heads = 2;
  config.fusion_dim = 6;
  config.max_epochs = 60;
  config.patience = 60;
  config.seed = 606;
  IshneModel single = init_model(6, 2, {"P-A-P"}, config);
  train(single, inst.graph, {inst.hoods[0]}, split, config);

  IshneModel dual = single;
  dual.metapath_specs = {"P-A-P", "P-A-P"};
  dual.metapath_names = {"PAP", "PAP"};
  dual.metapaths = {single.metapaths[0], single.metapaths[0]};

  Tape tape_single, tape_dual;
  const ForwardResult fs_ =
      forward(tape_single, single, inst.features, {inst.hoods[0]});
  const ForwardResult fd_ =
      forward(tape_dual, dual, inst.features, {inst.hoods[0], inst.hoods[0]});

  const double b0 = fd_.beta.value()(0, 0), b1 = fd_.beta.value()(1, 0);
  if (std::abs(b0 - 0.5) > 1e-6 || std::abs(b1 - 0.5) > 1e-6) {
    detail = "beta = [" + std::to_string(b0) + ", " + std::to_string(b1) + "]";
    return false;
  }

  std::vector<int> test_rows, test_labels;
  gather_labeled_rows(inst.graph, "P", split.test, test_rows, test_labels);
  const auto pred_single = predict(single, inst.features, {inst.hoods[0]}, test_rows);
  const auto pred_dual =
      predict(dual, inst.features, {inst.hoods[0], inst.hoods[0]}, test_rows);
  if (pred_single != pred_dual) {
    detail = "test predictions diverge";
    return false;
  }
  std::ostringstream ss;
  ss << "beta = [" << b0 << ", " << b1 << "], " << test_rows.size()
     << " test predictions identical";
  detail = ss.str();
  return true;
}

bool determinism(std::string& detail) {
  const fs::path dir = fs::temp_directory_path() / "ishne-acceptance";
  fs::create_directories(dir);
  const fs::path graph = dir / "det.graph";
  const fs::path out_a = dir / "det-a";
  const fs::path out_b = dir / "det-b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);

  const std::string cli = ISHNE_CLI_PATH;
  const auto run = [&](const std::string& cmd) {
    return WEXITSTATUS(std::system((cmd + " > /dev/null 2>&1").c_str()));
  };
  if (run(cli + " gensynth --targets 40 --intermediates 12 --feature-dim 6"
                " --seed 21 --out " + graph.string()) != 0) {
    detail = "gensynth failed";
    return false;
  }
  const std::string train_flags =
      " train --graph " + graph.string() +
      " --metapaths P-A-P,P-S-P --hidden 3 --heads 2 --fusion-dim 4"
      " --epochs 30 --patience 30 --train 16 --val 8 --seed 21 --out ";
  if (run(cli + train_flags + out_a.string()) != 0 ||
      run(cli + train_flags + out_b.string()) != 0) {
    detail = "train run failed";
    return false;
  }
  for (const char* file : {"epochs.tsv", "checkpoint.txt"}) {
    if (slurp(out_a / file) != slurp(out_b / file) ||
        slurp(out_a / file).empty()) {
      detail = std::string(file) + " differs between identical runs";
      return false;
    }
  }
  detail = "epochs.tsv and checkpoint.txt byte-identical";
  return true;
}

bool acm_realdata(std::string& detail, bool& skipped) {
  const char* env = std::getenv("ISHNE_ACM_GRAPH");
  const std::string path = env ? env : "data/acm.graph";
  if (!fs::exists(path)) {
    skipped = true;
    detail = "no ACM file at " + path + " (set ISHNE_ACM_GRAPH); skipped";
    return true;
  }
  const HetGraph graph = load_graph(path);
  std::vector<MetaPathNeighborhood> hoods{
      metapath_neighbors(graph, parse_metapath("P-A-P")),
      metapath_neighbors(graph, parse_metapath("P-S-P"))};
  const Split split = make_split(graph, 600, 300, 7);
  const TypeId target = graph.node_type_id("P");

  TrainConfig config;
  config.hidden_dim = 8;
  config.heads = 8;
  config.fusion_dim = 128;
  config.max_epochs = 400;
  config.patience = 100;
  config.seed = 7;
  IshneModel model =
      init_model(static_cast<int>(graph.feature_matrix(target).cols()),
                 graph.num_classes(target), {"P-A-P", "P-S-P"}, config);
  train(model, graph, hoods, split, config);
  const EvalMetrics test = evaluate(model, graph, hoods, split.test);
  detail = "test Micro-F1 " + format_percent(test.micro_f1) + "%";
  return test.micro_f1 >= 0.78 && test.micro_f1 <= 0.88;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<bool(std::string&)> run;
  };
  const std::vector<Criterion> criteria{
      {"gradient-oracle", gradient_oracle},
      {"attention-normalization", attention_normalization},
      {"influence-off-equivalence", influence_off_equivalence},
      {"asymmetry-witness", asymmetry_witness},
      {"metapath-oracle", metapath_oracle},
      {"learnability", learnability},
      {"exchangeability", exchangeability},
      {"determinism", determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << c.name
              << (detail.empty() ? "" : " - " + detail) << std::endl;
    if (!ok) ++failures;
  }

  {
    std::string detail;
    bool skipped = false;
    bool ok = false;
    try {
      ok = acm_realdata(detail, skipped);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << (skipped ? "[SKIP] " : (ok ? "[PASS] " : "[FAIL] "))
              << "acm-realdata (optional)"
              << (detail.empty() ? "" : " - " + detail) << std::endl;
    if (!ok && !skipped) ++failures;
  }

  return failures;
}
