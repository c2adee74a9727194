#pragma once

#include <string>
#include <vector>

#include "ishne/hetgraph.hpp"
#include "ishne/model.hpp"

namespace ishne {

// Line-oriented graph text format:
//   #nodes     node_id<TAB>type_name
//   #edges     src_id<TAB>dst_id<TAB>edge_type_name
//   #features  node_id<TAB>v0,v1,...
//   #labels    node_id<TAB>class_id
// write_graph emits the canonical form: sections in the order above (empty
// sections omitted), rows sorted, numbers in shortest round-trip notation.
HetGraph load_graph(const std::string& path);
HetGraph parse_graph(const std::string& text);
std::string render_graph(const HetGraph& graph);
void write_graph(const std::string& path, const HetGraph& graph);

// Planted-community generator: two intermediate node types (A, S) give the
// two meta-paths P-A-P and P-S-P. A target of class c links to an
// intermediate whose home class is c with probability p_in, and to the rest
// with probability p_out; features are a class mean of norm `snr` plus unit
// Gaussian noise.
struct SynthSpec {
  int num_targets = 200;
  int num_intermediates = 40;  // per intermediate type
  int num_classes = 2;
  int feature_dim = 16;
  double p_in = 0.3;
  double p_out = 0.05;
  double snr = 2.0;
  std::uint64_t seed = 0;
};

void validate_spec(const SynthSpec& spec);
HetGraph generate_synthetic(const SynthSpec& spec);
std::vector<std::string> synthetic_metapaths();  // {"P-A-P", "P-S-P"}

// Seeded uniform sample without replacement over the labeled nodes of the
// (unique) labeled node type; leftover nodes form the test set. An empty
// test set is allowed but warned about on stderr.
Split make_split(const HetGraph& graph, int train_n, int val_n,
                 std::uint64_t seed);

std::vector<NodeId> load_split(const std::string& path);
void write_split(const std::string& path, const std::vector<NodeId>& ids);

// Embedding export: `node_id<TAB>v0,v1,...` per node, preceded by one
// sidecar line `#beta<TAB>name=value,...`.
void write_embedding(const std::string& path, const HetGraph& graph,
                     const std::string& target_type, const Mat& embedding,
                     const std::vector<std::string>& metapath_names,
                     const Vec& beta);
Mat load_embedding(const std::string& path);

}  // namespace ishne
