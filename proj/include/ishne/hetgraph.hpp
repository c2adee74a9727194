#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ishne/error.hpp"
#include "ishne/types.hpp"

namespace ishne {

struct NodeSpec {
  NodeId id;
  std::string type;
};

struct EdgeSpec {
  NodeId src;
  NodeId dst;
  std::string type;
};

// Typed node/edge sequence, e.g. P-A-P. Edge type names may be left empty
// and are then resolved against a graph (unique edge type connecting each
// consecutive node-type pair).
struct MetaPathSchema {
  std::string name;                     // label, dashes stripped: "PAP"
  std::vector<std::string> node_types;  // odd length >= 3, equal endpoints
  std::vector<std::string> edge_types;  // empty or node_types.size()-1 entries
};

MetaPathSchema parse_metapath(const std::string& spec);
void validate_schema(const MetaPathSchema& schema);

// Per-meta-path neighbor sets N_i, stored CSR-style over the endpoint type.
// Neighbor entries are local indices into `targets`; every segment contains
// the target itself and is sorted ascending.
struct MetaPathNeighborhood {
  MetaPathSchema schema;
  std::vector<NodeId> targets;
  std::vector<int> offsets;    // targets.size()+1
  std::vector<int> neighbors;  // flattened, sorted within each segment

  int edge_count() const { return static_cast<int>(neighbors.size()); }
  // Flattened target index per edge, aligned with `neighbors`.
  std::vector<int> edge_targets() const;
  bool contains(int target, int neighbor) const;
};

// Immutable typed graph. Construct through build_graph; safe to share
// read-only across threads afterwards.
class HetGraph {
 public:
  Index node_count() const { return static_cast<Index>(node_ids_.size()); }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }

  const std::vector<std::string>& node_type_names() const { return node_type_names_; }
  const std::vector<std::string>& edge_type_names() const { return edge_type_names_; }
  bool has_node_type(const std::string& name) const;
  bool has_edge_type(const std::string& name) const;
  TypeId node_type_id(const std::string& name) const;  // throws UnknownType
  TypeId edge_type_id(const std::string& name) const;

  const std::vector<NodeId>& node_ids() const { return node_ids_; }
  const std::vector<EdgeSpec>& edges() const { return edges_; }
  TypeId type_of(NodeId id) const;
  const std::string& type_name_of(NodeId id) const;

  // Nodes of one type, ascending id. Local indices used by neighborhoods and
  // feature matrices refer to positions in this vector.
  const std::vector<NodeId>& nodes_of_type(TypeId t) const;
  const std::vector<NodeId>& nodes_of_type(const std::string& name) const;
  int local_index(TypeId t, NodeId id) const;

  bool has_feature(NodeId id) const { return features_.count(id) > 0; }
  const Vec& feature(NodeId id) const;
  // One row per node of the type, aligned with nodes_of_type order.
  Mat feature_matrix(TypeId t) const;

  std::optional<ClassId> label(NodeId id) const;
  std::vector<NodeId> labeled_nodes(TypeId t) const;
  int num_classes(TypeId t) const;  // max label + 1 over the type

 private:
  friend HetGraph build_graph(std::vector<NodeSpec>, std::vector<EdgeSpec>,
                              std::vector<std::pair<NodeId, Vec>>,
                              std::vector<std::pair<NodeId, ClassId>>);

  std::vector<std::string> node_type_names_;
  std::vector<std::string> edge_type_names_;
  std::vector<NodeId> node_ids_;  // ascending
  std::unordered_map<NodeId, int> node_pos_;
  std::vector<TypeId> node_types_;  // aligned with node_ids_
  std::vector<EdgeSpec> edges_;
  std::vector<std::vector<NodeId>> type_members_;  // per node type, ascending
  std::unordered_map<NodeId, Vec> features_;
  std::unordered_map<NodeId, ClassId> labels_;
};

// Validates and assembles the graph. Rejects duplicate node ids, edges or
// features/labels referencing unknown nodes, and per-type feature dimension
// disagreements.
HetGraph build_graph(std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges,
                     std::vector<std::pair<NodeId, Vec>> features = {},
                     std::vector<std::pair<NodeId, ClassId>> labels = {});

// N_i for every node of the schema's endpoint type: nodes reachable by a
// typed path matching the schema, plus the node itself. Edges are treated as
// undirected. Computed by composing boolean sparse adjacency matrices.
MetaPathNeighborhood metapath_neighbors(const HetGraph& graph,
                                        MetaPathSchema schema);

}  // namespace ishne
