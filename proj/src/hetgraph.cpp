#include "ishne/hetgraph.hpp"

#include <Eigen/SparseCore>
#include <algorithm>
#include <map>
#include <set>

namespace ishne {

namespace {

using BoolSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

void binarize(BoolSparse& m) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (BoolSparse::InnerIterator it(m, k); it; ++it) it.valueRef() = 1.0;
}

int find_name(const std::vector<std::string>& names, const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace

MetaPathSchema parse_metapath(const std::string& spec) {
  MetaPathSchema schema;
  std::string part;
  for (char c : spec) {
    if (c == '-') {
      if (part.empty())
        fail(ErrorCode::parse_error, "empty type in meta-path '" + spec + "'");
      schema.node_types.push_back(part);
      part.clear();
    } else {
      part += c;
      schema.name += c;
    }
  }
  if (!part.empty()) schema.node_types.push_back(part);
  validate_schema(schema);
  return schema;
}

void validate_schema(const MetaPathSchema& schema) {
  const std::size_t n = schema.node_types.size();
  if (n < 3 || n % 2 == 0)
    fail(ErrorCode::invalid_argument,
         "meta-path must have odd node-type length >= 3");
  if (schema.node_types.front() != schema.node_types.back())
    fail(ErrorCode::invalid_argument,
         "meta-path endpoints must share one node type");
  if (!schema.edge_types.empty() && schema.edge_types.size() != n - 1)
    fail(ErrorCode::invalid_argument,
         "meta-path needs one edge type per step");
}

std::vector<int> MetaPathNeighborhood::edge_targets() const {
  std::vector<int> t(neighbors.size());
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i)
    std::fill(t.begin() + offsets[i], t.begin() + offsets[i + 1],
              static_cast<int>(i));
  return t;
}

bool MetaPathNeighborhood::contains(int target, int neighbor) const {
  const auto b = neighbors.begin() + offsets[static_cast<size_t>(target)];
  const auto e = neighbors.begin() + offsets[static_cast<size_t>(target) + 1];
  return std::binary_search(b, e, neighbor);
}

HetGraph build_graph(std::vector<NodeSpec> nodes, std::vector<EdgeSpec> edges,
                     std::vector<std::pair<NodeId, Vec>> features,
                     std::vector<std::pair<NodeId, ClassId>> labels) {
  HetGraph g;

  std::sort(nodes.begin(), nodes.end(),
            [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
  for (const NodeSpec& n : nodes) {
    if (g.node_pos_.count(n.id))
      fail(ErrorCode::invalid_argument,
           "duplicate node id " + std::to_string(n.id));
    int t = find_name(g.node_type_names_, n.type);
    if (t < 0) {
      t = static_cast<int>(g.node_type_names_.size());
      g.node_type_names_.push_back(n.type);
      g.type_members_.emplace_back();
    }
    g.node_pos_[n.id] = static_cast<int>(g.node_ids_.size());
    g.node_ids_.push_back(n.id);
    g.node_types_.push_back(t);
    g.type_members_[static_cast<size_t>(t)].push_back(n.id);
  }

  for (const EdgeSpec& e : edges) {
    if (!g.node_pos_.count(e.src))
      fail(ErrorCode::dangling_edge,
           "edge references unknown node " + std::to_string(e.src));
    if (!g.node_pos_.count(e.dst))
      fail(ErrorCode::dangling_edge,
           "edge references unknown node " + std::to_string(e.dst));
    if (find_name(g.edge_type_names_, e.type) < 0)
      g.edge_type_names_.push_back(e.type);
    g.edges_.push_back(e);
  }

  // Feature dimensions must agree within each node type.
  std::vector<Index> dim_of_type(g.node_type_names_.size(), -1);
  for (auto& [id, vec] : features) {
    auto it = g.node_pos_.find(id);
    if (it == g.node_pos_.end())
      fail(ErrorCode::invalid_argument,
           "feature references unknown node " + std::to_string(id));
    const TypeId t = g.node_types_[static_cast<size_t>(it->second)];
    Index& d = dim_of_type[static_cast<size_t>(t)];
    if (d < 0) d = vec.size();
    if (d != vec.size())
      fail(ErrorCode::dimension_mismatch,
           "node " + std::to_string(id) + " has a " +
               std::to_string(vec.size()) + "-dim feature, expected " +
               std::to_string(d) + " for type " +
               g.node_type_names_[static_cast<size_t>(t)]);
    g.features_[id] = std::move(vec);
  }

  for (auto& [id, cls] : labels) {
    if (!g.node_pos_.count(id))
      fail(ErrorCode::invalid_argument,
           "label references unknown node " + std::to_string(id));
    if (cls < 0)
      fail(ErrorCode::invalid_argument, "negative class id");
    g.labels_[id] = cls;
  }

  return g;
}

bool HetGraph::has_node_type(const std::string& name) const {
  return find_name(node_type_names_, name) >= 0;
}

bool HetGraph::has_edge_type(const std::string& name) const {
  return find_name(edge_type_names_, name) >= 0;
}

TypeId HetGraph::node_type_id(const std::string& name) const {
  const int t = find_name(node_type_names_, name);
  if (t < 0) fail(ErrorCode::unknown_type, "node type '" + name + "'");
  return t;
}

TypeId HetGraph::edge_type_id(const std::string& name) const {
  const int t = find_name(edge_type_names_, name);
  if (t < 0) fail(ErrorCode::unknown_type, "edge type '" + name + "'");
  return t;
}

TypeId HetGraph::type_of(NodeId id) const {
  auto it = node_pos_.find(id);
  if (it == node_pos_.end())
    fail(ErrorCode::invalid_argument, "unknown node " + std::to_string(id));
  return node_types_[static_cast<size_t>(it->second)];
}

const std::string& HetGraph::type_name_of(NodeId id) const {
  return node_type_names_[static_cast<size_t>(type_of(id))];
}

const std::vector<NodeId>& HetGraph::nodes_of_type(TypeId t) const {
  if (t < 0 || t >= static_cast<TypeId>(type_members_.size()))
    fail(ErrorCode::unknown_type, "node type id " + std::to_string(t));
  return type_members_[static_cast<size_t>(t)];
}

const std::vector<NodeId>& HetGraph::nodes_of_type(const std::string& name) const {
  return nodes_of_type(node_type_id(name));
}

int HetGraph::local_index(TypeId t, NodeId id) const {
  const auto& members = nodes_of_type(t);
  const auto it = std::lower_bound(members.begin(), members.end(), id);
  if (it == members.end() || *it != id)
    fail(ErrorCode::invalid_argument,
         "node " + std::to_string(id) + " is not of type " +
             node_type_names_[static_cast<size_t>(t)]);
  return static_cast<int>(it - members.begin());
}

const Vec& HetGraph::feature(NodeId id) const {
  auto it = features_.find(id);
  if (it == features_.end())
    fail(ErrorCode::invalid_argument,
         "node " + std::to_string(id) + " has no feature vector");
  return it->second;
}

Mat HetGraph::feature_matrix(TypeId t) const {
  const auto& members = nodes_of_type(t);
  if (members.empty())
    fail(ErrorCode::empty_input, "no nodes of the requested type");
  const Vec& first = feature(members.front());
  Mat m(static_cast<Index>(members.size()), first.size());
  for (std::size_t i = 0; i < members.size(); ++i)
    m.row(static_cast<Index>(i)) = feature(members[i]).transpose();
  return m;
}

std::optional<ClassId> HetGraph::label(NodeId id) const {
  auto it = labels_.find(id);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::vector<NodeId> HetGraph::labeled_nodes(TypeId t) const {
  std::vector<NodeId> out;
  for (NodeId id : nodes_of_type(t))
    if (labels_.count(id)) out.push_back(id);
  return out;
}

int HetGraph::num_classes(TypeId t) const {
  int m = -1;
  for (NodeId id : nodes_of_type(t))
    if (auto c = label(id)) m = std::max(m, *c);
  return m + 1;
}

MetaPathNeighborhood metapath_neighbors(const HetGraph& graph,
                                        MetaPathSchema schema) {
  validate_schema(schema);
  for (const std::string& t : schema.node_types)
    if (!graph.has_node_type(t))
      fail(ErrorCode::unknown_type, "node type '" + t + "' not in graph");

  // Resolve omitted edge types: each step takes the single edge type observed
  // between its node-type pair. No observed edge type means the relation is
  // empty (the neighborhoods collapse to the self-loops); more than one is
  // ambiguous and must be spelled out.
  const std::size_t steps = schema.node_types.size() - 1;
  if (schema.edge_types.empty()) {
    for (std::size_t k = 0; k < steps; ++k) {
      const TypeId ta = graph.node_type_id(schema.node_types[k]);
      const TypeId tb = graph.node_type_id(schema.node_types[k + 1]);
      std::set<std::string> seen;
      for (const EdgeSpec& e : graph.edges()) {
        const TypeId s = graph.type_of(e.src), d = graph.type_of(e.dst);
        if ((s == ta && d == tb) || (s == tb && d == ta)) seen.insert(e.type);
      }
      if (seen.size() > 1)
        fail(ErrorCode::unknown_type,
             "ambiguous edge type between " + schema.node_types[k] + " and " +
                 schema.node_types[k + 1] + "; spell the schema's edge types");
      schema.edge_types.push_back(seen.empty() ? "" : *seen.begin());
    }
  } else {
    for (const std::string& t : schema.edge_types)
      if (!graph.has_edge_type(t))
        fail(ErrorCode::unknown_type, "edge type '" + t + "' not in graph");
  }

  // One boolean adjacency per step, over per-type local indices.
  std::vector<BoolSparse> rel(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const TypeId ta = graph.node_type_id(schema.node_types[k]);
    const TypeId tb = graph.node_type_id(schema.node_types[k + 1]);
    std::vector<Eigen::Triplet<double>> trips;
    if (!schema.edge_types[k].empty()) {
      const TypeId te = graph.edge_type_id(schema.edge_types[k]);
      for (const EdgeSpec& e : graph.edges()) {
        if (graph.edge_type_id(e.type) != te) continue;
        const TypeId s = graph.type_of(e.src), d = graph.type_of(e.dst);
        if (s == ta && d == tb)
          trips.emplace_back(graph.local_index(ta, e.src),
                             graph.local_index(tb, e.dst), 1.0);
        if (s == tb && d == ta)  // undirected reading; also covers ta == tb
          trips.emplace_back(graph.local_index(ta, e.dst),
                             graph.local_index(tb, e.src), 1.0);
      }
    }
    BoolSparse m(static_cast<Index>(graph.nodes_of_type(ta).size()),
                 static_cast<Index>(graph.nodes_of_type(tb).size()));
    m.setFromTriplets(trips.begin(), trips.end());
    binarize(m);
    rel[k] = std::move(m);
  }

  BoolSparse composed = rel[0];
  for (std::size_t k = 1; k < steps; ++k) {
    composed = (composed * rel[k]).pruned();
    binarize(composed);
  }

  MetaPathNeighborhood hood;
  hood.targets = graph.nodes_of_type(schema.node_types.front());
  hood.schema = std::move(schema);
  hood.offsets.push_back(0);
  for (int i = 0; i < static_cast<int>(hood.targets.size()); ++i) {
    std::vector<int> row{i};  // self-loop
    for (BoolSparse::InnerIterator it(composed, i); it; ++it)
      row.push_back(static_cast<int>(it.col()));
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    hood.neighbors.insert(hood.neighbors.end(), row.begin(), row.end());
    hood.offsets.push_back(static_cast<int>(hood.neighbors.size()));
  }
  return hood;
}

}  // namespace ishne
