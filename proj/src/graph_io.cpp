#include "ishne/graph_io.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ishne/format.hpp"
#include "ishne/rng.hpp"

namespace ishne {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::parse_error, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::parse_error, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorCode::parse_error, "short write to '" + path + "'");
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t at = 0;
  while (true) {
    const std::size_t next = line.find(sep, at);
    if (next == std::string_view::npos) {
      parts.push_back(line.substr(at));
      return parts;
    }
    parts.push_back(line.substr(at, next - at));
    at = next + 1;
  }
}

[[noreturn]] void line_error(int line_no, const std::string& msg) {
  fail(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

HetGraph parse_graph(const std::string& text) {
  enum class Section { none, nodes, edges, features, labels };
  Section section = Section::none;

  std::vector<NodeSpec> nodes;
  std::vector<EdgeSpec> edges;
  std::vector<std::pair<NodeId, Vec>> features;
  std::vector<std::pair<NodeId, ClassId>> labels;

  int line_no = 0;
  std::size_t at = 0;
  while (at <= text.size()) {
    const std::size_t end = std::min(text.find('\n', at), text.size());
    std::string_view line(text.data() + at, end - at);
    at = end + 1;
    ++line_no;
    if (line.ends_with('\r')) line.remove_suffix(1);
    if (at > text.size() && line.empty()) break;
    if (line.empty()) continue;

    if (line[0] == '#') {
      if (line == "#nodes") section = Section::nodes;
      else if (line == "#edges") section = Section::edges;
      else if (line == "#features") section = Section::features;
      else if (line == "#labels") section = Section::labels;
      else line_error(line_no, "unknown section '" + std::string(line) + "'");
      continue;
    }

    const auto parts = split(line, '\t');
    try {
      switch (section) {
        case Section::none:
          line_error(line_no, "data before any section header");
        case Section::nodes: {
          if (parts.size() != 2 || parts[1].empty())
            line_error(line_no, "expected node_id<TAB>type_name");
          nodes.push_back({parse_int(parts[0]), std::string(parts[1])});
          break;
        }
        case Section::edges: {
          if (parts.size() != 3 || parts[2].empty())
            line_error(line_no, "expected src<TAB>dst<TAB>edge_type");
          edges.push_back(
              {parse_int(parts[0]), parse_int(parts[1]), std::string(parts[2])});
          break;
        }
        case Section::features: {
          if (parts.size() != 2)
            line_error(line_no, "expected node_id<TAB>v0,v1,...");
          const auto values = split(parts[1], ',');
          Vec v(static_cast<Index>(values.size()));
          for (std::size_t k = 0; k < values.size(); ++k)
            v(static_cast<Index>(k)) = parse_double(values[k]);
          features.emplace_back(parse_int(parts[0]), std::move(v));
          break;
        }
        case Section::labels: {
          if (parts.size() != 2)
            line_error(line_no, "expected node_id<TAB>class_id");
          labels.emplace_back(parse_int(parts[0]),
                              static_cast<ClassId>(parse_int(parts[1])));
          break;
        }
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::parse_error &&
          std::string(e.what()).find("line ") == std::string::npos)
        line_error(line_no, e.what());
      throw;
    }
  }

  return build_graph(std::move(nodes), std::move(edges), std::move(features),
                     std::move(labels));
}

HetGraph load_graph(const std::string& path) {
  return parse_graph(read_file(path));
}

std::string render_graph(const HetGraph& graph) {
  std::string out;
  out += "#nodes\n";
  for (NodeId id : graph.node_ids())
    out += std::to_string(id) + '\t' + graph.type_name_of(id) + '\n';

  if (graph.edge_count() > 0) {
    std::vector<EdgeSpec> edges = graph.edges();
    std::sort(edges.begin(), edges.end(),
              [](const EdgeSpec& a, const EdgeSpec& b) {
                return std::tie(a.src, a.dst, a.type) <
                       std::tie(b.src, b.dst, b.type);
              });
    out += "#edges\n";
    for (const EdgeSpec& e : edges)
      out += std::to_string(e.src) + '\t' + std::to_string(e.dst) + '\t' +
             e.type + '\n';
  }

  std::string features, labels;
  for (NodeId id : graph.node_ids()) {
    if (graph.has_feature(id)) {
      const Vec& v = graph.feature(id);
      features += std::to_string(id) + '\t';
      for (Index k = 0; k < v.size(); ++k) {
        if (k) features += ',';
        features += format_double(v(k));
      }
      features += '\n';
    }
    if (auto cls = graph.label(id))
      labels += std::to_string(id) + '\t' + std::to_string(*cls) + '\n';
  }
  if (!features.empty()) out += "#features\n" + features;
  if (!labels.empty()) out += "#labels\n" + labels;
  return out;
}

void write_graph(const std::string& path, const HetGraph& graph) {
  write_file(path, render_graph(graph));
}

void validate_spec(const SynthSpec& spec) {
  if (spec.num_targets < 2)
    fail(ErrorCode::infeasible_spec, "need at least two target nodes");
  if (spec.num_intermediates < 1)
    fail(ErrorCode::infeasible_spec, "need at least one intermediate node per type");
  if (spec.num_classes < 2)
    fail(ErrorCode::infeasible_spec, "need at least two classes");
  if (spec.feature_dim < 1)
    fail(ErrorCode::infeasible_spec, "need a positive feature dimension");
  if (!(spec.p_out >= 0.0 && spec.p_out < spec.p_in && spec.p_in <= 1.0))
    fail(ErrorCode::infeasible_spec, "need 0 <= p_out < p_in <= 1");
  if (!std::isfinite(spec.snr) || spec.snr < 0.0)
    fail(ErrorCode::infeasible_spec, "signal-to-noise ratio must be finite");
}

std::vector<std::string> synthetic_metapaths() { return {"P-A-P", "P-S-P"}; }

HetGraph generate_synthetic(const SynthSpec& spec) {
  validate_spec(spec);
  Rng rng(spec.seed);

  const NodeId t0 = 0;
  const NodeId a0 = spec.num_targets;
  const NodeId s0 = spec.num_targets + spec.num_intermediates;

  std::vector<NodeSpec> nodes;
  for (int i = 0; i < spec.num_targets; ++i) nodes.push_back({t0 + i, "P"});
  for (int i = 0; i < spec.num_intermediates; ++i) nodes.push_back({a0 + i, "A"});
  for (int i = 0; i < spec.num_intermediates; ++i) nodes.push_back({s0 + i, "S"});

  std::vector<int> target_class(static_cast<size_t>(spec.num_targets));
  for (int& c : target_class)
    c = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_classes)));

  // Class means: random directions scaled to norm `snr`.
  std::vector<Vec> means;
  for (int c = 0; c < spec.num_classes; ++c) {
    Vec mu = rng.normal_matrix(spec.feature_dim, 1);
    const double norm = mu.norm();
    means.push_back(norm > 0.0 ? Vec(spec.snr * mu / norm) : mu);
  }

  std::vector<std::pair<NodeId, Vec>> features;
  std::vector<std::pair<NodeId, ClassId>> labels;
  for (int i = 0; i < spec.num_targets; ++i) {
    Vec noise = rng.normal_matrix(spec.feature_dim, 1);
    features.emplace_back(t0 + i,
                          Vec(means[static_cast<size_t>(target_class[static_cast<size_t>(i)])] + noise));
    labels.emplace_back(t0 + i, target_class[static_cast<size_t>(i)]);
  }

  // Intermediates get balanced home classes; a target links to a same-class
  // intermediate with p_in and to the rest with p_out.
  std::vector<EdgeSpec> edges;
  const auto link = [&](NodeId base, const char* edge_type) {
    for (int i = 0; i < spec.num_targets; ++i)
      for (int m = 0; m < spec.num_intermediates; ++m) {
        const bool same = target_class[static_cast<size_t>(i)] == m % spec.num_classes;
        if (rng.uniform() < (same ? spec.p_in : spec.p_out))
          edges.push_back({t0 + i, base + m, edge_type});
      }
  };
  link(a0, "PA");
  link(s0, "PS");

  return build_graph(std::move(nodes), std::move(edges), std::move(features),
                     std::move(labels));
}

Split make_split(const HetGraph& graph, int train_n, int val_n,
                 std::uint64_t seed) {
  if (train_n < 0 || val_n < 0)
    fail(ErrorCode::invalid_argument, "negative split size");

  // The labeled node type must be unambiguous.
  int labeled_type = -1;
  for (std::size_t t = 0; t < graph.node_type_names().size(); ++t) {
    if (graph.labeled_nodes(static_cast<TypeId>(t)).empty()) continue;
    if (labeled_type >= 0)
      fail(ErrorCode::invalid_argument, "multiple node types carry labels");
    labeled_type = static_cast<int>(t);
  }
  if (labeled_type < 0) fail(ErrorCode::empty_input, "graph has no labels");

  std::vector<NodeId> pool = graph.labeled_nodes(labeled_type);
  if (static_cast<std::size_t>(train_n) + static_cast<std::size_t>(val_n) >
      pool.size())
    fail(ErrorCode::split_too_large,
         "train+val = " + std::to_string(train_n + val_n) + " but only " +
             std::to_string(pool.size()) + " labeled nodes");

  Rng rng(seed);
  rng.shuffle(pool);

  Split s;
  s.train.assign(pool.begin(), pool.begin() + train_n);
  s.val.assign(pool.begin() + train_n, pool.begin() + train_n + val_n);
  s.test.assign(pool.begin() + train_n + val_n, pool.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  if (s.test.empty())
    std::cerr << "warning: split leaves an empty test set\n";
  return s;
}

std::vector<NodeId> load_split(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<NodeId> ids;
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    try {
      ids.push_back(parse_int(line));
    } catch (const Error&) {
      line_error(line_no, "expected one node id per line");
    }
  }
  return ids;
}

void write_split(const std::string& path, const std::vector<NodeId>& ids) {
  std::string out;
  for (NodeId id : ids) out += std::to_string(id) + '\n';
  write_file(path, out);
}

void write_embedding(const std::string& path, const HetGraph& graph,
                     const std::string& target_type, const Mat& embedding,
                     const std::vector<std::string>& metapath_names,
                     const Vec& beta) {
  const auto& targets = graph.nodes_of_type(target_type);
  if (embedding.rows() != static_cast<Index>(targets.size()))
    fail(ErrorCode::shape_mismatch, "one embedding row per target required");
  if (beta.size() != static_cast<Index>(metapath_names.size()))
    fail(ErrorCode::shape_mismatch, "one beta entry per meta-path required");

  std::string out = "#beta\t";
  for (std::size_t p = 0; p < metapath_names.size(); ++p) {
    if (p) out += ',';
    out += metapath_names[p] + '=' + format_double(beta(static_cast<Index>(p)));
  }
  out += '\n';
  for (std::size_t i = 0; i < targets.size(); ++i) {
    out += std::to_string(targets[i]) + '\t';
    for (Index k = 0; k < embedding.cols(); ++k) {
      if (k) out += ',';
      out += format_double(embedding(static_cast<Index>(i), k));
    }
    out += '\n';
  }
  write_file(path, out);
}

Mat load_embedding(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<Vec> rows;
  int line_no = 0;
  std::size_t at = 0;
  while (at < text.size()) {
    const std::size_t end = std::min(text.find('\n', at), text.size());
    std::string_view line(text.data() + at, end - at);
    at = end + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto parts = split(line, '\t');
    if (parts.size() != 2) line_error(line_no, "expected node_id<TAB>values");
    const auto values = split(parts[1], ',');
    Vec v(static_cast<Index>(values.size()));
    for (std::size_t k = 0; k < values.size(); ++k)
      v(static_cast<Index>(k)) = parse_double(values[k]);
    rows.push_back(std::move(v));
  }
  if (rows.empty()) fail(ErrorCode::empty_input, "no embedding rows in file");
  Mat m(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols())
      fail(ErrorCode::dimension_mismatch, "ragged embedding rows");
    m.row(static_cast<Index>(i)) = rows[i].transpose();
  }
  return m;
}

}  // namespace ishne
