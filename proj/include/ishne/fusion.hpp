#pragma once

#include <vector>

#include "ishne/ops.hpp"

namespace ishne {

// Semantic fusion parameters, one set shared by all meta-paths.
struct FusionParams {
  Mat w_query;  // d x (K*F')
  Mat w_key;    // d x (K*F')
  Mat w_value;  // d x (K*F')
  Mat attn;     // q, d x 1
};

struct FusionTensors {
  Tensor w_query;
  Tensor w_key;
  Tensor w_value;
  Tensor attn;
};

struct Qkv {
  Tensor query;  // N x d
  Tensor key;
  Tensor value;
};

// Per-node query/key/value rows for one meta-path embedding.
Qkv qkv(const Tensor& embedding, const FusionTensors& params);

// One importance scalar per meta-path. For each node the P per-meta-path
// (Q, K, V) rows are treated as P x d stacks; cross-meta-path attention
// softmax(Q K^T / sqrt(d)) mixes the value rows, q scores the mix, and the
// scores are averaged over all nodes.
Tensor metapath_importance(const std::vector<Tensor>& embeddings,
                           const FusionTensors& params);

// beta = softmax(w): nonnegative, sums to one.
Tensor metapath_weights(const Tensor& importance);

// X = sum_phi beta_phi X_phi, a row-wise convex combination.
Tensor fuse(const std::vector<Tensor>& embeddings, const Tensor& beta);

struct FusionResult {
  Tensor fused;       // X, N x (K*F')
  Tensor beta;        // P x 1
  Tensor importance;  // w, P x 1
};

FusionResult fuse_metapaths(const std::vector<Tensor>& embeddings,
                            const FusionTensors& params);

}  // namespace ishne
