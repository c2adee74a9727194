#pragma once

#include <vector>

#include "ishne/hetgraph.hpp"
#include "ishne/ops.hpp"

namespace ishne {

// Learnable state for one meta-path: feature projection M, influence
// projection P (same output dimension, so projected neighbor + influence add
// up), and one attention vector of length 2*F' per head. M and P are shared
// across heads.
struct MetaPathAttentionParams {
  Mat feature_proj;            // F' x F
  Mat influence_proj;          // F' x F
  std::vector<Mat> attention;  // K entries, each 2*F' x 1
};

// Tape-bound handles to one meta-path's parameters.
struct MetaPathAttentionTensors {
  Tensor feature_proj;
  Tensor influence_proj;
  std::vector<Tensor> attention;
};

struct MetaPathAttentionResult {
  Tensor embedding;  // N x K*F'
  // Per head: attention weights, one per neighborhood edge, aligned with
  // hood.neighbors. Each target's weights sum to 1.
  std::vector<Tensor> coefficients;
};

// h'_i = M h_i for every row of `features` (N x F).
Tensor project(const Tensor& features, const Tensor& proj);

// Influence vectors h^p_i = P h_i.
Tensor influence_component(const Tensor& features, const Tensor& influence_proj);

// Softmax-normalized weights over each target's neighborhood. The score for
// edge (i, j) is act(a^T [h'_i || (h'_j + h^p_i)]): the influence added to
// the neighbor's projection is the target's own, which is what makes the
// coefficients asymmetric.
Tensor attention_coefficients(const Tensor& h_prime, const Tensor& h_infl,
                              const Tensor& attn_vec,
                              const MetaPathNeighborhood& hood, Activation act);

// x_i = act(sum_j a_ij h'_j). The influence term affects the weights only,
// not the aggregated vectors.
Tensor aggregate(const Tensor& coefficients, const Tensor& h_prime,
                 const MetaPathNeighborhood& hood, Activation act);

// K heads, each with its own attention vector, concatenated in head order.
// `head_masks`, when given, holds one tape tensor per head (edge_count x 1)
// that multiplies the normalized coefficients; the trainer uses it for
// inverted attention dropout. Off by default.
MetaPathAttentionResult multihead_embed(const Tensor& features,
                                        const MetaPathAttentionTensors& params,
                                        const MetaPathNeighborhood& hood,
                                        Activation attn_act,
                                        Activation agg_act,
                                        const std::vector<Tensor>* head_masks = nullptr);

}  // namespace ishne
