#include "ishne/attention.hpp"

namespace ishne {

Tensor project(const Tensor& features, const Tensor& proj) {
  return matmul(features, transpose(proj));
}

Tensor influence_component(const Tensor& features, const Tensor& influence_proj) {
  return matmul(features, transpose(influence_proj));
}

Tensor attention_coefficients(const Tensor& h_prime, const Tensor& h_infl,
                              const Tensor& attn_vec,
                              const MetaPathNeighborhood& hood, Activation act) {
  const Index n = h_prime.rows();
  const Index fp = h_prime.cols();
  if (h_infl.rows() != n || h_infl.cols() != fp)
    fail(ErrorCode::shape_mismatch, "h' and h^p disagree in shape");
  if (n != static_cast<Index>(hood.targets.size()))
    fail(ErrorCode::shape_mismatch, "one feature row per target node required");
  if (attn_vec.cols() != 1 || attn_vec.rows() != 2 * fp)
    fail(ErrorCode::shape_mismatch, "attention vector must have length 2*F'");

  // a^T [h'_i || (h'_j + h^p_i)] = a1.h'_i + a2.h'_j + a2.h^p_i
  const Tensor a_self = block(attn_vec, 0, 0, fp, 1);
  const Tensor a_neigh = block(attn_vec, fp, 0, fp, 1);
  const Tensor s_self = matmul(h_prime, a_self);
  const Tensor s_neigh = matmul(h_prime, a_neigh);
  const Tensor s_infl = matmul(h_infl, a_neigh);

  const std::vector<int> tgt = hood.edge_targets();
  const Tensor per_self = gather_rows(s_self, tgt);
  const Tensor per_neigh = gather_rows(s_neigh, hood.neighbors);
  const Tensor per_infl = gather_rows(s_infl, tgt);
  const Tensor scores = add(add(per_self, per_neigh), per_infl);
  return segment_softmax(activation(scores, act), hood.offsets);
}

Tensor aggregate(const Tensor& coefficients, const Tensor& h_prime,
                 const MetaPathNeighborhood& hood, Activation act) {
  const Tensor neighbor_rows = gather_rows(h_prime, hood.neighbors);
  const Tensor mixed =
      segment_weighted_rowsum(coefficients, neighbor_rows, hood.offsets);
  return activation(mixed, act);
}

MetaPathAttentionResult multihead_embed(const Tensor& features,
                                        const MetaPathAttentionTensors& params,
                                        const MetaPathNeighborhood& hood,
                                        Activation attn_act, Activation agg_act,
                                        const std::vector<Tensor>* head_masks) {
  if (params.attention.empty())
    fail(ErrorCode::invalid_argument, "at least one attention head required");
  if (head_masks && head_masks->size() != params.attention.size())
    fail(ErrorCode::invalid_argument, "one dropout mask per head required");
  const Tensor h_prime = project(features, params.feature_proj);
  const Tensor h_infl = influence_component(features, params.influence_proj);
  // the gathered neighbor rows are head-independent; materialize them once
  const Tensor neighbor_rows = gather_rows(h_prime, hood.neighbors);

  MetaPathAttentionResult result;
  std::vector<Tensor> heads;
  for (std::size_t k = 0; k < params.attention.size(); ++k) {
    Tensor coeff = attention_coefficients(h_prime, h_infl, params.attention[k],
                                          hood, attn_act);
    Tensor mixing = head_masks ? scale_rows(coeff, (*head_masks)[k]) : coeff;
    Tensor mixed = segment_weighted_rowsum(mixing, neighbor_rows, hood.offsets);
    heads.push_back(activation(mixed, agg_act));
    result.coefficients.push_back(std::move(coeff));
  }
  result.embedding = concat_cols(heads);
  return result;
}

}  // namespace ishne
