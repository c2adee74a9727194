#include "ishne/fusion.hpp"

#include <cmath>

namespace ishne {

namespace {

void check_embeddings(const std::vector<Tensor>& embeddings) {
  if (embeddings.empty())
    fail(ErrorCode::fewer_than_one_metapath, "no meta-path embeddings to fuse");
  for (const Tensor& e : embeddings)
    if (e.rows() != embeddings.front().rows() ||
        e.cols() != embeddings.front().cols())
      fail(ErrorCode::shape_mismatch, "meta-path embeddings disagree in shape");
}

}  // namespace

Qkv qkv(const Tensor& embedding, const FusionTensors& params) {
  return Qkv{matmul(embedding, transpose(params.w_query)),
             matmul(embedding, transpose(params.w_key)),
             matmul(embedding, transpose(params.w_value))};
}

Tensor metapath_importance(const std::vector<Tensor>& embeddings,
                           const FusionTensors& params) {
  check_embeddings(embeddings);
  const std::size_t paths = embeddings.size();
  const Index n = embeddings.front().rows();
  const Index d = params.w_query.rows();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  std::vector<Qkv> proj;
  proj.reserve(paths);
  for (const Tensor& e : embeddings) proj.push_back(qkv(e, params));

  std::vector<Tensor> importances;
  for (std::size_t a = 0; a < paths; ++a) {
    // Row i of `logits` holds node i's attention logits from meta-path a to
    // every meta-path b.
    std::vector<Tensor> cols;
    for (std::size_t b = 0; b < paths; ++b)
      cols.push_back(
          scale(rowwise_dot(proj[a].query, proj[b].key), inv_sqrt_d));
    const Tensor weights = rowwise_softmax(concat_cols(cols));  // N x P

    Tensor mixed;  // N x d
    for (std::size_t b = 0; b < paths; ++b) {
      Tensor part = scale_rows(proj[b].value,
                               block(weights, 0, static_cast<Index>(b), n, 1));
      mixed = (b == 0) ? part : add(mixed, part);
    }
    const Tensor scores = matmul(mixed, params.attn);  // N x 1
    importances.push_back(scale(sum(scores), 1.0 / static_cast<double>(n)));
  }
  return concat_rows(importances);  // P x 1
}

Tensor metapath_weights(const Tensor& importance) {
  return softmax(importance);
}

Tensor fuse(const std::vector<Tensor>& embeddings, const Tensor& beta) {
  check_embeddings(embeddings);
  if (beta.cols() != 1 || beta.rows() != static_cast<Index>(embeddings.size()))
    fail(ErrorCode::shape_mismatch, "one weight per meta-path required");
  Tensor out;
  for (std::size_t p = 0; p < embeddings.size(); ++p) {
    Tensor part =
        scale_by(embeddings[p], block(beta, static_cast<Index>(p), 0, 1, 1));
    out = (p == 0) ? part : add(out, part);
  }
  return out;
}

FusionResult fuse_metapaths(const std::vector<Tensor>& embeddings,
                            const FusionTensors& params) {
  FusionResult r;
  r.importance = metapath_importance(embeddings, params);
  r.beta = metapath_weights(r.importance);
  r.fused = fuse(embeddings, r.beta);
  return r;
}

}  // namespace ishne
