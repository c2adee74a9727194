#include "ishne/tensor.hpp"

#include <cassert>

namespace ishne {

Tensor Tape::record(Mat value, BackwardFn backward) {
  assert(value.allFinite() && "non-finite forward value");
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{std::move(value), Mat(), std::move(backward)});
  return Tensor(this, id);
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape() != this)
    fail(ErrorCode::invalid_argument, "loss tensor belongs to a different tape");
  if (loss.value().size() != 1)
    fail(ErrorCode::non_scalar_loss, "backward() requires a 1x1 loss tensor");

  for (auto& n : nodes_) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  nodes_[static_cast<size_t>(loss.id())].grad(0, 0) = 1.0;

  for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.backward) n.backward(*this, n.grad);
  }
}

void Tape::accumulate(int id, const Mat& g) {
  Node& n = nodes_[static_cast<size_t>(id)];
  assert(g.rows() == n.value.rows() && g.cols() == n.value.cols());
  n.grad += g;
}

}  // namespace ishne
