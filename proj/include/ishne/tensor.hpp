#pragma once

#include <deque>
#include <functional>

#include "ishne/error.hpp"
#include "ishne/types.hpp"

namespace ishne {

class Tape;

// Handle into a gradient tape. Cheap to copy; owns nothing. 1-D tensors are
// stored as n-by-1 column matrices.
class Tensor {
 public:
  Tensor() = default;

  const Mat& value() const;
  const Mat& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Index size() const { return value().size(); }
  bool valid() const { return tape_ != nullptr; }

  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode gradient tape over dense double tensors. Nodes are stored in
// creation order, which is by construction a topological order of the
// computation; backward() replays it once, in reverse.
//
// A tape lives for one forward/backward evaluation and is confined to a
// single thread.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Mat& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf whose gradient nobody asks for (e.g. input features).
  Tensor input(Mat value) { return record(std::move(value), {}); }

  // Leaf registered as a learnable parameter; grad() is meaningful after
  // backward().
  Tensor parameter(Mat value) { return record(std::move(value), {}); }

  // Records an interior node. `backward`, when invoked, must accumulate into
  // the parents' grads via accumulate().
  Tensor record(Mat value, BackwardFn backward);

  // Populates grads of every node reachable from `loss`, which must be 1x1.
  void backward(const Tensor& loss);

  void accumulate(int id, const Mat& g);

  const Mat& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Mat& grad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;  // empty until backward()
    BackwardFn backward;
  };
  // deque: value()/grad() references stay valid while the tape grows
  std::deque<Node> nodes_;
};

inline const Mat& Tensor::value() const { return tape_->value(id_); }
inline const Mat& Tensor::grad() const { return tape_->grad(id_); }

}  // namespace ishne
