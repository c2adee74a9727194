#pragma once

#include <string>
#include <vector>

#include "ishne/tensor.hpp"

namespace ishne {

enum class Activation { LeakyRelu, Elu, Tanh };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Elementwise forward/derivative on plain matrices (shared with oracles and
// the attention reference path).
Mat activation_apply(Activation a, const Mat& x);
Mat activation_derivative(Activation a, const Mat& x);

// ---- core tape ops ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor transpose(const Tensor& a);
Tensor concat_rows(const std::vector<Tensor>& parts);  // stack vertically
Tensor concat_cols(const std::vector<Tensor>& parts);  // stack horizontally
Tensor block(const Tensor& a, Index row0, Index col0, Index rows, Index cols);
Tensor sum(const Tensor& a);  // 1x1
Tensor softmax(const Tensor& v);  // column vector, max-stabilized
Tensor activation(const Tensor& a, Activation kind);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return matmul(a, b); }

// ---- structured ops for neighbor-list attention ----------------------------

// out(k, :) = a(indices[k], :)
Tensor gather_rows(const Tensor& a, std::vector<int> indices);

// Softmax within each contiguous segment [offsets[s], offsets[s+1]) of a
// column vector. Segments must be nonempty.
Tensor segment_softmax(const Tensor& scores, std::vector<int> offsets);

// out(s, :) = sum over e in segment s of weights(e) * rows(e, :)
Tensor segment_weighted_rowsum(const Tensor& weights, const Tensor& rows,
                               std::vector<int> offsets);

// out(i) = dot(a.row(i), b.row(i))
Tensor rowwise_dot(const Tensor& a, const Tensor& b);

// Softmax along each row, max-stabilized.
Tensor rowwise_softmax(const Tensor& a);

// out.row(i) = s(i) * a.row(i)
Tensor scale_rows(const Tensor& a, const Tensor& s);

// out = a * s(0,0) for a 1x1 tensor s
Tensor scale_by(const Tensor& a, const Tensor& s);

// Mean over `rows` of -log softmax(logits.row(r))[label]; labels[k] pairs
// with rows[k].
Tensor softmax_cross_entropy(const Tensor& logits, std::vector<int> rows,
                             std::vector<int> labels);

}  // namespace ishne
