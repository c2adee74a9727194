#include "ishne/ops.hpp"

#include <cmath>

namespace ishne {

namespace {

Tape& tape_of(const Tensor& t) {
  if (!t.valid())
    fail(ErrorCode::invalid_argument, "tensor is not bound to a tape");
  return *t.tape();
}

void require_same_tape(const Tensor& a, const Tensor& b) {
  if (a.tape() != b.tape())
    fail(ErrorCode::invalid_argument, "operands live on different tapes");
}

void check_offsets(const std::vector<int>& offsets, Index total) {
  if (offsets.size() < 2 || offsets.front() != 0 ||
      offsets.back() != static_cast<int>(total))
    fail(ErrorCode::invalid_argument, "segment offsets do not cover the input");
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    if (offsets[s + 1] <= offsets[s])
      fail(ErrorCode::empty_neighborhood,
           "segment " + std::to_string(s) + " is empty");
  }
}

Vec stable_softmax(const Vec& x) {
  const double m = x.maxCoeff();
  Vec y = (x.array() - m).exp();
  y /= y.sum();
  return y;
}

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::LeakyRelu: return "leaky-relu";
    case Activation::Elu: return "elu";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

Activation activation_from_name(const std::string& name) {
  if (name == "leaky-relu") return Activation::LeakyRelu;
  if (name == "elu") return Activation::Elu;
  if (name == "tanh") return Activation::Tanh;
  fail(ErrorCode::invalid_argument, "unknown activation '" + name + "'");
}

Mat activation_apply(Activation a, const Mat& x) {
  switch (a) {
    case Activation::LeakyRelu:
      return x.unaryExpr([](double v) { return v > 0.0 ? v : 0.01 * v; });
    case Activation::Elu:
      return x.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
    case Activation::Tanh:
      return x.unaryExpr([](double v) { return std::tanh(v); });
  }
  return x;
}

Mat activation_derivative(Activation a, const Mat& x) {
  switch (a) {
    case Activation::LeakyRelu:
      return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.01; });
    case Activation::Elu:
      return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
    case Activation::Tanh:
      return x.unaryExpr([](double v) {
        const double t = std::tanh(v);
        return 1.0 - t * t;
      });
  }
  return x;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b);
  Tape& tape = tape_of(a);
  if (a.cols() != b.rows())
    fail(ErrorCode::shape_mismatch,
         "matmul " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
             " by " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  const int ia = a.id(), ib = b.id();
  Mat out = a.value() * b.value();
  return tape.record(std::move(out), [ia, ib](Tape& t, const Mat& g) {
    t.accumulate(ia, g * t.value(ib).transpose());
    t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b);
  Tape& tape = tape_of(a);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorCode::shape_mismatch, "add of differently shaped tensors");
  const int ia = a.id(), ib = b.id();
  Mat out = a.value() + b.value();
  return tape.record(std::move(out), [ia, ib](Tape& t, const Mat& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Tensor scale(const Tensor& a, double factor) {
  Tape& tape = tape_of(a);
  const int ia = a.id();
  Mat out = factor * a.value();
  return tape.record(std::move(out), [ia, factor](Tape& t, const Mat& g) {
    t.accumulate(ia, factor * g);
  });
}

Tensor transpose(const Tensor& a) {
  Tape& tape = tape_of(a);
  const int ia = a.id();
  Mat out = a.value().transpose();
  return tape.record(std::move(out), [ia](Tape& t, const Mat& g) {
    t.accumulate(ia, g.transpose());
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail(ErrorCode::empty_input, "concat of zero tensors");
  Tape& tape = tape_of(parts.front());
  const Index cols = parts.front().cols();
  Index rows = 0;
  std::vector<int> ids;
  std::vector<Index> sizes;
  for (const Tensor& p : parts) {
    require_same_tape(parts.front(), p);
    if (p.cols() != cols)
      fail(ErrorCode::shape_mismatch, "concat_rows with unequal column counts");
    ids.push_back(p.id());
    sizes.push_back(p.rows());
    rows += p.rows();
  }
  Mat out(rows, cols);
  Index at = 0;
  for (const Tensor& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return tape.record(std::move(out), [ids, sizes](Tape& t, const Mat& g) {
    Index at = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      t.accumulate(ids[k], g.middleRows(at, sizes[k]));
      at += sizes[k];
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail(ErrorCode::empty_input, "concat of zero tensors");
  Tape& tape = tape_of(parts.front());
  const Index rows = parts.front().rows();
  Index cols = 0;
  std::vector<int> ids;
  std::vector<Index> sizes;
  for (const Tensor& p : parts) {
    require_same_tape(parts.front(), p);
    if (p.rows() != rows)
      fail(ErrorCode::shape_mismatch, "concat_cols with unequal row counts");
    ids.push_back(p.id());
    sizes.push_back(p.cols());
    cols += p.cols();
  }
  Mat out(rows, cols);
  Index at = 0;
  for (const Tensor& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return tape.record(std::move(out), [ids, sizes](Tape& t, const Mat& g) {
    Index at = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      t.accumulate(ids[k], g.middleCols(at, sizes[k]));
      at += sizes[k];
    }
  });
}

Tensor block(const Tensor& a, Index row0, Index col0, Index rows, Index cols) {
  Tape& tape = tape_of(a);
  if (row0 < 0 || col0 < 0 || rows < 1 || cols < 1 || row0 + rows > a.rows() ||
      col0 + cols > a.cols())
    fail(ErrorCode::shape_mismatch, "block outside tensor bounds");
  const int ia = a.id();
  const Index pr = a.rows(), pc = a.cols();
  Mat out = a.value().block(row0, col0, rows, cols);
  return tape.record(std::move(out),
                     [ia, row0, col0, rows, cols, pr, pc](Tape& t, const Mat& g) {
                       Mat acc = Mat::Zero(pr, pc);
                       acc.block(row0, col0, rows, cols) = g;
                       t.accumulate(ia, acc);
                     });
}

Tensor sum(const Tensor& a) {
  Tape& tape = tape_of(a);
  const int ia = a.id();
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  return tape.record(std::move(out), [ia](Tape& t, const Mat& g) {
    const Mat& v = t.value(ia);
    t.accumulate(ia, Mat::Constant(v.rows(), v.cols(), g(0, 0)));
  });
}

Tensor softmax(const Tensor& v) {
  Tape& tape = tape_of(v);
  if (v.size() == 0) fail(ErrorCode::empty_input, "softmax of empty tensor");
  if (v.cols() != 1) fail(ErrorCode::shape_mismatch, "softmax expects a column vector");
  const int iv = v.id();
  Vec y = stable_softmax(v.value().col(0));
  Mat out = y;
  return tape.record(std::move(out), [iv, y](Tape& t, const Mat& g) {
    const double dot = (g.col(0).array() * y.array()).sum();
    Mat acc = (y.array() * (g.col(0).array() - dot)).matrix();
    t.accumulate(iv, acc);
  });
}

Tensor activation(const Tensor& a, Activation kind) {
  Tape& tape = tape_of(a);
  const int ia = a.id();
  Mat out = activation_apply(kind, a.value());
  return tape.record(std::move(out), [ia, kind](Tape& t, const Mat& g) {
    t.accumulate(ia, activation_derivative(kind, t.value(ia)).cwiseProduct(g));
  });
}

Tensor gather_rows(const Tensor& a, std::vector<int> indices) {
  Tape& tape = tape_of(a);
  for (int i : indices)
    if (i < 0 || i >= a.rows())
      fail(ErrorCode::invalid_argument, "gather index out of range");
  const int ia = a.id();
  const Index n = static_cast<Index>(indices.size());
  Mat out(n, a.cols());
  // column-wise: contiguous writes on the column-major storage
  for (Index c = 0; c < a.cols(); ++c)
    for (Index k = 0; k < n; ++k)
      out(k, c) = a.value()(indices[static_cast<size_t>(k)], c);
  return tape.record(std::move(out), [ia, indices = std::move(indices)](
                                         Tape& t, const Mat& g) {
    const Mat& v = t.value(ia);
    Mat acc = Mat::Zero(v.rows(), v.cols());
    for (Index c = 0; c < v.cols(); ++c)
      for (Index k = 0; k < g.rows(); ++k)
        acc(indices[static_cast<size_t>(k)], c) += g(k, c);
    t.accumulate(ia, acc);
  });
}

Tensor segment_softmax(const Tensor& scores, std::vector<int> offsets) {
  Tape& tape = tape_of(scores);
  if (scores.cols() != 1)
    fail(ErrorCode::shape_mismatch, "segment_softmax expects a column vector");
  check_offsets(offsets, scores.rows());
  const Vec& x = scores.value().col(0);
  Vec y(x.size());
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    const int b = offsets[s], n = offsets[s + 1] - b;
    y.segment(b, n) = stable_softmax(x.segment(b, n));
  }
  const int is = scores.id();
  Mat out = y;
  return tape.record(std::move(out), [is, y, offsets = std::move(offsets)](
                                         Tape& t, const Mat& g) {
    Vec acc(y.size());
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
      const int b = offsets[s], n = offsets[s + 1] - b;
      const auto ys = y.segment(b, n).array();
      const auto gs = g.col(0).segment(b, n).array();
      const double dot = (ys * gs).sum();
      acc.segment(b, n) = (ys * (gs - dot)).matrix();
    }
    t.accumulate(is, acc);
  });
}

Tensor segment_weighted_rowsum(const Tensor& weights, const Tensor& rows,
                               std::vector<int> offsets) {
  require_same_tape(weights, rows);
  Tape& tape = tape_of(weights);
  if (weights.cols() != 1 || weights.rows() != rows.rows())
    fail(ErrorCode::shape_mismatch, "weights must be one scalar per row");
  check_offsets(offsets, rows.rows());
  const Index segs = static_cast<Index>(offsets.size()) - 1;
  const Index cols = rows.cols();
  // column-wise accumulation; per output coefficient the edge order is
  // unchanged, so values match the row-wise formulation bit for bit
  Mat out = Mat::Zero(segs, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index s = 0; s < segs; ++s)
      for (int e = offsets[static_cast<size_t>(s)];
           e < offsets[static_cast<size_t>(s) + 1]; ++e)
        out(s, c) += weights.value()(e, 0) * rows.value()(e, c);
  const int iw = weights.id(), ir = rows.id();
  return tape.record(std::move(out), [iw, ir, offsets = std::move(offsets)](
                                         Tape& t, const Mat& g) {
    const Mat& w = t.value(iw);
    const Mat& r = t.value(ir);
    Mat gw = Mat::Zero(w.rows(), 1);
    Mat gr(r.rows(), r.cols());
    for (Index c = 0; c < r.cols(); ++c)
      for (std::size_t s = 0; s + 1 < offsets.size(); ++s)
        for (int e = offsets[s]; e < offsets[s + 1]; ++e) {
          gw(e, 0) += g(static_cast<Index>(s), c) * r(e, c);
          gr(e, c) = w(e, 0) * g(static_cast<Index>(s), c);
        }
    t.accumulate(iw, gw);
    t.accumulate(ir, gr);
  });
}

Tensor rowwise_dot(const Tensor& a, const Tensor& b) {
  require_same_tape(a, b);
  Tape& tape = tape_of(a);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorCode::shape_mismatch, "rowwise_dot of differently shaped tensors");
  const int ia = a.id(), ib = b.id();
  Mat out = a.value().cwiseProduct(b.value()).rowwise().sum();
  return tape.record(std::move(out), [ia, ib](Tape& t, const Mat& g) {
    const auto gcol = g.col(0).array();
    t.accumulate(ia, (t.value(ib).array().colwise() * gcol).matrix());
    t.accumulate(ib, (t.value(ia).array().colwise() * gcol).matrix());
  });
}

Tensor rowwise_softmax(const Tensor& a) {
  Tape& tape = tape_of(a);
  if (a.cols() == 0) fail(ErrorCode::empty_input, "rowwise_softmax of empty tensor");
  Mat y(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i)
    y.row(i) = stable_softmax(a.value().row(i).transpose()).transpose();
  const int ia = a.id();
  Mat out = y;
  return tape.record(std::move(out), [ia, y](Tape& t, const Mat& g) {
    Mat acc(y.rows(), y.cols());
    for (Index i = 0; i < y.rows(); ++i) {
      const double dot = (g.row(i).array() * y.row(i).array()).sum();
      acc.row(i) = (y.row(i).array() * (g.row(i).array() - dot)).matrix();
    }
    t.accumulate(ia, acc);
  });
}

Tensor scale_rows(const Tensor& a, const Tensor& s) {
  require_same_tape(a, s);
  Tape& tape = tape_of(a);
  if (s.cols() != 1 || s.rows() != a.rows())
    fail(ErrorCode::shape_mismatch, "scale_rows needs one scalar per row");
  const int ia = a.id(), is = s.id();
  Mat out = (a.value().array().colwise() * s.value().col(0).array()).matrix();
  return tape.record(std::move(out), [ia, is](Tape& t, const Mat& g) {
    const Mat& av = t.value(ia);
    const Mat& sv = t.value(is);
    t.accumulate(ia, (g.array().colwise() * sv.col(0).array()).matrix());
    t.accumulate(is, g.cwiseProduct(av).rowwise().sum());
  });
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  require_same_tape(a, s);
  Tape& tape = tape_of(a);
  if (s.size() != 1) fail(ErrorCode::shape_mismatch, "scale_by expects a scalar");
  const int ia = a.id(), is = s.id();
  Mat out = s.value()(0, 0) * a.value();
  return tape.record(std::move(out), [ia, is](Tape& t, const Mat& g) {
    t.accumulate(ia, t.value(is)(0, 0) * g);
    Mat gs(1, 1);
    gs(0, 0) = g.cwiseProduct(t.value(ia)).sum();
    t.accumulate(is, gs);
  });
}

Tensor softmax_cross_entropy(const Tensor& logits, std::vector<int> rows,
                             std::vector<int> labels) {
  Tape& tape = tape_of(logits);
  if (rows.empty()) fail(ErrorCode::empty_train_set, "loss over zero nodes");
  if (rows.size() != labels.size())
    fail(ErrorCode::invalid_argument, "rows/labels length mismatch");
  const Index n = logits.rows(), c = logits.cols();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= n)
      fail(ErrorCode::invalid_argument, "loss row out of range");
    if (labels[k] < 0 || labels[k] >= c)
      fail(ErrorCode::invalid_argument, "label out of class range");
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  double total = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto x = logits.value().row(rows[k]);
    const double m = x.maxCoeff();
    const double lse = m + std::log((x.array() - m).exp().sum());
    total += lse - x(labels[k]);
  }
  Mat out(1, 1);
  out(0, 0) = total * inv;
  const int il = logits.id();
  return tape.record(
      std::move(out), [il, inv, rows = std::move(rows),
                       labels = std::move(labels)](Tape& t, const Mat& g) {
        const Mat& x = t.value(il);
        Mat acc = Mat::Zero(x.rows(), x.cols());
        const double go = g(0, 0) * inv;
        for (std::size_t k = 0; k < rows.size(); ++k) {
          Vec p = stable_softmax(x.row(rows[k]).transpose());
          p(labels[k]) -= 1.0;
          acc.row(rows[k]) += go * p.transpose();
        }
        t.accumulate(il, acc);
      });
}

}  // namespace ishne
