#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ishne/fusion.hpp"
#include "ishne/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ishne;
using testutil::random_fusion_params;

namespace {

FusionTensors bind(Tape& tape, const FusionParams& p) {
  return {tape.parameter(p.w_query), tape.parameter(p.w_key),
          tape.parameter(p.w_value), tape.parameter(p.attn)};
}

}  // namespace

TEST_CASE("qkv with identity matrices returns the embedding itself") {
  Rng rng(51);
  const Mat x = rng.uniform_matrix(4, 3, -1, 1);
  FusionParams p;
  p.w_query = p.w_key = p.w_value = Mat::Identity(3, 3);
  p.attn = Mat::Ones(3, 1);
  Tape tape;
  const Qkv out = qkv(tape.input(x), bind(tape, p));
  CHECK(out.query.value() == x);
  CHECK(out.key.value() == x);
  CHECK(out.value.value() == x);
}

TEST_CASE("qkv of a zero embedding is zero") {
  Rng rng(52);
  const FusionParams p = random_fusion_params(rng, 4, 3);
  Tape tape;
  const Qkv out = qkv(tape.input(Mat::Zero(5, 4)), bind(tape, p));
  CHECK(out.query.value() == Mat::Zero(5, 3));
}

TEST_CASE("qkv matches the hand product") {
  Rng rng(53);
  const Mat x = rng.uniform_matrix(4, 6, -1, 1);
  const FusionParams p = random_fusion_params(rng, 6, 3);
  Tape tape;
  const Qkv out = qkv(tape.input(x), bind(tape, p));
  CHECK((out.query.value() - x * p.w_query.transpose()).norm() == 0.0);
  CHECK((out.key.value() - x * p.w_key.transpose()).norm() == 0.0);
  CHECK((out.value.value() - x * p.w_value.transpose()).norm() == 0.0);
}

TEST_CASE("a single meta-path gets importance mean(q.V) and beta [1]") {
  Rng rng(54);
  const Mat x = rng.uniform_matrix(5, 4, -1, 1);
  const FusionParams p = random_fusion_params(rng, 4, 3);
  Tape tape;
  const FusionTensors params = bind(tape, p);
  const Tensor w = metapath_importance({tape.input(x)}, params);
  REQUIRE(w.rows() == 1);
  const Mat v = x * p.w_value.transpose();
  const double expect = (v * p.attn.col(0)).mean();
  CHECK(w.value()(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  const Tensor beta = metapath_weights(w);
  CHECK(beta.value()(0, 0) == 1.0);
}

TEST_CASE("identical embeddings share one importance by symmetry") {
  Rng rng(55);
  const Mat x = rng.uniform_matrix(6, 4, -1, 1);
  const FusionParams p = random_fusion_params(rng, 4, 3);
  Tape tape;
  const Tensor xa = tape.input(x);
  const Tensor xb = tape.input(x);
  const Tensor w = metapath_importance({xa, xb}, bind(tape, p));
  CHECK(w.value()(0, 0) == w.value()(1, 0));
}

TEST_CASE("importance matches the straight-line realization") {
  Rng rng(56);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 5, kfp = 4, d = 3;
    const Mat xa = rng.uniform_matrix(n, kfp, -1, 1);
    const Mat xb = rng.uniform_matrix(n, kfp, -1, 1);
    const FusionParams p = random_fusion_params(rng, kfp, d);

    Tape tape;
    const Tensor w =
        metapath_importance({tape.input(xa), tape.input(xb)}, bind(tape, p));

    // reference via the model-level oracle with a two-path dummy model
    IshneModel model;
    model.fusion = p;
    const Index paths = 2;
    Vec expect = Vec::Zero(paths);
    for (Index i = 0; i < n; ++i) {
      Mat q(paths, d), k(paths, d), v(paths, d);
      const std::vector<const Mat*> xs{&xa, &xb};
      for (Index a = 0; a < paths; ++a) {
        const Vec row = xs[static_cast<size_t>(a)]->row(i).transpose();
        q.row(a) = (p.w_query * row).transpose();
        k.row(a) = (p.w_key * row).transpose();
        v.row(a) = (p.w_value * row).transpose();
      }
      for (Index a = 0; a < paths; ++a) {
        std::vector<double> logits;
        for (Index b = 0; b < paths; ++b)
          logits.push_back(q.row(a).dot(k.row(b)) / std::sqrt(double(d)));
        const auto sm = oracle::softmax_highprec(logits);
        Vec mixed = Vec::Zero(d);
        for (Index b = 0; b < paths; ++b)
          mixed += sm[static_cast<size_t>(b)] * v.row(b).transpose();
        expect(a) += p.attn.col(0).dot(mixed);
      }
    }
    expect /= double(n);
    for (Index a = 0; a < paths; ++a)
      CHECK(w.value()(a, 0) == doctest::Approx(expect(a)).epsilon(1e-10));
  }
}

TEST_CASE("metapath_weights closed forms") {
  Tape tape;
  Mat equal(3, 1);
  equal << 0.4, 0.4, 0.4;
  const Mat b1 = metapath_weights(tape.input(equal)).value();
  for (Index i = 0; i < 3; ++i)
    CHECK(b1(i, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Mat two(2, 1);
  two << std::log(2.0), 0.0;
  const Mat b2 = metapath_weights(tape.input(two)).value();
  CHECK(b2(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(b2(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  Rng rng(57);
  const Mat w = rng.uniform_matrix(4, 1, -3, 3);
  const Mat b3 = metapath_weights(tape.input(w)).value();
  const auto expect = oracle::softmax_highprec(
      std::vector<double>(w.data(), w.data() + w.size()));
  for (Index i = 0; i < 4; ++i)
    CHECK(std::abs(b3(i, 0) - expect[static_cast<size_t>(i)]) < 1e-12);
}

TEST_CASE("beta is shift invariant") {
  Rng rng(58);
  const Mat w = rng.uniform_matrix(3, 1, -2, 2);
  Tape tape;
  const Mat a = metapath_weights(tape.input(w)).value();
  const Mat b = metapath_weights(tape.input(Mat(w.array() + 7.25))).value();
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("fuse selects, cancels, and mixes") {
  Rng rng(59);
  const Mat xa = rng.uniform_matrix(4, 3, -1, 1);
  Tape tape;
  const Tensor ta = tape.input(xa);
  const Tensor tb = tape.input(Mat(-xa));

  Mat pick(2, 1);
  pick << 1.0, 0.0;
  CHECK(fuse({ta, tb}, tape.input(pick)).value() == xa);

  Mat half(2, 1);
  half << 0.5, 0.5;
  CHECK(fuse({ta, tb}, tape.input(half)).value() == Mat::Zero(4, 3));

  const Mat xb = rng.uniform_matrix(4, 3, -1, 1);
  Mat betas(2, 1);
  betas << 0.3, 0.7;
  const Mat got = fuse({ta, tape.input(xb)}, tape.input(betas)).value();
  CHECK((got - (0.3 * xa + 0.7 * xb)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("full fusion: beta is a probability vector and X stays in the hull") {
  Rng rng(60);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 4, kfp = 3, d = 5;
    std::vector<Mat> xs{rng.uniform_matrix(n, kfp, -1, 1),
                        rng.uniform_matrix(n, kfp, -1, 1),
                        rng.uniform_matrix(n, kfp, -1, 1)};
    const FusionParams p = random_fusion_params(rng, kfp, d);
    Tape tape;
    std::vector<Tensor> handles;
    for (const Mat& x : xs) handles.push_back(tape.input(x));
    const FusionResult r = fuse_metapaths(handles, bind(tape, p));

    double total = 0.0;
    for (Index i = 0; i < 3; ++i) {
      CHECK(r.beta.value()(i, 0) >= 0.0);
      total += r.beta.value()(i, 0);
    }
    CHECK(std::abs(total - 1.0) < 1e-12);

    for (Index i = 0; i < n; ++i)
      for (Index c = 0; c < kfp; ++c) {
        double lo = xs[0](i, c), hi = xs[0](i, c);
        for (const Mat& x : xs) {
          lo = std::min(lo, x(i, c));
          hi = std::max(hi, x(i, c));
        }
        CHECK(r.fused.value()(i, c) >= lo - 1e-12);
        CHECK(r.fused.value()(i, c) <= hi + 1e-12);
      }
  }
}

TEST_CASE("permuting the meta-path list permutes beta and keeps X") {
  Rng rng(61);
  const int n = 5, kfp = 4, d = 3;
  std::vector<Mat> xs{rng.uniform_matrix(n, kfp, -1, 1),
                      rng.uniform_matrix(n, kfp, -1, 1),
                      rng.uniform_matrix(n, kfp, -1, 1)};
  const FusionParams p = random_fusion_params(rng, kfp, d);
  const std::vector<int> perm{2, 0, 1};

  Tape tape;
  std::vector<Tensor> fwd, permuted;
  for (const Mat& x : xs) fwd.push_back(tape.input(x));
  for (int i : perm) permuted.push_back(tape.input(xs[static_cast<size_t>(i)]));

  const FusionResult a = fuse_metapaths(fwd, bind(tape, p));
  const FusionResult b = fuse_metapaths(permuted, bind(tape, p));
  for (std::size_t i = 0; i < perm.size(); ++i)
    CHECK(b.beta.value()(static_cast<Index>(i), 0) ==
          doctest::Approx(a.beta.value()(perm[i], 0)).epsilon(1e-12));
  CHECK((a.fused.value() - b.fused.value()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fewer than one meta-path is rejected") {
  Rng rng(62);
  const FusionParams p = random_fusion_params(rng, 3, 2);
  Tape tape;
  try {
    metapath_importance({}, bind(tape, p));
    FAIL("expected FewerThanOneMetaPath");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::fewer_than_one_metapath);
  }
}

TEST_CASE("importance gradients pass finite differences") {
  Rng rng(63);
  const int n = 4, kfp = 3, d = 2;
  const Mat xa = rng.uniform_matrix(n, kfp, -1, 1);
  const Mat xb = rng.uniform_matrix(n, kfp, -1, 1);
  FusionParams p = random_fusion_params(rng, kfp, d);
  Mat coeffs(1, 2);
  coeffs << 1.0, 2.0;  // distinct weights so the score can't cancel

  std::vector<Mat*> param_list{&p.w_query, &p.w_key, &p.w_value, &p.attn};
  const auto value = [&]() {
    Tape tape;
    const Tensor w =
        metapath_importance({tape.input(xa), tape.input(xb)}, bind(tape, p));
    return matmul(tape.input(coeffs), w).value()(0, 0);
  };

  std::vector<Mat> analytic;
  {
    Tape tape;
    const FusionTensors bound = bind(tape, p);
    const Tensor w = metapath_importance({tape.input(xa), tape.input(xb)}, bound);
    tape.backward(matmul(tape.input(coeffs), w));
    analytic = {bound.w_query.grad(), bound.w_key.grad(), bound.w_value.grad(),
                bound.attn.grad()};
  }

  const double step = 1e-5;
  for (std::size_t k = 0; k < param_list.size(); ++k)
    for (Index i = 0; i < param_list[k]->rows(); ++i)
      for (Index j = 0; j < param_list[k]->cols(); ++j) {
        const double saved = (*param_list[k])(i, j);
        (*param_list[k])(i, j) = saved + step;
        const double up = value();
        (*param_list[k])(i, j) = saved - step;
        const double down = value();
        (*param_list[k])(i, j) = saved;
        const double fd = (up - down) / (2 * step);
        CHECK(std::abs(analytic[k](i, j) - fd) / (std::abs(fd) + 1e-8) < 1e-4);
      }
}
