#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace ishne {

// Dense types, templated on scalar. Everything numeric in this library runs
// on these; double is the working precision (see TrainConfig docs).
template <typename S>
using DenseMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using DenseVector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Scalar = double;
using Mat = DenseMatrix<Scalar>;
using Vec = DenseVector<Scalar>;
using Index = Eigen::Index;

using NodeId = std::int64_t;
using TypeId = int;
using ClassId = int;

}  // namespace ishne
