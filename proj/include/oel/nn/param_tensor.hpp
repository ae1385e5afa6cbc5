#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>

namespace oel::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// A trainable tensor with its accumulated gradient. Rank is at most 2
// (weights are out x in, biases out x 1).
template <typename Scalar>
struct ParamTensor {
  std::string name;
  Matrix<Scalar> values;
  Matrix<Scalar> grad;

  ParamTensor() = default;
  ParamTensor(std::string tensor_name, Index rows, Index cols)
      : name(std::move(tensor_name)),
        values(Matrix<Scalar>::Zero(rows, cols)),
        grad(Matrix<Scalar>::Zero(rows, cols)) {}

  std::array<Index, 2> shape() const { return {values.rows(), values.cols()}; }
  Index size() const { return values.size(); }
  void zero_grad() { grad.setZero(); }
  bool values_finite() const { return values.allFinite(); }
  bool grad_finite() const { return grad.allFinite(); }
};

}  // namespace oel::nn
