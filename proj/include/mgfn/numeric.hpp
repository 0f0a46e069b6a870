#pragma once

#include "mgfn/types.hpp"

#include <cmath>

namespace mgfn {

// Row-wise softmax with max subtraction. Works on any dense expression.
template <class Derived>
Matrix softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

// Jacobian-vector product of softmax_rows: given probs p = softmax(logits) and
// upstream dp, returns dlogits with dlogits_i = p_i .* (dp_i - <dp_i, p_i>).
template <class DerivedP, class DerivedG>
Matrix softmax_rows_grad(const Eigen::MatrixBase<DerivedP>& probs,
                         const Eigen::MatrixBase<DerivedG>& dprobs) {
  Matrix out(probs.rows(), probs.cols());
  for (Index i = 0; i < probs.rows(); ++i) {
    const double dot = probs.row(i).dot(dprobs.row(i));
    out.row(i) = probs.row(i).array() * (dprobs.row(i).array() - dot);
  }
  return out;
}

// x * log(x/y) with the 0 * log 0 = 0 convention.
inline double xlogx_over(double x, double y) {
  if (x == 0.0) return 0.0;
  return x * std::log(x / y);
}

}  // namespace mgfn
