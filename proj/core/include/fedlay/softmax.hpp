#pragma once

// Multiclass softmax regression trained by full-batch gradient descent. The
// flat parameter vector holds the classes x dims weight matrix row by row,
// followed by one bias per class.

#include <span>
#include <vector>

#include "fedlay/dataset.hpp"

namespace fedlay::dfl {

struct SoftmaxShape {
  std::size_t dims = 0;
  std::size_t classes = 0;

  std::size_t param_count() const { return classes * (dims + 1); }
};

std::vector<double> zero_model(const SoftmaxShape& shape);

// Mean cross-entropy over `data`.
double cross_entropy(std::span<const double> params, const SoftmaxShape& shape,
                     const Samples& data);

// `steps` gradient descent steps on the mean cross-entropy. Returns the loss
// before the last step. Throws ParameterError when the loss stops being
// finite (learning rate too large) or on shape mismatch.
double local_train(std::vector<double>& params, const SoftmaxShape& shape,
                   const Samples& data, double learning_rate, std::size_t steps);

// Top-1 accuracy; equal scores go to the smaller class index.
double evaluate(std::span<const double> params, const SoftmaxShape& shape,
                const Samples& data);

}  // namespace fedlay::dfl
