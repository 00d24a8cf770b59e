#include "fedlay/softmax.hpp"

#include <cmath>
#include <string>

namespace fedlay::dfl {

namespace {

using ConstWeights = Eigen::Map<const RowMatrix>;
using Weights = Eigen::Map<RowMatrix>;

void check(std::span<const double> params, const SoftmaxShape& shape, const Samples& data) {
  if (shape.classes < 2 || shape.dims == 0) throw ParameterError("bad softmax shape");
  if (params.size() != shape.param_count()) {
    throw ParameterError("model has " + std::to_string(params.size()) +
                         " parameters, shape needs " + std::to_string(shape.param_count()));
  }
  if (data.dims() != shape.dims) throw ParameterError("sample dimension does not match model");
  if (data.size() == 0) throw ParameterError("no samples");
}

RowMatrix logits(std::span<const double> params, const SoftmaxShape& shape, const Samples& data) {
  const auto c = static_cast<Eigen::Index>(shape.classes);
  const auto d = static_cast<Eigen::Index>(shape.dims);
  ConstWeights w(params.data(), c, d);
  Eigen::Map<const Eigen::RowVectorXd> b(params.data() + c * d, c);
  RowMatrix z = data.x * w.transpose();
  z.rowwise() += b;
  return z;
}

// Turns logits into probabilities in place and returns the mean loss.
double softmax_loss(RowMatrix& z, const std::vector<int>& y) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double top = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - top).exp();
    const double sum = z.row(i).sum();
    z.row(i) /= sum;
    loss -= std::log(std::max(z(i, y[static_cast<std::size_t>(i)]), 1e-300));
  }
  return loss / static_cast<double>(z.rows());
}

}  // namespace

std::vector<double> zero_model(const SoftmaxShape& shape) {
  return std::vector<double>(shape.param_count(), 0.0);
}

double cross_entropy(std::span<const double> params, const SoftmaxShape& shape,
                     const Samples& data) {
  check(params, shape, data);
  RowMatrix z = logits(params, shape, data);
  return softmax_loss(z, data.y);
}

double local_train(std::vector<double>& params, const SoftmaxShape& shape,
                   const Samples& data, double learning_rate, std::size_t steps) {
  check(params, shape, data);
  if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  const auto c = static_cast<Eigen::Index>(shape.classes);
  const auto d = static_cast<Eigen::Index>(shape.dims);
  const double scale = learning_rate / static_cast<double>(data.size());
  double loss = 0.0;
  for (std::size_t step = 0; step < steps; ++step) {
    RowMatrix p = logits(params, shape, data);
    loss = softmax_loss(p, data.y);
    if (!std::isfinite(loss)) {
      throw ParameterError("training loss is not finite; lower the learning rate");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      p(static_cast<Eigen::Index>(i), data.y[i]) -= 1.0;
    }
    Weights w(params.data(), c, d);
    Eigen::Map<Eigen::RowVectorXd> b(params.data() + c * d, c);
    w.noalias() -= scale * (p.transpose() * data.x);
    b.noalias() -= scale * p.colwise().sum();
  }
  for (double v : params) {
    if (!std::isfinite(v)) {
      throw ParameterError("model diverged; lower the learning rate");
    }
  }
  return loss;
}

double evaluate(std::span<const double> params, const SoftmaxShape& shape,
                const Samples& data) {
  check(params, shape, data);
  const RowMatrix z = logits(params, shape, data);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < z.cols(); ++k) {
      if (z(i, k) > z(i, best)) best = k;
    }
    if (best == data.y[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace fedlay::dfl
