#include "fedlay/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedlay/rng.hpp"

namespace fedlay::topo {

MixingMatrix mixing_matrix(const OverlayGraph& g, MixingScheme scheme) {
  const auto n = static_cast<Eigen::Index>(g.size());
  if (n == 0) throw GraphError("mixing matrix of an empty graph");
  const std::size_t components = component_count(g);
  if (components != 1) {
    throw GraphError("mixing matrix needs a connected graph (" +
                     std::to_string(components) + " components)");
  }
  MixingMatrix m;
  m.scheme = scheme;
  if (scheme == MixingScheme::lazy_uniform) {
    const auto un = static_cast<std::size_t>(n);
    if (g.edge_count() != un * (un - 1) / 2) {
      throw ParameterError("lazy_uniform weights are only valid on a complete graph");
    }
    m.w = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    return m;
  }
  m.w = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto di = g.degree(static_cast<std::size_t>(i));
    for (std::size_t j : g.adjacent(static_cast<std::size_t>(i))) {
      const auto dj = g.degree(j);
      m.w(i, static_cast<Eigen::Index>(j)) =
          1.0 / (1.0 + static_cast<double>(std::max(di, dj)));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    m.w(i, i) = 1.0 - m.w.row(i).sum();
  }
  return m;
}

double spectral_lambda(const MixingMatrix& m) {
  const Eigen::Index n = m.w.rows();
  if (n < 2) throw ParameterError("spectral lambda needs at least two nodes");
  if (n > kDenseEigenLimit) return spectral_lambda_iterative(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      m.w, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw GraphError("eigensolver did not converge");
  }
  const auto& ev = solver.eigenvalues();  // ascending
  return std::max(std::fabs(ev(n - 2)), std::fabs(ev(0)));
}

double spectral_lambda_iterative(const MixingMatrix& m, double tolerance,
                                 int max_iterations) {
  const Eigen::Index n = m.w.rows();
  if (n < 2) throw ParameterError("spectral lambda needs at least two nodes");
  Rng rng(0x5eed5eedULL);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = uniform_unit(rng) - 0.5;
  auto deflate = [&](Eigen::VectorXd& v) { v.array() -= v.mean(); };
  deflate(x);
  x.normalize();
  double estimate = 0.0;
  Eigen::VectorXd y(n);
  for (int it = 0; it < max_iterations; ++it) {
    y.noalias() = m.w * x;
    deflate(y);
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    // Two steps of the symmetric iteration: ||B^2 x|| converges to lambda^2
    // monotonically even when +lambda and -lambda are both present.
    Eigen::VectorXd z = m.w * (y / norm);
    deflate(z);
    const double next = std::sqrt(norm * z.norm());
    x = z.normalized();
    if (it > 0 && std::fabs(next - estimate) <= tolerance * 1e-2) {
      return next;
    }
    estimate = next;
  }
  return estimate;
}

double convergence_factor(double lambda) {
  if (!(lambda >= 0.0) || !(lambda < 1.0)) {
    throw ParameterError("convergence factor needs 0 <= lambda < 1");
  }
  const double gap = 1.0 - lambda;
  return 1.0 / (gap * gap);
}

TopologyMetrics compute_metrics(const OverlayGraph& g) {
  TopologyMetrics out;
  out.lambda = spectral_lambda(mixing_matrix(g));
  out.convergence_factor = convergence_factor(out.lambda);
  const PathStats ps = path_stats(g);
  out.diameter = ps.diameter;
  out.avg_shortest_path = ps.avg_shortest_path;
  return out;
}

}  // namespace fedlay::topo
