#pragma once

#include <Eigen/Dense>

#include "fedlay/graph.hpp"

namespace fedlay::topo {

enum class MixingScheme { metropolis_hastings, lazy_uniform };

struct MixingMatrix {
  Eigen::MatrixXd w;
  MixingScheme scheme = MixingScheme::metropolis_hastings;
};

// Symmetric doubly stochastic weights supported on the graph.
//   metropolis_hastings: w_ij = 1 / (1 + max(deg_i, deg_j)) on edges
//   lazy_uniform:        w_ij = 1 / n (complete graphs only)
// Throws GraphError when g is disconnected.
MixingMatrix mixing_matrix(const OverlayGraph& g,
                           MixingScheme scheme = MixingScheme::metropolis_hastings);

// Largest eigenvalue matrix size handled by the dense solver.
inline constexpr Eigen::Index kDenseEigenLimit = 2000;

// max(|lambda_2|, |lambda_n|). Dense self-adjoint solve up to
// kDenseEigenLimit, deflated power iteration beyond.
double spectral_lambda(const MixingMatrix& m);

// Power iteration on M - (1/n) 11^T, whose spectral radius is lambda for a
// doubly stochastic M. Exposed for cross-checking the dense route.
double spectral_lambda_iterative(const MixingMatrix& m, double tolerance = 1e-7,
                                 int max_iterations = 200000);

// 1 / (1 - lambda)^2. Throws ParameterError unless 0 <= lambda < 1.
double convergence_factor(double lambda);

struct TopologyMetrics {
  double lambda = 0.0;
  double convergence_factor = 1.0;
  std::size_t diameter = 0;
  double avg_shortest_path = 0.0;
};

// All four metrics with the Metropolis-Hastings matrix.
TopologyMetrics compute_metrics(const OverlayGraph& g);

}  // namespace fedlay::topo
