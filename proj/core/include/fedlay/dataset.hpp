#pragma once

// Synthetic classification data and label-shard partitioning for the
// decentralized learning experiments.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "fedlay/mep.hpp"

namespace fedlay::dfl {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Samples {
  RowMatrix x;  // samples x dims
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  std::size_t dims() const { return static_cast<std::size_t>(x.cols()); }
};

struct SyntheticConfig {
  std::size_t num_classes = 10;
  std::size_t dims = 32;
  std::size_t train_size = 10000;
  std::size_t test_size = 2000;
  // Smallest distance between two class means, in units of the per-axis
  // noise standard deviation (which is 1).
  double separation = 6.0;

  void validate() const;
};

struct SyntheticDataset {
  std::size_t num_classes = 0;
  RowMatrix means;  // classes x dims
  Samples train;
  Samples test;
};

// One isotropic Gaussian cluster per class, classes balanced in both splits.
// Means are orthogonal directions when num_classes <= dims (all pairs at the
// same distance), random directions otherwise, and are rescaled so the
// closest pair sits exactly `separation` apart.
SyntheticDataset make_synthetic(const SyntheticConfig& config, std::uint64_t seed);

// Rows of `from` selected by `indices`.
Samples subset(const Samples& from, const std::vector<std::size_t>& indices);

struct ShardAssignment {
  std::size_t shards_per_client = 0;
  std::vector<int> shard_label;  // -1 for mixed-label slices
  std::vector<std::vector<std::size_t>> shard_samples;  // train indices
  std::vector<std::vector<std::size_t>> client_shards;

  std::size_t clients() const { return client_shards.size(); }
  std::vector<std::size_t> client_samples(std::size_t client) const;
  mep::LabelHistogram histogram(std::size_t client, const Samples& train,
                                std::size_t num_classes) const;
};

// Splits every class of the training set into total_shards / num_classes
// single-label shards and deals shards_per_client distinct shards to each
// client at random. Throws ParameterError when n_clients * shards_per_client
// exceeds total_shards or total_shards is not a multiple of num_classes.
ShardAssignment make_noniid(const SyntheticDataset& data, std::size_t n_clients,
                            std::size_t shards_per_client, std::size_t total_shards,
                            std::uint64_t seed);

// Every client gets an equal random slice of the whole training set.
ShardAssignment make_iid(const SyntheticDataset& data, std::size_t n_clients,
                         std::uint64_t seed);

}  // namespace fedlay::dfl
