#include "fedlay/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "fedlay/rng.hpp"

namespace fedlay::dfl {

namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_below(rng, i)]);
  }
}

RowMatrix class_means(const SyntheticConfig& c, Rng& rng) {
  const auto k = static_cast<Eigen::Index>(c.num_classes);
  const auto d = static_cast<Eigen::Index>(c.dims);
  RowMatrix m(k, d);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = standard_normal(rng);
  }
  if (k <= d) {
    // Orthonormal rows: every pair of means ends up equally far apart.
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index p = 0; p < i; ++p) {
        m.row(i) -= m.row(i).dot(m.row(p)) * m.row(p);
      }
      m.row(i).normalize();
    }
  }
  double closest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index p = 0; p < i; ++p) {
      closest = std::min(closest, (m.row(i) - m.row(p)).norm());
    }
  }
  if (k > 1) m *= c.separation / closest;
  return m;
}

Samples draw(const RowMatrix& means, std::size_t count, Rng& rng) {
  const std::size_t k = static_cast<std::size_t>(means.rows());
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<int>(i % k);
  shuffle(labels, rng);
  Samples s;
  s.x.resize(static_cast<Eigen::Index>(count), means.cols());
  s.y = std::move(labels);
  for (std::size_t i = 0; i < count; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < means.cols(); ++j) {
      s.x(r, j) = means(s.y[i], j) + standard_normal(rng);
    }
  }
  return s;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (num_classes < 2) throw ConfigError("need at least 2 classes");
  if (dims == 0) throw ConfigError("dims must be positive");
  if (train_size < num_classes || test_size < num_classes) {
    throw ConfigError("each split needs at least one sample per class");
  }
  if (!(separation > 0.0) || !std::isfinite(separation)) {
    throw ConfigError("class separation must be positive");
  }
}

SyntheticDataset make_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng = make_rng(seed, "dataset");
  SyntheticDataset ds;
  ds.num_classes = config.num_classes;
  ds.means = class_means(config, rng);
  ds.train = draw(ds.means, config.train_size, rng);
  ds.test = draw(ds.means, config.test_size, rng);
  return ds;
}

Samples subset(const Samples& from, const std::vector<std::size_t>& indices) {
  Samples out;
  out.x.resize(static_cast<Eigen::Index>(indices.size()), from.x.cols());
  out.y.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) =
        from.x.row(static_cast<Eigen::Index>(indices[i]));
    out.y.push_back(from.y.at(indices[i]));
  }
  return out;
}

std::vector<std::size_t> ShardAssignment::client_samples(std::size_t client) const {
  std::vector<std::size_t> out;
  for (std::size_t s : client_shards.at(client)) {
    out.insert(out.end(), shard_samples[s].begin(), shard_samples[s].end());
  }
  return out;
}

mep::LabelHistogram ShardAssignment::histogram(std::size_t client, const Samples& train,
                                               std::size_t num_classes) const {
  mep::LabelHistogram h;
  h.counts.assign(num_classes, 0);
  for (std::size_t i : client_samples(client)) {
    ++h.counts.at(static_cast<std::size_t>(train.y.at(i)));
  }
  return h;
}

ShardAssignment make_noniid(const SyntheticDataset& data, std::size_t n_clients,
                            std::size_t shards_per_client, std::size_t total_shards,
                            std::uint64_t seed) {
  const std::size_t k = data.num_classes;
  if (n_clients == 0 || shards_per_client == 0) {
    throw ParameterError("need at least one client and one shard per client");
  }
  if (total_shards % k != 0) {
    throw ParameterError("total shards " + std::to_string(total_shards) +
                         " is not a multiple of the class count");
  }
  if (n_clients * shards_per_client > total_shards) {
    throw ParameterError(std::to_string(n_clients) + " clients x " +
                         std::to_string(shards_per_client) + " shards exceeds " +
                         std::to_string(total_shards) + " available shards");
  }
  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    by_class[static_cast<std::size_t>(data.train.y[i])].push_back(i);
  }
  const std::size_t per_class = total_shards / k;
  ShardAssignment a;
  a.shards_per_client = shards_per_client;
  for (std::size_t c = 0; c < k; ++c) {
    const auto& pool = by_class[c];
    if (pool.size() < per_class) {
      throw ParameterError("class " + std::to_string(c) + " has fewer samples than shards");
    }
    const std::size_t size = pool.size() / per_class;
    for (std::size_t s = 0; s < per_class; ++s) {
      a.shard_label.push_back(static_cast<int>(c));
      a.shard_samples.emplace_back(pool.begin() + static_cast<std::ptrdiff_t>(s * size),
                                   pool.begin() + static_cast<std::ptrdiff_t>((s + 1) * size));
    }
  }
  std::vector<std::size_t> order(total_shards);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, "shards");
  shuffle(order, rng);
  a.client_shards.resize(n_clients);
  for (std::size_t c = 0; c < n_clients; ++c) {
    a.client_shards[c].assign(
        order.begin() + static_cast<std::ptrdiff_t>(c * shards_per_client),
        order.begin() + static_cast<std::ptrdiff_t>((c + 1) * shards_per_client));
  }
  return a;
}

ShardAssignment make_iid(const SyntheticDataset& data, std::size_t n_clients,
                         std::uint64_t seed) {
  if (n_clients == 0 || n_clients > data.train.size()) {
    throw ParameterError("client count must be in [1, training set size]");
  }
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, "shards");
  shuffle(order, rng);
  const std::size_t size = order.size() / n_clients;
  ShardAssignment a;
  a.shards_per_client = 1;
  a.client_shards.resize(n_clients);
  for (std::size_t c = 0; c < n_clients; ++c) {
    a.shard_label.push_back(-1);
    a.shard_samples.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(c * size),
                                 order.begin() + static_cast<std::ptrdiff_t>((c + 1) * size));
    a.client_shards[c] = {c};
  }
  return a;
}

}  // namespace fedlay::dfl
