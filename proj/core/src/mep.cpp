#include "fedlay/mep.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

namespace fedlay::mep {

std::uint64_t LabelHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

double data_divergence_confidence(const LabelHistogram& local) {
  const std::uint64_t total = local.total();
  if (local.counts.empty() || total == 0) {
    throw ParameterError("label histogram is empty");
  }
  const double q = 1.0 / static_cast<double>(local.num_classes());
  double kl = 0.0;
  for (std::uint64_t c : local.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    kl += p * std::log(p / q);
  }
  // Rounding can push a uniform histogram a hair below zero.
  return std::min(1.0, std::exp(-kl));
}

double communication_confidence(double period) {
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw ParameterError("exchange period must be positive, got " +
                         std::to_string(period));
  }
  return 1.0 / period;
}

double overall_confidence(const ConfidenceInputs& own, double max_c_d,
                          double max_c_c, ConfidenceWeights w) {
  if (!(max_c_d > 0.0) || !(max_c_c > 0.0)) {
    throw ParameterError("neighborhood confidence maxima must be positive");
  }
  if (w.alpha_d < 0.0 || w.alpha_c < 0.0) {
    throw ParameterError("confidence weights must be nonnegative");
  }
  return w.alpha_d * own.c_d / max_c_d + w.alpha_c * own.c_c / max_c_c;
}

double overall_confidence(const ConfidenceInputs& own,
                          std::span<const ConfidenceInputs> neighborhood,
                          ConfidenceWeights w) {
  double max_d = own.c_d;
  double max_c = own.c_c;
  for (const auto& n : neighborhood) {
    max_d = std::max(max_d, n.c_d);
    max_c = std::max(max_c, n.c_c);
  }
  return overall_confidence(own, max_d, max_c, w);
}

std::vector<double> aggregation_weights(std::span<const double> confidences) {
  if (confidences.empty()) throw ParameterError("nothing to aggregate");
  double sum = 0.0;
  for (double c : confidences) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw ParameterError("confidence must be positive and finite");
    }
    sum += c;
  }
  std::vector<double> w;
  w.reserve(confidences.size());
  for (double c : confidences) w.push_back(c / sum);
  return w;
}

std::vector<double> aggregate(std::span<const WeightedModel> inputs) {
  if (inputs.empty()) throw ParameterError("nothing to aggregate");
  const std::size_t dim = inputs.front().params.size();
  std::vector<double> conf;
  conf.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (in.params.size() != dim) {
      throw ParameterError("model dimension mismatch: " + std::to_string(dim) +
                           " vs " + std::to_string(in.params.size()));
    }
    conf.push_back(in.confidence);
  }
  const auto w = aggregation_weights(conf);
  std::vector<double> out(dim, 0.0);
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    const auto& p = inputs[j].params;
    for (std::size_t k = 0; k < dim; ++k) out[k] += w[j] * p[k];
  }
  return out;
}

ModelVector aggregate(const ModelVector& own, double own_confidence,
                      std::span<const WeightedModel> neighbors) {
  std::vector<WeightedModel> all;
  all.reserve(neighbors.size() + 1);
  all.push_back({own.params, own_confidence});
  all.insert(all.end(), neighbors.begin(), neighbors.end());
  return {aggregate(all), own.version + 1};
}

double exchange_period(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ParameterError("periods must be positive");
  return std::max(a, b);
}

SimTime exchange_period(SimTime a, SimTime b) {
  if (a <= 0 || b <= 0) throw ParameterError("periods must be positive");
  return std::max(a, b);
}

double fine_grained_period(double t_min, double eta) {
  if (!(eta > 1.0)) {
    throw ParameterError("eta must exceed 1, got " + std::to_string(eta));
  }
  if (!(t_min > 0.0)) throw ParameterError("minimum period must be positive");
  return eta * t_min;
}

std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::high: return "high";
    case Tier::medium: return "medium";
    case Tier::low: return "low";
  }
  return "unknown";
}

double tier_multiplier(Tier tier) {
  switch (tier) {
    case Tier::high: return 2.0 / 3.0;
    case Tier::medium: return 1.0;
    case Tier::low: return 2.0;
  }
  return 1.0;
}

std::vector<Tier> assign_tiers(std::size_t n, Rng& rng) {
  const auto medium = static_cast<std::size_t>(std::llround(0.6 * static_cast<double>(n)));
  const auto high = std::min(
      n - medium, static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n))));
  std::vector<Tier> out(n, Tier::low);
  std::fill_n(out.begin(), medium, Tier::medium);
  std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(medium), high, Tier::high);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(out[i - 1], out[uniform_below(rng, i)]);
  }
  return out;
}

Fingerprint fingerprint(std::span<const double> params) {
  std::vector<unsigned char> raw(params.size() * 8);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(params[i]);
    for (int b = 0; b < 8; ++b) raw[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  return hash_bytes(raw.data(), raw.size());
}

bool should_send(std::span<const double> params,
                 const std::optional<Fingerprint>& neighbor_has) {
  return !neighbor_has || *neighbor_has != fingerprint(params);
}

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::model_push: return "ModelPush";
    case MessageKind::fingerprint_probe: return "FingerprintProbe";
    case MessageKind::probe_reply: return "ProbeReply";
  }
  return "Unknown";
}

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  const U bits = std::bit_cast<U>(v);
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
}

template <typename T>
T get(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  if (in.size() - pos < sizeof(T)) throw ProtocolError("truncated model message");
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    bits |= static_cast<U>(static_cast<U>(in[pos + b]) << (8 * b));
  }
  pos += sizeof(T);
  return std::bit_cast<T>(bits);
}

}  // namespace

std::size_t wire_size(std::size_t param_count) {
  return 4 + 1 + 8 + 8 + 8 + 4 + 8 + 4 + 4 * param_count;
}

std::vector<std::uint8_t> encode(const MepMessage& msg) {
  std::vector<std::uint8_t> out;
  out.reserve(wire_size(msg));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(wire_size(msg) - 4));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(msg.kind));
  put<std::uint64_t>(out, msg.sender);
  put<std::uint64_t>(out, msg.version);
  put<double>(out, msg.c_d);
  put<std::uint32_t>(out, msg.period_ms);
  put<std::uint64_t>(out, msg.fingerprint);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(msg.params.size()));
  for (float p : msg.params) put<float>(out, p);
  return out;
}

MepMessage decode(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  const auto len = get<std::uint32_t>(bytes, pos);
  if (bytes.size() - 4 != len) throw ProtocolError("length prefix mismatch");
  MepMessage m;
  const auto kind = get<std::uint8_t>(bytes, pos);
  if (kind > 2) throw ProtocolError("unknown model message kind " + std::to_string(kind));
  m.kind = static_cast<MessageKind>(kind);
  m.sender = get<std::uint64_t>(bytes, pos);
  m.version = get<std::uint64_t>(bytes, pos);
  m.c_d = get<double>(bytes, pos);
  m.period_ms = get<std::uint32_t>(bytes, pos);
  m.fingerprint = get<std::uint64_t>(bytes, pos);
  const auto count = get<std::uint32_t>(bytes, pos);
  if ((bytes.size() - pos) / 4 < count) throw ProtocolError("truncated parameter block");
  m.params.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) m.params.push_back(get<float>(bytes, pos));
  if (pos != bytes.size()) throw ProtocolError("trailing bytes after model message");
  return m;
}

}  // namespace fedlay::mep
