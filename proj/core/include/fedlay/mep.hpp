#pragma once

// Model exchange: confidence scores, confidence-weighted aggregation,
// exchange periods and fingerprint deduplication.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fedlay/rng.hpp"
#include "fedlay/types.hpp"

namespace fedlay::mep {

struct ModelVector {
  std::vector<double> params;
  std::uint64_t version = 0;
};

struct LabelHistogram {
  std::vector<std::uint64_t> counts;

  std::size_t num_classes() const { return counts.size(); }
  std::uint64_t total() const;
};

// exp(-KL(local || uniform)), natural log, p = 0 terms skipped. In (0, 1].
// Throws ParameterError for an empty or all-zero histogram.
double data_divergence_confidence(const LabelHistogram& local);

// 1 / period. Throws ParameterError unless period > 0.
double communication_confidence(double period);

struct ConfidenceInputs {
  double c_d = 1.0;
  double c_c = 1.0;
};

struct ConfidenceWeights {
  double alpha_d = 0.5;
  double alpha_c = 0.5;
};

// alpha_d * c_d / max_c_d + alpha_c * c_c / max_c_c.
double overall_confidence(const ConfidenceInputs& own, double max_c_d,
                          double max_c_c, ConfidenceWeights w = {});

// Same, with the maxima taken over `neighborhood` and `own` together.
double overall_confidence(const ConfidenceInputs& own,
                          std::span<const ConfidenceInputs> neighborhood,
                          ConfidenceWeights w = {});

struct WeightedModel {
  std::span<const double> params;
  double confidence = 0.0;
};

// c_j / sum(c). Throws ParameterError on an empty list or a non-positive or
// non-finite confidence.
std::vector<double> aggregation_weights(std::span<const double> confidences);

// Convex combination of `inputs` weighted by confidence. Throws
// ParameterError on dimension mismatch.
std::vector<double> aggregate(std::span<const WeightedModel> inputs);

// Own model together with the neighbors' latest models.
ModelVector aggregate(const ModelVector& own, double own_confidence,
                      std::span<const WeightedModel> neighbors);

// max(a, b); both must be positive.
double exchange_period(double a, double b);
SimTime exchange_period(SimTime a, SimTime b);

// eta * t_min with eta > 1.
double fine_grained_period(double t_min, double eta);

enum class Tier : std::uint8_t { high, medium, low };

std::string_view to_string(Tier tier);

// Period multiplier relative to a medium-capacity client: 2/3, 1, 2.
double tier_multiplier(Tier tier);

// Assigns tiers in the proportion 60% medium, 20% high, 20% low (counts
// rounded, remainder to low), randomly permuted.
std::vector<Tier> assign_tiers(std::size_t n, Rng& rng);

using Fingerprint = std::uint64_t;

// Hash of the little-endian IEEE-754 encoding of every parameter.
Fingerprint fingerprint(std::span<const double> params);

// False iff the neighbor already holds a model with this fingerprint.
bool should_send(std::span<const double> params,
                 const std::optional<Fingerprint>& neighbor_has);

enum class MessageKind : std::uint8_t {
  model_push = 0,
  fingerprint_probe = 1,
  probe_reply = 2,
};

std::string_view to_string(MessageKind kind);

// A FingerprintProbe asks the receiver for its model and carries the
// fingerprint of the copy the sender already holds (0 params). The receiver
// answers with a ModelPush, or with a ProbeReply when the fingerprints match.
struct MepMessage {
  MessageKind kind = MessageKind::model_push;
  NodeId sender = 0;
  std::uint64_t version = 0;
  double c_d = 1.0;
  std::uint32_t period_ms = 0;
  Fingerprint fingerprint = 0;
  std::vector<float> params;

  friend bool operator==(const MepMessage&, const MepMessage&) = default;
};

// u32 length | u8 kind | u64 sender | u64 version | f64 c_d | u32 period_ms |
// u64 fingerprint | u32 count | f32 x count, little-endian.
std::vector<std::uint8_t> encode(const MepMessage& msg);
MepMessage decode(const std::vector<std::uint8_t>& bytes);
std::size_t wire_size(std::size_t param_count);
inline std::size_t wire_size(const MepMessage& m) { return wire_size(m.params.size()); }

}  // namespace fedlay::mep
