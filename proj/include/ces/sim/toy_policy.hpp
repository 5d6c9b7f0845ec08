#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ces/core/rng.hpp"
#include "ces/core/serialize.hpp"
#include "ces/core/types.hpp"
#include "ces/grpo/grpo.hpp"

namespace ces {

// Softmax over a fixed list of candidate payloads per decision context.
struct ToyContext {
  std::vector<std::string> payloads;
  std::vector<double> logits;
  bool operator==(const ToyContext&) const = default;
};

struct ToyPolicy {
  AgentRole role = AgentRole::Coordinator;
  double temperature = 1.0;
  std::map<std::string, ToyContext> contexts;

  bool operator==(const ToyPolicy&) const = default;

  // Throws Error(UnknownContext).
  const ToyContext& context(const std::string& key) const;
  bool knows(const std::string& key) const { return contexts.count(key) > 0; }
  std::vector<double> probabilities(const std::string& key) const;
  std::vector<double> log_probabilities(const std::string& key) const;
  std::optional<std::size_t> index_of(const std::string& key, const std::string& payload) const;
  // Highest-probability payload; ties go to the lowest index.
  std::size_t argmax(const std::string& key) const;
};

void to_json(Json& j, const ToyContext& c);
void from_json(const Json& j, ToyContext& c);
void to_json(Json& j, const ToyPolicy& p);
void from_json(const Json& j, ToyPolicy& p);

struct ToySample {
  std::string payload;
  std::size_t index = 0;
  double logp = 0.0;
};

// Throws Error(UnknownContext).
ToySample toy_sample(const ToyPolicy& policy, const std::string& key, Rng& rng);

using ToyGradient = std::map<std::string, std::vector<double>>;

// Sum over groups of grpo_objective, with logp_new re-evaluated under the
// policy's current logits (logp_old/logp_ref are taken from the candidates).
double toy_objective(const ToyPolicy& policy, const std::vector<CandidateGroup>& groups,
                     const GrpoConfig& cfg);
// Analytic gradient of toy_objective with respect to the logits.
ToyGradient toy_gradient(const ToyPolicy& policy, const std::vector<CandidateGroup>& groups,
                         const GrpoConfig& cfg);
// One gradient-ascent step. Throws Error(MissingLogProb) / Error(UnknownContext).
ToyPolicy toy_update(const ToyPolicy& policy, const std::vector<CandidateGroup>& groups,
                     const GrpoConfig& cfg, double learning_rate);

}  // namespace ces
