#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ces/core/serialize.hpp"
#include "ces/core/types.hpp"

namespace ces {

struct Candidate {
  std::string payload;
  double reward = 0.0;
  // Token-summed log-probabilities of the payload.
  std::optional<double> logp_new;
  std::optional<double> logp_old;
  std::optional<double> logp_ref;
  bool operator==(const Candidate&) const = default;
};

struct CandidateGroup {
  std::string context_key;
  std::vector<Candidate> candidates;
  std::optional<std::vector<double>> advantages;
  bool operator==(const CandidateGroup&) const = default;

  std::vector<double> rewards() const;
  // Fills `advantages` from the candidates' rewards.
  void compute_advantages(double std_floor);
};

void to_json(Json& j, const Candidate& c);
void from_json(const Json& j, Candidate& c);
void to_json(Json& j, const CandidateGroup& g);
void from_json(const Json& j, CandidateGroup& g);

// (r_i - mean) / population std; all zeros when std < std_floor.
// Throws Error(EmptyGroup) / Error(NonFinite).
std::vector<double> group_advantages(const std::vector<double>& rewards, double std_floor);

// exp(logp_new - logp_old). Throws Error(NonFinite).
double importance_ratio(double logp_new, double logp_old);

// min(rho * adv, clamp(rho, 1 - eps, 1 + eps) * adv).
double clipped_surrogate(double rho, double adv, double clip_epsilon);

// k3 estimator: r - ln r - 1 with r = exp(logp_ref - logp_new). Throws Error(NonFinite).
double kl_penalty(double logp_new, double logp_ref);

// mean_i surrogate_i - beta * mean_i k3_i. Throws Error(MissingLogProb) /
// Error(InvalidArgument) when advantages are absent.
double grpo_objective(const CandidateGroup& group, const GrpoConfig& cfg);

// dJ/d(logp_new_i) for each candidate, matching grpo_objective exactly.
std::vector<double> grpo_logp_gradient(const CandidateGroup& group, const GrpoConfig& cfg);

}  // namespace ces
