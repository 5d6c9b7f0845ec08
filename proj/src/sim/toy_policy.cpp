#include "ces/sim/toy_policy.hpp"

#include <algorithm>
#include <cmath>

#include "ces/core/error.hpp"

namespace ces {

namespace {

// Candidate group with logp_new replaced by the policy's current values,
// plus the payload indices.
struct Evaluated {
  CandidateGroup group;
  std::vector<std::size_t> indices;
};

Evaluated evaluate(const ToyPolicy& policy, const CandidateGroup& g) {
  Evaluated e{g, {}};
  const auto logps = policy.log_probabilities(g.context_key);
  for (auto& c : e.group.candidates) {
    auto idx = policy.index_of(g.context_key, c.payload);
    if (!idx) {
      throw Error(Errc::UnknownContext,
                  "payload not among the candidates of context '" + g.context_key + "'");
    }
    if (!c.logp_old) throw Error(Errc::MissingLogProb, "candidate lacks logp_old");
    c.logp_new = logps[*idx];
    e.indices.push_back(*idx);
  }
  return e;
}

}  // namespace

const ToyContext& ToyPolicy::context(const std::string& key) const {
  auto it = contexts.find(key);
  if (it == contexts.end()) throw Error(Errc::UnknownContext, "unknown toy context");
  return it->second;
}

std::vector<double> ToyPolicy::log_probabilities(const std::string& key) const {
  const auto& c = context(key);
  if (c.logits.empty()) throw Error(Errc::UnknownContext, "toy context has no candidates");
  std::vector<double> z(c.logits.size());
  double hi = -INFINITY;
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = c.logits[i] / temperature;
    hi = std::max(hi, z[i]);
  }
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - hi);
  const double lse = hi + std::log(sum);
  for (double& v : z) v -= lse;
  return z;
}

std::vector<double> ToyPolicy::probabilities(const std::string& key) const {
  auto lp = log_probabilities(key);
  for (double& v : lp) v = std::exp(v);
  return lp;
}

std::optional<std::size_t> ToyPolicy::index_of(const std::string& key,
                                               const std::string& payload) const {
  const auto& c = context(key);
  auto it = std::find(c.payloads.begin(), c.payloads.end(), payload);
  if (it == c.payloads.end()) return std::nullopt;
  return static_cast<std::size_t>(it - c.payloads.begin());
}

std::size_t ToyPolicy::argmax(const std::string& key) const {
  const auto& c = context(key);
  return static_cast<std::size_t>(std::max_element(c.logits.begin(), c.logits.end()) -
                                  c.logits.begin());
}

void to_json(Json& j, const ToyContext& c) {
  j = Json{{"payloads", c.payloads}, {"logits", c.logits}};
}

void from_json(const Json& j, ToyContext& c) {
  c.payloads = j.at("payloads").get<std::vector<std::string>>();
  c.logits = j.at("logits").get<std::vector<double>>();
  if (c.payloads.size() != c.logits.size()) {
    throw Error(Errc::MalformedRecord, "toy context payloads/logits length mismatch");
  }
}

void to_json(Json& j, const ToyPolicy& p) {
  Json contexts = Json::array();
  for (const auto& [key, c] : p.contexts) {
    Json entry = c;
    entry["key"] = key;
    contexts.push_back(std::move(entry));
  }
  j = Json{{"role", std::string(to_string(p.role))},
           {"temperature", p.temperature},
           {"contexts", std::move(contexts)}};
}

void from_json(const Json& j, ToyPolicy& p) {
  p = ToyPolicy{};
  auto role = agent_role_from_string(j.at("role").get<std::string>());
  if (!role) throw Error(Errc::MalformedRecord, "unknown toy policy role");
  p.role = *role;
  p.temperature = j.value("temperature", 1.0);
  for (const auto& entry : j.at("contexts")) {
    p.contexts[entry.at("key").get<std::string>()] = entry.get<ToyContext>();
  }
}

ToySample toy_sample(const ToyPolicy& policy, const std::string& key, Rng& rng) {
  const auto logps = policy.log_probabilities(key);
  const auto& c = policy.context(key);
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t pick = logps.size() - 1;
  for (std::size_t i = 0; i < logps.size(); ++i) {
    acc += std::exp(logps[i]);
    if (u < acc) {
      pick = i;
      break;
    }
  }
  return {c.payloads[pick], pick, logps[pick]};
}

double toy_objective(const ToyPolicy& policy, const std::vector<CandidateGroup>& groups,
                     const GrpoConfig& cfg) {
  double total = 0.0;
  for (const auto& g : groups) total += grpo_objective(evaluate(policy, g).group, cfg);
  return total;
}

ToyGradient toy_gradient(const ToyPolicy& policy, const std::vector<CandidateGroup>& groups,
                         const GrpoConfig& cfg) {
  ToyGradient grad;
  for (const auto& g : groups) {
    const auto e = evaluate(policy, g);
    const auto dlogp = grpo_logp_gradient(e.group, cfg);
    const auto probs = policy.probabilities(g.context_key);
    auto& out = grad[g.context_key];
    out.resize(probs.size(), 0.0);
    // d logp_i / d theta_j = (1[i == j] - pi_j) / T
    for (std::size_t i = 0; i < e.indices.size(); ++i) {
      if (dlogp[i] == 0.0) continue;
      for (std::size_t j = 0; j < probs.size(); ++j) {
        const double d = (e.indices[i] == j ? 1.0 : 0.0) - probs[j];
        out[j] += dlogp[i] * d / policy.temperature;
      }
    }
  }
  return grad;
}

ToyPolicy toy_update(const ToyPolicy& policy, const std::vector<CandidateGroup>& groups,
                     const GrpoConfig& cfg, double learning_rate) {
  ToyPolicy next = policy;
  for (const auto& [key, g] : toy_gradient(policy, groups, cfg)) {
    auto& logits = next.contexts.at(key).logits;
    for (std::size_t j = 0; j < logits.size(); ++j) logits[j] += learning_rate * g[j];
  }
  return next;
}

}  // namespace ces
