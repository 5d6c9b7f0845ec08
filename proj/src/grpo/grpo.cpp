#include "ces/grpo/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "ces/core/error.hpp"

namespace ces {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(Errc::NonFinite, std::string(what) + " is not finite");
}

const std::vector<double>& require_advantages(const CandidateGroup& g) {
  if (g.candidates.empty()) throw Error(Errc::EmptyGroup, "candidate group is empty");
  if (!g.advantages || g.advantages->size() != g.candidates.size()) {
    throw Error(Errc::InvalidArgument, "advantages missing or misaligned");
  }
  return *g.advantages;
}

void require_logps(const Candidate& c, std::size_t i, bool need_ref) {
  if (!c.logp_new || !c.logp_old) {
    throw Error(Errc::MissingLogProb,
                "candidate " + std::to_string(i) + " lacks logp_new/logp_old");
  }
  if (need_ref && !c.logp_ref) {
    throw Error(Errc::MissingLogProb, "candidate " + std::to_string(i) + " lacks logp_ref");
  }
}

}  // namespace

std::vector<double> CandidateGroup::rewards() const {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.reward);
  return out;
}

void CandidateGroup::compute_advantages(double std_floor) {
  advantages = group_advantages(rewards(), std_floor);
}

void to_json(Json& j, const Candidate& c) {
  j = Json{{"payload", c.payload}, {"reward", c.reward}};
  if (c.logp_new) j["logp_new"] = *c.logp_new;
  if (c.logp_old) j["logp_old"] = *c.logp_old;
  if (c.logp_ref) j["logp_ref"] = *c.logp_ref;
}

void from_json(const Json& j, Candidate& c) {
  c = Candidate{};
  c.payload = j.at("payload").get<std::string>();
  c.reward = j.at("reward").get<double>();
  if (j.contains("logp_new")) c.logp_new = j["logp_new"].get<double>();
  if (j.contains("logp_old")) c.logp_old = j["logp_old"].get<double>();
  if (j.contains("logp_ref")) c.logp_ref = j["logp_ref"].get<double>();
}

void to_json(Json& j, const CandidateGroup& g) {
  j = Json{{"context_key", g.context_key}, {"candidates", g.candidates}};
  if (g.advantages) j["advantages"] = *g.advantages;
}

void from_json(const Json& j, CandidateGroup& g) {
  g = CandidateGroup{};
  g.context_key = j.value("context_key", std::string{});
  g.candidates = j.at("candidates").get<std::vector<Candidate>>();
  if (j.contains("advantages")) g.advantages = j["advantages"].get<std::vector<double>>();
}

std::vector<double> group_advantages(const std::vector<double>& rewards, double std_floor) {
  if (rewards.empty()) throw Error(Errc::EmptyGroup, "no rewards in group");
  double sum = 0.0;
  for (double r : rewards) {
    require_finite(r, "reward");
    sum += r;
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = sum / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (sd < std_floor) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sd;
  return out;
}

double importance_ratio(double logp_new, double logp_old) {
  require_finite(logp_new, "logp_new");
  require_finite(logp_old, "logp_old");
  const double rho = std::exp(logp_new - logp_old);
  require_finite(rho, "importance ratio");
  return rho;
}

double clipped_surrogate(double rho, double adv, double clip_epsilon) {
  const double clipped = std::clamp(rho, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(rho * adv, clipped * adv);
}

double kl_penalty(double logp_new, double logp_ref) {
  require_finite(logp_new, "logp_new");
  require_finite(logp_ref, "logp_ref");
  // r - ln r - 1 with ln r = d; expm1 keeps precision near d = 0.
  const double d = logp_ref - logp_new;
  const double k3 = std::expm1(d) - d;
  require_finite(k3, "kl estimate");
  return std::max(0.0, k3);
}

double grpo_objective(const CandidateGroup& group, const GrpoConfig& cfg) {
  const auto& adv = require_advantages(group);
  const bool need_ref = cfg.kl_beta > 0.0;
  double surrogate = 0.0;
  double kl = 0.0;
  for (std::size_t i = 0; i < group.candidates.size(); ++i) {
    const auto& c = group.candidates[i];
    require_logps(c, i, need_ref);
    surrogate += clipped_surrogate(importance_ratio(*c.logp_new, *c.logp_old), adv[i],
                                   cfg.clip_epsilon);
    if (need_ref) kl += kl_penalty(*c.logp_new, *c.logp_ref);
  }
  const double n = static_cast<double>(group.candidates.size());
  return surrogate / n - cfg.kl_beta * kl / n;
}

std::vector<double> grpo_logp_gradient(const CandidateGroup& group, const GrpoConfig& cfg) {
  const auto& adv = require_advantages(group);
  const bool need_ref = cfg.kl_beta > 0.0;
  const double n = static_cast<double>(group.candidates.size());
  std::vector<double> grad(group.candidates.size(), 0.0);
  for (std::size_t i = 0; i < group.candidates.size(); ++i) {
    const auto& c = group.candidates[i];
    require_logps(c, i, need_ref);
    const double rho = importance_ratio(*c.logp_new, *c.logp_old);
    const double a = adv[i];
    // The unclipped branch carries gradient rho * a; the clipped branch is
    // constant in logp_new.
    const double clipped = std::clamp(rho, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon);
    double g = rho * a <= clipped * a ? rho * a : 0.0;
    if (need_ref) {
      // d/dx [exp(ref - x) - (ref - x) - 1] = 1 - exp(ref - x)
      g -= cfg.kl_beta * (1.0 - std::exp(*c.logp_ref - *c.logp_new));
    }
    grad[i] = g / n;
  }
  return grad;
}

}  // namespace ces
