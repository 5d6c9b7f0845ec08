#include "ces/orchestrator/backend.hpp"

#include "ces/core/context_keys.hpp"
#include "ces/core/error.hpp"

namespace ces {

ScriptedBackend::ScriptedBackend(AgentRole role, ScriptTable table,
                                 std::optional<std::string> default_response)
    : PolicyBackend(role), table_(std::move(table)), default_response_(std::move(default_response)) {}

BackendResponse ScriptedBackend::generate(const BackendRequest& req, Rng&) const {
  if (auto it = table_.find(req.context_key); it != table_.end()) return {it->second, {}};
  if (auto it = table_.find(wildcard_key(req.context_key)); it != table_.end()) {
    return {it->second, {}};
  }
  if (default_response_) return {*default_response_, {}};
  throw Error(Errc::BackendFailure, "scripted table has no entry for this context");
}

ToyBackend::ToyBackend(ToyPolicy policy, bool greedy, std::optional<std::string> default_response)
    : PolicyBackend(policy.role),
      policy_(std::move(policy)),
      greedy_(greedy),
      default_response_(std::move(default_response)) {}

BackendResponse ToyBackend::generate(const BackendRequest& req, Rng& rng) const {
  if (!policy_.knows(req.context_key)) {
    if (default_response_) return {*default_response_, {}};
    throw Error(Errc::UnknownContext, "toy policy has no such context");
  }
  if (greedy_) {
    const auto idx = policy_.argmax(req.context_key);
    return {policy_.context(req.context_key).payloads[idx],
            policy_.log_probabilities(req.context_key)[idx]};
  }
  const auto s = toy_sample(policy_, req.context_key, rng);
  return {s.payload, s.logp};
}

BackendResponse call_backend(const PolicyBackend& backend, const BackendRequest& req, Rng& rng) {
  const std::string role(to_string(req.role));
  if (backend.role() != req.role) {
    throw Error(Errc::BackendFailure, role + ": backend serves role " +
                                          std::string(to_string(backend.role())));
  }
  backend.count_call();
  try {
    return backend.generate(req, rng);
  } catch (const Error& e) {
    if (e.code() == Errc::BackendFailure) throw Error(Errc::BackendFailure, role + ": " + e.detail());
    throw Error(Errc::BackendFailure, role + ": " + e.what());
  }
}

}  // namespace ces
