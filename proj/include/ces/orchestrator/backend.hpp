#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ces/core/rng.hpp"
#include "ces/core/types.hpp"
#include "ces/sim/scripts.hpp"
#include "ces/sim/toy_policy.hpp"

namespace ces {

struct ChatMessage {
  std::string role;  // "system" / "user" / "assistant"
  std::string content;
};

struct BackendRequest {
  AgentRole role = AgentRole::Executor;
  // Lookup key for scripted and toy backends.
  std::string context_key;
  // Rendered prompt for remote backends.
  std::vector<ChatMessage> messages;
};

struct BackendResponse {
  std::string text;
  std::optional<double> logp;  // toy backends only
};

// One policy for one role. Implementations must be safe to call from
// several episodes at once; per-call randomness comes from the caller's Rng.
class PolicyBackend {
 public:
  explicit PolicyBackend(AgentRole role) : role_(role) {}
  virtual ~PolicyBackend() = default;

  AgentRole role() const { return role_; }
  virtual std::string_view kind() const = 0;
  virtual BackendResponse generate(const BackendRequest& req, Rng& rng) const = 0;

  long calls() const { return calls_.load(); }
  void count_call() const { ++calls_; }

 private:
  AgentRole role_;
  mutable std::atomic<long> calls_{0};
};

// Exact key, then the key with its last field wildcarded, then the default
// response; otherwise Error(BackendFailure).
class ScriptedBackend : public PolicyBackend {
 public:
  ScriptedBackend(AgentRole role, ScriptTable table,
                  std::optional<std::string> default_response = std::nullopt);
  std::string_view kind() const override { return "scripted"; }
  BackendResponse generate(const BackendRequest& req, Rng& rng) const override;
  const ScriptTable& table() const { return table_; }

 private:
  ScriptTable table_;
  std::optional<std::string> default_response_;
};

// Samples from a toy policy, or takes its argmax when greedy. Unknown
// contexts get the default response when one is set.
class ToyBackend : public PolicyBackend {
 public:
  ToyBackend(ToyPolicy policy, bool greedy = false,
             std::optional<std::string> default_response = std::nullopt);
  std::string_view kind() const override { return "toy"; }
  BackendResponse generate(const BackendRequest& req, Rng& rng) const override;
  const ToyPolicy& policy() const { return policy_; }

 private:
  ToyPolicy policy_;
  bool greedy_;
  std::optional<std::string> default_response_;
};

struct RemoteConfig {
  std::string endpoint;  // http://host:port/path
  std::string model;
  double temperature = 0.0;
  int max_tokens = 256;
  int timeout_ms = 30000;
  int retries = 2;
  std::map<std::string, std::string> headers;
  // Environment variable holding a bearer credential, if set.
  std::string api_key_env = "CES_REMOTE_API_KEY";
};

// POSTs {"model", "messages", "temperature", "max_tokens"}; reads
// choices[0].message.content, falling back to a top-level "content".
// Retries Timeout / BackendUnreachable / MalformedResponse up to the budget.
class RemoteBackend : public PolicyBackend {
 public:
  RemoteBackend(AgentRole role, RemoteConfig cfg);
  std::string_view kind() const override { return "remote"; }
  BackendResponse generate(const BackendRequest& req, Rng& rng) const override;
  const RemoteConfig& config() const { return cfg_; }

 private:
  BackendResponse attempt(const BackendRequest& req) const;
  RemoteConfig cfg_;
};

// Checks the role, counts the call and wraps any failure as
// Error(BackendFailure) naming the role and cause.
BackendResponse call_backend(const PolicyBackend& backend, const BackendRequest& req, Rng& rng);

}  // namespace ces
