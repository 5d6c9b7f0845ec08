#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ces {

// One code per failure kind named by the module contracts. Callers branch on
// code(); what() carries the human-readable detail.
enum class Errc {
  InvalidArgument,
  // agent-io
  MissingTag,
  EmptyBody,
  UnknownAction,
  MalformedRecord,
  MissingParam,
  PointOutOfBounds,
  UnboundPlaceholder,
  UnknownPlaceholder,
  // grpo-core
  EmptyGroup,
  NonFinite,
  MissingLogProb,
  // sim-env
  InvalidSpec,
  UnknownScreen,
  Unsatisfiable,
  Unreachable,
  UnknownContext,
  // orchestrator
  BackendFailure,
  Timeout,
  BackendUnreachable,
  MalformedResponse,
  // staged-rollout
  MissingGtState,
  MissingGtFields,
  // evalkit / io
  IoError,
  UnknownSchemaField,
  EmptyInput,
  InsufficientLength,
  // cli
  ConfigError,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  Errc code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace ces
