#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adaskip {

enum class ErrorKind {
  ContractViolation,     // shape/length mismatch and other caller bugs
  DegenerateInput,       // zero-norm vector handed to a similarity/ratio
  Config,                // invalid model config or missing skip scale
  Input,                 // token out of vocab, prompt too long
  Parse,                 // malformed JSON / JSONL / weight file
  Validation,            // well-formed but semantically invalid input
  Incompatible,          // profiles that cannot be merged
  EmptyStats,            // finalize() on zero records
  IncompleteProfile,     // plan requested from a profile missing sublayers
  InvalidRatio,          // alpha < 1
  UndefinedThreshold,    // beta over an empty skipped set
  State,                 // online observation after finalization
  PrematureFinalization, // online window not yet filled
  InfeasiblePlan,        // baseline cannot honour its protected layers
  InvalidK,              // hit-rate k out of range
  InconsistentPlan,      // decode would execute attention without prompt KV
  Io,                    // filesystem failures
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

  // 2 for validation-class failures, 3 for everything raised while running.
  int exit_code() const noexcept;

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace adaskip
