#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vidcomp {

enum class ErrorKind {
  Input,               // unreadable or malformed input; CLI exit code 1
  InvalidInput,        // precondition violated by a caller-supplied value
  EmptyTrack,
  NotDisruptable,
  LLMUnavailable,
  DegenerateEmbedding,
  InvalidEmbedding,
  NumericalError,
  TrainingDiverged,
  EmptyEvaluation,
  IncompleteEvaluation,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace vidcomp
