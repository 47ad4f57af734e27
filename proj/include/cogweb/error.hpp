#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cogweb {

enum class Errc {
  InvalidArgument,
  Io,
  // browser
  ConnectFailed,
  NavigationTimeout,
  CaptureFailed,
  SnapshotFailed,
  StaleTarget,
  TargetUnresolvable,
  ScriptError,
  DriverLost,
  // observation
  ParseError,
  BoxOutside,
  // taskgen
  SkipRecord,
  AnnotationRejected,
  AnnotatorUnreachable,
  InsufficientDistractors,
  InsufficientCandidates,
  MissingSections,
  SchemaMismatch,
  // popup
  AssetTooLarge,
  TooManyMethods,
  StepOutOfRange,
  // agent
  Unparseable,
  JudgeUnreachable,
  // model
  EndpointUnreachable,
  RateLimited,
  JudgeParseError,
  // evaluator
  EmptyInput,
  SchemaError,
};

std::string_view errc_name(Errc code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace cogweb
