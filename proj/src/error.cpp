#include "cogweb/error.hpp"

namespace cogweb {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    case Errc::ConnectFailed: return "ConnectFailed";
    case Errc::NavigationTimeout: return "NavigationTimeout";
    case Errc::CaptureFailed: return "CaptureFailed";
    case Errc::SnapshotFailed: return "SnapshotFailed";
    case Errc::StaleTarget: return "StaleTarget";
    case Errc::TargetUnresolvable: return "TargetUnresolvable";
    case Errc::ScriptError: return "ScriptError";
    case Errc::DriverLost: return "DriverLost";
    case Errc::ParseError: return "ParseError";
    case Errc::BoxOutside: return "BoxOutside";
    case Errc::SkipRecord: return "SkipRecord";
    case Errc::AnnotationRejected: return "AnnotationRejected";
    case Errc::AnnotatorUnreachable: return "AnnotatorUnreachable";
    case Errc::InsufficientDistractors: return "InsufficientDistractors";
    case Errc::InsufficientCandidates: return "InsufficientCandidates";
    case Errc::MissingSections: return "MissingSections";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::AssetTooLarge: return "AssetTooLarge";
    case Errc::TooManyMethods: return "TooManyMethods";
    case Errc::StepOutOfRange: return "StepOutOfRange";
    case Errc::Unparseable: return "Unparseable";
    case Errc::JudgeUnreachable: return "JudgeUnreachable";
    case Errc::EndpointUnreachable: return "EndpointUnreachable";
    case Errc::RateLimited: return "RateLimited";
    case Errc::JudgeParseError: return "JudgeParseError";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::SchemaError: return "SchemaError";
  }
  return "Unknown";
}

}  // namespace cogweb
