#include "hdlss/error.hpp"

namespace hdlss {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::FileNotFound: return "FileNotFound";
        case ErrorKind::MalformedCsv: return "MalformedCsv";
        case ErrorKind::MissingKeyColumn: return "MissingKeyColumn";
        case ErrorKind::EmptyIntersection: return "EmptyIntersection";
        case ErrorKind::MissingLabelColumn: return "MissingLabelColumn";
        case ErrorKind::NoValidRows: return "NoValidRows";
        case ErrorKind::AllColumnsDropped: return "AllColumnsDropped";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::SingleClass: return "SingleClass";
        case ErrorKind::NonFiniteInput: return "NonFiniteInput";
        case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::KTooLarge: return "KTooLarge";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::ClassTooSmall: return "ClassTooSmall";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ConfigError:
        case ErrorKind::InvalidSpec:
            return ErrorCategory::Config;
        case ErrorKind::IoError:
            return ErrorCategory::Io;
        case ErrorKind::SingleClass:
        case ErrorKind::NonFiniteInput:
        case ErrorKind::NonFiniteLoss:
        case ErrorKind::DimensionMismatch:
        case ErrorKind::KTooLarge:
        case ErrorKind::LengthMismatch:
            return ErrorCategory::Train;
        default:
            return ErrorCategory::Data;
    }
}

Error::Error(ErrorKind kind, std::string module, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      module_(std::move(module)) {}

}  // namespace hdlss
