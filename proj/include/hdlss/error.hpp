#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hdlss {

enum class ErrorKind {
    // ingest
    FileNotFound,
    MalformedCsv,
    MissingKeyColumn,
    EmptyIntersection,
    MissingLabelColumn,
    NoValidRows,
    // preprocess
    AllColumnsDropped,
    SchemaMismatch,
    // models
    SingleClass,
    NonFiniteInput,
    NonFiniteLoss,
    DimensionMismatch,
    // selection / evaluation
    KTooLarge,
    LengthMismatch,
    ClassTooSmall,
    // synth / cli
    InvalidSpec,
    ConfigError,
    IoError,
};

/// Coarse grouping used by the CLI to pick an exit status.
enum class ErrorCategory { Config, Data, Train, Io };

std::string_view to_string(ErrorKind kind);
ErrorCategory category_of(ErrorKind kind);

/// Every failure raised by the library. `module()` names the component that
/// detected the problem so the CLI can report provenance.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string module, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& module() const noexcept { return module_; }
    ErrorCategory category() const noexcept { return category_of(kind_); }

private:
    ErrorKind kind_;
    std::string module_;
};

}  // namespace hdlss
