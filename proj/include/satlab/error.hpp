#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace satlab {

/// Failure categories shared by every module. The CLI maps each category
/// onto its exit-code contract (see `exit_code_for`).
enum class ErrorKind {
    // linalg
    NonSymmetric,
    NonFinite,
    ShapeMismatch,
    ZeroVariance,
    NotPositiveSemidefinite,
    // spectral
    DimMismatch,
    NonFiniteActivation,
    InsufficientSamples,
    BadLayout,
    EmptyInput,
    TooFewLayers,
    // probes
    DegenerateLabels,
    EmptySplit,
    SampleMisalignment,
    // rf-analysis
    IllFormedArchitecture,
    // io-formats
    BadMagic,
    UnsupportedVersion,
    UnsupportedDtype,
    TruncatedPayload,
    TruncatedFile,
    OversizedName,
    ParseError,
    UnknownKind,
    MissingField,
    EmptyArchitecture,
    InvalidRow,
    DuplicateRunId,
    IoFailure,
    // nn-lab
    InvalidConfig,
    DivergedLoss,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace satlab
