#include "satlab/error.hpp"

namespace satlab {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonSymmetric: return "NonSymmetric";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::ZeroVariance: return "ZeroVariance";
        case ErrorKind::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
        case ErrorKind::DimMismatch: return "DimMismatch";
        case ErrorKind::NonFiniteActivation: return "NonFiniteActivation";
        case ErrorKind::InsufficientSamples: return "InsufficientSamples";
        case ErrorKind::BadLayout: return "BadLayout";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::TooFewLayers: return "TooFewLayers";
        case ErrorKind::DegenerateLabels: return "DegenerateLabels";
        case ErrorKind::EmptySplit: return "EmptySplit";
        case ErrorKind::SampleMisalignment: return "SampleMisalignment";
        case ErrorKind::IllFormedArchitecture: return "IllFormedArchitecture";
        case ErrorKind::BadMagic: return "BadMagic";
        case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorKind::UnsupportedDtype: return "UnsupportedDtype";
        case ErrorKind::TruncatedPayload: return "TruncatedPayload";
        case ErrorKind::TruncatedFile: return "TruncatedFile";
        case ErrorKind::OversizedName: return "OversizedName";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::UnknownKind: return "UnknownKind";
        case ErrorKind::MissingField: return "MissingField";
        case ErrorKind::EmptyArchitecture: return "EmptyArchitecture";
        case ErrorKind::InvalidRow: return "InvalidRow";
        case ErrorKind::DuplicateRunId: return "DuplicateRunId";
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::DivergedLoss: return "DivergedLoss";
    }
    return "Unknown";
}

}  // namespace satlab
