#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgeps {

/// Failure categories shared by every module. The CLI maps these onto exit codes.
enum class ErrorKind {
    InvalidInput,
    InvalidThickness,
    EmptySourceSet,
    FormatError,
    ShapeError,
    EmptyGT,
    NoEdgePixels,
    EmptyRay,
    DegeneratePrediction,
    DegenerateRegion,
    EmptyBoundary,
    EmptyTarget,
    EmptyEvaluation,
    PlacementError,
    FrameError,
    CorruptDataset,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::InvalidThickness: return "InvalidThickness";
        case ErrorKind::EmptySourceSet: return "EmptySourceSet";
        case ErrorKind::FormatError: return "FormatError";
        case ErrorKind::ShapeError: return "ShapeError";
        case ErrorKind::EmptyGT: return "EmptyGT";
        case ErrorKind::NoEdgePixels: return "NoEdgePixels";
        case ErrorKind::EmptyRay: return "EmptyRay";
        case ErrorKind::DegeneratePrediction: return "DegeneratePrediction";
        case ErrorKind::DegenerateRegion: return "DegenerateRegion";
        case ErrorKind::EmptyBoundary: return "EmptyBoundary";
        case ErrorKind::EmptyTarget: return "EmptyTarget";
        case ErrorKind::EmptyEvaluation: return "EmptyEvaluation";
        case ErrorKind::PlacementError: return "PlacementError";
        case ErrorKind::FrameError: return "FrameError";
        case ErrorKind::CorruptDataset: return "CorruptDataset";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace edgeps
