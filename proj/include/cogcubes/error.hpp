#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cogcubes {

enum class ErrorCode {
    EmptyShape,
    EmptyPrototype,
    // replay
    CellOccupied,
    CellAbsent,
    NotAdjacent,
    BaseRemoval,
    DisconnectsStructure,
    TimeOrder,
    // measures
    NoEvents,
    ZeroDt,
    // network
    FaceOccupied,
    HostUnreachable,
    UnknownCube,
    Collision,
    DanglingLink,
    SnapshotMismatch,
    // tasks / sessions
    NotGuidedTask,
    NoActiveTask,
    TooManyCubes,
    NotConnected,
    InvalidLibrary,
    WrongPhase,
    UnknownSession,
    Unauthorized,
    // analysis
    LengthMismatch,
    ZeroVariance,
    InsufficientData,
    EmptyTable,
    MixedTasks,
    // io
    ParseError,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptyShape: return "EmptyShape";
    case ErrorCode::EmptyPrototype: return "EmptyPrototype";
    case ErrorCode::CellOccupied: return "CellOccupied";
    case ErrorCode::CellAbsent: return "CellAbsent";
    case ErrorCode::NotAdjacent: return "NotAdjacent";
    case ErrorCode::BaseRemoval: return "BaseRemoval";
    case ErrorCode::DisconnectsStructure: return "DisconnectsStructure";
    case ErrorCode::TimeOrder: return "TimeOrder";
    case ErrorCode::NoEvents: return "NoEvents";
    case ErrorCode::ZeroDt: return "ZeroDt";
    case ErrorCode::FaceOccupied: return "FaceOccupied";
    case ErrorCode::HostUnreachable: return "HostUnreachable";
    case ErrorCode::UnknownCube: return "UnknownCube";
    case ErrorCode::Collision: return "Collision";
    case ErrorCode::DanglingLink: return "DanglingLink";
    case ErrorCode::SnapshotMismatch: return "SnapshotMismatch";
    case ErrorCode::NotGuidedTask: return "NotGuidedTask";
    case ErrorCode::NoActiveTask: return "NoActiveTask";
    case ErrorCode::TooManyCubes: return "TooManyCubes";
    case ErrorCode::NotConnected: return "NotConnected";
    case ErrorCode::InvalidLibrary: return "InvalidLibrary";
    case ErrorCode::WrongPhase: return "WrongPhase";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::MixedTasks: return "MixedTasks";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code; the
/// message is the code name optionally followed by detail.
class Error : public std::runtime_error {
public:
    explicit Error(ErrorCode code, const std::string& detail = {})
        : std::runtime_error(detail.empty() ? std::string(to_string(code))
                                            : std::string(to_string(code)) + ": " + detail),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return to_string(code_); }

private:
    ErrorCode code_;
};

} // namespace cogcubes
