#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace seqscan {

enum class ErrorKind {
    ArchiveCorrupt,
    ArchiveTooLarge,
    ManifestUnparseable,
    ConfigInvalid,
    EmptyClass,
    BadOrder,
    LengthMismatch,
    IoFailure,
    NetworkFailure,
    FeedUnparseable,
    NotFound,
    BadUsage,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::ArchiveCorrupt: return "ArchiveCorrupt";
        case ErrorKind::ArchiveTooLarge: return "ArchiveTooLarge";
        case ErrorKind::ManifestUnparseable: return "ManifestUnparseable";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
        case ErrorKind::EmptyClass: return "EmptyClass";
        case ErrorKind::BadOrder: return "BadOrder";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::NetworkFailure: return "NetworkFailure";
        case ErrorKind::FeedUnparseable: return "FeedUnparseable";
        case ErrorKind::NotFound: return "NotFound";
        case ErrorKind::BadUsage: return "BadUsage";
    }
    return "Unknown";
}

/// Error raised by every module of the scanner. The kind is what callers
/// branch on; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace seqscan
