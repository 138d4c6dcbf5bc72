#ifndef IRF_ERRORS_HPP
#define IRF_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace irf {

/// Failure categories raised by the library. Every public operation that can
/// fail throws irf::Error carrying one of these.
enum class ErrorKind {
    InvalidArgument,
    OutOfRange,
    EmptyMinorityClass,
    EmptyMajorityClass,
    SizeExceedsPopulation,
    SizeExceedsClass,
    CalibrationFailed,
    UnsupportedDimension,
    EmptyPointSet,
    EmptySubset,
    EnumerationTooLarge,
    OddsAtOne,
    DegenerateMu,
    ZeroTheoryVariance,
    ParseError,
    IoError,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::EmptyMinorityClass: return "EmptyMinorityClass";
        case ErrorKind::EmptyMajorityClass: return "EmptyMajorityClass";
        case ErrorKind::SizeExceedsPopulation: return "SizeExceedsPopulation";
        case ErrorKind::SizeExceedsClass: return "SizeExceedsClass";
        case ErrorKind::CalibrationFailed: return "CalibrationFailed";
        case ErrorKind::UnsupportedDimension: return "UnsupportedDimension";
        case ErrorKind::EmptyPointSet: return "EmptyPointSet";
        case ErrorKind::EmptySubset: return "EmptySubset";
        case ErrorKind::EnumerationTooLarge: return "EnumerationTooLarge";
        case ErrorKind::OddsAtOne: return "OddsAtOne";
        case ErrorKind::DegenerateMu: return "DegenerateMu";
        case ErrorKind::ZeroTheoryVariance: return "ZeroTheoryVariance";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::IoError: return "IoError";
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

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const char* what) {
    if (!condition) {
        fail(kind, what);
    }
}

}  // namespace irf

#endif  // IRF_ERRORS_HPP
