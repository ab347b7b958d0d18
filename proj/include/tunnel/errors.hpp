#pragma once
#include <stdexcept>
#include <string>

namespace tunnel {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DomainError : Error { using Error::Error; };
struct MaxItersExceeded : Error { using Error::Error; };
struct SingularJacobian : Error { using Error::Error; };
struct StepCollapse : Error { using Error::Error; };
struct Unclassifiable : Error { using Error::Error; };
struct MinimizationFailed : Error { using Error::Error; };
struct AsymptoticsNotFree : Error { using Error::Error; };
struct BracketFailure : Error { using Error::Error; };
struct ExtrapolationError : Error { using Error::Error; };
struct ClosedChannelOnly : Error { using Error::Error; };
struct UnitarityViolation : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

} // namespace tunnel
