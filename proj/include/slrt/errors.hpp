#pragma once

#include <stdexcept>
#include <string>

namespace slrt {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CalibrationUnstable : Error { using Error::Error; };
struct DuplicateId : Error { using Error::Error; };
struct RegistrationAfterStart : Error { using Error::Error; };
struct UnknownFunction : Error { using Error::Error; };
struct AlreadyStarted : Error { using Error::Error; };
struct ResultTooLarge : Error { using Error::Error; };
struct RequestTooLarge : Error { using Error::Error; };
struct OverlapUnsupported : Error { using Error::Error; };
struct StoreIo : Error { using Error::Error; };
struct SourceUnavailable : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

} // namespace slrt
