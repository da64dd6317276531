#pragma once

#include <stdexcept>
#include <string>

namespace gtvc {

// Error taxonomy shared by the library and the CLI. The category maps to the
// process exit code (data=2, config=3, numeric=4, io=5).
enum class ErrorCategory { Data = 2, Config = 3, Numeric = 4, Io = 5 };

inline const char* category_name(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Data: return "data-error";
        case ErrorCategory::Config: return "config-error";
        case ErrorCategory::Numeric: return "numeric-error";
        case ErrorCategory::Io: return "io-error";
    }
    return "unknown-error";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }

  private:
    ErrorCategory category_;
};

class DataError : public Error {
  public:
    explicit DataError(const std::string& message) : Error(ErrorCategory::Data, message) {}
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& message) : Error(ErrorCategory::Config, message) {}
};

class NumericError : public Error {
  public:
    explicit NumericError(const std::string& message) : Error(ErrorCategory::Numeric, message) {}
};

class IoError : public Error {
  public:
    explicit IoError(const std::string& message) : Error(ErrorCategory::Io, message) {}
};

}  // namespace gtvc
