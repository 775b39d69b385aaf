#pragma once

#include <stdexcept>
#include <string>

namespace convgp {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorCategory : int {
    kConfig = 2,
    kData = 3,
    kNumeric = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }

private:
    ErrorCategory category_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error(ErrorCategory::kConfig, message) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& message) : Error(ErrorCategory::kData, message) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& message) : Error(ErrorCategory::kNumeric, message) {}
};

}  // namespace convgp
