#pragma once

#include <stdexcept>
#include <string>

namespace bcp {

// Exit-code buckets used by the CLI: 2 config, 3 data, 4 validation.
enum class ErrorKind { Config = 2, Data = 3, Validation = 4 };

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// Raised by library ops on contract violations that indicate bad inputs
// rather than bad configuration (zero vectors, length mismatches, p below
// the probability floor).
struct AllZeroError : DataError {
    explicit AllZeroError(const std::string& what) : DataError(what) {}
};

struct LengthMismatchError : DataError {
    explicit LengthMismatchError(const std::string& what) : DataError(what) {}
};

struct DomainError : DataError {
    explicit DomainError(const std::string& what) : DataError(what) {}
};

struct InsufficientDataError : DataError {
    explicit InsufficientDataError(const std::string& what) : DataError(what) {}
};

struct EmptyInputError : DataError {
    explicit EmptyInputError(const std::string& what) : DataError(what) {}
};

}  // namespace bcp
