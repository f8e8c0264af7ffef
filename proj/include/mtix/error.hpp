#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtix {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line number of the offending line.
class ParseError : public Error {
  public:
    ParseError(std::size_t line, std::string const& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] auto line() const noexcept -> std::size_t { return line_; }

  private:
    std::size_t line_;
};

class ValidationError : public Error {
    using Error::Error;
};

class DomainError : public Error {
    using Error::Error;
};

class TruncationError : public Error {
    using Error::Error;
};

class OverflowError : public Error {
    using Error::Error;
};

class CorruptionError : public Error {
    using Error::Error;
};

class FormatError : public Error {
    using Error::Error;
};

class IoError : public Error {
    using Error::Error;
};

class LookupError : public Error {
    using Error::Error;
};

/// A factorization (or other derived structure) broke one of its contracts.
class InvariantViolation : public Error {
    using Error::Error;
};

/// An exhaustive routine declined an input that is too large for it.
class RefusalError : public Error {
    using Error::Error;
};

}  // namespace mtix
