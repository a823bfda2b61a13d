#ifndef BOTSIFT_ERROR_HPP
#define BOTSIFT_ERROR_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace botsift {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A tuning parameter (k, folds, bins, ...) is out of its valid range.
class ParameterError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed binary input. Carries the byte offset where decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string &what, std::uint64_t offset)
        : Error{what + " (at byte offset " + std::to_string(offset) + ")"}, offset_{offset} {}
    explicit FormatError(const std::string &what) : Error{what} {}

    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_ = 0;
};

/// Malformed text input. Carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(const std::string &what, std::size_t line)
        : Error{"line " + std::to_string(line) + ": " + what}, line_{line} {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ModelLoadError : public Error {
public:
    using Error::Error;
};

} // namespace botsift

#endif
