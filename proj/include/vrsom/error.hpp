#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace vrsom {

/// Base for every failure the library reports.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite input, out-of-range enum value, violated precondition.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed text input. Carries the offending file and 1-based line (0 = whole file).
class ParseError : public Error {
public:
    ParseError(std::filesystem::path file, std::size_t line, const std::string& what)
        : Error(file.string() + (line ? ":" + std::to_string(line) : std::string{}) + ": " + what),
          file_(std::move(file)),
          line_(line) {}

    const std::filesystem::path& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::filesystem::path file_;
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace vrsom
