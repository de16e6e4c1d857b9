#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gcslab {

// Raised when an input violates an operation's precondition.
class InvalidInput : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when an enumeration would exceed its configured cap.
class CapExceeded : public InvalidInput
{
public:
    CapExceeded(const std::string& what, double requested, double cap)
        : InvalidInput(what + " (requested " + std::to_string(requested) +
                       ", cap " + std::to_string(cap) + ")"),
          requested_(requested), cap_(cap)
    {}

    double requested() const noexcept { return requested_; }
    double cap() const noexcept { return cap_; }

private:
    double requested_;
    double cap_;
};

// Raised by the text parsers (CSV, experiment specs); carries a 1-based line.
class ParseError : public std::runtime_error
{
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what),
          line_(line)
    {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

namespace detail {

inline void require(bool cond, const std::string& msg)
{
    if (!cond) throw InvalidInput(msg);
}

} // namespace detail
} // namespace gcslab
