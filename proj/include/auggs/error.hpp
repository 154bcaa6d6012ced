#pragma once

#include <stdexcept>
#include <string>

namespace auggs {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter values outside their domain (non-finite, wrong SH length, ...).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Caller broke a precondition (shape mismatch, C > P, empty view set, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Non-finite Gaussian encountered while rendering.
class RenderError : public Error {
public:
    RenderError(std::size_t index, const std::string& what)
        : Error("gaussian " + std::to_string(index) + ": " + what), index_(index) {}

    std::size_t gaussian_index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class EmptyDepthError : public Error {
public:
    using Error::Error;
};

class EmptyInitError : public Error {
public:
    using Error::Error;
};

/// Malformed PLY / DPTH / PNG / JSON content.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Dataset entry could not be loaded; the message names the entry.
class LoadError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace auggs
