#pragma once

#include <stdexcept>
#include <string>

namespace wdn {

class Error : public std::runtime_error {
 public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file (carries path and 1-based line when known).
class ParseError : public Error {
 public:
    ParseError(const std::string& path, int line, const std::string& msg)
        : Error(path + ":" + std::to_string(line) + ": " + msg), path_(path), line_(line) {}
    const std::string& path() const { return path_; }
    int line() const { return line_; }

 private:
    std::string path_;
    int line_;
};

/// A quantity was given in (or converted to) an unusable unit or magnitude.
class UnitError : public Error {
 public:
    using Error::Error;
};

/// A validated domain invariant does not hold.
class InvariantError : public Error {
 public:
    using Error::Error;
};

/// Graph structure is unusable (dangling reference, disconnected node, ...).
class StructuralError : public Error {
 public:
    using Error::Error;
};

/// A scalar parameter is outside its admissible range.
class ParameterError : public Error {
 public:
    using Error::Error;
};

/// An iterative solver exhausted its budget; message carries a residual report.
class NonconvergenceError : public Error {
 public:
    using Error::Error;
};

}  // namespace wdn
