#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace revutil {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// core-model
class RejectedLabel : public Error {
public:
    using Error::Error;
};

class ArityError : public Error {
public:
    using Error::Error;
};

/// Malformed input line. `line()` is 1-based; 0 means "not line-oriented".
class ParseError : public Error {
public:
    ParseError(std::string path, std::size_t line, const std::string& what)
        : Error(path + ":" + std::to_string(line) + ": " + what),
          path_(std::move(path)), line_(line) {}

    const std::string& path() const noexcept { return path_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string path_;
    std::size_t line_;
};

class DuplicateKey : public Error {
public:
    using Error::Error;
};

// segmenter
class UnknownVenue : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

// rubric
class PoolTooSmall : public Error {
public:
    using Error::Error;
};

class AspectMismatch : public Error {
public:
    using Error::Error;
};

class MissingRubric : public Error {
public:
    using Error::Error;
};

// backend
class TransportError : public Error {
public:
    using Error::Error;
};

class AuthError : public Error {
public:
    using Error::Error;
};

/// Non-2xx response from the completion endpoint; the body is kept verbatim.
class BackendRefusal : public Error {
public:
    BackendRefusal(int status, std::string body)
        : Error("backend returned HTTP " + std::to_string(status) + ": " + body),
          status_(status), body_(std::move(body)) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

// metrics
class LengthMismatch : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class NoPairableValues : public Error {
public:
    using Error::Error;
};

class AllPairsDegenerate : public Error {
public:
    using Error::Error;
};

class EmptyText : public Error {
public:
    using Error::Error;
};

// analysis
class IncompleteTriples : public Error {
public:
    IncompleteTriples(const std::string& what, std::vector<std::string> ids)
        : Error(what), comment_ids_(std::move(ids)) {}

    const std::vector<std::string>& comment_ids() const noexcept { return comment_ids_; }

private:
    std::vector<std::string> comment_ids_;
};

class NoOverlap : public Error {
public:
    using Error::Error;
};

class EmptySource : public Error {
public:
    using Error::Error;
};

class NoSharedItems : public Error {
public:
    using Error::Error;
};

} // namespace revutil
