#pragma once

#include <stdexcept>
#include <string>

namespace icsdetect {

/// Base class for every error raised by the toolkit. The kind maps onto the
/// CLI exit codes (usage = 1, input = 2, precondition = 3).
class Error : public std::runtime_error {
public:
    enum class Kind { Usage = 1, Input = 2, Precondition = 3 };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    Kind kind_;
};

/// Malformed, unreadable or invariant-violating input data.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(Kind::Input, what) {}
};

/// Valid data that does not satisfy an operation's precondition
/// (series too short, single-class training set, ...).
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error(Kind::Precondition, what) {}
};

/// Bad configuration or arguments.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(Kind::Usage, what) {}
};

} // namespace icsdetect
