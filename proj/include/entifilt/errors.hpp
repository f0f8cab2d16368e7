#pragma once

#include <stdexcept>
#include <string>

namespace entifilt {

// Bad flags, bad config values, missing required options. CLI exit code 1.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or malformed data, contract violations between files. Exit 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A broken internal invariant; always a bug. Exit 3.
struct InternalError : std::logic_error {
    explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace entifilt
