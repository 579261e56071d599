#pragma once

#include <stdexcept>
#include <string>

namespace distbn {

// Bad input: malformed network files, invalid configs, structural problems
// (cycles, non-star networks passed to the naive-Bayes variant).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A configured resource cap was exceeded (counter count, enumeration space,
// rejection-sampling attempts).
class CapacityError : public std::runtime_error {
public:
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal bookkeeping went inconsistent, e.g. a joint count exceeding its
// parent count. Signals counter corruption, not user error.
class ConsistencyError : public std::runtime_error {
public:
    explicit ConsistencyError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace distbn
