#pragma once

#include <stdexcept>
#include <string>

namespace hnseg {

// Thrown when inputs violate a documented precondition (shape mismatch,
// out-of-range argument, malformed data).
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on file-system/serialization failures.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when SGD produces a non-finite loss.
class divergence_error : public std::runtime_error {
public:
    divergence_error(const std::string& msg, int epoch, double learning_rate)
        : std::runtime_error(msg), epoch(epoch), learning_rate(learning_rate) {}

    int epoch;
    double learning_rate;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw validation_error(msg);
}

}  // namespace hnseg
