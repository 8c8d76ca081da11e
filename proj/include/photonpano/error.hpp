#pragma once

#include <stdexcept>
#include <string>

namespace photonpano {

// Error classes surfaced by the CLI as "error[<class>]: message".
enum class ErrorKind {
    argument,
    format,
    io,
    config,
    overlap,
    degeneracy,
    simulation,
    pipeline,
    render,
    evaluation,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace photonpano
