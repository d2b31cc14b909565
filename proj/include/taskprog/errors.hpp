#pragma once

#include <stdexcept>
#include <string>

namespace taskprog {

// Malformed or inconsistent input data: manifests, sample files, checkpoints.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration or misuse of an API contract.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Network-layer failure in the http adapter. Retryable; distinct from an
// unparsable model answer, which is a valid (if useless) response.
struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace taskprog
