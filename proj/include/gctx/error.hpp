#pragma once

#include <stdexcept>
#include <string>

namespace gctx {

// Dimension violations: mismatched matmul inner dims, bad broadcast, bad axis.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration: unknown variant, divisibility violations, bad grammar.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Broken call contract: non-scalar loss, empty set where nonempty is required.
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

// File parse or write failure; message carries the parse location when known.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Loss went non-finite during training; carries the offending epoch.
struct TrainingError : std::runtime_error {
    TrainingError(const std::string& what, int epoch_idx)
        : std::runtime_error(what), epoch(epoch_idx) {}
    int epoch;
};

}  // namespace gctx
