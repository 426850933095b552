#pragma once

/// @file errors.hpp
/// @brief Exception types shared by every module.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adlab {

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct GridMismatch : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

/// Kernel scale too small for the grid.
struct ResolutionError : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

/// Configuration rejected before any computation.
struct ConfigError : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

/// Time integration stopped (CFL violation, non-finite state).
struct NumericalAbort : std::runtime_error {
    NumericalAbort(const std::string& what, std::size_t step_index, double time)
        : std::runtime_error(what), step(step_index), t(time) {}
    std::size_t step;
    double t;
};

}  // namespace adlab
