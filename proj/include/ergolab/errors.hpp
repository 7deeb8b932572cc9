#pragma once

#include <stdexcept>
#include <string>

namespace ergo {

// Error taxonomy shared by every module. The CLI maps config_error to
// exit code 1 and all other ergo errors to exit code 2.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct domain_error : error {
    using error::error;
};

struct divergence_error : error {
    divergence_error(const std::string& what, long step_index)
        : error(what + " (step " + std::to_string(step_index) + ")"),
          step(step_index) {}
    long step;
};

struct capability_error : error {
    using error::error;
};

struct parameter_error : error {
    using error::error;
};

struct arity_error : error {
    using error::error;
};

struct bounds_error : error {
    using error::error;
};

struct convergence_error : error {
    convergence_error(const std::string& what, double res)
        : error(what + " (residual " + std::to_string(res) + ")"),
          residual(res) {}
    double residual;
};

struct truncation_error : error {
    using error::error;
};

struct sampling_error : error {
    using error::error;
};

struct degeneracy_error : error {
    using error::error;
};

struct inconsistent_constants_error : error {
    using error::error;
};

struct config_error : error {
    using error::error;
};

struct io_error : error {
    using error::error;
};

}  // namespace ergo
