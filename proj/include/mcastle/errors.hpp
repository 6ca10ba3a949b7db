#pragma once

#include <stdexcept>
#include <string>

namespace mcastle {

// Error taxonomy shared by the library and the CLI. Each condition maps to a
// process exit code so scripted sweeps can distinguish retryable failures
// (exhausted generation, too little data) from genuine numeric breakage.
enum class Errc {
    usage,                 // bad flags / malformed config
    format,                // unrecognized file magic or version
    validation,            // structurally valid file with inconsistent contents
    io,                    // filesystem failure
    grid_too_small,        // no interior 3x3 window exists
    insufficient_samples,  // fewer usable rows than the estimator needs
    singular_design,       // rank-deficient conditioning/regression
    non_convergence,       // iteration budget exhausted
    domain,                // argument outside the operation's domain
    zero_resultant,        // no net direction in the stencil
    instability,           // simulated values exceeded the guard threshold
    generation_exhausted,  // accept-reject retries exhausted
    cfl_violation,         // explicit step size above the stability bound
    non_finite,            // NaN/Inf appeared in solver state
    resource_limit,        // problem size above a hard guard
};

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Errc code() const noexcept { return code_; }

    // CLI contract: 0 ok, 2 usage, 3 exhausted retries, 4 insufficient samples,
    // 5 numeric failure. Everything else is a generic 1.
    int exit_code() const noexcept {
        switch (code_) {
            case Errc::usage: return 2;
            case Errc::generation_exhausted: return 3;
            case Errc::insufficient_samples: return 4;
            case Errc::singular_design:
            case Errc::non_convergence:
            case Errc::domain:
            case Errc::zero_resultant:
            case Errc::instability:
            case Errc::cfl_violation:
            case Errc::non_finite: return 5;
            default: return 1;
        }
    }

  private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace mcastle
