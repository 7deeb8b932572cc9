#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ergolab/errors.hpp"

namespace ergo {

// State of a catalog system. One-dimensional maps use component 0 and keep
// component 1 at zero.
using State = std::array<double, 2>;

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

// 2x2 row-major Jacobian; one-dimensional maps fill entry (0,0) only.
using Jacobian = std::array<double, 4>;

struct DynamicalSystem {
    std::string name;
    int dim = 1;
    std::map<std::string, double> params;
    std::array<Interval, 2> domain;
    // Box the long-run attractor is observed to fill; used for seeding.
    std::array<Interval, 2> attractor_box;
    std::function<State(const State&)> step;
    // Null when derivative data is unavailable. At non-differentiable points
    // (Lozi x = 0, interval-map branch points) returns the one-sided value
    // from the right.
    std::function<Jacobian(const State&)> jacobian;
    // True for piecewise-affine maps with dyadic branch structure
    // (doubling, tent): exact bit-level iteration is available.
    bool dyadic_affine = false;

    bool has_jacobian() const { return static_cast<bool>(jacobian); }
    bool in_domain(const State& s) const {
        for (int d = 0; d < dim; ++d)
            if (!domain[d].contains(s[d])) return false;
        return true;
    }
    double domain_diameter() const;
};

// Monotone branch of a one-dimensional piecewise-monotone map, with its
// inverse; used for exact Ulam assembly.
struct MonotoneBranch {
    double lo, hi;
    bool increasing;
    std::function<double(double)> fwd;
    std::function<double(double)> inv;
};

// Names: doubling, tent, logistic, lozi, henon. Unknown names or parameter
// keys are rejected with the list of valid options.
DynamicalSystem make_system(std::string_view name,
                            const std::map<std::string, double>& params = {});
const std::vector<std::string>& system_catalog();

struct Trajectory {
    const DynamicalSystem* system = nullptr;
    std::vector<State> states;
    long burn_in = 0;
    State seed{0.0, 0.0};
};

State evolve(const DynamicalSystem& sys, State state, long steps);
Trajectory orbit(const DynamicalSystem& sys, State seed, long burn_in, long length);

// Lyapunov exponents in decreasing order (nats per iteration), estimated by
// iterated orthonormalization of tangent frames along the orbit.
std::vector<double> lyapunov_spectrum(const DynamicalSystem& sys, State seed, long steps);

// Branch decomposition for 1-D catalog maps; capability_error otherwise.
std::vector<MonotoneBranch> monotone_branches(const DynamicalSystem& sys);

}  // namespace ergo
