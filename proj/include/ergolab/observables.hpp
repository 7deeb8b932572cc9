#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ergolab/maps.hpp"
#include "ergolab/rng.hpp"

namespace ergo {

// Scalar ingredient phi for the observable families. Acts on the first
// state coordinate; eta/lipschitz/sup_norm are the analytic constants on
// the unit interval (conservative upper bounds elsewhere).
struct ScalarFunction {
    std::string name;
    double eta = 1.0;
    double lipschitz = 1.0;  // Hoelder constant for the given eta
    double sup_norm = 1.0;
    std::function<double(const State&)> f;
};

// Catalog: cos2pi, identity, sqrt, abs_dist_half.
const ScalarFunction& phi_catalog(std::string_view name);
const std::vector<std::string>& phi_names();

// Function of n states with per-coordinate Hoelder constants. Constants of
// library families are analytic upper bounds, not estimates.
struct HoelderObservable {
    int arity = 0;
    double exponent = 1.0;
    std::vector<double> holder_constants;
    std::string family_tag;
    std::function<double(std::span<const State>)> eval;

    double operator()(std::span<const State> window) const;
    double sum_l2() const;
};

// K(x_1..x_n) = (1/n) sum phi(x_j); every L_j = lipschitz/n.
HoelderObservable make_birkhoff(const ScalarFunction& phi, int n);

// K = (1/(n-1)) sum_{j<n} phi(x_j) phi(x_{j+1}); L_j bounds from the product
// rule: 2*M*Lam/(n-1) interior, M*Lam/(n-1) at the ends. Needs eta == 1.
HoelderObservable make_pair_correlation(const ScalarFunction& phi, int n);

// K = max_j w_j phi(x_j); L_j = w_j * lipschitz.
HoelderObservable make_weighted_sup(const ScalarFunction& phi, std::vector<double> weights);

HoelderObservable make_constant(double value, int n);

// c*K: scales every L_j by |c|.
HoelderObservable scaled(const HoelderObservable& k, double c);

// Same values, extra ignored coordinates with L_j = 0.
HoelderObservable padded(const HoelderObservable& k, int new_arity);

// Source of random states for black-box Hoelder estimation.
struct StateSampler {
    std::function<State(SplitMix64&)> draw;
    double diameter = 1.0;
    int dim = 1;
    std::array<Interval, 2> box;
};

StateSampler uniform_domain_sampler(const DynamicalSystem& sys);
StateSampler attractor_box_sampler(const DynamicalSystem& sys);

// Empirical lower bound on L_j of a black-box observable: sup of
// |delta K| / d(x_j, x~_j)^eta over sampled tuples, with perturbation sizes
// log-uniform in [1e-6, diameter].
double estimate_holder_constant(const std::function<double(std::span<const State>)>& k,
                                int arity, int coordinate, double eta,
                                const StateSampler& sampler, long pairs,
                                std::uint64_t seed);

double evaluate_on_window(const HoelderObservable& k, const Trajectory& traj, long offset);

}  // namespace ergo
