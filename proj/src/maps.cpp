#include "ergolab/maps.hpp"

#include <cmath>
#include <sstream>

namespace ergo {

namespace {

// Interval maps land in [0,1); the boundary value 1 wraps to 0 so that every
// map is total and dyadic arguments stay exact.
double wrap_unit(double x) {
    if (x >= 1.0) x -= std::floor(x);
    if (x == 1.0) x = 0.0;
    if (x < 0.0) x += std::ceil(-x);
    return x;
}

std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    return out;
}

void check_params(const std::string& name,
                  const std::map<std::string, double>& given,
                  const std::map<std::string, double>& defaults) {
    for (const auto& [key, value] : given) {
        (void)value;
        if (defaults.find(key) == defaults.end()) {
            std::vector<std::string> valid;
            for (const auto& [k, v] : defaults) {
                (void)v;
                valid.push_back(k);
            }
            throw parameter_error("unknown parameter \"" + key + "\" for system \"" + name +
                                  "\"; valid parameters: " +
                                  (valid.empty() ? std::string("(none)") : join(valid)));
        }
    }
}

double param(const std::map<std::string, double>& given,
             const std::map<std::string, double>& defaults, const std::string& key) {
    auto it = given.find(key);
    return it != given.end() ? it->second : defaults.at(key);
}

constexpr double kEscape = 10.0;

}  // namespace

double DynamicalSystem::domain_diameter() const {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        double len = domain[d].length();
        s += len * len;
    }
    return std::sqrt(s);
}

const std::vector<std::string>& system_catalog() {
    static const std::vector<std::string> names = {"doubling", "tent", "logistic", "lozi", "henon"};
    return names;
}

DynamicalSystem make_system(std::string_view name_view,
                            const std::map<std::string, double>& params) {
    const std::string name(name_view);
    DynamicalSystem sys;
    sys.name = name;

    if (name == "doubling") {
        check_params(name, params, {});
        sys.dim = 1;
        sys.domain = {Interval{0.0, 1.0}, Interval{0.0, 0.0}};
        sys.attractor_box = sys.domain;
        sys.dyadic_affine = true;
        sys.step = [](const State& s) -> State {
            return {wrap_unit(2.0 * s[0]), 0.0};
        };
        sys.jacobian = [](const State&) -> Jacobian { return {2.0, 0, 0, 0}; };
        return sys;
    }

    if (name == "tent") {
        check_params(name, params, {});
        sys.dim = 1;
        sys.domain = {Interval{0.0, 1.0}, Interval{0.0, 0.0}};
        sys.attractor_box = sys.domain;
        sys.dyadic_affine = true;
        sys.step = [](const State& s) -> State {
            return {wrap_unit(1.0 - std::fabs(1.0 - 2.0 * s[0])), 0.0};
        };
        sys.jacobian = [](const State& s) -> Jacobian {
            return {s[0] < 0.5 ? 2.0 : -2.0, 0, 0, 0};
        };
        return sys;
    }

    if (name == "logistic") {
        const std::map<std::string, double> defaults = {{"a", 4.0}};
        check_params(name, params, defaults);
        const double a = param(params, defaults, "a");
        if (!(a > 0.0 && a <= 4.0))
            throw parameter_error("logistic parameter a must lie in (0, 4], got " +
                                  std::to_string(a));
        sys.dim = 1;
        sys.params = {{"a", a}};
        sys.domain = {Interval{0.0, 1.0}, Interval{0.0, 0.0}};
        sys.attractor_box = sys.domain;
        sys.step = [a](const State& s) -> State {
            return {wrap_unit(a * s[0] * (1.0 - s[0])), 0.0};
        };
        sys.jacobian = [a](const State& s) -> Jacobian {
            return {a * (1.0 - 2.0 * s[0]), 0, 0, 0};
        };
        return sys;
    }

    if (name == "lozi") {
        const std::map<std::string, double> defaults = {{"a", 1.7}, {"b", 0.5}};
        check_params(name, params, defaults);
        const double a = param(params, defaults, "a");
        const double b = param(params, defaults, "b");
        sys.dim = 2;
        sys.params = {{"a", a}, {"b", b}};
        sys.domain = {Interval{-kEscape, kEscape}, Interval{-kEscape, kEscape}};
        // Core of the attractor (full box: x [-1.29, 1.35], y [-0.65, 0.68]
        // over 10^7 iterates). Seeding uses this smaller box because the
        // basin boundary clips the corners of the full bounding box; from
        // here the escape fraction is < 10^-5 and burn-in lands every seed
        // on the attractor.
        sys.attractor_box = {Interval{-0.6, 0.8}, Interval{-0.3, 0.4}};
        sys.step = [a, b](const State& s) -> State {
            return {1.0 + s[1] - a * std::fabs(s[0]), b * s[0]};
        };
        sys.jacobian = [a, b](const State& s) -> Jacobian {
            double slope = s[0] >= 0.0 ? -a : a;
            return {slope, 1.0, b, 0.0};
        };
        return sys;
    }

    if (name == "henon") {
        const std::map<std::string, double> defaults = {{"a", 1.4}, {"b", 0.3}};
        check_params(name, params, defaults);
        const double a = param(params, defaults, "a");
        const double b = param(params, defaults, "b");
        sys.dim = 2;
        sys.params = {{"a", a}, {"b", b}};
        sys.domain = {Interval{-kEscape, kEscape}, Interval{-kEscape, kEscape}};
        // Core of the attractor (full box: x [-1.29, 1.28], y [-0.39, 0.39]
        // over 10^7 iterates). Seeding uses this smaller box because the
        // basin boundary clips the corners of the full bounding box; from
        // here the escape fraction is < 10^-5 and burn-in lands every seed
        // on the attractor.
        sys.attractor_box = {Interval{-0.9, 0.9}, Interval{-0.27, 0.27}};
        sys.step = [a, b](const State& s) -> State {
            return {1.0 + s[1] - a * s[0] * s[0], b * s[0]};
        };
        sys.jacobian = [a, b](const State& s) -> Jacobian {
            return {-2.0 * a * s[0], 1.0, b, 0.0};
        };
        return sys;
    }

    throw parameter_error("unknown system \"" + name +
                          "\"; supported systems: " + join(system_catalog()));
}

namespace {

void check_finite(const DynamicalSystem& sys, const State& s, long step_index) {
    for (int d = 0; d < sys.dim; ++d) {
        if (!std::isfinite(s[d]) || !sys.domain[d].contains(s[d]))
            throw divergence_error("orbit of \"" + sys.name + "\" diverged", step_index);
    }
}

}  // namespace

State evolve(const DynamicalSystem& sys, State state, long steps) {
    if (steps < 1) throw parameter_error("steps must be >= 1");
    if (!sys.in_domain(state)) throw domain_error("state outside the domain of " + sys.name);
    for (long k = 0; k < steps; ++k) {
        state = sys.step(state);
        check_finite(sys, state, k + 1);
    }
    return state;
}

Trajectory orbit(const DynamicalSystem& sys, State seed, long burn_in, long length) {
    if (length < 1) throw parameter_error("orbit length must be >= 1");
    if (burn_in < 0) throw parameter_error("burn_in must be >= 0");
    if (!sys.in_domain(seed)) throw domain_error("seed outside the domain of " + sys.name);
    Trajectory traj;
    traj.system = &sys;
    traj.burn_in = burn_in;
    traj.seed = seed;
    State s = seed;
    for (long k = 0; k < burn_in; ++k) {
        s = sys.step(s);
        check_finite(sys, s, k + 1);
    }
    traj.states.reserve(static_cast<size_t>(length));
    traj.states.push_back(s);
    for (long k = 1; k < length; ++k) {
        s = sys.step(s);
        check_finite(sys, s, burn_in + k);
        traj.states.push_back(s);
    }
    return traj;
}

std::vector<double> lyapunov_spectrum(const DynamicalSystem& sys, State seed, long steps) {
    if (!sys.has_jacobian())
        throw capability_error("system \"" + sys.name + "\" carries no jacobian data");
    if (steps < 100) throw parameter_error("lyapunov estimation needs steps >= 100");
    if (!sys.in_domain(seed)) throw domain_error("seed outside the domain of " + sys.name);

    State s = seed;
    if (sys.dim == 1) {
        double acc = 0.0;
        for (long k = 0; k < steps; ++k) {
            acc += std::log(std::fabs(sys.jacobian(s)[0]));
            s = sys.step(s);
            check_finite(sys, s, k + 1);
        }
        return {acc / static_cast<double>(steps)};
    }

    // Tangent frame carried by Gram-Schmidt; log norms accumulate the spectrum.
    double q1x = 1.0, q1y = 0.0, q2x = 0.0, q2y = 1.0;
    double acc1 = 0.0, acc2 = 0.0;
    for (long k = 0; k < steps; ++k) {
        Jacobian j = sys.jacobian(s);
        double a1x = j[0] * q1x + j[1] * q1y;
        double a1y = j[2] * q1x + j[3] * q1y;
        double a2x = j[0] * q2x + j[1] * q2y;
        double a2y = j[2] * q2x + j[3] * q2y;
        double r11 = std::hypot(a1x, a1y);
        q1x = a1x / r11;
        q1y = a1y / r11;
        double r12 = q1x * a2x + q1y * a2y;
        a2x -= r12 * q1x;
        a2y -= r12 * q1y;
        double r22 = std::hypot(a2x, a2y);
        q2x = a2x / r22;
        q2y = a2y / r22;
        acc1 += std::log(r11);
        acc2 += std::log(r22);
        s = sys.step(s);
        check_finite(sys, s, k + 1);
    }
    double l1 = acc1 / static_cast<double>(steps);
    double l2 = acc2 / static_cast<double>(steps);
    if (l1 < l2) std::swap(l1, l2);
    return {l1, l2};
}

std::vector<MonotoneBranch> monotone_branches(const DynamicalSystem& sys) {
    if (sys.dim != 1)
        throw capability_error("branch decomposition is only available for 1-D maps");
    if (sys.name == "doubling") {
        return {
            {0.0, 0.5, true, [](double x) { return 2.0 * x; }, [](double y) { return 0.5 * y; }},
            {0.5, 1.0, true, [](double x) { return 2.0 * x - 1.0; },
             [](double y) { return 0.5 * (y + 1.0); }},
        };
    }
    if (sys.name == "tent") {
        return {
            {0.0, 0.5, true, [](double x) { return 2.0 * x; }, [](double y) { return 0.5 * y; }},
            {0.5, 1.0, false, [](double x) { return 2.0 - 2.0 * x; },
             [](double y) { return 1.0 - 0.5 * y; }},
        };
    }
    if (sys.name == "logistic") {
        const double a = sys.params.at("a");
        auto fwd = [a](double x) { return a * x * (1.0 - x); };
        auto disc = [a](double y) {
            double t = 1.0 - 4.0 * y / a;
            return t > 0.0 ? std::sqrt(t) : 0.0;
        };
        return {
            {0.0, 0.5, true, fwd, [disc](double y) { return 0.5 * (1.0 - disc(y)); }},
            {0.5, 1.0, false, fwd, [disc](double y) { return 0.5 * (1.0 + disc(y)); }},
        };
    }
    throw capability_error("no branch decomposition for system \"" + sys.name + "\"");
}

}  // namespace ergo
