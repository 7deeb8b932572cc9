#include "ergolab/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace ergo {

namespace {

constexpr double kTwoPi = 6.283185307179586477;

std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    return out;
}

}  // namespace

const std::vector<std::string>& phi_names() {
    static const std::vector<std::string> names = {"cos2pi", "identity", "sqrt", "abs_dist_half"};
    return names;
}

const ScalarFunction& phi_catalog(std::string_view name_view) {
    static const std::vector<ScalarFunction> catalog = {
        {"cos2pi", 1.0, kTwoPi, 1.0, [](const State& s) { return std::cos(kTwoPi * s[0]); }},
        {"identity", 1.0, 1.0, 1.0, [](const State& s) { return s[0]; }},
        {"sqrt", 0.5, 1.0, 1.0, [](const State& s) { return std::sqrt(std::fabs(s[0])); }},
        {"abs_dist_half", 1.0, 1.0, 0.5, [](const State& s) { return std::fabs(s[0] - 0.5); }},
    };
    for (const auto& phi : catalog)
        if (phi.name == name_view) return phi;
    throw parameter_error("unknown phi \"" + std::string(name_view) +
                          "\"; catalog: " + join(phi_names()));
}

double HoelderObservable::operator()(std::span<const State> window) const {
    if (static_cast<int>(window.size()) != arity)
        throw bounds_error("window of length " + std::to_string(window.size()) +
                           " fed to an observable of arity " + std::to_string(arity));
    return eval(window);
}

double HoelderObservable::sum_l2() const {
    double s = 0.0;
    for (double l : holder_constants) s += l * l;
    return s;
}

HoelderObservable make_birkhoff(const ScalarFunction& phi, int n) {
    if (n < 1) throw arity_error("birkhoff family needs n >= 1");
    HoelderObservable k;
    k.arity = n;
    k.exponent = phi.eta;
    k.holder_constants.assign(static_cast<size_t>(n), phi.lipschitz / n);
    k.family_tag = "birkhoff-" + phi.name;
    auto f = phi.f;
    k.eval = [f, n](std::span<const State> w) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += f(w[static_cast<size_t>(j)]);
        return s / n;
    };
    return k;
}

HoelderObservable make_pair_correlation(const ScalarFunction& phi, int n) {
    if (n < 2) throw arity_error("pair-correlation family needs n >= 2");
    if (phi.eta != 1.0)
        throw parameter_error("pair-correlation family needs a Lipschitz phi (eta = 1)");
    HoelderObservable k;
    k.arity = n;
    k.exponent = 1.0;
    const double edge = phi.sup_norm * phi.lipschitz / (n - 1);
    k.holder_constants.assign(static_cast<size_t>(n), 2.0 * edge);
    k.holder_constants.front() = edge;
    k.holder_constants.back() = edge;
    k.family_tag = "pair-correlation-" + phi.name;
    auto f = phi.f;
    k.eval = [f, n](std::span<const State> w) {
        double s = 0.0;
        double prev = f(w[0]);
        for (int j = 1; j < n; ++j) {
            double cur = f(w[static_cast<size_t>(j)]);
            s += prev * cur;
            prev = cur;
        }
        return s / (n - 1);
    };
    return k;
}

HoelderObservable make_weighted_sup(const ScalarFunction& phi, std::vector<double> weights) {
    if (weights.empty()) throw arity_error("weighted-sup family needs at least one weight");
    for (double w : weights)
        if (!(w >= 0.0) || !std::isfinite(w))
            throw parameter_error("weighted-sup weights must be finite and nonnegative");
    HoelderObservable k;
    k.arity = static_cast<int>(weights.size());
    k.exponent = phi.eta;
    k.holder_constants.resize(weights.size());
    for (size_t j = 0; j < weights.size(); ++j)
        k.holder_constants[j] = weights[j] * phi.lipschitz;
    k.family_tag = "weighted-sup-" + phi.name;
    auto f = phi.f;
    auto ws = std::make_shared<std::vector<double>>(std::move(weights));
    k.eval = [f, ws](std::span<const State> w) {
        double best = -std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < ws->size(); ++j) best = std::max(best, (*ws)[j] * f(w[j]));
        return best;
    };
    return k;
}

HoelderObservable make_constant(double value, int n) {
    if (n < 1) throw arity_error("constant family needs n >= 1");
    HoelderObservable k;
    k.arity = n;
    k.exponent = 1.0;
    k.holder_constants.assign(static_cast<size_t>(n), 0.0);
    k.family_tag = "constant";
    k.eval = [value](std::span<const State>) { return value; };
    return k;
}

HoelderObservable scaled(const HoelderObservable& k, double c) {
    HoelderObservable out = k;
    for (double& l : out.holder_constants) l *= std::fabs(c);
    auto inner = k.eval;
    out.eval = [inner, c](std::span<const State> w) { return c * inner(w); };
    return out;
}

HoelderObservable padded(const HoelderObservable& k, int new_arity) {
    if (new_arity < k.arity) throw arity_error("padding cannot shrink the arity");
    HoelderObservable out = k;
    out.arity = new_arity;
    out.holder_constants.resize(static_cast<size_t>(new_arity), 0.0);
    auto inner = k.eval;
    int n = k.arity;
    out.eval = [inner, n](std::span<const State> w) { return inner(w.first(static_cast<size_t>(n))); };
    return out;
}

namespace {

StateSampler box_sampler(const DynamicalSystem& sys, const std::array<Interval, 2>& box) {
    StateSampler s;
    s.dim = sys.dim;
    s.box = box;
    double d2 = 0.0;
    for (int d = 0; d < sys.dim; ++d) {
        double len = box[static_cast<size_t>(d)].length();
        d2 += len * len;
    }
    s.diameter = std::sqrt(d2);
    int dim = sys.dim;
    s.draw = [box, dim](SplitMix64& rng) -> State {
        State out{0.0, 0.0};
        for (int d = 0; d < dim; ++d)
            out[static_cast<size_t>(d)] =
                rng.next_double(box[static_cast<size_t>(d)].lo, box[static_cast<size_t>(d)].hi);
        return out;
    };
    return s;
}

}  // namespace

StateSampler uniform_domain_sampler(const DynamicalSystem& sys) {
    return box_sampler(sys, sys.domain);
}

StateSampler attractor_box_sampler(const DynamicalSystem& sys) {
    return box_sampler(sys, sys.attractor_box);
}

double estimate_holder_constant(const std::function<double(std::span<const State>)>& k,
                                int arity, int coordinate, double eta,
                                const StateSampler& sampler, long pairs,
                                std::uint64_t seed) {
    if (!(eta > 0.0 && eta <= 1.0))
        throw parameter_error("eta must lie in (0, 1], got " + std::to_string(eta));
    if (coordinate < 1 || coordinate > arity)
        throw bounds_error("coordinate index out of range");
    if (pairs < 1000) throw parameter_error("need at least 10^3 sample pairs");

    const double r_min = 1e-6;
    const double r_max = std::max(sampler.diameter, 2.0 * r_min);
    const double log_ratio = std::log(r_max / r_min);
    const size_t j = static_cast<size_t>(coordinate - 1);

    std::vector<State> tuple(static_cast<size_t>(arity));
    double best = 0.0;
    SplitMix64 rng = SplitMix64::stream(seed, 0x484c4452);
    for (long p = 0; p < pairs; ++p) {
        for (auto& s : tuple) s = sampler.draw(rng);
        const double base = k(tuple);
        const double r = r_min * std::exp(rng.next_double() * log_ratio);
        State original = tuple[j];
        State moved = original;
        if (sampler.dim == 1) {
            double dir = rng.next_double() < 0.5 ? -1.0 : 1.0;
            double cand = original[0] + dir * r;
            if (!sampler.box[0].contains(cand)) cand = original[0] - dir * r;
            moved[0] = std::clamp(cand, sampler.box[0].lo, sampler.box[0].hi);
        } else {
            double angle = rng.next_double(0.0, kTwoPi);
            moved[0] = std::clamp(original[0] + r * std::cos(angle), sampler.box[0].lo,
                                  sampler.box[0].hi);
            moved[1] = std::clamp(original[1] + r * std::sin(angle), sampler.box[1].lo,
                                  sampler.box[1].hi);
        }
        double dx = moved[0] - original[0];
        double dy = moved[1] - original[1];
        double dist = std::sqrt(dx * dx + dy * dy);
        if (dist == 0.0) continue;
        tuple[j] = moved;
        double delta = std::fabs(k(tuple) - base);
        tuple[j] = original;
        best = std::max(best, delta / std::pow(dist, eta));
    }
    return best;
}

double evaluate_on_window(const HoelderObservable& k, const Trajectory& traj, long offset) {
    if (offset < 0 || offset + k.arity > static_cast<long>(traj.states.size()))
        throw bounds_error("window [" + std::to_string(offset) + ", " +
                           std::to_string(offset + k.arity) + ") exceeds trajectory length " +
                           std::to_string(traj.states.size()));
    return k.eval(std::span<const State>(traj.states).subspan(static_cast<size_t>(offset),
                                                              static_cast<size_t>(k.arity)));
}

}  // namespace ergo
