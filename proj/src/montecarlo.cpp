#include "ergolab/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "ergolab/format.hpp"

namespace ergo {

namespace {

constexpr double kZ95 = 1.959963984540054;  // 97.5% normal quantile

// Fixed-point fraction in [0,1) with 64*words bits. Realizes uniform real
// seeds for the dyadic piecewise-affine maps: plain doubles lose all entropy
// after ~53 doubling steps, which would wreck long-window statistics.
struct BitPool {
    std::vector<std::uint64_t> w;

    void randomize(SplitMix64& rng, int words) {
        w.resize(static_cast<size_t>(words));
        for (auto& x : w) x = rng.next_u64();
    }

    // Top 53 bits starting at bit_offset, as a double in [0,1).
    double read53(long bit_offset) const {
        size_t word = static_cast<size_t>(bit_offset) >> 6;
        int shift = static_cast<int>(bit_offset & 63);
        std::uint64_t hi = word < w.size() ? w[word] : 0;
        std::uint64_t lo = word + 1 < w.size() ? w[word + 1] : 0;
        std::uint64_t bits = shift == 0 ? hi : (hi << shift) | (lo >> (64 - shift));
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    double front53() const { return read53(0); }

    // x <- 2x mod 1.
    void shift_left() {
        for (size_t i = 0; i + 1 < w.size(); ++i) w[i] = (w[i] << 1) | (w[i + 1] >> 63);
        if (!w.empty()) w.back() <<= 1;
    }

    // Tent step: 2x for x < 1/2, else 2 - 2x (two's complement of the
    // doubled fraction).
    void tent_step() {
        bool upper = !w.empty() && (w[0] >> 63);
        shift_left();
        if (upper) {
            // 1 - y for fraction y: complement then add one ulp.
            for (auto& x : w) x = ~x;
            for (size_t i = w.size(); i-- > 0;) {
                if (++w[i] != 0) break;
            }
        }
    }
};

int pool_words(long total_steps) {
    return static_cast<int>((total_steps + 64 + 63) / 64 + 1);
}

struct WindowSampler {
    const DynamicalSystem& sys;
    const EnsembleSpec& spec;
    long n;

    // Fills out[0..n); false means the orbit diverged (sample discarded).
    bool fill(std::uint64_t index, std::vector<State>& out) const {
        SplitMix64 rng = SplitMix64::stream(spec.master_seed, index);
        if (sys.dyadic_affine) {
            BitPool pool;
            pool.randomize(rng, pool_words(spec.burn_in + n));
            if (sys.name == "doubling") {
                for (long j = 0; j < n; ++j) out[static_cast<size_t>(j)] = {pool.read53(spec.burn_in + j), 0.0};
            } else {
                for (long b = 0; b < spec.burn_in; ++b) pool.tent_step();
                for (long j = 0; j < n; ++j) {
                    out[static_cast<size_t>(j)] = {pool.front53(), 0.0};
                    if (j + 1 < n) pool.tent_step();
                }
            }
            return true;
        }
        const auto& box = spec.seeds == SeedDistribution::attractor_box ? sys.attractor_box
                                                                        : sys.domain;
        State s{0.0, 0.0};
        for (int d = 0; d < sys.dim; ++d)
            s[static_cast<size_t>(d)] = rng.next_double(box[static_cast<size_t>(d)].lo, box[static_cast<size_t>(d)].hi);
        for (long b = 0; b < spec.burn_in; ++b) {
            s = sys.step(s);
            for (int d = 0; d < sys.dim; ++d)
                if (!std::isfinite(s[static_cast<size_t>(d)]) || !sys.domain[static_cast<size_t>(d)].contains(s[static_cast<size_t>(d)]))
                    return false;
        }
        for (long j = 0; j < n; ++j) {
            out[static_cast<size_t>(j)] = s;
            if (j + 1 < n) {
                s = sys.step(s);
                for (int d = 0; d < sys.dim; ++d)
                    if (!std::isfinite(s[static_cast<size_t>(d)]) || !sys.domain[static_cast<size_t>(d)].contains(s[static_cast<size_t>(d)]))
                        return false;
            }
        }
        return true;
    }
};

// Neumaier-compensated sum in index order.
double compensated_sum(const std::vector<double>& v) {
    double sum = 0.0, comp = 0.0;
    for (double x : v) {
        double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

void check_discards(long discarded, long total) {
    if (discarded * 100 > total)
        throw sampling_error(std::to_string(discarded) + " of " + std::to_string(total) +
                             " windows diverged (more than 1%)");
}

EstimateWithCI finish_mean(std::vector<double>& values, CiMethod method, long discarded) {
    EstimateWithCI e;
    e.sample_count = static_cast<long>(values.size());
    e.method = method;
    e.discarded = discarded;
    const long s = e.sample_count;
    e.value = compensated_sum(values) / static_cast<double>(s);
    if (method == CiMethod::iid_windows) {
        double m2 = 0.0;
        for (double x : values) {
            double d = x - e.value;
            m2 += d * d;
        }
        double var = s > 1 ? m2 / static_cast<double>(s - 1) : 0.0;
        e.std_error = std::sqrt(var / static_cast<double>(s));
    } else {
        // Batch means over ~sqrt(S) batches.
        long batches = std::max<long>(2, static_cast<long>(std::sqrt(static_cast<double>(s))));
        long per = s / batches;
        std::vector<double> bm;
        bm.reserve(static_cast<size_t>(batches));
        for (long b = 0; b < batches; ++b) {
            double acc = 0.0;
            for (long i = b * per; i < (b + 1) * per; ++i) acc += values[static_cast<size_t>(i)];
            bm.push_back(acc / static_cast<double>(per));
        }
        double mean_bm = compensated_sum(bm) / static_cast<double>(batches);
        double m2 = 0.0;
        for (double x : bm) {
            double d = x - mean_bm;
            m2 += d * d;
        }
        e.std_error = std::sqrt(m2 / static_cast<double>(batches - 1) / static_cast<double>(batches));
    }
    e.ci_low = e.value - kZ95 * e.std_error;
    e.ci_high = e.value + kZ95 * e.std_error;
    return e;
}

std::vector<double> window_values_iid(const HoelderObservable& k, const DynamicalSystem& sys,
                                      const EnsembleSpec& spec, long* discarded_out) {
    const long s = spec.sample_count;
    WindowSampler sampler{sys, spec, k.arity};
    std::vector<double> values(static_cast<size_t>(s), 0.0);
    std::vector<char> ok(static_cast<size_t>(s), 0);
    parallel_for(s, spec.workers, [&](long i) {
        thread_local std::vector<State> window;
        window.resize(static_cast<size_t>(k.arity));
        if (sampler.fill(static_cast<std::uint64_t>(i), window)) {
            values[static_cast<size_t>(i)] = k.eval(window);
            ok[static_cast<size_t>(i)] = 1;
        }
    });
    std::vector<double> kept;
    kept.reserve(static_cast<size_t>(s));
    for (long i = 0; i < s; ++i)
        if (ok[static_cast<size_t>(i)]) kept.push_back(values[static_cast<size_t>(i)]);
    long discarded = s - static_cast<long>(kept.size());
    check_discards(discarded, s);
    if (discarded_out) *discarded_out = discarded;
    return kept;
}

std::vector<double> window_values_long_orbit(const HoelderObservable& k,
                                             const DynamicalSystem& sys,
                                             const EnsembleSpec& spec, long* discarded_out) {
    // One long orbit sliced into consecutive windows (hop = n).
    const long s = spec.sample_count;
    const long n = k.arity;
    std::vector<double> values;
    values.reserve(static_cast<size_t>(s));
    std::vector<State> window(static_cast<size_t>(n));
    SplitMix64 rng = SplitMix64::stream(spec.master_seed, 0);
    if (sys.dyadic_affine) {
        BitPool pool;
        pool.randomize(rng, pool_words(spec.burn_in + s * n));
        if (sys.name == "doubling") {
            for (long i = 0; i < s; ++i) {
                for (long j = 0; j < n; ++j)
                    window[static_cast<size_t>(j)] = {pool.read53(spec.burn_in + i * n + j), 0.0};
                values.push_back(k.eval(window));
            }
        } else {
            for (long b = 0; b < spec.burn_in; ++b) pool.tent_step();
            for (long i = 0; i < s; ++i) {
                for (long j = 0; j < n; ++j) {
                    window[static_cast<size_t>(j)] = {pool.front53(), 0.0};
                    pool.tent_step();
                }
                values.push_back(k.eval(window));
            }
        }
    } else {
        const auto& box = spec.seeds == SeedDistribution::attractor_box ? sys.attractor_box
                                                                        : sys.domain;
        State st{0.0, 0.0};
        for (int d = 0; d < sys.dim; ++d)
            st[static_cast<size_t>(d)] = rng.next_double(box[static_cast<size_t>(d)].lo, box[static_cast<size_t>(d)].hi);
        long total = spec.burn_in + s * n;
        long produced = 0;
        for (long t = 0; t < total; ++t) {
            if (t >= spec.burn_in) {
                window[static_cast<size_t>(produced % n)] = st;
                if (++produced % n == 0) values.push_back(k.eval(window));
            }
            st = sys.step(st);
            for (int d = 0; d < sys.dim; ++d)
                if (!std::isfinite(st[static_cast<size_t>(d)]) || !sys.domain[static_cast<size_t>(d)].contains(st[static_cast<size_t>(d)]))
                    throw sampling_error("long-orbit sampling diverged; use iid windows");
        }
    }
    if (discarded_out) *discarded_out = 0;
    return values;
}

}  // namespace

std::string to_string(SeedDistribution d) {
    return d == SeedDistribution::domain ? "uniform-domain" : "attractor-box";
}

std::string to_string(CiMethod m) {
    return m == CiMethod::iid_windows ? "iid-windows" : "batch-means";
}

std::string estimate_json(const EstimateWithCI& e, std::uint64_t seed) {
    std::ostringstream s;
    s << "{\"value\": " << format_full(e.value) << ", \"std_error\": " << format_full(e.std_error)
      << ", \"ci_low\": " << format_full(e.ci_low) << ", \"ci_high\": " << format_full(e.ci_high)
      << ", \"n_samples\": " << e.sample_count << ", \"method\": \"" << to_string(e.method)
      << "\", \"seed\": " << seed << "}";
    return s.str();
}

void parallel_for(long count, int workers, const std::function<void(long)>& body) {
    if (workers == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        workers = hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
    }
    if (workers <= 1 || count < 256) {
        for (long i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<long> cursor{0};
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;
    auto worker = [&] {
        constexpr long chunk = 256;
        for (;;) {
            long start = cursor.fetch_add(chunk);
            if (start >= count) return;
            long end = std::min(count, start + chunk);
            try {
                for (long i = start; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::vector<double> sample_window_values(const HoelderObservable& k, const DynamicalSystem& sys,
                                         const EnsembleSpec& spec, long* discarded_out) {
    if (spec.sample_count < 100) throw parameter_error("sample_count must be >= 100");
    if (spec.burn_in < 0) throw parameter_error("burn_in must be >= 0");
    if (spec.method == CiMethod::batch_means)
        return window_values_long_orbit(k, sys, spec, discarded_out);
    return window_values_iid(k, sys, spec, discarded_out);
}

EstimateWithCI estimate_mean(const HoelderObservable& k, const DynamicalSystem& sys,
                             const EnsembleSpec& spec) {
    long discarded = 0;
    auto values = sample_window_values(k, sys, spec, &discarded);
    return finish_mean(values, spec.method, discarded);
}

EstimateWithCI estimate_variance(const HoelderObservable& k, const DynamicalSystem& sys,
                                 const EnsembleSpec& spec) {
    long discarded = 0;
    auto values = sample_window_values(k, sys, spec, &discarded);
    const long s = static_cast<long>(values.size());
    double mean = compensated_sum(values) / static_cast<double>(s);
    double m2 = 0.0, m4 = 0.0;
    for (double x : values) {
        double d = x - mean;
        double d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(s);
    m4 /= static_cast<double>(s);

    EstimateWithCI e;
    e.sample_count = s;
    e.method = spec.method;
    e.discarded = discarded;
    e.value = s > 1 ? m2 * static_cast<double>(s) / static_cast<double>(s - 1) : 0.0;
    // Delta-method standard error of the sample variance via the fourth
    // central moment.
    double var_of_var = (m4 - m2 * m2 * static_cast<double>(s - 3) / static_cast<double>(s - 1)) /
                        static_cast<double>(s);
    e.std_error = std::sqrt(std::max(0.0, var_of_var));
    e.ci_low = e.value - kZ95 * e.std_error;
    e.ci_high = e.value + kZ95 * e.std_error;
    return e;
}

EstimateWithCI pair_variance(const HoelderObservable& k, const DynamicalSystem& sys,
                             const EnsembleSpec& spec) {
    long discarded = 0;
    auto values = sample_window_values(k, sys, spec, &discarded);
    const long pairs = static_cast<long>(values.size()) / 2;
    if (pairs < 2) throw sampling_error("too few window pairs survived");
    std::vector<double> halves;
    halves.reserve(static_cast<size_t>(pairs));
    for (long p = 0; p < pairs; ++p) {
        double d = values[static_cast<size_t>(2 * p)] - values[static_cast<size_t>(2 * p + 1)];
        halves.push_back(0.5 * d * d);
    }
    auto e = finish_mean(halves, CiMethod::iid_windows, discarded);
    e.method = spec.method;
    return e;
}

std::vector<EstimateWithCI> empirical_correlation(const ScalarFunction& phi,
                                                  const ScalarFunction& psi,
                                                  const DynamicalSystem& sys, int max_lag,
                                                  const EnsembleSpec& spec) {
    if (max_lag < 0) throw parameter_error("max_lag must be >= 0");
    if (spec.sample_count < 100) throw parameter_error("sample_count must be >= 100");
    const long s = spec.sample_count;
    const long n = max_lag + 1;
    WindowSampler sampler{sys, spec, n};

    std::vector<double> a(static_cast<size_t>(s), 0.0);
    std::vector<double> b(static_cast<size_t>(s) * static_cast<size_t>(n), 0.0);
    std::vector<char> ok(static_cast<size_t>(s), 0);
    parallel_for(s, spec.workers, [&](long i) {
        thread_local std::vector<State> window;
        window.resize(static_cast<size_t>(n));
        if (!sampler.fill(static_cast<std::uint64_t>(i), window)) return;
        a[static_cast<size_t>(i)] = phi.f(window[0]);
        for (long kk = 0; kk < n; ++kk)
            b[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(kk)] = psi.f(window[static_cast<size_t>(kk)]);
        ok[static_cast<size_t>(i)] = 1;
    });

    std::vector<long> kept;
    for (long i = 0; i < s; ++i)
        if (ok[static_cast<size_t>(i)]) kept.push_back(i);
    long discarded = s - static_cast<long>(kept.size());
    check_discards(discarded, s);
    const double m = static_cast<double>(kept.size());

    double mean_a = 0.0;
    for (long i : kept) mean_a += a[static_cast<size_t>(i)];
    mean_a /= m;

    std::vector<EstimateWithCI> out;
    out.reserve(static_cast<size_t>(n));
    for (long kk = 0; kk < n; ++kk) {
        double mean_b = 0.0;
        for (long i : kept) mean_b += b[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(kk)];
        mean_b /= m;
        // Sample covariance of (phi at lag 0, psi at lag k); SE from the
        // spread of the centered products.
        double cov = 0.0, m2 = 0.0;
        for (long i : kept) {
            double p = (a[static_cast<size_t>(i)] - mean_a) *
                       (b[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(kk)] - mean_b);
            cov += p;
        }
        cov /= m;
        for (long i : kept) {
            double p = (a[static_cast<size_t>(i)] - mean_a) *
                       (b[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(kk)] - mean_b);
            m2 += (p - cov) * (p - cov);
        }
        EstimateWithCI e;
        e.sample_count = static_cast<long>(kept.size());
        e.method = spec.method;
        e.discarded = discarded;
        e.value = cov;
        e.std_error = std::sqrt(m2 / (m - 1.0) / m);
        e.ci_low = e.value - kZ95 * e.std_error;
        e.ci_high = e.value + kZ95 * e.std_error;
        out.push_back(e);
    }
    return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730950488); }

double kolmogorov_p_value(double statistic, long n_samples) {
    // Asymptotic Kolmogorov distribution with the Stephens small-sample
    // correction.
    double sn = std::sqrt(static_cast<double>(n_samples));
    double lambda = (sn + 0.12 + 0.11 / sn) * statistic;
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        double term = 2.0 * (j % 2 == 1 ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
        sum += term;
        if (std::fabs(term) < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

namespace {

KsResult ks_to_standard_normal(std::vector<double>& values) {
    const long s = static_cast<long>(values.size());
    double mean = compensated_sum(values) / static_cast<double>(s);
    double m2 = 0.0;
    for (double x : values) m2 += (x - mean) * (x - mean);
    double sd = std::sqrt(m2 / static_cast<double>(s - 1));
    if (!(sd > 0.0) || sd < 1e-12 * std::max(1.0, std::fabs(mean)))
        throw degeneracy_error("windowed sums are degenerate (zero variance)");
    for (double& x : values) x = (x - mean) / sd;
    std::sort(values.begin(), values.end());
    double d = 0.0;
    for (long i = 0; i < s; ++i) {
        double c = normal_cdf(values[static_cast<size_t>(i)]);
        d = std::max(d, std::fabs(c - static_cast<double>(i) / static_cast<double>(s)));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / static_cast<double>(s) - c));
    }
    KsResult r;
    r.statistic = d;
    r.p_value = kolmogorov_p_value(d, s);
    r.sample_count = s;
    return r;
}

}  // namespace

KsResult clt_diagnostic(const ScalarFunction& phi, const DynamicalSystem& sys, long n,
                        const EnsembleSpec& spec) {
    if (n < 100) throw parameter_error("window length n must be >= 100");
    if (spec.sample_count < 10000) throw parameter_error("clt diagnostic needs >= 10^4 samples");
    const long s = spec.sample_count;
    WindowSampler sampler{sys, spec, n};
    std::vector<double> sums(static_cast<size_t>(s), 0.0);
    std::vector<char> ok(static_cast<size_t>(s), 0);
    parallel_for(s, spec.workers, [&](long i) {
        thread_local std::vector<State> window;
        window.resize(static_cast<size_t>(n));
        if (!sampler.fill(static_cast<std::uint64_t>(i), window)) return;
        double acc = 0.0;
        for (long j = 0; j < n; ++j) acc += phi.f(window[static_cast<size_t>(j)]);
        sums[static_cast<size_t>(i)] = acc;
        ok[static_cast<size_t>(i)] = 1;
    });
    std::vector<double> kept;
    kept.reserve(static_cast<size_t>(s));
    for (long i = 0; i < s; ++i)
        if (ok[static_cast<size_t>(i)]) kept.push_back(sums[static_cast<size_t>(i)]);
    check_discards(s - static_cast<long>(kept.size()), s);
    return ks_to_standard_normal(kept);
}

KsResult gaussian_control(long sample_count, std::uint64_t master_seed) {
    if (sample_count < 100) throw parameter_error("sample_count must be >= 100");
    std::vector<double> values(static_cast<size_t>(sample_count));
    for (long i = 0; i < sample_count; ++i) {
        SplitMix64 rng = SplitMix64::stream(master_seed, static_cast<std::uint64_t>(i));
        values[static_cast<size_t>(i)] = rng.next_normal();
    }
    return ks_to_standard_normal(values);
}

}  // namespace ergo
