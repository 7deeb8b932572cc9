#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergolab/maps.hpp"
#include "ergolab/observables.hpp"

namespace ergo {

enum class SeedDistribution { domain, attractor_box };
enum class CiMethod { iid_windows, batch_means };

std::string to_string(SeedDistribution d);
std::string to_string(CiMethod m);

// Sampling plan. Identical specs give bit-identical results for any worker
// count: every sample owns a counter-derived stream and the reduction runs
// in sample-index order.
struct EnsembleSpec {
    long sample_count = 10000;
    long burn_in = 0;
    SeedDistribution seeds = SeedDistribution::domain;
    std::uint64_t master_seed = 1;
    CiMethod method = CiMethod::iid_windows;
    int workers = 1;  // 0 = hardware default
};

struct EstimateWithCI {
    double value = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    long sample_count = 0;
    CiMethod method = CiMethod::iid_windows;
    long discarded = 0;
};

std::string estimate_json(const EstimateWithCI& e, std::uint64_t seed);

EstimateWithCI estimate_mean(const HoelderObservable& k, const DynamicalSystem& sys,
                             const EnsembleSpec& spec);
EstimateWithCI estimate_variance(const HoelderObservable& k, const DynamicalSystem& sys,
                                 const EnsembleSpec& spec);
// Double-integral form: half the mean squared difference over independent
// window pairs; cross-validates estimate_variance.
EstimateWithCI pair_variance(const HoelderObservable& k, const DynamicalSystem& sys,
                             const EnsembleSpec& spec);

// C(k) = <phi(x) psi(f^k x)> - <phi><psi>, k = 0..max_lag.
std::vector<EstimateWithCI> empirical_correlation(const ScalarFunction& phi,
                                                  const ScalarFunction& psi,
                                                  const DynamicalSystem& sys, int max_lag,
                                                  const EnsembleSpec& spec);

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
    long sample_count = 0;
};

// Kolmogorov-Smirnov distance of standardized windowed Birkhoff sums to the
// standard normal CDF.
KsResult clt_diagnostic(const ScalarFunction& phi, const DynamicalSystem& sys, long n,
                        const EnsembleSpec& spec);

// Null-distribution sanity case: the same statistic on i.i.d. Gaussians.
KsResult gaussian_control(long sample_count, std::uint64_t master_seed);

// Per-window values of k over the ensemble (the shared sampling core).
// Divergent windows are discarded and counted; more than 1% discards raises
// sampling_error.
std::vector<double> sample_window_values(const HoelderObservable& k,
                                         const DynamicalSystem& sys,
                                         const EnsembleSpec& spec, long* discarded_out);

void parallel_for(long count, int workers, const std::function<void(long)>& body);

double normal_cdf(double z);
double kolmogorov_p_value(double statistic, long n_samples);

}  // namespace ergo
