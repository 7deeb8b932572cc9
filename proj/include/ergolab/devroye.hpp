#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ergolab/montecarlo.hpp"
#include "ergolab/observables.hpp"

namespace ergo {

// One (system, family, n) cell of the variance-ratio sweep: the variance of
// K along windows against the sum of squared Hoelder constants.
struct DevroyeReport {
    std::string system;
    std::string family;
    double eta = 1.0;
    int n = 0;
    EstimateWithCI variance;
    double sum_l2 = 0.0;
    EstimateWithCI ratio;        // variance / sum_l2, CI scaled alongside
    double d_running = 0.0;      // running sup of ratio.ci_high over the sweep
    std::vector<std::string> caveats;
};

DevroyeReport devroye_ratio(const HoelderObservable& k, const DynamicalSystem& sys,
                            const EnsembleSpec& spec);

// Family choices a sweep can instantiate per window length.
struct FamilySpec {
    std::string family;  // birkhoff | pair-correlation | weighted-sup | constant
    std::string phi = "cos2pi";
    double constant_value = 0.0;  // for the constant family
    std::string label() const;
};

HoelderObservable build_family(const FamilySpec& f, int n);

struct FamilyTrend {
    std::string family;
    std::vector<double> ratios;   // aligned with the n grid
    double loglog_slope = 0.0;    // regression of log ratio on log n
};

struct DevroyeSummary {
    double d_running = 0.0;
    std::string argmax_system, argmax_family;
    int argmax_n = 0;
    double eta = 1.0;
    std::vector<int> n_grid;
    std::uint64_t seed = 0;
    std::vector<DevroyeReport> reports;  // grid order: family-major, n-minor
    std::vector<FamilyTrend> trends;
};

// Sweeps families x n_grid, tracking the running supremum of the ratio's
// upper confidence bound (the empirical envelope of any valid constant).
DevroyeSummary estimate_constant_D(const DynamicalSystem& sys,
                                   const std::vector<FamilySpec>& families,
                                   const std::vector<int>& n_grid, double eta,
                                   const EnsembleSpec& spec);

// CSV (one row per report) + JSON summary (+ SVG ratio-vs-n plot when
// svg_path is nonempty). Numbers carry 17 significant digits and the files
// are byte-stable across reruns.
void inequality_report(const std::vector<DevroyeReport>& reports,
                       const DevroyeSummary* summary,
                       const std::filesystem::path& csv_path,
                       const std::filesystem::path& json_path,
                       const std::filesystem::path& svg_path);

std::string devroye_csv(const std::vector<DevroyeReport>& reports);
std::string devroye_summary_json(const DevroyeSummary& summary);
std::string devroye_svg(const std::vector<DevroyeReport>& reports);

}  // namespace ergo
