#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ergolab/devroye.hpp"
#include "ergolab/montecarlo.hpp"

namespace ergo {

// Fully validated run description. validate() rejects unknown keys by name
// and reports every violation in one aggregated config_error.
struct RunConfig {
    std::string command;
    std::string system;
    std::map<std::string, double> params;

    // Observable selection.
    std::string family = "birkhoff";
    std::string phi = "cos2pi";
    std::string psi;  // correlations; defaults to phi
    std::vector<FamilySpec> families;
    std::vector<double> weights;

    long n = 0;
    std::vector<int> n_grid;
    double eta = -1.0;  // -1: take the exponent of the first family
    int bins = 0;       // Ulam N
    int max_lag = 0;
    int q_max = 30;
    int bins_per_level = 1;
    std::string base = "0/1..1/2";
    long length = 0;
    std::array<double, 2> seed_state{0.0, 0.0};
    bool has_seed_state = false;

    long sample_count = 10000;
    long burn_in = -1;  // -1: per-system default (0 for 1-D, 1000 for 2-D)
    SeedDistribution seeds = SeedDistribution::domain;
    bool seeds_given = false;
    CiMethod method = CiMethod::iid_windows;
    std::string correlation_method = "montecarlo";
    std::uint64_t master_seed = 1;
    int workers = 1;

    std::string output_dir = ".";
    std::vector<std::string> formats = {"csv", "json"};
    // Canonical JSON of the validated config; hashed into artifact names.
    std::string canonical;

    bool wants(const std::string& fmt) const;
    EnsembleSpec ensemble(const DynamicalSystem& sys) const;
};

RunConfig validate(const std::string& raw_json_text);

// Applies "key=value" overrides (value parsed as JSON when possible) on the
// raw document before validation.
std::string apply_overrides(const std::string& raw_json_text,
                            const std::vector<std::string>& overrides);

std::uint64_t fnv1a(const std::string& text);

}  // namespace ergo
