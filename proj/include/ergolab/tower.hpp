#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ergolab/dyadic.hpp"
#include "ergolab/maps.hpp"
#include "ergolab/transfer.hpp"

namespace ergo {

// Half-open-by-default dyadic interval; flags track the endpoint ownership
// that orientation-reversing branches (tent) flip.
struct DyadicInterval {
    Dyadic lo, hi;
    bool lo_closed = true;
    bool hi_closed = false;

    Dyadic length() const { return hi - lo; }
    bool contains(const Dyadic& x) const;
    bool empty() const;
    std::string to_string() const;
};

// y = sign * 2^k * x + offset, exact on dyadics.
struct DyadicAffine {
    int sign = 1;
    int log2_slope = 0;
    Dyadic offset;

    Dyadic apply(const Dyadic& x) const;
    Dyadic invert(const Dyadic& y) const;
    DyadicInterval apply(const DyadicInterval& iv) const;
    DyadicInterval invert(const DyadicInterval& iv) const;
    static DyadicAffine identity() { return {}; }
    // this(other(x))
    DyadicAffine after(const DyadicAffine& other) const;
};

struct TowerBranch {
    DyadicInterval cell;   // subset of the base
    int return_time = 0;   // R_i
    DyadicAffine ret;      // f^{R_i} restricted to cell, onto the base
};

// First-return tower over a dyadic base interval of a piecewise-affine
// dyadic Markov map (doubling, tent). All measures are exact dyadics; the
// mass beyond q_max is carried as an explicit remainder.
struct TowerModel {
    std::string system;
    DyadicInterval base;
    std::vector<TowerBranch> branches;  // ordered by cell.lo
    int q_max = 0;
    Dyadic tail_mass;  // absolute measure of {R > q_max} inside base

    Dyadic base_mass() const { return base.length(); }
    // Conditional truncated mass m(R > q_max | base).
    double tail_remainder() const;
    // Absolute measure of the q-th level {R > q} (tail included).
    Dyadic level_mass(int q) const;
    int branch_count() const { return static_cast<int>(branches.size()); }
    // Index of the branch whose cell contains x, or nullopt (tail region).
    std::optional<int> branch_of(const Dyadic& x) const;
};

TowerModel build_first_return_tower(const DynamicalSystem& sys, DyadicInterval base, int q_max);

// m(R >= n | base), exact from the branch table plus tail remainder.
double return_tail(const TowerModel& tower, int n);

struct TailFit {
    double log_theta = 0.0;  // least-squares slope of log m(R >= n)
    double intercept = 0.0;
    double r_squared = 0.0;
};
TailFit fit_return_tail(const TowerModel& tower);

// E[R | base] * m(base) from the truncated table; 1 up to the truncation
// deficit. Requires tail_remainder < 1e-6.
double kac_check(const TowerModel& tower);

// Exact base point plus its level in the tower.
struct SymbolicPoint {
    Dyadic x;
    int level = 0;
};

struct SeparationResult {
    int value = 0;
    bool at_least_horizon = false;
};

// Largest n with F^i(z) and F^i(z') in the same Markov atom for all i <= n,
// by exact dyadic iteration; the marker is returned when no separation
// occurs within the horizon. Both points must start in the same atom.
SeparationResult separation_time(const SymbolicPoint& z, const SymbolicPoint& z_prime,
                                 const TowerModel& tower, int horizon);

// Ulam operator on the truncated tower: mass rides up within {R > q} and
// returns to the base through f^{R_i}. bins_per_level must be a power of two
// so cell measures stay dyadic.
UlamOperator tower_ulam(const TowerModel& tower, int bins_per_level);

// Pushforward of the tower stationary vector to the unit interval through
// the level maps, as a density histogram on grid_cells equal bins.
std::vector<double> push_stationary_to_interval(const TowerModel& tower,
                                                const std::vector<double>& stationary,
                                                int bins_per_level, int grid_cells);

// Backward-contraction audit: random exact pairs with common histories of
// depth q, checked against d(pi(y), pi(y')) <= alpha^min(q, s(y,y')) with
// alpha = 1/2.
struct ContractionCheck {
    long pairs_checked = 0;
    long violations = 0;
    double worst_ratio = 0.0;  // max d / bound
};
ContractionCheck contraction_check(const TowerModel& tower, int q, long pairs,
                                   std::uint64_t seed);

// f^steps of a base point of the underlying interval map, exact.
Dyadic exact_interval_orbit(const TowerModel& tower, Dyadic x, int steps);

std::string tower_summary_json(const TowerModel& tower);
void tower_branch_csv(const TowerModel& tower, std::ostream& out);

}  // namespace ergo
