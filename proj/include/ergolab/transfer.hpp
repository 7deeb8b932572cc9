#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ergolab/maps.hpp"

namespace ergo {

enum class UlamKind { interval, tower };

// Row-stochastic discretization of the transfer operator on a bin partition.
// Interval operators use N equal-width bins of [0,1); tower operators index
// (level, bin) cells and are produced by the tower module.
struct UlamOperator {
    std::string system;
    UlamKind kind = UlamKind::interval;
    int bins = 0;
    std::vector<double> matrix;      // row-major bins x bins
    std::vector<double> stationary;  // empty until computed
    double lambda2 = -1.0;           // negative until computed
    double stationary_residual = -1.0;

    double entry(int i, int j) const {
        return matrix[static_cast<size_t>(i) * static_cast<size_t>(bins) + static_cast<size_t>(j)];
    }
    double& entry(int i, int j) {
        return matrix[static_cast<size_t>(i) * static_cast<size_t>(bins) + static_cast<size_t>(j)];
    }
    Interval bin_interval(int i) const;
    double spectral_gap_value() const { return 1.0 - lambda2; }
};

// Exact preimage-measure assembly over the monotone branches; no sampling.
UlamOperator build_ulam(const DynamicalSystem& sys, int bins);

// Left fixed probability vector by power iteration (residual <= 1e-12,
// cap 10^5 iterations). Cached on the operator.
const std::vector<double>& stationary_density(UlamOperator& op);

// Modulus of the second-largest eigenvalue via two-vector subspace iteration
// with the fixed vector deflated; handles complex pairs by reporting the
// block modulus. Requires/computes the stationary vector.
double spectral_gap(UlamOperator& op);

// C(k) = <phi(x) psi(f^k x)> - <phi><psi> under the stationary vector,
// k = 0..max_lag, with phi/psi projected onto bin averages.
std::vector<double> operator_correlation(UlamOperator& op,
                                         const std::function<double(double)>& phi,
                                         const std::function<double(double)>& psi,
                                         int max_lag);

// Shared iteration utilities (also used by the tower operator).
std::vector<double> stationary_of_matrix(const std::vector<double>& matrix, int n,
                                         double tol, long max_iter, double* residual_out);
double second_eigenvalue_of_matrix(const std::vector<double>& matrix, int n,
                                   const std::vector<double>& stationary,
                                   double tol, long max_iter);

void ulam_matrix_csv(const UlamOperator& op, std::ostream& out);
std::string ulam_summary_json(const UlamOperator& op);

}  // namespace ergo
