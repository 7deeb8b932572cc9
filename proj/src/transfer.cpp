#include "ergolab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <ostream>
#include <sstream>

#include "ergolab/format.hpp"
#include "ergolab/rng.hpp"

namespace ergo {

namespace {

constexpr double kStationaryTol = 1e-12;
constexpr long kIterCap = 100000;

// 8-point Gauss-Legendre nodes/weights on [0,1].
constexpr int kQuad = 8;
constexpr double kQx[kQuad] = {0.01985507175123188, 0.10166676129318664, 0.2372337950418355,
                               0.40828267875217505, 0.5917173212478249,  0.7627662049581645,
                               0.8983332387068134,  0.9801449282487681};
constexpr double kQw[kQuad] = {0.05061426814518813, 0.11119051722668723, 0.15685332293894364,
                               0.18134189168918097, 0.18134189168918097, 0.15685332293894364,
                               0.11119051722668723, 0.05061426814518813};

double bin_average(const std::function<double(double)>& f, double lo, double hi) {
    double s = 0.0;
    double len = hi - lo;
    for (int q = 0; q < kQuad; ++q) s += kQw[q] * f(lo + len * kQx[q]);
    return s;
}

}  // namespace

Interval UlamOperator::bin_interval(int i) const {
    if (kind != UlamKind::interval)
        throw capability_error("bin geometry is only defined for interval operators");
    double w = 1.0 / bins;
    return {i * w, (i + 1) * w};
}

UlamOperator build_ulam(const DynamicalSystem& sys, int bins) {
    if (sys.dim != 1)
        throw capability_error("Ulam discretization needs a one-dimensional system, got \"" +
                               sys.name + "\"");
    if (bins < 1) throw parameter_error("bin count must be >= 1");

    const auto branches = monotone_branches(sys);
    UlamOperator op;
    op.system = sys.name;
    op.kind = UlamKind::interval;
    op.bins = bins;
    op.matrix.assign(static_cast<size_t>(bins) * static_cast<size_t>(bins), 0.0);

    const double n = bins;
    for (const auto& br : branches) {
        int i_lo = static_cast<int>(std::floor(br.lo * n));
        int i_hi = static_cast<int>(std::ceil(br.hi * n));
        i_lo = std::clamp(i_lo, 0, bins - 1);
        i_hi = std::clamp(i_hi, 1, bins);
        for (int i = i_lo; i < i_hi; ++i) {
            double a = std::max(br.lo, i / n);
            double b = std::min(br.hi, (i + 1) / n);
            if (b <= a) continue;
            double fa = br.fwd(a), fb = br.fwd(b);
            double im_lo = std::min(fa, fb), im_hi = std::max(fa, fb);
            int j_lo = std::clamp(static_cast<int>(std::floor(im_lo * n)), 0, bins - 1);
            int j_hi = std::clamp(static_cast<int>(std::ceil(im_hi * n)), 1, bins);
            for (int j = j_lo; j < j_hi; ++j) {
                double c = std::max(im_lo, j / n);
                double d = std::min(im_hi, (j + 1) / n);
                if (d <= c) continue;
                double mass = std::fabs(br.inv(d) - br.inv(c));
                op.entry(i, j) += mass * n;  // divided by m(B_i) = 1/N
            }
        }
    }
    return op;
}

std::vector<double> stationary_of_matrix(const std::vector<double>& matrix, int n,
                                         double tol, long max_iter, double* residual_out) {
    std::vector<double> v(static_cast<size_t>(n), 1.0 / n);
    std::vector<double> w(static_cast<size_t>(n), 0.0);
    double residual = 0.0;
    for (long it = 0; it < max_iter; ++it) {
        std::fill(w.begin(), w.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            double vi = v[static_cast<size_t>(i)];
            if (vi == 0.0) continue;
            const double* row = &matrix[static_cast<size_t>(i) * static_cast<size_t>(n)];
            for (int j = 0; j < n; ++j) w[static_cast<size_t>(j)] += vi * row[j];
        }
        double sum = 0.0;
        for (double x : w) sum += x;
        for (double& x : w) x /= sum;
        residual = 0.0;
        for (int j = 0; j < n; ++j) residual += std::fabs(w[static_cast<size_t>(j)] - v[static_cast<size_t>(j)]);
        v.swap(w);
        if (residual <= tol) {
            if (residual_out) *residual_out = residual;
            return v;
        }
    }
    throw convergence_error("stationary density did not converge after " +
                                std::to_string(max_iter) + " iterations",
                            residual);
}

namespace {

// One deflated step: w <- w P - (sum w P) pi, so the fixed direction never
// re-enters and the iteration sees only the remainder of the spectrum.
void deflated_step(const std::vector<double>& matrix, int n,
                   const std::vector<double>& pi, const std::vector<double>& w,
                   std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = 0; i < n; ++i) {
        double wi = w[static_cast<size_t>(i)];
        if (wi == 0.0) continue;
        const double* row = &matrix[static_cast<size_t>(i) * static_cast<size_t>(n)];
        for (int j = 0; j < n; ++j) out[static_cast<size_t>(j)] += wi * row[j];
    }
    double s = 0.0;
    for (double x : out) s += x;
    for (int j = 0; j < n; ++j) out[static_cast<size_t>(j)] -= s * pi[static_cast<size_t>(j)];
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace

double second_eigenvalue_of_matrix(const std::vector<double>& matrix, int n,
                                   const std::vector<double>& stationary,
                                   double tol, long max_iter) {
    if (n == 1) return 0.0;
    SplitMix64 rng(0x51ab2eULL);
    std::vector<double> q1(static_cast<size_t>(n)), q2(static_cast<size_t>(n));
    for (auto& x : q1) x = rng.next_double() - 0.5;
    for (auto& x : q2) x = rng.next_double() - 0.5;

    auto orthonormalize = [&](std::vector<double>& a, std::vector<double>& b) -> bool {
        double na = norm2(a);
        if (na < 1e-300) return false;
        for (auto& x : a) x /= na;
        double r = dot(a, b);
        for (size_t i = 0; i < b.size(); ++i) b[i] -= r * a[i];
        double nb = norm2(b);
        if (nb < 1e-300) {
            // Degenerate block: restart the second direction.
            for (auto& x : b) x = rng.next_double() - 0.5;
            double r2 = dot(a, b);
            for (size_t i = 0; i < b.size(); ++i) b[i] -= r2 * a[i];
            nb = norm2(b);
            if (nb < 1e-300) return false;
        }
        for (auto& x : b) x /= nb;
        return true;
    };

    if (!orthonormalize(q1, q2)) return 0.0;

    std::vector<double> z1(static_cast<size_t>(n)), z2(static_cast<size_t>(n));
    double estimate = -1.0;
    int stable = 0;
    for (long it = 0; it < max_iter; ++it) {
        deflated_step(matrix, n, stationary, q1, z1);
        deflated_step(matrix, n, stationary, q2, z2);
        // Rayleigh block T = Z Q^T (2x2); its spectrum tracks the dominant
        // pair of the deflated operator, real or complex.
        double t11 = dot(z1, q1), t12 = dot(z1, q2);
        double t21 = dot(z2, q1), t22 = dot(z2, q2);
        double tr = t11 + t22;
        double det = t11 * t22 - t12 * t21;
        std::complex<double> disc = std::sqrt(std::complex<double>(tr * tr - 4.0 * det, 0.0));
        double m1 = std::abs((tr + disc) / 2.0);
        double m2 = std::abs((tr - disc) / 2.0);
        double lam = std::max(m1, m2);

        if (norm2(z1) < 1e-300 && norm2(z2) < 1e-300) return 0.0;
        q1.swap(z1);
        q2.swap(z2);
        if (!orthonormalize(q1, q2)) return std::max(0.0, std::min(lam, 1.0));

        if (estimate >= 0.0 && std::fabs(lam - estimate) <= tol * std::max(1.0, lam)) {
            if (++stable >= 3) return std::clamp(lam, 0.0, 1.0);
        } else {
            stable = 0;
        }
        estimate = lam;
    }
    throw convergence_error("second eigenvalue did not converge after " +
                                std::to_string(max_iter) + " iterations",
                            estimate);
}

const std::vector<double>& stationary_density(UlamOperator& op) {
    if (op.stationary.empty()) {
        op.stationary = stationary_of_matrix(op.matrix, op.bins, kStationaryTol, kIterCap,
                                             &op.stationary_residual);
    }
    return op.stationary;
}

double spectral_gap(UlamOperator& op) {
    stationary_density(op);
    if (op.lambda2 < 0.0)
        op.lambda2 = second_eigenvalue_of_matrix(op.matrix, op.bins, op.stationary,
                                                 kStationaryTol, kIterCap);
    return op.lambda2;
}

std::vector<double> operator_correlation(UlamOperator& op,
                                         const std::function<double(double)>& phi,
                                         const std::function<double(double)>& psi,
                                         int max_lag) {
    if (max_lag < 1) throw parameter_error("max_lag must be >= 1");
    if (op.kind != UlamKind::interval)
        throw capability_error("operator correlations need an interval operator");
    stationary_density(op);

    const int n = op.bins;
    std::vector<double> phi_bar(static_cast<size_t>(n)), psi_bar(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Interval b = op.bin_interval(i);
        phi_bar[static_cast<size_t>(i)] = bin_average(phi, b.lo, b.hi);
        psi_bar[static_cast<size_t>(i)] = bin_average(psi, b.lo, b.hi);
    }
    double mean_phi = dot(op.stationary, phi_bar);
    double mean_psi = dot(op.stationary, psi_bar);

    // Signed measure pi .* phi_bar pushed forward k times.
    std::vector<double> u(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) u[static_cast<size_t>(i)] = op.stationary[static_cast<size_t>(i)] * phi_bar[static_cast<size_t>(i)];

    std::vector<double> corr;
    corr.reserve(static_cast<size_t>(max_lag) + 1);
    std::vector<double> next(static_cast<size_t>(n));
    for (int k = 0; k <= max_lag; ++k) {
        corr.push_back(dot(u, psi_bar) - mean_phi * mean_psi);
        if (k == max_lag) break;
        std::fill(next.begin(), next.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            double ui = u[static_cast<size_t>(i)];
            if (ui == 0.0) continue;
            const double* row = &op.matrix[static_cast<size_t>(i) * static_cast<size_t>(n)];
            for (int j = 0; j < n; ++j) next[static_cast<size_t>(j)] += ui * row[j];
        }
        u.swap(next);
    }
    return corr;
}

void ulam_matrix_csv(const UlamOperator& op, std::ostream& out) {
    out << "row,col,value\n";
    for (int i = 0; i < op.bins; ++i)
        for (int j = 0; j < op.bins; ++j) {
            double v = op.entry(i, j);
            if (v != 0.0) out << i << ',' << j << ',' << format_full(v) << '\n';
        }
}

std::string ulam_summary_json(const UlamOperator& op) {
    std::ostringstream s;
    s << "{\"N\": " << op.bins << ", \"lambda2\": " << format_full(op.lambda2)
      << ", \"gap\": " << format_full(1.0 - op.lambda2)
      << ", \"stationary_l1_error\": " << format_full(op.stationary_residual) << "}";
    return s.str();
}

}  // namespace ergo
