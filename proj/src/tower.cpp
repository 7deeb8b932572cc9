#include "ergolab/tower.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "ergolab/format.hpp"
#include "ergolab/rng.hpp"

namespace ergo {

namespace {

constexpr int kMaxTowerDepth = 55;

struct MapBranch {
    DyadicInterval dom;
    DyadicAffine f;
};

// Exact affine branch structure of the dyadic catalog maps.
std::vector<MapBranch> dyadic_map_branches(const std::string& name) {
    Dyadic zero = Dyadic::zero();
    Dyadic half(1, 1);
    Dyadic one = Dyadic::one();
    Dyadic two(2, 0);
    if (name == "doubling") {
        return {
            {{zero, half}, {1, 1, zero}},
            {{half, one}, {1, 1, -one}},
        };
    }
    if (name == "tent") {
        return {
            {{zero, half}, {1, 1, zero}},
            {{half, one}, {-1, 1, two}},
        };
    }
    throw capability_error("towers need a piecewise-affine dyadic Markov map "
                           "(doubling or tent), got \"" + name + "\"");
}

}  // namespace

bool DyadicInterval::contains(const Dyadic& x) const {
    if (x < lo || (x == lo && !lo_closed)) return false;
    if (hi < x || (x == hi && !hi_closed)) return false;
    return true;
}

bool DyadicInterval::empty() const {
    if (hi < lo) return true;
    if (lo == hi) return !(lo_closed && hi_closed);
    return false;
}

std::string DyadicInterval::to_string() const {
    return (lo_closed ? "[" : "(") + lo.to_string() + ", " + hi.to_string() +
           (hi_closed ? "]" : ")");
}

Dyadic DyadicAffine::apply(const Dyadic& x) const {
    Dyadic scaled = x.times_pow2(log2_slope);
    return (sign < 0 ? -scaled : scaled) + offset;
}

Dyadic DyadicAffine::invert(const Dyadic& y) const {
    Dyadic t = y - offset;
    if (sign < 0) t = -t;
    return t.times_pow2(-log2_slope);
}

DyadicInterval DyadicAffine::apply(const DyadicInterval& iv) const {
    DyadicInterval out;
    if (sign > 0) {
        out = {apply(iv.lo), apply(iv.hi), iv.lo_closed, iv.hi_closed};
    } else {
        out = {apply(iv.hi), apply(iv.lo), iv.hi_closed, iv.lo_closed};
    }
    return out;
}

DyadicInterval DyadicAffine::invert(const DyadicInterval& iv) const {
    DyadicInterval out;
    if (sign > 0) {
        out = {invert(iv.lo), invert(iv.hi), iv.lo_closed, iv.hi_closed};
    } else {
        out = {invert(iv.hi), invert(iv.lo), iv.hi_closed, iv.lo_closed};
    }
    return out;
}

DyadicAffine DyadicAffine::after(const DyadicAffine& other) const {
    // this(other(x)) = sign*2^k*(s2*2^k2*x + c2) + c
    DyadicAffine out;
    out.sign = sign * other.sign;
    out.log2_slope = log2_slope + other.log2_slope;
    Dyadic scaled = other.offset.times_pow2(log2_slope);
    out.offset = (sign < 0 ? -scaled : scaled) + offset;
    return out;
}

namespace {

DyadicInterval intersect(const DyadicInterval& a, const DyadicInterval& b) {
    DyadicInterval out;
    if (a.lo > b.lo) {
        out.lo = a.lo;
        out.lo_closed = a.lo_closed;
    } else if (b.lo > a.lo) {
        out.lo = b.lo;
        out.lo_closed = b.lo_closed;
    } else {
        out.lo = a.lo;
        out.lo_closed = a.lo_closed && b.lo_closed;
    }
    if (a.hi < b.hi) {
        out.hi = a.hi;
        out.hi_closed = a.hi_closed;
    } else if (b.hi < a.hi) {
        out.hi = b.hi;
        out.hi_closed = b.hi_closed;
    } else {
        out.hi = a.hi;
        out.hi_closed = a.hi_closed && b.hi_closed;
    }
    return out;
}

// Parts of iv strictly below / inside / strictly above the base window.
struct SplitResult {
    DyadicInterval below, inside, above;
};

SplitResult split_against(const DyadicInterval& iv, const DyadicInterval& base) {
    SplitResult r;
    r.inside = intersect(iv, base);
    r.below = intersect(iv, DyadicInterval{iv.lo, base.lo, iv.lo_closed, !base.lo_closed});
    r.above = intersect(iv, DyadicInterval{base.hi, iv.hi, !base.hi_closed, iv.hi_closed});
    return r;
}

}  // namespace

double TowerModel::tail_remainder() const {
    return tail_mass.to_double() / base_mass().to_double();
}

Dyadic TowerModel::level_mass(int q) const {
    Dyadic m = tail_mass;
    for (const auto& b : branches)
        if (b.return_time > q) m = m + b.cell.length();
    return m;
}

std::optional<int> TowerModel::branch_of(const Dyadic& x) const {
    long lo = 0, hi = static_cast<long>(branches.size());
    while (lo < hi) {
        long mid = (lo + hi) / 2;
        const auto& cell = branches[static_cast<size_t>(mid)].cell;
        if (cell.contains(x)) return static_cast<int>(mid);
        if (x < cell.lo || (x == cell.lo && !cell.lo_closed))
            hi = mid;
        else
            lo = mid + 1;
    }
    return std::nullopt;
}

TowerModel build_first_return_tower(const DynamicalSystem& sys, DyadicInterval base,
                                    int q_max) {
    if (q_max < 1) throw parameter_error("q_max must be >= 1");
    if (q_max > kMaxTowerDepth - 2)
        throw parameter_error("q_max beyond " + std::to_string(kMaxTowerDepth - 2) +
                              " exceeds the exact dyadic range");
    if (!sys.dyadic_affine)
        throw capability_error("towers need a piecewise-affine dyadic Markov map "
                               "(doubling or tent), got \"" + sys.name + "\"");
    if (base.empty() || base.lo < Dyadic::zero() || Dyadic::one() < base.hi)
        throw parameter_error("tower base must be a nonempty dyadic subinterval of [0, 1)");

    const auto map_branches = dyadic_map_branches(sys.name);

    TowerModel tower;
    tower.system = sys.name;
    tower.base = base;
    tower.q_max = q_max;

    struct Piece {
        DyadicInterval cell;   // subset of the base
        DyadicAffine flight;   // f^t on cell
        DyadicInterval image;  // flight(cell)
    };
    std::vector<Piece> frontier = {{base, DyadicAffine::identity(), base}};

    for (int t = 1; t <= q_max && !frontier.empty(); ++t) {
        std::vector<Piece> next;
        for (const auto& piece : frontier) {
            for (const auto& mb : map_branches) {
                DyadicInterval img_part = intersect(piece.image, mb.dom);
                if (img_part.empty() || img_part.length() == Dyadic::zero()) continue;
                DyadicAffine flight = mb.f.after(piece.flight);
                DyadicInterval image = mb.f.apply(img_part);
                SplitResult parts = split_against(image, base);
                if (!parts.inside.empty() && parts.inside.length() > Dyadic::zero()) {
                    TowerBranch branch;
                    branch.cell = flight.invert(parts.inside);
                    branch.return_time = t;
                    branch.ret = flight;
                    // Markov requirement: each first return covers the base.
                    if (!(parts.inside.lo == base.lo && parts.inside.hi == base.hi))
                        throw capability_error(
                            "base " + base.to_string() +
                            " does not induce Markov first returns (a return branch covers only " +
                            parts.inside.to_string() + ")");
                    tower.branches.push_back(std::move(branch));
                }
                for (const auto* side : {&parts.below, &parts.above}) {
                    if (side->empty() || side->length() == Dyadic::zero()) continue;
                    Piece cont;
                    cont.cell = flight.invert(*side);
                    cont.flight = flight;
                    cont.image = *side;
                    next.push_back(std::move(cont));
                }
            }
        }
        frontier = std::move(next);
    }

    Dyadic tail = Dyadic::zero();
    for (const auto& piece : frontier) tail = tail + piece.cell.length();
    tower.tail_mass = tail;

    std::sort(tower.branches.begin(), tower.branches.end(),
              [](const TowerBranch& a, const TowerBranch& b) { return a.cell.lo < b.cell.lo; });

    // Consistency: branch masses plus the tail recover the base exactly.
    Dyadic total = tail;
    for (const auto& b : tower.branches) total = total + b.cell.length();
    if (total != tower.base_mass())
        throw error("tower bookkeeping lost mass: " + total.to_string() + " vs " +
                    tower.base_mass().to_string());
    return tower;
}

double return_tail(const TowerModel& tower, int n) {
    if (n < 1) throw parameter_error("n must be >= 1");
    if (n > tower.q_max)
        throw truncation_error("return tail is only known for n <= q_max = " +
                               std::to_string(tower.q_max));
    Dyadic mass = tower.tail_mass;
    for (const auto& b : tower.branches)
        if (b.return_time >= n) mass = mass + b.cell.length();
    return mass.to_double() / tower.base_mass().to_double();
}

TailFit fit_return_tail(const TowerModel& tower) {
    // Least squares of log m(R >= n | base) on n over n = 2..q_max.
    std::vector<double> xs, ys;
    for (int n = 2; n <= tower.q_max; ++n) {
        double tail = return_tail(tower, n);
        if (tail <= 0.0) break;
        xs.push_back(static_cast<double>(n));
        ys.push_back(std::log(tail));
    }
    if (xs.size() < 2) throw truncation_error("too few tail points for a fit");
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    TailFit fit;
    fit.log_theta = sxy / sxx;
    fit.intercept = my - fit.log_theta * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

double kac_check(const TowerModel& tower) {
    if (tower.tail_remainder() >= 1e-6)
        throw truncation_error("truncated mass " + std::to_string(tower.tail_remainder()) +
                               " too large for the Kac check (needs < 1e-6)");
    // E[R | base] * m(base) = sum_i R_i * |cell_i|, exact dyadics summed in
    // double only at the end.
    double acc = 0.0;
    for (const auto& b : tower.branches)
        acc += static_cast<double>(b.return_time) * b.cell.length().to_double();
    return acc;
}

namespace {

struct Atom {
    int level;
    int branch;
    bool operator==(const Atom& o) const { return level == o.level && branch == o.branch; }
};

// One tower step: ride a level or return to the base.
SymbolicPoint tower_step(const TowerModel& tower, const SymbolicPoint& z, int branch_idx) {
    const auto& br = tower.branches[static_cast<size_t>(branch_idx)];
    if (z.level + 1 < br.return_time) return {z.x, z.level + 1};
    return {br.ret.apply(z.x), 0};
}

Atom atom_of(const TowerModel& tower, const SymbolicPoint& z) {
    auto idx = tower.branch_of(z.x);
    if (!idx)
        throw truncation_error("point " + z.x.to_string() +
                               " lies in the truncated tail; raise q_max");
    const auto& br = tower.branches[static_cast<size_t>(*idx)];
    if (z.level >= br.return_time)
        throw parameter_error("level " + std::to_string(z.level) +
                              " exceeds the return time of the point's branch");
    return {z.level, *idx};
}

}  // namespace

SeparationResult separation_time(const SymbolicPoint& z, const SymbolicPoint& z_prime,
                                 const TowerModel& tower, int horizon) {
    if (horizon < 1) throw parameter_error("horizon must be >= 1");
    Atom a = atom_of(tower, z);
    Atom b = atom_of(tower, z_prime);
    if (!(a == b))
        throw parameter_error("separation time needs both points in the same tower atom");
    SymbolicPoint p = z, q = z_prime;
    for (int i = 1; i <= horizon; ++i) {
        p = tower_step(tower, p, a.branch);
        q = tower_step(tower, q, b.branch);
        a = atom_of(tower, p);
        b = atom_of(tower, q);
        if (!(a == b)) return {i - 1, false};
    }
    return {horizon, true};
}

namespace {

std::vector<DyadicInterval> level_bins(const TowerModel& tower, int nb) {
    int k = 0;
    while ((1 << k) < nb) ++k;
    const Dyadic width = tower.base_mass().times_pow2(-k);
    std::vector<DyadicInterval> bins;
    bins.reserve(static_cast<size_t>(nb));
    Dyadic left = tower.base.lo;
    for (int b = 0; b < nb; ++b) {
        Dyadic right = b + 1 == nb ? tower.base.hi : left + width;
        DyadicInterval iv{left, right, true, false};
        if (b + 1 == nb) iv.hi_closed = tower.base.hi_closed;
        if (b == 0) iv.lo_closed = tower.base.lo_closed;
        bins.push_back(iv);
        left = right;
    }
    return bins;
}

}  // namespace

UlamOperator tower_ulam(const TowerModel& tower, int bins_per_level) {
    if (bins_per_level < 1 || (bins_per_level & (bins_per_level - 1)) != 0)
        throw parameter_error("bins_per_level must be a power of two for exact dyadic assembly");
    if (tower.tail_remainder() >= 1e-6)
        throw truncation_error("truncated mass too large for a tower operator (needs < 1e-6)");

    const int nb = bins_per_level;
    const std::vector<DyadicInterval> bins = level_bins(tower, nb);

    // Cells: (level q, bin b) with positive truncated mass.
    struct Cell {
        int q, b;
        Dyadic mass;
    };
    std::vector<Cell> cells;
    std::vector<std::vector<int>> index(static_cast<size_t>(tower.q_max),
                                        std::vector<int>(static_cast<size_t>(nb), -1));
    for (int q = 0; q < tower.q_max; ++q) {
        for (int b = 0; b < nb; ++b) {
            Dyadic mass = Dyadic::zero();
            for (const auto& br : tower.branches) {
                if (br.return_time <= q) continue;
                DyadicInterval piece = intersect(br.cell, bins[static_cast<size_t>(b)]);
                if (!piece.empty()) mass = mass + piece.length();
            }
            if (mass > Dyadic::zero()) {
                index[static_cast<size_t>(q)][static_cast<size_t>(b)] = static_cast<int>(cells.size());
                cells.push_back({q, b, mass});
            }
        }
    }

    const int n = static_cast<int>(cells.size());
    UlamOperator op;
    op.system = "tower(" + tower.system + ", " + tower.base.to_string() + ")";
    op.kind = UlamKind::tower;
    op.bins = n;
    op.matrix.assign(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);

    for (int c = 0; c < n; ++c) {
        const auto& cell = cells[static_cast<size_t>(c)];
        const double cell_mass = cell.mass.to_double();
        for (const auto& br : tower.branches) {
            if (br.return_time <= cell.q) continue;
            DyadicInterval piece = intersect(br.cell, bins[static_cast<size_t>(cell.b)]);
            if (piece.empty() || piece.length() == Dyadic::zero()) continue;
            if (br.return_time > cell.q + 1) {
                int up = index[static_cast<size_t>(cell.q) + 1][static_cast<size_t>(cell.b)];
                if (up >= 0)
                    op.entry(c, up) += piece.length().to_double() / cell_mass;
            } else {
                // Return step: the affine image carries the piece's mass
                // uniformly, so a landing bin receives |land| / |slope|.
                DyadicInterval image = br.ret.apply(piece);
                const double inv_slope = std::ldexp(1.0, -br.ret.log2_slope);
                for (int b2 = 0; b2 < nb; ++b2) {
                    DyadicInterval land = intersect(image, bins[static_cast<size_t>(b2)]);
                    if (land.empty() || land.length() == Dyadic::zero()) continue;
                    int down = index[0][static_cast<size_t>(b2)];
                    if (down >= 0)
                        op.entry(c, down) += land.length().to_double() * inv_slope / cell_mass;
                }
            }
        }
    }
    return op;
}

std::vector<double> push_stationary_to_interval(const TowerModel& tower,
                                                const std::vector<double>& stationary,
                                                int bins_per_level, int grid_cells) {
    if (grid_cells < 1) throw parameter_error("grid_cells must be >= 1");
    const int nb = bins_per_level;
    const std::vector<DyadicInterval> bins = level_bins(tower, nb);

    // Same cell enumeration as tower_ulam.
    struct Cell {
        int q, b;
        double mass;
    };
    std::vector<Cell> cells;
    for (int q = 0; q < tower.q_max; ++q)
        for (int b = 0; b < nb; ++b) {
            double mass = 0.0;
            for (const auto& br : tower.branches) {
                if (br.return_time <= q) continue;
                DyadicInterval piece = intersect(br.cell, bins[static_cast<size_t>(b)]);
                if (!piece.empty()) mass += piece.length().to_double();
            }
            if (mass > 0.0) cells.push_back({q, b, mass});
        }
    if (cells.size() != stationary.size())
        throw parameter_error("stationary vector does not match the tower cell layout");

    std::vector<double> hist(static_cast<size_t>(grid_cells), 0.0);
    const double g = grid_cells;
    const auto map_branches = dyadic_map_branches(tower.system);

    for (size_t c = 0; c < cells.size(); ++c) {
        const auto& cell = cells[c];
        for (const auto& br : tower.branches) {
            if (br.return_time <= cell.q) continue;
            DyadicInterval piece = intersect(br.cell, bins[static_cast<size_t>(cell.b)]);
            if (piece.empty() || piece.length() == Dyadic::zero()) continue;
            // Push the piece through f^q exactly (it stays inside one map
            // branch at every intermediate step by construction).
            DyadicInterval img = piece;
            for (int t = 0; t < cell.q; ++t) {
                bool stepped = false;
                for (const auto& mb : map_branches) {
                    DyadicInterval part = intersect(img, mb.dom);
                    if (part.empty() || part.length() == Dyadic::zero()) continue;
                    if (!(part.length() == img.length()))
                        throw error("tower piece straddles a map branch during projection");
                    img = mb.f.apply(part);
                    stepped = true;
                    break;
                }
                if (!stepped) throw error("tower projection lost a piece");
            }
            double weight = stationary[c] * piece.length().to_double() / cell.mass;
            double lo = img.lo.to_double(), hi = img.hi.to_double();
            double len = hi - lo;
            if (len <= 0.0) continue;
            int j_lo = std::clamp(static_cast<int>(std::floor(lo * g)), 0, grid_cells - 1);
            int j_hi = std::clamp(static_cast<int>(std::ceil(hi * g)), 1, grid_cells);
            for (int j = j_lo; j < j_hi; ++j) {
                double a = std::max(lo, j / g);
                double b = std::min(hi, (j + 1) / g);
                if (b > a) hist[static_cast<size_t>(j)] += weight * (b - a) / len;
            }
        }
    }
    // Convert cell masses to densities on the grid.
    for (auto& h : hist) h *= g;
    return hist;
}

ContractionCheck contraction_check(const TowerModel& tower, int q, long pairs,
                                   std::uint64_t seed) {
    if (q < 0) throw parameter_error("q must be >= 0");
    ContractionCheck result;
    SplitMix64 rng = SplitMix64::stream(seed, 0xc0ffee);
    const int depth = 46;
    const int horizon = q + 60;
    const Dyadic base_len = tower.base_mass();

    // base.lo + frac * |base|, all dyadic-exact.
    auto scale_into_base = [&](std::uint64_t bits) {
        Dyadic frac(static_cast<std::int64_t>(bits), depth);
        __int128 num = static_cast<__int128>(frac.num) * base_len.num;
        int ex = frac.exp + base_len.exp;
        while (ex > 0 && (num & 1) == 0) {
            num >>= 1;
            --ex;
        }
        if (num > INT64_MAX) throw parameter_error("contraction pair out of range");
        return tower.base.lo + Dyadic(static_cast<std::int64_t>(num), ex);
    };

    long attempts = 0;
    while (result.pairs_checked < pairs && attempts < pairs * 200) {
        ++attempts;
        // Random exact pair in the base sharing a prefix of random depth.
        std::uint64_t bits_a = rng.next_u64() >> (64 - depth);
        int shared = 4 + static_cast<int>(rng.next_u64() % 38);
        std::uint64_t mask = ~((1ULL << (depth - shared)) - 1);
        std::uint64_t bits_b = (bits_a & mask) | ((rng.next_u64() >> (64 - depth)) & ~mask);
        Dyadic xa = scale_into_base(bits_a);
        Dyadic xb = scale_into_base(bits_b);
        if (!tower.base.contains(xa) || !tower.base.contains(xb)) continue;

        SymbolicPoint za{xa, 0}, zb{xb, 0};
        // Both must sit in known branches and share the starting atom.
        try {
            Atom a = atom_of(tower, za);
            Atom b = atom_of(tower, zb);
            if (!(a == b)) continue;
            SeparationResult shist = separation_time(za, zb, tower, std::max(1, q));
            int agree = shist.at_least_horizon ? std::max(1, q) : shist.value;
            if (agree < q) continue;  // common history shorter than q

            // Advance both q steps (the lemma's F^q images).
            SymbolicPoint ya = za, yb = zb;
            for (int t = 0; t < q; ++t) {
                Atom cur = atom_of(tower, ya);
                ya = tower_step(tower, ya, cur.branch);
                Atom cur2 = atom_of(tower, yb);
                yb = tower_step(tower, yb, cur2.branch);
            }
            Atom a2 = atom_of(tower, ya);
            Atom b2 = atom_of(tower, yb);
            double dist;
            int s_eff;
            if (a2 == b2) {
                SeparationResult s = separation_time(ya, yb, tower, horizon);
                s_eff = s.at_least_horizon ? horizon : s.value;
            } else {
                s_eff = 0;
            }
            Dyadic pa = exact_interval_orbit(tower, ya.x, ya.level);
            Dyadic pb = exact_interval_orbit(tower, yb.x, yb.level);
            dist = std::fabs((pa - pb).to_double());
            double bound = std::ldexp(1.0, -std::min(q, s_eff));
            ++result.pairs_checked;
            double ratio = bound > 0.0 ? dist / bound : 0.0;
            result.worst_ratio = std::max(result.worst_ratio, ratio);
            if (dist > bound) ++result.violations;
        } catch (const truncation_error&) {
            continue;  // pair wandered into the truncated tail
        }
    }
    if (result.pairs_checked < pairs)
        throw sampling_error("could not realize enough exact pairs for the contraction check");
    return result;
}

Dyadic exact_interval_orbit(const TowerModel& tower, Dyadic x, int steps) {
    const auto map_branches = dyadic_map_branches(tower.system);
    for (int t = 0; t < steps; ++t) {
        bool stepped = false;
        for (const auto& mb : map_branches) {
            if (mb.dom.contains(x)) {
                x = mb.f.apply(x);
                stepped = true;
                break;
            }
        }
        if (!stepped) throw error("exact orbit left [0,1)");
        if (x == Dyadic::one()) x = Dyadic::zero();
    }
    return x;
}

std::string tower_summary_json(const TowerModel& tower) {
    TailFit fit = fit_return_tail(tower);
    std::ostringstream s;
    s << "{\"base\": \"" << tower.base.lo.to_string() << ".." << tower.base.hi.to_string()
      << "\", \"branch_count\": " << tower.branch_count() << ", \"q_max\": " << tower.q_max
      << ", \"tail_remainder\": " << format_full(tower.tail_remainder())
      << ", \"kac_product\": " << format_full(kac_check(tower))
      << ", \"fitted_log_theta\": " << format_full(fit.log_theta) << "}";
    return s.str();
}

void tower_branch_csv(const TowerModel& tower, std::ostream& out) {
    out << "branch_index,left,right,return_time\n";
    for (size_t i = 0; i < tower.branches.size(); ++i) {
        const auto& b = tower.branches[i];
        out << i << ',' << b.cell.lo.to_string() << ',' << b.cell.hi.to_string() << ','
            << b.return_time << '\n';
    }
}

}  // namespace ergo
