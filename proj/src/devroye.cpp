#include "ergolab/devroye.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ergolab/format.hpp"

namespace ergo {

namespace {

constexpr double kZeroVarianceFloor = 1e-18;

void scale_estimate(EstimateWithCI& e, double factor) {
    e.value *= factor;
    e.std_error *= factor;
    e.ci_low *= factor;
    e.ci_high *= factor;
}

}  // namespace

std::string FamilySpec::label() const {
    if (family == "constant") return "constant";
    return family + "-" + phi;
}

HoelderObservable build_family(const FamilySpec& f, int n) {
    if (f.family == "birkhoff") return make_birkhoff(phi_catalog(f.phi), n);
    if (f.family == "pair-correlation") return make_pair_correlation(phi_catalog(f.phi), n);
    if (f.family == "weighted-sup")
        return make_weighted_sup(phi_catalog(f.phi), std::vector<double>(static_cast<size_t>(n), 1.0));
    if (f.family == "constant") return make_constant(f.constant_value, n);
    throw parameter_error("unknown family \"" + f.family +
                          "\"; choices: birkhoff, pair-correlation, weighted-sup, constant");
}

DevroyeReport devroye_ratio(const HoelderObservable& k, const DynamicalSystem& sys,
                            const EnsembleSpec& spec) {
    DevroyeReport report;
    report.system = sys.name;
    report.family = k.family_tag;
    report.eta = k.exponent;
    report.n = k.arity;
    report.sum_l2 = k.sum_l2();
    if (!std::isfinite(report.sum_l2))
        throw parameter_error("sum of squared Hoelder constants is not finite");

    report.variance = estimate_variance(k, sys, spec);

    if (report.sum_l2 <= 0.0) {
        if (report.variance.value > kZeroVarianceFloor)
            throw inconsistent_constants_error(
                "stored Hoelder constants are all zero but the observable varies "
                "(variance " + format_full(report.variance.value) + ")");
        report.ratio = EstimateWithCI{};
        report.ratio.sample_count = report.variance.sample_count;
        report.ratio.method = report.variance.method;
        report.caveats.push_back("degenerate-zero-variance");
    } else {
        report.ratio = report.variance;
        scale_estimate(report.ratio, 1.0 / report.sum_l2);
    }
    if (sys.dim > 1) report.caveats.push_back("srb-surrogate-sampling");
    report.d_running = report.ratio.ci_high;
    return report;
}

DevroyeSummary estimate_constant_D(const DynamicalSystem& sys,
                                   const std::vector<FamilySpec>& families,
                                   const std::vector<int>& n_grid, double eta,
                                   const EnsembleSpec& spec) {
    if (families.empty()) throw parameter_error("family list must be nonempty");
    if (n_grid.empty()) throw parameter_error("n grid must be nonempty");

    DevroyeSummary summary;
    summary.eta = eta;
    summary.n_grid = n_grid;
    summary.seed = spec.master_seed;
    summary.argmax_system = sys.name;

    double running = 0.0;
    for (const auto& fam : families) {
        FamilyTrend trend;
        trend.family = fam.label();
        for (int n : n_grid) {
            HoelderObservable k = build_family(fam, n);
            if (k.exponent != eta)
                throw parameter_error("family " + fam.label() + " has exponent " +
                                      format_full(k.exponent) + ", sweep expects eta = " +
                                      format_full(eta));
            DevroyeReport r = devroye_ratio(k, sys, spec);
            running = std::max(running, r.ratio.ci_high);
            r.d_running = running;
            if (r.ratio.ci_high >= summary.d_running) {
                summary.d_running = r.ratio.ci_high;
                summary.argmax_family = r.family;
                summary.argmax_n = r.n;
            }
            trend.ratios.push_back(r.ratio.value);
            summary.reports.push_back(std::move(r));
        }
        // Trend of ratio against n on log-log axes; flat means the bound is
        // n-uniform for this family.
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        long m = 0;
        for (size_t i = 0; i < trend.ratios.size(); ++i) {
            if (!(trend.ratios[i] > 0.0)) continue;
            double x = std::log(static_cast<double>(n_grid[i]));
            double y = std::log(trend.ratios[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++m;
        }
        trend.loglog_slope =
            m >= 2 ? (sxy - sx * sy / m) / (sxx - sx * sx / m) : 0.0;
        summary.trends.push_back(std::move(trend));
    }
    return summary;
}

std::string devroye_csv(const std::vector<DevroyeReport>& reports) {
    std::ostringstream out;
    out << "system,family,eta,n,variance,variance_se,sum_L2,ratio,ratio_ci_low,ratio_ci_high,caveats\n";
    for (const auto& r : reports) {
        std::string caveats;
        for (size_t i = 0; i < r.caveats.size(); ++i) {
            if (i) caveats += ';';
            caveats += r.caveats[i];
        }
        out << r.system << ',' << r.family << ',' << format_full(r.eta) << ',' << r.n << ','
            << format_full(r.variance.value) << ',' << format_full(r.variance.std_error) << ','
            << format_full(r.sum_l2) << ',' << format_full(r.ratio.value) << ','
            << format_full(r.ratio.ci_low) << ',' << format_full(r.ratio.ci_high) << ','
            << caveats << '\n';
    }
    return out.str();
}

std::string devroye_summary_json(const DevroyeSummary& summary) {
    std::ostringstream s;
    s << "{\"D_running\": " << format_full(summary.d_running) << ", \"argmax_config\": {\"system\": \""
      << summary.argmax_system << "\", \"family\": \"" << summary.argmax_family
      << "\", \"n\": " << summary.argmax_n << "}, \"eta\": " << format_full(summary.eta)
      << ", \"grid\": [";
    for (size_t i = 0; i < summary.n_grid.size(); ++i) {
        if (i) s << ", ";
        s << summary.n_grid[i];
    }
    s << "], \"seed\": " << summary.seed << ", \"trends\": [";
    for (size_t i = 0; i < summary.trends.size(); ++i) {
        if (i) s << ", ";
        s << "{\"family\": \"" << summary.trends[i].family << "\", \"ratios\": [";
        for (size_t j = 0; j < summary.trends[i].ratios.size(); ++j) {
            if (j) s << ", ";
            s << format_full(summary.trends[i].ratios[j]);
        }
        s << "], \"loglog_slope\": " << format_full(summary.trends[i].loglog_slope) << "}";
    }
    s << "]}";
    return s.str();
}

std::string devroye_svg(const std::vector<DevroyeReport>& reports) {
    // Ratio against window length, one polyline per family, log10 x-axis.
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    double x_min = 1e300, x_max = -1e300, y_min = 0.0, y_max = -1e300;
    for (const auto& r : reports) {
        double x = std::log10(static_cast<double>(r.n));
        series[r.family].push_back({x, r.ratio.value});
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        y_max = std::max(y_max, r.ratio.ci_high);
    }
    if (series.empty()) throw parameter_error("nothing to plot");
    if (x_max <= x_min) x_max = x_min + 1.0;
    if (y_max <= y_min) y_max = y_min + 1.0;

    const double w = 640.0, h = 420.0, ml = 70.0, mr = 20.0, mt = 20.0, mb = 50.0;
    auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (w - ml - mr); };
    auto py = [&](double y) { return h - mb - (y - y_min) / (y_max - y_min) * (h - mt - mb); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
    s << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    s << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
      << h - mb << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">log10 n</text>\n";
    s << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
      << (mt + h - mb) / 2 << ")\">var / sum L_j^2</text>\n";

    static const char* colors[] = {"#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400"};
    int ci = 0;
    double legend_y = mt + 14.0;
    for (const auto& [family, pts] : series) {
        const char* color = colors[ci % 5];
        std::ostringstream poly;
        for (const auto& [x, y] : pts) poly << format_full(px(x)) << ',' << format_full(py(y)) << ' ';
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
          << poly.str() << "\"/>\n";
        for (const auto& [x, y] : pts)
            s << "<circle cx=\"" << format_full(px(x)) << "\" cy=\"" << format_full(py(y))
              << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        s << "<text x=\"" << w - mr - 8 << "\" y=\"" << legend_y
          << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << family
          << "</text>\n";
        legend_y += 16.0;
        ++ci;
    }
    s << "</svg>\n";
    return s.str();
}

void inequality_report(const std::vector<DevroyeReport>& reports,
                       const DevroyeSummary* summary,
                       const std::filesystem::path& csv_path,
                       const std::filesystem::path& json_path,
                       const std::filesystem::path& svg_path) {
    if (reports.empty()) throw parameter_error("report list must be nonempty");
    auto write = [](const std::filesystem::path& p, const std::string& content) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw io_error("cannot open \"" + p.string() + "\" for writing");
        out << content;
        if (!out) throw io_error("failed writing \"" + p.string() + "\"");
    };
    if (!csv_path.empty()) write(csv_path, devroye_csv(reports));
    if (!json_path.empty() && summary) write(json_path, devroye_summary_json(*summary));
    if (!svg_path.empty()) write(svg_path, devroye_svg(reports));
}

}  // namespace ergo
