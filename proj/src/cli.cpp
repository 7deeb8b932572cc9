#include "ergolab/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ergolab/format.hpp"
#include "ergolab/tower.hpp"
#include "ergolab/transfer.hpp"

namespace ergo {

namespace fs = std::filesystem;

namespace {

std::string hash12(const std::string& text) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
    return std::string(buf).substr(0, 12);
}

// Tracks written artifacts so a failure can remove partial output.
struct ArtifactWriter {
    fs::path dir;
    std::string stem;
    std::vector<std::string> written;

    fs::path path(const std::string& ext) const { return dir / (stem + "." + ext); }

    void write(const std::string& ext, const std::string& content) {
        fs::path p = path(ext);
        std::ofstream out(p, std::ios::binary);
        if (!out) throw io_error("cannot open \"" + p.string() + "\" for writing");
        out << content;
        out.flush();
        if (!out) throw io_error("failed writing \"" + p.string() + "\"");
        written.push_back(p.string());
    }

    void rollback() {
        for (const auto& p : written) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        written.clear();
    }
};

std::string csv_of_estimates(const std::vector<EstimateWithCI>& rows, const char* index_name) {
    std::ostringstream out;
    out << index_name << ",value,std_error\n";
    for (size_t i = 0; i < rows.size(); ++i)
        out << i << ',' << format_full(rows[i].value) << ',' << format_full(rows[i].std_error)
            << '\n';
    return out.str();
}

FamilySpec family_spec_of(const RunConfig& cfg) {
    FamilySpec f;
    f.family = cfg.family;
    f.phi = cfg.phi;
    return f;
}

HoelderObservable observable_of(const RunConfig& cfg, int n) {
    if (cfg.family == "weighted-sup" && !cfg.weights.empty())
        return make_weighted_sup(phi_catalog(cfg.phi), cfg.weights);
    return build_family(family_spec_of(cfg), n);
}

void dispatch(const RunConfig& cfg, ArtifactWriter& art, std::ostream& log) {
    DynamicalSystem sys = make_system(cfg.system, cfg.params);

    if (cfg.command == "simulate") {
        State seed{cfg.seed_state[0], sys.dim > 1 ? cfg.seed_state[1] : 0.0};
        Trajectory traj = orbit(sys, seed, cfg.burn_in, cfg.length);
        if (cfg.wants("csv")) {
            std::ostringstream csv;
            csv << (sys.dim > 1 ? "step,x,y\n" : "step,x\n");
            for (size_t i = 0; i < traj.states.size(); ++i) {
                csv << i << ',' << format_full(traj.states[i][0]);
                if (sys.dim > 1) csv << ',' << format_full(traj.states[i][1]);
                csv << '\n';
            }
            art.write("csv", csv.str());
        }
        if (cfg.wants("json")) {
            std::ostringstream js;
            js << "{\"system\": \"" << sys.name << "\", \"burn_in\": " << traj.burn_in
               << ", \"length\": " << traj.states.size() << ", \"final_state\": ["
               << format_full(traj.states.back()[0]);
            if (sys.dim > 1) js << ", " << format_full(traj.states.back()[1]);
            js << "]}";
            art.write("json", js.str());
        }
        log << "simulate: " << traj.states.size() << " states of " << sys.name << " recorded\n";
        return;
    }

    if (cfg.command == "density" || cfg.command == "spectrum") {
        UlamOperator op = build_ulam(sys, cfg.bins);
        stationary_density(op);
        if (cfg.command == "spectrum") spectral_gap(op);
        if (cfg.wants("json")) art.write("json", ulam_summary_json(op));
        if (cfg.wants("csv")) {
            if (cfg.command == "spectrum") {
                std::ostringstream csv;
                ulam_matrix_csv(op, csv);
                art.write("csv", csv.str());
            } else {
                std::ostringstream csv;
                csv << "bin,left,right,density\n";
                for (int i = 0; i < op.bins; ++i) {
                    Interval b = op.bin_interval(i);
                    csv << i << ',' << format_full(b.lo) << ',' << format_full(b.hi) << ','
                        << format_full(op.stationary[static_cast<size_t>(i)] * op.bins) << '\n';
                }
                art.write("csv", csv.str());
            }
        }
        if (cfg.command == "spectrum")
            log << "spectrum: N=" << op.bins << " lambda2=" << format_full(op.lambda2)
                << " gap=" << format_full(1.0 - op.lambda2) << "\n";
        else
            log << "density: N=" << op.bins
                << " residual=" << format_full(op.stationary_residual) << "\n";
        return;
    }

    if (cfg.command == "variance") {
        HoelderObservable k = observable_of(cfg, static_cast<int>(cfg.n));
        EnsembleSpec spec = cfg.ensemble(sys);
        EstimateWithCI var = estimate_variance(k, sys, spec);
        if (cfg.wants("json")) art.write("json", estimate_json(var, spec.master_seed));
        if (cfg.wants("csv")) {
            std::ostringstream csv;
            csv << "system,family,n,value,std_error,ci_low,ci_high,n_samples,method\n"
                << sys.name << ',' << k.family_tag << ',' << k.arity << ','
                << format_full(var.value) << ',' << format_full(var.std_error) << ','
                << format_full(var.ci_low) << ',' << format_full(var.ci_high) << ','
                << var.sample_count << ',' << to_string(var.method) << '\n';
            art.write("csv", csv.str());
        }
        log << "variance: " << k.family_tag << " n=" << k.arity << " -> "
            << format_full(var.value) << " +- " << format_full(var.std_error) << "\n";
        return;
    }

    if (cfg.command == "devroye") {
        EnsembleSpec spec = cfg.ensemble(sys);
        double eta = cfg.eta > 0.0 ? cfg.eta : build_family(cfg.families.front(), 2).exponent;
        DevroyeSummary summary = estimate_constant_D(sys, cfg.families, cfg.n_grid, eta, spec);
        if (cfg.wants("csv")) art.write("csv", devroye_csv(summary.reports));
        if (cfg.wants("json")) art.write("json", devroye_summary_json(summary));
        if (cfg.wants("svg")) art.write("svg", devroye_svg(summary.reports));
        log << "devroye: D_running=" << format_full(summary.d_running) << " argmax="
            << summary.argmax_family << " n=" << summary.argmax_n << "\n";
        return;
    }

    if (cfg.command == "tower") {
        auto sep = cfg.base.find("..");
        DyadicInterval base;
        base.lo = Dyadic::parse(cfg.base.substr(0, sep));
        base.hi = Dyadic::parse(cfg.base.substr(sep + 2));
        TowerModel tower = build_first_return_tower(sys, base, cfg.q_max);
        if (cfg.wants("json")) art.write("json", tower_summary_json(tower));
        if (cfg.wants("csv")) {
            std::ostringstream csv;
            tower_branch_csv(tower, csv);
            art.write("csv", csv.str());
        }
        log << "tower: " << tower.branch_count() << " branches, kac="
            << format_full(kac_check(tower)) << ", tail="
            << format_full(tower.tail_remainder()) << "\n";
        return;
    }

    if (cfg.command == "correlations") {
        const ScalarFunction& phi = phi_catalog(cfg.phi);
        const ScalarFunction& psi = phi_catalog(cfg.psi.empty() ? cfg.phi : cfg.psi);
        if (cfg.correlation_method == "operator") {
            UlamOperator op = build_ulam(sys, cfg.bins);
            auto f1 = phi.f;
            auto f2 = psi.f;
            auto corr = operator_correlation(
                op, [f1](double x) { return f1(State{x, 0.0}); },
                [f2](double x) { return f2(State{x, 0.0}); }, cfg.max_lag);
            if (cfg.wants("csv")) {
                std::ostringstream csv;
                csv << "lag,value,std_error\n";
                for (size_t k = 0; k < corr.size(); ++k)
                    csv << k << ',' << format_full(corr[k]) << ",0\n";
                art.write("csv", csv.str());
            }
            if (cfg.wants("json")) {
                std::ostringstream js;
                js << "{\"method\": \"operator\", \"N\": " << cfg.bins << ", \"values\": [";
                for (size_t k = 0; k < corr.size(); ++k) {
                    if (k) js << ", ";
                    js << format_full(corr[k]);
                }
                js << "]}";
                art.write("json", js.str());
            }
            log << "correlations(operator): " << corr.size() << " lags, C(1)="
                << format_full(corr.size() > 1 ? corr[1] : 0.0) << "\n";
        } else {
            EnsembleSpec spec = cfg.ensemble(sys);
            auto corr = empirical_correlation(phi, psi, sys, cfg.max_lag, spec);
            if (cfg.wants("csv")) art.write("csv", csv_of_estimates(corr, "lag"));
            if (cfg.wants("json")) {
                std::ostringstream js;
                js << "{\"method\": \"montecarlo\", \"seed\": " << spec.master_seed
                   << ", \"lags\": [";
                for (size_t k = 0; k < corr.size(); ++k) {
                    if (k) js << ", ";
                    js << estimate_json(corr[k], spec.master_seed);
                }
                js << "]}";
                art.write("json", js.str());
            }
            log << "correlations(montecarlo): " << corr.size() << " lags, C(1)="
                << format_full(corr.size() > 1 ? corr[1].value : 0.0) << "\n";
        }
        return;
    }

    if (cfg.command == "clt") {
        EnsembleSpec spec = cfg.ensemble(sys);
        KsResult ks = clt_diagnostic(phi_catalog(cfg.phi), sys, cfg.n, spec);
        if (cfg.wants("json")) {
            std::ostringstream js;
            js << "{\"ks_statistic\": " << format_full(ks.statistic)
               << ", \"p_value\": " << format_full(ks.p_value) << ", \"n\": " << cfg.n
               << ", \"n_samples\": " << ks.sample_count << ", \"seed\": " << spec.master_seed
               << "}";
            art.write("json", js.str());
        }
        if (cfg.wants("csv")) {
            std::ostringstream csv;
            csv << "ks_statistic,p_value,n,n_samples\n"
                << format_full(ks.statistic) << ',' << format_full(ks.p_value) << ',' << cfg.n
                << ',' << ks.sample_count << '\n';
            art.write("csv", csv.str());
        }
        log << "clt: KS=" << format_full(ks.statistic) << " p=" << format_full(ks.p_value)
            << "\n";
        return;
    }

    throw config_error("command \"" + cfg.command + "\" is not dispatchable");
}

}  // namespace

std::vector<std::string> run(const RunConfig& cfg, std::ostream& log) {
    ArtifactWriter art;
    const char* env_dir = std::getenv("ERGOLAB_OUTPUT_DIR");
    art.dir = env_dir != nullptr ? fs::path(env_dir) : fs::path(cfg.output_dir);
    art.stem = cfg.command + "-" + cfg.system + "-" + hash12(cfg.canonical);
    std::error_code ec;
    fs::create_directories(art.dir, ec);
    if (ec) throw io_error("cannot create output directory \"" + art.dir.string() + "\"");
    try {
        dispatch(cfg, art, log);
    } catch (...) {
        art.rollback();
        throw;
    }
    for (const auto& p : art.written) log << "wrote " << p << "\n";
    return art.written;
}

int run_cli(const std::string& config_path, const std::vector<std::string>& overrides,
            std::ostream& out, std::ostream& err) {
    try {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) {
            err << "error: cannot read config file \"" << config_path << "\"\n";
            return 1;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        RunConfig cfg = validate(apply_overrides(buf.str(), overrides));
        run(cfg, out);
        return 0;
    } catch (const config_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace ergo
