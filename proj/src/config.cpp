#include "ergolab/config.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "ergolab/dyadic.hpp"
#include "ergolab/maps.hpp"

namespace ergo {

using nlohmann::json;

namespace {

const std::set<std::string> kCommands = {"simulate", "density",      "spectrum", "variance",
                                         "devroye",  "tower",        "clt",      "correlations"};

// Keys every command accepts.
const std::set<std::string> kCommonKeys = {"command", "system", "params",  "master_seed",
                                           "workers", "output_dir", "formats"};

const std::map<std::string, std::set<std::string>> kCommandKeys = {
    {"simulate", {"seed_state", "burn_in", "length"}},
    {"density", {"N"}},
    {"spectrum", {"N"}},
    {"variance",
     {"family", "phi", "weights", "n", "sample_count", "burn_in", "seed_distribution", "method"}},
    {"devroye",
     {"families", "n_grid", "eta", "sample_count", "burn_in", "seed_distribution", "method"}},
    {"tower", {"base", "q_max", "bins_per_level"}},
    {"correlations",
     {"phi", "psi", "max_lag", "method", "N", "sample_count", "burn_in", "seed_distribution"}},
    {"clt", {"phi", "n", "sample_count", "burn_in", "seed_distribution"}},
};

struct Checker {
    const json& doc;
    std::vector<std::string> errors;

    bool has(const std::string& key) const { return doc.contains(key); }

    template <typename T>
    bool get(const std::string& key, T& out, const std::string& what) {
        if (!doc.contains(key)) return false;
        try {
            out = doc.at(key).get<T>();
            return true;
        } catch (const json::exception&) {
            errors.push_back("key \"" + key + "\" must be " + what);
            return false;
        }
    }

    void require(bool cond, const std::string& message) {
        if (!cond) errors.push_back(message);
    }
};

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

bool RunConfig::wants(const std::string& fmt) const {
    return std::find(formats.begin(), formats.end(), fmt) != formats.end();
}

EnsembleSpec RunConfig::ensemble(const DynamicalSystem& sys) const {
    EnsembleSpec spec;
    spec.sample_count = sample_count;
    spec.burn_in = burn_in >= 0 ? burn_in : (sys.dim > 1 ? 1000 : 0);
    spec.seeds = seeds_given ? seeds
                             : (sys.dim > 1 ? SeedDistribution::attractor_box
                                            : SeedDistribution::domain);
    spec.master_seed = master_seed;
    spec.method = method;
    spec.workers = workers;
    return spec;
}

std::string apply_overrides(const std::string& raw_json_text,
                            const std::vector<std::string>& overrides) {
    json doc;
    try {
        doc = json::parse(raw_json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    for (const auto& ov : overrides) {
        auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw config_error("--set expects key=value, got \"" + ov + "\"");
        std::string key = ov.substr(0, eq);
        std::string value = ov.substr(eq + 1);
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::exception&) {
            parsed = value;  // bare strings are fine
        }
        doc[key] = parsed;
    }
    return doc.dump();
}

RunConfig validate(const std::string& raw_json_text) {
    json doc;
    try {
        doc = json::parse(raw_json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw config_error("config must be a JSON object");

    Checker ck{doc, {}};
    RunConfig cfg;

    ck.get("command", cfg.command, "a string");
    if (kCommands.find(cfg.command) == kCommands.end()) {
        std::string valid;
        for (const auto& c : kCommands) valid += (valid.empty() ? "" : ", ") + c;
        ck.errors.push_back("command \"" + cfg.command + "\" unknown; one of: " + valid);
    }

    // Unknown keys rejected by name.
    const auto cmd_keys = kCommandKeys.find(cfg.command);
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        bool known = kCommonKeys.count(key) > 0 ||
                     (cmd_keys != kCommandKeys.end() && cmd_keys->second.count(key) > 0);
        if (!known)
            ck.errors.push_back("unknown key \"" + key + "\" for command \"" + cfg.command + "\"");
    }

    if (!ck.get("system", cfg.system, "a string") || cfg.system.empty())
        ck.errors.push_back("key \"system\" is required");
    if (ck.has("params")) {
        if (!doc.at("params").is_object()) {
            ck.errors.push_back("key \"params\" must be an object of numbers");
        } else {
            for (const auto& [k, v] : doc.at("params").items()) {
                if (!v.is_number())
                    ck.errors.push_back("parameter \"" + k + "\" must be a number");
                else
                    cfg.params[k] = v.get<double>();
            }
        }
    }
    // The system catalog validates names and parameter keys.
    if (!cfg.system.empty()) {
        try {
            make_system(cfg.system, cfg.params);
        } catch (const error& e) {
            ck.errors.push_back(e.what());
        }
    }

    std::int64_t seed_tmp = 1;
    if (ck.get("master_seed", seed_tmp, "an integer")) cfg.master_seed = static_cast<std::uint64_t>(seed_tmp);
    if (ck.get("workers", cfg.workers, "an integer"))
        ck.require(cfg.workers >= 0, "workers must be >= 0");
    ck.get("output_dir", cfg.output_dir, "a string");
    if (ck.get("formats", cfg.formats, "an array of strings")) {
        for (const auto& f : cfg.formats)
            ck.require(f == "csv" || f == "json" || f == "svg",
                       "format \"" + f + "\" unknown; subset of {csv, json, svg}");
    }
    ck.require(!cfg.wants("svg") || cfg.command == "devroye",
               "svg output is only produced by the devroye command");

    auto get_positive = [&](const char* key, auto& out, long min_value, const char* what) {
        if (ck.get(key, out, "an integer")) {
            if (out < min_value)
                ck.errors.push_back(std::string(key) + " must be >= " + std::to_string(min_value) +
                                    std::string(what));
        }
    };

    if (cfg.command == "simulate") {
        ck.require(ck.has("length"), "key \"length\" is required");
        get_positive("length", cfg.length, 1, "");
        if (ck.has("burn_in")) get_positive("burn_in", cfg.burn_in, 0, "");
        if (cfg.burn_in < 0) cfg.burn_in = 0;
        std::vector<double> seed;
        ck.require(ck.has("seed_state"), "key \"seed_state\" is required");
        if (ck.get("seed_state", seed, "an array of numbers")) {
            ck.require(seed.size() == 1 || seed.size() == 2,
                       "seed_state must have 1 or 2 components");
            for (size_t d = 0; d < seed.size() && d < 2; ++d) cfg.seed_state[d] = seed[d];
            cfg.has_seed_state = true;
        }
    } else if (cfg.command == "density" || cfg.command == "spectrum") {
        ck.require(ck.has("N"), "key \"N\" is required");
        long n_tmp = 0;
        get_positive("N", n_tmp, 1, " (bin count)");
        cfg.bins = static_cast<int>(n_tmp);
    } else if (cfg.command == "variance") {
        ck.get("family", cfg.family, "a string");
        ck.get("phi", cfg.phi, "a string");
        ck.get("weights", cfg.weights, "an array of numbers");
        ck.require(ck.has("n"), "key \"n\" is required");
        get_positive("n", cfg.n, 1, " (window length)");
        get_positive("sample_count", cfg.sample_count, 100, " (estimates need >= 100 windows)");
    } else if (cfg.command == "devroye") {
        ck.require(ck.has("n_grid"), "key \"n_grid\" is required");
        if (ck.has("n_grid")) {
            if (!ck.get("n_grid", cfg.n_grid, "an array of integers"))
                ;
            else {
                ck.require(!cfg.n_grid.empty(), "n_grid must be nonempty");
                for (int n : cfg.n_grid) ck.require(n >= 1, "n_grid entries must be >= 1");
            }
        }
        if (ck.has("families")) {
            const auto& fams = doc.at("families");
            if (!fams.is_array() || fams.empty()) {
                ck.errors.push_back("families must be a nonempty array");
            } else {
                for (const auto& f : fams) {
                    FamilySpec spec;
                    if (f.is_string()) {
                        spec.family = f.get<std::string>();
                    } else if (f.is_object()) {
                        for (const auto& [k, v] : f.items()) {
                            if (k == "family" && v.is_string())
                                spec.family = v.get<std::string>();
                            else if (k == "phi" && v.is_string())
                                spec.phi = v.get<std::string>();
                            else if (k == "value" && v.is_number())
                                spec.constant_value = v.get<double>();
                            else
                                ck.errors.push_back("unknown family key \"" + k + "\"");
                        }
                    } else {
                        ck.errors.push_back("family entries must be strings or objects");
                        continue;
                    }
                    cfg.families.push_back(spec);
                }
            }
        } else {
            cfg.families.push_back(FamilySpec{});
        }
        for (const auto& f : cfg.families) {
            try {
                build_family(f, 2);
            } catch (const error& e) {
                ck.errors.push_back(e.what());
            }
        }
        if (ck.get("eta", cfg.eta, "a number"))
            ck.require(cfg.eta > 0.0 && cfg.eta <= 1.0, "eta must lie in (0, 1]");
        get_positive("sample_count", cfg.sample_count, 100, " (estimates need >= 100 windows)");
    } else if (cfg.command == "tower") {
        ck.get("base", cfg.base, "a string like \"0/1..1/2\"");
        long q_tmp = cfg.q_max;
        get_positive("q_max", q_tmp, 1, "");
        cfg.q_max = static_cast<int>(q_tmp);
        long b_tmp = cfg.bins_per_level;
        get_positive("bins_per_level", b_tmp, 1, "");
        cfg.bins_per_level = static_cast<int>(b_tmp);
        auto sep = cfg.base.find("..");
        if (sep == std::string::npos) {
            ck.errors.push_back("base must be \"<dyadic>..<dyadic>\", got \"" + cfg.base + "\"");
        } else {
            try {
                Dyadic lo = Dyadic::parse(cfg.base.substr(0, sep));
                Dyadic hi = Dyadic::parse(cfg.base.substr(sep + 2));
                ck.require(lo < hi, "base interval must be nonempty");
            } catch (const error& e) {
                ck.errors.push_back(e.what());
            }
        }
    } else if (cfg.command == "correlations") {
        ck.get("phi", cfg.phi, "a string");
        cfg.psi = cfg.phi;
        ck.get("psi", cfg.psi, "a string");
        ck.require(ck.has("max_lag"), "key \"max_lag\" is required");
        long lag_tmp = 0;
        get_positive("max_lag", lag_tmp, 1, "");
        cfg.max_lag = static_cast<int>(lag_tmp);
        ck.get("method", cfg.correlation_method, "a string");
        ck.require(cfg.correlation_method == "montecarlo" || cfg.correlation_method == "operator",
                   "correlation method must be \"montecarlo\" or \"operator\"");
        long n_tmp = 1024;
        if (ck.has("N")) get_positive("N", n_tmp, 1, " (bin count)");
        cfg.bins = static_cast<int>(n_tmp);
        get_positive("sample_count", cfg.sample_count, 100, "");
    } else if (cfg.command == "clt") {
        ck.get("phi", cfg.phi, "a string");
        ck.require(ck.has("n"), "key \"n\" is required");
        get_positive("n", cfg.n, 100, " (CLT windows)");
        get_positive("sample_count", cfg.sample_count, 10000, " (CLT needs >= 10^4 windows)");
    }

    // Shared sampling keys.
    if (ck.has("burn_in") && cfg.command != "simulate") {
        long b = 0;
        if (ck.get("burn_in", b, "an integer")) {
            ck.require(b >= 0, "burn_in must be >= 0");
            cfg.burn_in = b;
        }
    }
    if (ck.has("seed_distribution")) {
        std::string sd;
        ck.get("seed_distribution", sd, "a string");
        if (sd == "domain")
            cfg.seeds = SeedDistribution::domain;
        else if (sd == "attractor-box")
            cfg.seeds = SeedDistribution::attractor_box;
        else
            ck.errors.push_back("seed_distribution must be \"domain\" or \"attractor-box\"");
        cfg.seeds_given = true;
    }
    if (ck.has("method") && cfg.command != "correlations") {
        std::string m;
        ck.get("method", m, "a string");
        if (m == "iid-windows")
            cfg.method = CiMethod::iid_windows;
        else if (m == "batch-means")
            cfg.method = CiMethod::batch_means;
        else
            ck.errors.push_back("method must be \"iid-windows\" or \"batch-means\"");
    }
    if (ck.has("phi") && (cfg.command == "variance" || cfg.command == "clt" ||
                          cfg.command == "correlations")) {
        try {
            phi_catalog(cfg.phi);
            if (!cfg.psi.empty()) phi_catalog(cfg.psi);
        } catch (const error& e) {
            ck.errors.push_back(e.what());
        }
    }

    if (!ck.errors.empty()) {
        std::string all = "invalid configuration:";
        for (const auto& e : ck.errors) all += "\n  - " + e;
        throw config_error(all);
    }

    // Execution knobs do not change results, so they stay out of the
    // artifact-name hash.
    json canonical = doc;
    canonical.erase("workers");
    canonical.erase("output_dir");
    cfg.canonical = canonical.dump();
    return cfg;
}

}  // namespace ergo
