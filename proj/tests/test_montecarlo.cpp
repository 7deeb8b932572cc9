#include <doctest.h>

#include <cmath>

#include "ergolab/montecarlo.hpp"

using namespace ergo;

namespace {

EnsembleSpec quick_spec(std::uint64_t seed, long samples = 20000) {
    EnsembleSpec spec;
    spec.sample_count = samples;
    spec.master_seed = seed;
    spec.workers = 2;
    return spec;
}

}  // namespace

TEST_CASE("mean estimates hit the invariant-measure oracles") {
    auto doubling = make_system("doubling");
    auto identity1 = make_birkhoff(phi_catalog("identity"), 1);
    auto m = estimate_mean(identity1, doubling, quick_spec(2));
    CHECK(std::fabs(m.value - 0.5) <= 3.0 * m.std_error);
    CHECK(m.ci_high - m.ci_low == doctest::Approx(2 * 1.959963984540054 * m.std_error).epsilon(1e-12));
    CHECK(m.ci_low <= m.value);
    CHECK(m.value <= m.ci_high);

    auto kc = make_constant(1.5, 3);
    auto mc = estimate_mean(kc, doubling, quick_spec(2, 100));
    CHECK(mc.value == 1.5);
    CHECK(mc.std_error == 0.0);

    auto k10 = make_birkhoff(phi_catalog("cos2pi"), 10);
    auto m10 = estimate_mean(k10, doubling, quick_spec(5));
    CHECK(std::fabs(m10.value) <= 3.0 * m10.std_error);
}

TEST_CASE("variance estimates hit the oracles") {
    auto doubling = make_system("doubling");
    auto identity1 = make_birkhoff(phi_catalog("identity"), 1);
    auto v = estimate_variance(identity1, doubling, quick_spec(3));
    CHECK(std::fabs(v.value - 1.0 / 12.0) <= 3.0 * v.std_error);

    auto kc = make_constant(-2.0, 2);
    CHECK(estimate_variance(kc, doubling, quick_spec(3, 200)).value == 0.0);

    for (int n : {10, 100}) {
        auto k = make_birkhoff(phi_catalog("cos2pi"), n);
        auto vn = estimate_variance(k, doubling, quick_spec(4));
        CHECK(std::fabs(vn.value - 1.0 / (2.0 * n)) <= 3.0 * vn.std_error);
        CHECK(vn.value >= 0.0);
    }
}

TEST_CASE("pair variance cross-validates the direct estimator") {
    auto doubling = make_system("doubling");
    auto kc = make_constant(0.75, 2);
    CHECK(pair_variance(kc, doubling, quick_spec(5, 500)).value == 0.0);

    auto identity1 = make_birkhoff(phi_catalog("identity"), 1);
    auto pv = pair_variance(identity1, doubling, quick_spec(6));
    CHECK(std::fabs(pv.value - 1.0 / 12.0) <= 3.0 * pv.std_error);

    // Catalog (system, observable) pairs for the agreement property.
    struct Case { const char* system; HoelderObservable k; };
    std::vector<Case> cases;
    cases.push_back({"doubling", make_birkhoff(phi_catalog("cos2pi"), 10)});
    cases.push_back({"tent", make_pair_correlation(phi_catalog("cos2pi"), 5)});
    cases.push_back({"logistic", make_birkhoff(phi_catalog("abs_dist_half"), 4)});
    cases.push_back({"henon", make_pair_correlation(phi_catalog("cos2pi"), 10)});
    for (auto& c : cases) {
        auto sys = make_system(c.system);
        EnsembleSpec spec = quick_spec(8, 20000);
        if (sys.dim > 1) {
            spec.burn_in = 1000;
            spec.seeds = SeedDistribution::attractor_box;
        }
        auto direct = estimate_variance(c.k, sys, spec);
        auto paired = pair_variance(c.k, sys, spec);
        double joint = std::sqrt(direct.std_error * direct.std_error +
                                 paired.std_error * paired.std_error);
        INFO(c.system << ": " << direct.value << " vs " << paired.value << " joint SE " << joint);
        CHECK(std::fabs(direct.value - paired.value) <= 3.0 * joint);
    }
}

TEST_CASE("results are a pure function of the ensemble spec") {
    auto doubling = make_system("doubling");
    auto k = make_birkhoff(phi_catalog("cos2pi"), 25);
    EnsembleSpec s1 = quick_spec(11, 5000);
    s1.workers = 1;
    EnsembleSpec s4 = s1;
    s4.workers = 4;
    auto v1 = estimate_variance(k, doubling, s1);
    auto v4 = estimate_variance(k, doubling, s4);
    CHECK(v1.value == v4.value);
    CHECK(v1.std_error == v4.std_error);

    EnsembleSpec other = s1;
    other.master_seed = 12;
    CHECK(estimate_variance(k, doubling, other).value != v1.value);
}

TEST_CASE("standard error follows the 1/sqrt(N) law") {
    auto doubling = make_system("doubling");
    auto k = make_birkhoff(phi_catalog("cos2pi"), 10);
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        auto small = estimate_variance(k, doubling, quick_spec(seed, 10000));
        auto large = estimate_variance(k, doubling, quick_spec(seed, 40000));
        double ratio = large.std_error / small.std_error;
        INFO("seed " << seed << " ratio " << ratio);
        CHECK(ratio >= 0.4);
        CHECK(ratio <= 0.6);
    }
}

TEST_CASE("long windows on dyadic maps keep full entropy") {
    // With plain double iteration every doubling orbit collapses to 0 by
    // step 53; the bit-pool windows must not.
    auto doubling = make_system("doubling");
    auto k1000 = make_birkhoff(phi_catalog("cos2pi"), 1000);
    auto v = estimate_variance(k1000, doubling, quick_spec(9, 2000));
    CHECK(std::fabs(v.value - 1.0 / 2000.0) <= 4.0 * v.std_error);

    auto tent = make_system("tent");
    auto k200 = make_birkhoff(phi_catalog("identity"), 200);
    auto m = estimate_mean(k200, tent, quick_spec(9, 2000));
    CHECK(std::fabs(m.value - 0.5) <= 4.0 * m.std_error);
}

TEST_CASE("empirical correlations") {
    auto doubling = make_system("doubling");
    const auto& cosf = phi_catalog("cos2pi");
    auto corr = empirical_correlation(cosf, cosf, doubling, 10, quick_spec(1, 100000));
    REQUIRE(corr.size() == 11);
    CHECK(std::fabs(corr[0].value - 0.5) <= 3.0 * corr[0].std_error);
    for (int k = 1; k <= 10; ++k)
        CHECK(std::fabs(corr[static_cast<size_t>(k)].value) <= 3.0 * corr[static_cast<size_t>(k)].std_error);

    ScalarFunction constant{"c", 1.0, 0.0, 2.0, [](const State&) { return 2.0; }};
    auto corr_c = empirical_correlation(constant, cosf, doubling, 3, quick_spec(2, 1000));
    for (const auto& e : corr_c) {
        CHECK(e.value == 0.0);
        CHECK(e.std_error == 0.0);
    }
}

TEST_CASE("clt diagnostic and its degenerate path") {
    auto doubling = make_system("doubling");
    auto ks = clt_diagnostic(phi_catalog("cos2pi"), doubling, 1000, quick_spec(1, 10000));
    CHECK(ks.p_value > 0.01);
    CHECK(ks.statistic < 0.02);

    ScalarFunction constant{"c", 1.0, 0.0, 1.0, [](const State&) { return 1.0; }};
    CHECK_THROWS_AS(clt_diagnostic(constant, doubling, 1000, quick_spec(1, 10000)),
                    degeneracy_error);
    CHECK_THROWS_AS(clt_diagnostic(phi_catalog("cos2pi"), doubling, 50, quick_spec(1, 10000)),
                    parameter_error);
    CHECK_THROWS_AS(clt_diagnostic(phi_catalog("cos2pi"), doubling, 1000, quick_spec(1, 5000)),
                    parameter_error);
}

TEST_CASE("gaussian control stream looks normal") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto ks = gaussian_control(10000, seed);
        CHECK(ks.p_value > 0.01);
    }
}

TEST_CASE("divergent seeds are discarded up to the 1% budget") {
    auto henon = make_system("henon");
    auto k = make_birkhoff(phi_catalog("cos2pi"), 5);
    EnsembleSpec spec = quick_spec(3, 2000);
    spec.burn_in = 1000;
    spec.seeds = SeedDistribution::attractor_box;
    auto v = estimate_variance(k, henon, spec);
    CHECK(v.value > 0.0);

    // Uniform seeding over the full [-10,10]^2 domain diverges en masse.
    spec.seeds = SeedDistribution::domain;
    CHECK_THROWS_AS(estimate_variance(k, henon, spec), sampling_error);
}

TEST_CASE("batch-means mode") {
    auto doubling = make_system("doubling");
    auto identity1 = make_birkhoff(phi_catalog("identity"), 1);
    EnsembleSpec spec = quick_spec(13, 40000);
    spec.method = CiMethod::batch_means;
    auto m = estimate_mean(identity1, doubling, spec);
    CHECK(m.method == CiMethod::batch_means);
    CHECK(std::fabs(m.value - 0.5) <= 4.0 * m.std_error);

    auto henon = make_system("henon");
    EnsembleSpec hspec = quick_spec(13, 5000);
    hspec.method = CiMethod::batch_means;
    hspec.burn_in = 1000;
    hspec.seeds = SeedDistribution::attractor_box;
    auto k = make_birkhoff(phi_catalog("cos2pi"), 4);
    auto hm = estimate_mean(k, henon, hspec);
    CHECK(std::isfinite(hm.value));
}

TEST_CASE("estimate serialization carries the full record") {
    EstimateWithCI e;
    e.value = 0.125;
    e.std_error = 0.5;
    e.ci_low = -0.855;
    e.ci_high = 1.105;
    e.sample_count = 42;
    std::string js = estimate_json(e, 99);
    CHECK(js.find("\"value\": 0.125") != std::string::npos);
    CHECK(js.find("\"n_samples\": 42") != std::string::npos);
    CHECK(js.find("\"seed\": 99") != std::string::npos);
    CHECK(js.find("\"method\": \"iid-windows\"") != std::string::npos);
}
