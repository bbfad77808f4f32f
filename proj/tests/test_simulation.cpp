#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mtp/simulation.hpp"

using namespace mtp;

namespace {

Scenario uniform_scenario(std::size_t s, std::size_t s0, double effect = 0.0) {
    Scenario scn;
    scn.kind = ScenarioKind::independent_uniform;
    scn.s = s;
    scn.s0 = s0;
    scn.effect = effect;
    return scn;
}

ProcedureSpec kfwer_spec(std::size_t k, double alpha) {
    ProcedureSpec proc;
    proc.method = Method::kfwer_sd;
    proc.params.k = k;
    proc.params.alpha = alpha;
    return proc;
}

ProcedureSpec fdp_spec(Method m, const Rational& gamma, double alpha) {
    ProcedureSpec proc;
    proc.method = m;
    proc.params.gamma = gamma;
    proc.params.alpha = alpha;
    return proc;
}

// independent scan of every m, written against the j-oracle's interval walk
std::optional<std::size_t> brute_force_j(const std::vector<double>& rhat,
                                         const StepdownConstants& c, const Rational& gamma) {
    for (std::size_t m = 1; m <= c.size(); ++m) {
        std::size_t below = 0;
        for (double r : rhat) {
            if (r <= c.alphas[m - 1]) ++below;
        }
        const std::int64_t excess =
            static_cast<std::int64_t>(m) - static_cast<std::int64_t>(below);
        if (excess > 0 &&
            gamma.less_than_ratio(excess, static_cast<std::int64_t>(m))) {
            return m;
        }
    }
    return std::nullopt;
}

}  // namespace

TEST_CASE("generate: independent uniform all-null") {
    Rng rng(1);
    const Scenario scn = uniform_scenario(50, 50);
    std::vector<double> pooled;
    for (int rep = 0; rep < 400; ++rep) {
        const Draw d = generate(scn, rng);
        REQUIRE(d.pvalues.size() == 50);
        for (std::size_t j = 0; j < 50; ++j) {
            CHECK(d.is_true_null[j] == 1);
            pooled.push_back(d.pvalues[j]);
        }
    }
    std::sort(pooled.begin(), pooled.end());
    const double n = static_cast<double>(pooled.size());
    const double tol = std::sqrt(std::log(2.0 / 1e-6) / (2.0 * n));
    for (int g = 1; g < 10; ++g) {
        const double u = g / 10.0;
        const auto it = std::lower_bound(pooled.begin(), pooled.end(), u);
        const double fhat = static_cast<double>(it - pooled.begin()) / n;
        CHECK(std::fabs(fhat - u) <= tol);
    }
}

TEST_CASE("generate: normal-means with zero effect matches the all-null law") {
    // effect 0 leaves false nulls distributed as nulls; pooled values stay uniform
    Rng rng(2);
    Scenario scn;
    scn.kind = ScenarioKind::normal_means;
    scn.s = 40;
    scn.s0 = 20;
    scn.effect = 0.0;
    std::vector<double> pooled;
    for (int rep = 0; rep < 500; ++rep) {
        const Draw d = generate(scn, rng);
        pooled.insert(pooled.end(), d.pvalues.begin(), d.pvalues.end());
    }
    std::sort(pooled.begin(), pooled.end());
    const double n = static_cast<double>(pooled.size());
    const double tol = std::sqrt(std::log(2.0 / 1e-6) / (2.0 * n));
    for (int g = 1; g < 10; ++g) {
        const double u = g / 10.0;
        const auto it = std::lower_bound(pooled.begin(), pooled.end(), u);
        CHECK(std::fabs(static_cast<double>(it - pooled.begin()) / n - u) <= tol);
    }
}

TEST_CASE("generate: equicorrelated nulls are marginally uniform") {
    Rng rng(3);
    Scenario scn;
    scn.kind = ScenarioKind::equicorrelated_normal;
    scn.s = 30;
    scn.s0 = 30;
    for (double rho : {0.0, 0.5, -0.02}) {
        scn.rho = rho;
        std::vector<double> coord;
        for (int rep = 0; rep < 8000; ++rep) {
            coord.push_back(generate(scn, rng).pvalues[0]);
        }
        std::sort(coord.begin(), coord.end());
        const double n = static_cast<double>(coord.size());
        const double tol = std::sqrt(std::log(2.0 / 1e-6) / (2.0 * n));
        for (int g = 1; g < 10; ++g) {
            const double u = g / 10.0;
            const auto it = std::lower_bound(coord.begin(), coord.end(), u);
            CHECK(std::fabs(static_cast<double>(it - coord.begin()) / n - u) <= tol);
        }
    }
}

TEST_CASE("scenario validation") {
    Scenario scn;
    scn.kind = ScenarioKind::equicorrelated_normal;
    scn.s = 10;
    scn.s0 = 10;
    scn.rho = -0.5;  // below -1/(s-1)
    CHECK_THROWS_AS(scn.validate(), std::invalid_argument);
    scn.rho = 0.5;
    CHECK_NOTHROW(scn.validate());
    scn.s0 = 11;
    CHECK_THROWS_AS(scn.validate(), std::invalid_argument);
}

TEST_CASE("run_experiment rejects invalid configurations") {
    CHECK_THROWS_AS(run_experiment(uniform_scenario(5, 5), kfwer_spec(1, 0.05), 0, 1),
                    std::invalid_argument);
    ProcedureSpec bad;
    bad.method = Method::kfwer_sd;  // missing k
    bad.params.alpha = 0.05;
    CHECK_THROWS_AS(run_experiment(uniform_scenario(5, 5), bad, 10, 1),
                    std::invalid_argument);
}

TEST_CASE("run_experiment: single replicate") {
    const auto report = run_experiment(uniform_scenario(5, 5), kfwer_spec(1, 0.05), 1, 7);
    CHECK(report.replicates == 1);
    const auto& m = report.metrics.at("k-fwer");
    CHECK((m.estimate == 0.0 || m.estimate == 1.0));
    CHECK(m.se == 0.0);  // phat*(1-phat) is 0 either way
}

TEST_CASE("run_experiment is deterministic across thread counts") {
    const Scenario scn = uniform_scenario(20, 15, 3.0);
    ProcedureSpec proc = fdp_spec(Method::fdp_sd, Rational::parse("0.1"), 0.05);
    const auto r1 = run_experiment(scn, proc, 5000, 12345, 1);
    const auto r4 = run_experiment(scn, proc, 5000, 12345, 4);
    const auto r8 = run_experiment(scn, proc, 5000, 12345, 8);
    REQUIRE(r1.metrics.size() == r4.metrics.size());
    for (const auto& [name, m] : r1.metrics) {
        CHECK(m.estimate == r4.metrics.at(name).estimate);  // bit identical
        CHECK(m.se == r4.metrics.at(name).se);
        CHECK(m.estimate == r8.metrics.at(name).estimate);
        CHECK(m.se == r8.metrics.at(name).se);
    }
}

TEST_CASE("k-FWER control under independent uniform nulls") {
    const auto report =
        run_experiment(uniform_scenario(10, 10), kfwer_spec(2, 0.05), 20000, 99);
    const auto& m = report.metrics.at("k-fwer");
    CHECK(m.estimate <= 0.05 + 3.0 * m.se);
}

TEST_CASE("holm 1-FWER control under independent uniform nulls") {
    ProcedureSpec proc;
    proc.method = Method::holm;
    proc.params.alpha = 0.05;
    const auto report = run_experiment(uniform_scenario(10, 10), proc, 20000, 100);
    const auto& m = report.metrics.at("k-fwer");
    CHECK(m.estimate <= 0.05 + 3.0 * m.se);
}

TEST_CASE("automatic k-1 rejection keeps the k-FWER in simulation") {
    ProcedureSpec proc = kfwer_spec(3, 0.05);
    proc.auto_reject_k_minus_1 = true;
    const auto report = run_experiment(uniform_scenario(10, 10), proc, 20000, 101);
    const auto& m = report.metrics.at("k-fwer");
    CHECK(m.estimate <= 0.05 + 3.0 * m.se);
    // the option really does reject k-1 hypotheses regardless of the data
    const auto& power = report.metrics.at("avg-power");
    CHECK(power.estimate == 0.0);  // all nulls, power vacuous
}

TEST_CASE("markov sandwich: degenerate distributions") {
    SimulationReport report;
    report.replicates = 100;
    const Rational gamma = Rational::parse("0.1");

    // FDP identically 0
    report.metrics["fdr"] = {0.0, 0.0};
    report.metrics["fdp-exceed"] = {0.0, 0.0};
    CHECK(check_markov_sandwich(report, gamma).pass);

    // FDP identically 1
    report.metrics["fdr"] = {1.0, 0.0};
    report.metrics["fdp-exceed"] = {1.0, 0.0};
    CHECK(check_markov_sandwich(report, gamma).pass);

    report.metrics.erase("fdp-exceed");
    CHECK_THROWS_AS(check_markov_sandwich(report, gamma), std::invalid_argument);
}

TEST_CASE("markov sandwich holds across randomized configurations") {
    Rng rng(404);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t s = 5 + rng() % 30;
        const std::size_t s0 = rng() % (s + 1);
        const Rational gamma(1 + static_cast<std::int64_t>(rng() % 40), 100);
        const double alpha = 0.02 + 0.2 * (rng() % 5);
        const Scenario scn = uniform_scenario(s, s0, 2.0);
        const auto report =
            run_experiment(scn, fdp_spec(Method::fdp_sd, gamma, alpha), 5000, rng());
        CHECK(check_markov_sandwich(report, gamma).pass);
    }
}

TEST_CASE("j-oracle reproduces the worked value j=6") {
    const auto c = constants_fdp_stepdown(100, Rational::parse("0.1"), 0.05);
    // all five false-null p-values below alpha_1
    const std::vector<double> rhat(5, c.alphas[0] / 2.0);
    const auto j = theorem31_j_oracle(rhat, c, Rational::parse("0.1"));
    REQUIRE(j.has_value());
    CHECK(*j == 6);
}

TEST_CASE("j-oracle with no false nulls returns 1") {
    const auto c = constants_fdp_stepdown(10, Rational::parse("0.1"), 0.05);
    const auto j = theorem31_j_oracle(std::vector<double>{}, c, Rational::parse("0.1"));
    REQUIRE(j.has_value());
    CHECK(*j == 1);
}

TEST_CASE("j-oracle matches a direct scan on random configurations") {
    Rng rng(606);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t s = 1 + rng() % 60;
        const std::size_t f = rng() % (s + 1);
        const Rational gamma(1 + static_cast<std::int64_t>(rng() % 30), 100);
        const auto c = constants_fdp_stepdown(s, gamma, 0.05);
        std::vector<double> rhat(f);
        for (double& r : rhat) {
            // mix point masses at 0 with values near the constants
            const double roll = unif(rng);
            r = roll < 0.2 ? 0.0 : unif(rng) * c.alphas.back() * 2.0;
        }
        CHECK(theorem31_j_oracle(rhat, c, gamma) == brute_force_j(rhat, c, gamma));
    }
}

TEST_CASE("whenever FDP exceeds gamma, a true-null rejection occurs at step j") {
    const Rational gamma = Rational::parse("0.1");
    const double alpha = 0.3;  // large so exceedances actually happen
    Scenario scn;
    scn.kind = ScenarioKind::normal_means;
    scn.s = 20;
    scn.s0 = 12;
    scn.effect = 2.0;
    const auto c = constants_fdp_stepdown(scn.s, gamma, alpha);
    ProcedureSpec proc = fdp_spec(Method::fdp_sd, gamma, alpha);

    int exceedances = 0;
    for (std::uint64_t rep = 0; rep < 4000; ++rep) {
        Rng rng = replicate_rng(2024, rep);
        const Draw draw = generate(scn, rng);
        const AppliedOutcome out = apply_procedure(draw, proc);
        const bool exceed =
            out.rejections > 0 &&
            gamma.less_than_ratio(static_cast<std::int64_t>(out.false_rejections),
                                  static_cast<std::int64_t>(out.rejections));
        if (!exceed) continue;
        ++exceedances;

        std::vector<double> rhat, qhat;
        for (std::size_t idx = 0; idx < draw.pvalues.size(); ++idx) {
            (draw.is_true_null[idx] ? qhat : rhat).push_back(draw.pvalues[idx]);
        }
        const auto j = theorem31_j_oracle(rhat, c, gamma);
        REQUIRE(j.has_value());
        CHECK(out.rejections >= *j);
        // at step j, k(j) = j - #{rhat <= alpha_j} true nulls must sit below alpha_j
        std::size_t r_below = 0;
        for (double r : rhat) {
            if (r <= c.alphas[*j - 1]) ++r_below;
        }
        std::size_t q_below = 0;
        for (double q : qhat) {
            if (q <= c.alphas[*j - 1]) ++q_below;
        }
        CHECK(q_below >= *j - r_below);
        CHECK(*j - r_below >= 1);
    }
    CHECK(exceedances > 0);  // the configuration must actually exercise the claim
}

TEST_CASE("theorem 3.2 bound check") {
    const Rational gamma = Rational::parse("0.1");
    SUBCASE("vacuous when there are no true nulls") {
        const auto res = theorem32_bound_check(uniform_scenario(5, 0, 2.0),
                                               fdp_spec(Method::fdp_sd, gamma, 0.05),
                                               gamma, 0.05, 10, 1);
        CHECK(res.pass);
        CHECK(res.vacuous);
    }
    SUBCASE("holds across a small grid") {
        for (std::size_t s : {10, 40}) {
            for (std::size_t s0 : {s / 2, s}) {
                for (const char* g : {"0.05", "0.1"}) {
                    const Rational gm = Rational::parse(g);
                    const auto res = theorem32_bound_check(
                        uniform_scenario(s, s0, 2.0), fdp_spec(Method::fdp_sd, gm, 0.05),
                        gm, 0.05, 5000, 77);
                    CHECK(res.pass);
                    CHECK(!res.vacuous);
                }
            }
        }
    }
}

TEST_CASE("unimprovability guard: inflated constants break k-FWER control") {
    const std::size_t s = 10, k = 2, i = 5;
    const double alpha = 0.05, c_factor = 1.5;
    Scenario scn;
    scn.kind = ScenarioKind::adversarial_thm23;
    scn.s = s;
    scn.k = k;
    scn.i = i;
    scn.alpha = alpha;
    scn.inflate = c_factor;

    ProcedureSpec proc = kfwer_spec(k, alpha);
    auto inflated = constants_kfwer_stepdown(s, k, alpha);
    inflated.alphas[i - 1] *= c_factor;
    proc.custom_alphas = inflated.alphas;

    const auto report = run_experiment(scn, proc, 20000, 31);
    const auto& m = report.metrics.at("k-fwer");
    // the joint event forces >= k true-null rejections, so the empirical
    // k-FWER reaches c*alpha
    CHECK(m.estimate >= c_factor * alpha - 3.0 * m.se);
    CHECK(m.estimate > alpha);
}
