#include "mtp/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace mtp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double upper_tail_normal(double z) {
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

double binomial_se(double phat, std::size_t n) {
    return std::sqrt(phat * (1.0 - phat) / static_cast<double>(n));
}

struct PerReplicate {
    std::vector<double> kfwer;
    std::vector<double> fdp_exceed;
    std::vector<double> fdp;
    std::vector<double> power;
};

}  // namespace

std::string scenario_kind_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::independent_uniform: return "independent-uniform";
        case ScenarioKind::normal_means: return "normal-means";
        case ScenarioKind::equicorrelated_normal: return "equicorrelated-normal";
        case ScenarioKind::adversarial_thm21: return "adversarial-thm21";
        case ScenarioKind::adversarial_thm23: return "adversarial-thm23";
        case ScenarioKind::adversarial_lemma31: return "adversarial-lemma31";
    }
    return "independent-uniform";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
    if (name == "independent-uniform") return ScenarioKind::independent_uniform;
    if (name == "normal-means") return ScenarioKind::normal_means;
    if (name == "equicorrelated-normal") return ScenarioKind::equicorrelated_normal;
    if (name == "adversarial-thm21") return ScenarioKind::adversarial_thm21;
    if (name == "adversarial-thm23") return ScenarioKind::adversarial_thm23;
    if (name == "adversarial-lemma31") return ScenarioKind::adversarial_lemma31;
    throw std::invalid_argument("unknown scenario kind: " + name);
}

void Scenario::validate() const {
    if (s < 1) throw std::invalid_argument("scenario requires s >= 1");
    switch (kind) {
        case ScenarioKind::independent_uniform:
        case ScenarioKind::normal_means:
            if (s0 > s) throw std::invalid_argument("s0 must not exceed s");
            break;
        case ScenarioKind::equicorrelated_normal: {
            if (s0 > s) throw std::invalid_argument("s0 must not exceed s");
            const double lower =
                s > 1 ? -1.0 / static_cast<double>(s - 1) : -1.0;
            if (!(rho > lower && rho < 1.0)) {
                throw std::invalid_argument(
                    "rho must lie in (-1/(s-1), 1) for a valid correlation matrix");
            }
            break;
        }
        case ScenarioKind::adversarial_thm21:
            if (k < 1 || k > s) throw std::invalid_argument("require 1 <= k <= s");
            break;
        case ScenarioKind::adversarial_thm23:
            if (k < 1 || k > i || i > s) throw std::invalid_argument("require 1 <= k <= i <= s");
            if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha in (0,1)");
            break;
        case ScenarioKind::adversarial_lemma31:
            if (betas.empty() || betas.size() > s) {
                throw std::invalid_argument("lemma31 scenario needs 1 <= |betas| <= s");
            }
            break;
    }
}

std::size_t Scenario::true_null_count() const {
    switch (kind) {
        case ScenarioKind::independent_uniform:
        case ScenarioKind::normal_means:
        case ScenarioKind::equicorrelated_normal:
            return s0;
        case ScenarioKind::adversarial_thm21:
        case ScenarioKind::adversarial_lemma31:
            return s;
        case ScenarioKind::adversarial_thm23:
            return s - (i - k);
    }
    return s0;
}

Draw generate(const Scenario& scn, Rng& rng) {
    Draw draw;
    switch (scn.kind) {
        case ScenarioKind::independent_uniform: {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            draw.pvalues.resize(scn.s);
            draw.is_true_null.resize(scn.s);
            for (std::size_t j = 0; j < scn.s; ++j) {
                const bool null = j < scn.s0;
                double p = unif(rng);
                if (!null && scn.effect > 0.0) {
                    p = std::pow(p, 1.0 + scn.effect);  // stochastically smaller
                }
                draw.pvalues[j] = p;
                draw.is_true_null[j] = null ? 1 : 0;
            }
            break;
        }
        case ScenarioKind::normal_means: {
            std::normal_distribution<double> gauss(0.0, 1.0);
            draw.pvalues.resize(scn.s);
            draw.is_true_null.resize(scn.s);
            for (std::size_t j = 0; j < scn.s; ++j) {
                const bool null = j < scn.s0;
                const double z = gauss(rng) + (null ? 0.0 : scn.effect);
                draw.pvalues[j] = upper_tail_normal(z);
                draw.is_true_null[j] = null ? 1 : 0;
            }
            break;
        }
        case ScenarioKind::equicorrelated_normal: {
            // Sigma = (1-rho) I + rho J; Sigma^{1/2} = a I + b J
            std::normal_distribution<double> gauss(0.0, 1.0);
            const double sd = static_cast<double>(scn.s);
            const double a = std::sqrt(1.0 - scn.rho);
            const double b = (std::sqrt(1.0 - scn.rho + sd * scn.rho) - a) / sd;
            std::vector<double> e(scn.s);
            double total = 0.0;
            for (double& v : e) {
                v = gauss(rng);
                total += v;
            }
            draw.pvalues.resize(scn.s);
            draw.is_true_null.resize(scn.s);
            for (std::size_t j = 0; j < scn.s; ++j) {
                const bool null = j < scn.s0;
                const double z = a * e[j] + b * total + (null ? 0.0 : scn.effect);
                draw.pvalues[j] = upper_tail_normal(z);
                draw.is_true_null[j] = null ? 1 : 0;
            }
            break;
        }
        case ScenarioKind::adversarial_thm21: {
            const AdversarialDraw ad = sample_theorem21(scn.s, scn.k, rng);
            draw.pvalues = ad.pvalues;
            draw.is_true_null = ad.is_true_null;
            break;
        }
        case ScenarioKind::adversarial_thm23: {
            const AdversarialDraw ad =
                sample_theorem23(scn.s, scn.k, scn.i, scn.alpha, rng, scn.inflate);
            draw.pvalues = ad.pvalues;
            draw.is_true_null = ad.is_true_null;
            break;
        }
        case ScenarioKind::adversarial_lemma31: {
            draw.pvalues = sample_lemma31(scn.s, scn.betas, rng);
            draw.is_true_null.assign(scn.s, 1);
            break;
        }
    }
    return draw;
}

Rng replicate_rng(std::uint64_t master_seed, std::uint64_t replicate) {
    return Rng(splitmix64(splitmix64(master_seed) ^ splitmix64(replicate + 0x51AB5F1EULL)));
}

AppliedOutcome apply_procedure(const Draw& draw, const ProcedureSpec& proc) {
    const std::size_t s = draw.pvalues.size();
    std::vector<std::size_t> idx(s);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return draw.pvalues[a] < draw.pvalues[b];
    });
    std::vector<double> sorted_p(s);
    for (std::size_t j = 0; j < s; ++j) sorted_p[j] = draw.pvalues[idx[j]];

    std::size_t r = 0;
    if (proc.custom_alphas) {
        r = stepdown_reject_count(sorted_p, *proc.custom_alphas);
    } else {
        ProcedureParams params = proc.params;
        params.s = s;
        const std::vector<double> thresholds = alpha_constants(proc.method, params);
        r = proc.method == Method::bh ? stepup_reject_count(sorted_p, thresholds)
                                      : stepdown_reject_count(sorted_p, thresholds);
    }
    if (proc.auto_reject_k_minus_1 && proc.params.k) {
        r = std::max(r, std::min(*proc.params.k - 1, s));
    }

    AppliedOutcome out;
    out.rejections = r;
    for (std::size_t j = 0; j < r; ++j) {
        if (draw.is_true_null[idx[j]]) ++out.false_rejections;
    }
    return out;
}

SimulationReport run_experiment(const Scenario& scn, const ProcedureSpec& proc, std::size_t n,
                                std::uint64_t master_seed, unsigned threads) {
    scn.validate();
    if (n < 1) throw std::invalid_argument("replicate count must be >= 1");
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(
        std::min<std::size_t>(threads, n));

    const std::size_t k_metric = proc.params.k.value_or(1);
    const bool has_gamma = proc.params.gamma.has_value();
    const std::size_t f = scn.s - scn.true_null_count();

    PerReplicate vals;
    vals.kfwer.resize(n);
    vals.fdp.resize(n);
    vals.power.resize(n);
    if (has_gamma) vals.fdp_exceed.resize(n);

    auto worker = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t rrep = lo; rrep < hi; ++rrep) {
            Rng rng = replicate_rng(master_seed, rrep);
            const Draw draw = generate(scn, rng);
            const AppliedOutcome out = apply_procedure(draw, proc);
            vals.kfwer[rrep] = out.false_rejections >= k_metric ? 1.0 : 0.0;
            vals.fdp[rrep] =
                out.rejections > 0
                    ? static_cast<double>(out.false_rejections) /
                          static_cast<double>(out.rejections)
                    : 0.0;
            if (has_gamma) {
                const bool exceed =
                    out.rejections > 0 &&
                    proc.params.gamma->less_than_ratio(
                        static_cast<std::int64_t>(out.false_rejections),
                        static_cast<std::int64_t>(out.rejections));
                vals.fdp_exceed[rrep] = exceed ? 1.0 : 0.0;
            }
            vals.power[rrep] =
                f > 0 ? static_cast<double>(out.rejections - out.false_rejections) /
                            static_cast<double>(f)
                      : 0.0;
        }
    };

    if (threads <= 1) {
        worker(0, n);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t lo = static_cast<std::size_t>(t) * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(worker, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    // sequential reduction in replicate order keeps reports bit-identical
    // across thread counts
    auto mean_of = [n](const std::vector<double>& v) {
        double sum = 0.0;
        for (double x : v) sum += x;
        return sum / static_cast<double>(n);
    };
    auto sample_se = [n](const std::vector<double>& v, double mean) {
        if (n < 2) return 0.0;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    };

    SimulationReport report;
    report.replicates = n;
    report.seed = master_seed;
    {
        const double m = mean_of(vals.kfwer);
        report.metrics["k-fwer"] = {m, binomial_se(m, n)};
    }
    if (has_gamma) {
        const double m = mean_of(vals.fdp_exceed);
        report.metrics["fdp-exceed"] = {m, binomial_se(m, n)};
    }
    {
        const double m = mean_of(vals.fdp);
        report.metrics["fdr"] = {m, sample_se(vals.fdp, m)};
    }
    {
        const double m = mean_of(vals.power);
        report.metrics["avg-power"] = {m, sample_se(vals.power, m)};
    }
    return report;
}

MarkovSandwichCheck check_markov_sandwich(const SimulationReport& report,
                                          const Rational& gamma) {
    const auto fdr_it = report.metrics.find("fdr");
    const auto exc_it = report.metrics.find("fdp-exceed");
    if (fdr_it == report.metrics.end() || exc_it == report.metrics.end()) {
        throw std::invalid_argument("report lacks fdr or fdp-exceed estimates");
    }
    const double g = gamma.value();
    MarkovSandwichCheck out;
    out.lower = (fdr_it->second.estimate - g) / (1.0 - g);
    out.middle = exc_it->second.estimate;
    out.upper = fdr_it->second.estimate / g;
    out.lower_slack = 3.0 * (fdr_it->second.se / (1.0 - g) + exc_it->second.se);
    out.upper_slack = 3.0 * (exc_it->second.se + fdr_it->second.se / g);
    out.pass = out.lower <= out.middle + out.lower_slack &&
               out.middle <= out.upper + out.upper_slack;
    return out;
}

std::optional<std::size_t> theorem31_j_oracle(std::span<const double> false_null_pvalues,
                                              const StepdownConstants& constants,
                                              const Rational& gamma) {
    const std::size_t s = constants.size();
    std::vector<double> r(false_null_pvalues.begin(), false_null_pvalues.end());
    std::sort(r.begin(), r.end());
    std::size_t cum = 0;  // #{r_i <= alpha_m}, cumulative over intervals
    for (std::size_t m = 1; m <= s; ++m) {
        while (cum < r.size() && r[cum] <= constants.alphas[m - 1]) ++cum;
        const std::int64_t excess =
            static_cast<std::int64_t>(m) - static_cast<std::int64_t>(cum);
        if (excess > 0 && gamma.less_than_ratio(excess, static_cast<std::int64_t>(m))) {
            return m;
        }
    }
    return std::nullopt;
}

BoundCheckResult theorem32_bound_check(const Scenario& scn, const ProcedureSpec& proc,
                                       const Rational& gamma, double alpha, std::size_t n,
                                       std::uint64_t master_seed) {
    scn.validate();
    if (n < 1) throw std::invalid_argument("replicate count must be >= 1");
    const std::size_t abs_i = scn.true_null_count();
    BoundCheckResult out;
    if (abs_i == 0) {
        out.pass = true;
        out.vacuous = true;
        return out;
    }
    const std::size_t cap =
        static_cast<std::size_t>(gamma.floor_mul(static_cast<std::int64_t>(scn.s))) + 1;
    const std::size_t m_terms = std::min(cap, abs_i);
    std::vector<double> betas(m_terms);
    for (std::size_t idx = 0; idx < m_terms; ++idx) {
        betas[idx] = static_cast<double>(idx + 1) * alpha / static_cast<double>(abs_i);
    }

    std::size_t lhs_count = 0;
    std::size_t rhs_count = 0;
    std::vector<double> nulls;
    nulls.reserve(abs_i);
    for (std::size_t rrep = 0; rrep < n; ++rrep) {
        Rng rng = replicate_rng(master_seed, rrep);
        const Draw draw = generate(scn, rng);
        const AppliedOutcome o = apply_procedure(draw, proc);
        if (o.rejections > 0 &&
            gamma.less_than_ratio(static_cast<std::int64_t>(o.false_rejections),
                                  static_cast<std::int64_t>(o.rejections))) {
            ++lhs_count;
        }
        nulls.clear();
        for (std::size_t j = 0; j < draw.pvalues.size(); ++j) {
            if (draw.is_true_null[j]) nulls.push_back(draw.pvalues[j]);
        }
        if (union_event_holds(nulls, betas)) ++rhs_count;
    }
    out.lhs = static_cast<double>(lhs_count) / static_cast<double>(n);
    out.rhs = static_cast<double>(rhs_count) / static_cast<double>(n);
    out.slack = 3.0 * (binomial_se(out.lhs, n) + binomial_se(out.rhs, n));
    out.pass = out.lhs <= out.rhs + out.slack;
    return out;
}

}  // namespace mtp
