#include "mtp/procedures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mtp {

namespace {

void check_s(std::size_t s) {
    if (s < 1) throw std::invalid_argument("s must be >= 1");
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0,1)");
    }
}

void check_k(std::size_t k, std::size_t s) {
    if (k < 1 || k > s) {
        throw std::invalid_argument("k must satisfy 1 <= k <= s");
    }
}

void check_gamma(const Rational& gamma) {
    if (gamma.num() <= 0 || gamma.num() >= gamma.den()) {
        throw std::invalid_argument("gamma must lie in (0,1)");
    }
}

}  // namespace

std::string method_name(Method m) {
    switch (m) {
        case Method::bonferroni: return "bonferroni";
        case Method::holm: return "holm";
        case Method::kfwer_ss: return "kfwer-ss";
        case Method::kfwer_sd: return "kfwer-sd";
        case Method::fdp_sd: return "fdp-sd";
        case Method::fdp_hommel: return "fdp-hommel";
        case Method::bh: return "bh";
        case Method::custom: return "custom";
    }
    return "custom";
}

Method parse_method(const std::string& name) {
    if (name == "bonferroni") return Method::bonferroni;
    if (name == "holm") return Method::holm;
    if (name == "kfwer-ss") return Method::kfwer_ss;
    if (name == "kfwer-sd") return Method::kfwer_sd;
    if (name == "fdp-sd") return Method::fdp_sd;
    if (name == "fdp-hommel") return Method::fdp_hommel;
    if (name == "bh") return Method::bh;
    throw std::invalid_argument("unknown method: " + name);
}

namespace {

// single canonical path: the library, the CLI, and the simulator all take
// their thresholds from alpha_constants, so they agree bit for bit
StepdownConstants make_constants(Method method, const ProcedureParams& params) {
    StepdownConstants c;
    c.method = method;
    c.params = params;
    c.alphas = alpha_constants(method, params);
    return c;
}

}  // namespace

StepdownConstants constants_holm(std::size_t s, double alpha) {
    ProcedureParams params;
    params.s = s;
    params.alpha = alpha;
    return make_constants(Method::holm, params);
}

StepdownConstants constants_kfwer_stepdown(std::size_t s, std::size_t k, double alpha) {
    ProcedureParams params;
    params.s = s;
    params.k = k;
    params.alpha = alpha;
    return make_constants(Method::kfwer_sd, params);
}

StepdownConstants constants_fdp_stepdown(std::size_t s, const Rational& gamma, double alpha) {
    ProcedureParams params;
    params.s = s;
    params.gamma = gamma;
    params.alpha = alpha;
    return make_constants(Method::fdp_sd, params);
}

StepdownConstants constants_fdp_hommel(std::size_t s, const Rational& gamma, double alpha) {
    ProcedureParams params;
    params.s = s;
    params.gamma = gamma;
    params.alpha = alpha;
    return make_constants(Method::fdp_hommel, params);
}

double harmonic(std::size_t j) {
    if (j < 1) throw std::invalid_argument("harmonic requires j >= 1");
    double sum = 0.0;
    // small-to-large summation keeps the rounding error negligible here
    for (std::size_t i = j; i >= 1; --i) {
        sum += 1.0 / static_cast<double>(i);
    }
    return sum;
}

std::size_t stepdown_reject_count(std::span<const double> sorted_p,
                                  std::span<const double> alphas) {
    if (sorted_p.size() != alphas.size()) {
        throw std::invalid_argument("p-vector and constants dimension mismatch");
    }
    std::size_t r = 0;
    while (r < sorted_p.size() && sorted_p[r] <= alphas[r]) {
        ++r;
    }
    return r;
}

std::size_t stepup_reject_count(std::span<const double> sorted_p,
                                std::span<const double> thresholds) {
    if (sorted_p.size() != thresholds.size()) {
        throw std::invalid_argument("p-vector and thresholds dimension mismatch");
    }
    for (std::size_t r = sorted_p.size(); r >= 1; --r) {
        if (sorted_p[r - 1] <= thresholds[r - 1]) return r;
    }
    return 0;
}

RejectionSet stepdown(const OrderedPValues& ord, const StepdownConstants& c) {
    if (c.size() != ord.size()) {
        throw std::invalid_argument("constants length does not match p-vector size");
    }
    std::vector<double> p(ord.size());
    for (std::size_t i = 0; i < ord.size(); ++i) p[i] = ord.sorted[i].p;
    const std::size_t r = stepdown_reject_count(p, c.alphas);
    RejectionSet out;
    for (std::size_t i = 0; i < r; ++i) {
        out.rejected.insert(ord.sorted[i].id);
    }
    return out;
}

RejectionSet singlestep_kfwer(const PValueVector& pv, std::size_t k, double alpha) {
    check_k(k, pv.size());
    check_alpha(alpha);
    const double cutoff =
        static_cast<double>(k) * alpha / static_cast<double>(pv.size());
    RejectionSet out;
    for (const auto& e : pv.entries()) {
        if (e.p <= cutoff) out.rejected.insert(e.id);
    }
    return out;
}

RejectionSet stepup_bh(const OrderedPValues& ord, double q, bool harmonic_variant) {
    check_alpha(q);
    const std::size_t s = ord.size();
    const double qeff = harmonic_variant ? q / harmonic(s) : q;
    std::vector<double> p(s), thr(s);
    for (std::size_t i = 0; i < s; ++i) {
        p[i] = ord.sorted[i].p;
        thr[i] = static_cast<double>(i + 1) * qeff / static_cast<double>(s);
    }
    const std::size_t r = stepup_reject_count(p, thr);
    RejectionSet out;
    for (std::size_t i = 0; i < r; ++i) {
        out.rejected.insert(ord.sorted[i].id);
    }
    return out;
}

RejectionSet automatic_k_minus_1_option(const RejectionSet& rej, const OrderedPValues& ord,
                                        std::size_t k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    RejectionSet out = rej;
    const std::size_t extra = std::min(k - 1, ord.size());
    for (std::size_t i = 0; i < extra; ++i) {
        out.rejected.insert(ord.sorted[i].id);
    }
    return out;
}

std::vector<double> unit_constants(Method method, const ProcedureParams& params) {
    const std::size_t s = params.s;
    check_s(s);
    std::vector<double> c(s);
    switch (method) {
        case Method::bonferroni:
            std::fill(c.begin(), c.end(), 1.0 / static_cast<double>(s));
            break;
        case Method::kfwer_ss: {
            if (!params.k) throw std::invalid_argument("kfwer-ss requires k");
            check_k(*params.k, s);
            std::fill(c.begin(), c.end(),
                      static_cast<double>(*params.k) / static_cast<double>(s));
            break;
        }
        case Method::holm:
            for (std::size_t i = 1; i <= s; ++i) {
                c[i - 1] = 1.0 / static_cast<double>(s - i + 1);
            }
            break;
        case Method::kfwer_sd: {
            if (!params.k) throw std::invalid_argument("kfwer-sd requires k");
            const auto k = *params.k;
            check_k(k, s);
            for (std::size_t i = 1; i <= s; ++i) {
                c[i - 1] = i <= k ? static_cast<double>(k) / static_cast<double>(s)
                                  : static_cast<double>(k) / static_cast<double>(s + k - i);
            }
            break;
        }
        case Method::fdp_sd:
        case Method::fdp_hommel: {
            if (!params.gamma) throw std::invalid_argument("fdp methods require gamma");
            check_gamma(*params.gamma);
            for (std::size_t i = 1; i <= s; ++i) {
                const auto fl = params.gamma->floor_mul(static_cast<std::int64_t>(i));
                c[i - 1] = static_cast<double>(fl + 1) /
                           static_cast<double>(static_cast<std::int64_t>(s) + fl + 1 -
                                               static_cast<std::int64_t>(i));
            }
            if (method == Method::fdp_hommel) {
                const auto j = params.gamma->floor_mul(static_cast<std::int64_t>(s)) + 1;
                const double divisor = harmonic(static_cast<std::size_t>(j));
                for (double& v : c) v /= divisor;
            }
            break;
        }
        case Method::bh: {
            for (std::size_t i = 1; i <= s; ++i) {
                c[i - 1] = static_cast<double>(i) / static_cast<double>(s);
            }
            if (params.bh_harmonic_variant) {
                const double divisor = harmonic(s);
                for (double& v : c) v /= divisor;
            }
            break;
        }
        case Method::custom:
            throw std::invalid_argument("unit constants unsupported for custom method");
    }
    return c;
}

std::vector<double> alpha_constants(Method method, const ProcedureParams& params) {
    const std::size_t s = params.s;
    check_s(s);
    const double alpha = params.alpha;
    check_alpha(alpha);
    std::vector<double> a(s);
    switch (method) {
        case Method::bonferroni:
            std::fill(a.begin(), a.end(), alpha / static_cast<double>(s));
            break;
        case Method::kfwer_ss: {
            if (!params.k) throw std::invalid_argument("kfwer-ss requires k");
            check_k(*params.k, s);
            std::fill(a.begin(), a.end(),
                      static_cast<double>(*params.k) * alpha / static_cast<double>(s));
            break;
        }
        case Method::holm:
            for (std::size_t i = 1; i <= s; ++i) {
                a[i - 1] = alpha / static_cast<double>(s - i + 1);
            }
            break;
        case Method::kfwer_sd: {
            if (!params.k) throw std::invalid_argument("kfwer-sd requires k");
            const auto k = *params.k;
            check_k(k, s);
            const double ka = static_cast<double>(k) * alpha;
            for (std::size_t i = 1; i <= s; ++i) {
                a[i - 1] = i <= k ? ka / static_cast<double>(s)
                                  : ka / static_cast<double>(s + k - i);
            }
            break;
        }
        case Method::fdp_sd:
        case Method::fdp_hommel: {
            if (!params.gamma) throw std::invalid_argument("fdp methods require gamma");
            check_gamma(*params.gamma);
            for (std::size_t i = 1; i <= s; ++i) {
                const auto fl = params.gamma->floor_mul(static_cast<std::int64_t>(i));
                a[i - 1] = static_cast<double>(fl + 1) * alpha /
                           static_cast<double>(static_cast<std::int64_t>(s) + fl + 1 -
                                               static_cast<std::int64_t>(i));
            }
            if (method == Method::fdp_hommel) {
                const auto j = params.gamma->floor_mul(static_cast<std::int64_t>(s)) + 1;
                const double divisor = harmonic(static_cast<std::size_t>(j));
                for (double& v : a) v /= divisor;
            }
            break;
        }
        case Method::bh: {
            for (std::size_t i = 1; i <= s; ++i) {
                a[i - 1] = static_cast<double>(i) * alpha / static_cast<double>(s);
            }
            if (params.bh_harmonic_variant) {
                const double divisor = harmonic(s);
                for (double& v : a) v /= divisor;
            }
            break;
        }
        case Method::custom:
            throw std::invalid_argument("alpha constants unsupported for custom method");
    }
    return a;
}

AdjustmentReport adjusted_pvalues(const OrderedPValues& ord, Method method,
                                  const ProcedureParams& params) {
    ProcedureParams p = params;
    p.s = ord.size();
    check_alpha(p.alpha);
    const std::vector<double> c = unit_constants(method, p);
    const std::vector<double> alphas = alpha_constants(method, p);
    const std::size_t s = ord.size();

    AdjustmentReport report;
    report.method = method;
    report.params = p;
    report.rows.resize(s);
    for (std::size_t i = 0; i < s; ++i) {
        auto& row = report.rows[i];
        row.id = ord.sorted[i].id;
        row.p = ord.sorted[i].p;
        row.rank = i + 1;
        row.threshold = alphas[i];
    }

    std::vector<double> sorted_p(s);
    for (std::size_t i = 0; i < s; ++i) {
        sorted_p[i] = ord.sorted[i].p;
    }
    const std::vector<double>& thresholds = alphas;

    std::size_t r = 0;
    if (method == Method::bh) {
        r = stepup_reject_count(sorted_p, thresholds);
        double running = 1.0;
        for (std::size_t i = s; i >= 1; --i) {
            running = std::min(running, std::min(1.0, sorted_p[i - 1] / c[i - 1]));
            report.rows[i - 1].adjusted_p = running;
        }
    } else {
        r = stepdown_reject_count(sorted_p, thresholds);
        double running = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            running = std::max(running, sorted_p[i] / c[i]);
            report.rows[i].adjusted_p = std::min(1.0, running);
        }
    }
    for (std::size_t i = 0; i < s; ++i) {
        report.rows[i].rejected = i < r;
    }
    report.rejection_count = r;
    return report;
}

}  // namespace mtp
