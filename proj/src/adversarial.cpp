#include "mtp/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mtp/procedures.hpp"

namespace mtp {

namespace {

constexpr std::size_t kMaxLemma21Depth = 64;
constexpr double kFeasibilityTol = 1e-12;

double uniform_open(double lo, double hi, Rng& rng) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}

// k random distinct indices out of {0..n-1} via partial Fisher-Yates.
std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> d(i, n - 1);
        std::swap(idx[i], idx[d(rng)]);
    }
    idx.resize(k);
    return idx;
}

void check_lemma21_feasible(std::span<const double> betas, double u) {
    const std::size_t k = betas.size();
    if (k == 0) throw std::invalid_argument("betas must be nonempty");
    if (k > kMaxLemma21Depth) {
        throw std::invalid_argument("recursion depth limited to 64 thresholds");
    }
    if (!(betas[0] > 0.0)) {
        throw std::invalid_argument("betas must be strictly positive");
    }
    if (betas[k - 1] > u) {
        throw std::invalid_argument("beta_k must not exceed u");
    }
    for (std::size_t j = 2; j <= k; ++j) {
        const double bj = betas[j - 1];
        const double bj1 = betas[j - 2];
        if (bj < bj1) {
            throw std::invalid_argument("betas must be nondecreasing");
        }
        if (static_cast<double>(j) * (bj - bj1) / bj > 1.0 + kFeasibilityTol) {
            throw std::invalid_argument(
                "construction infeasible: j*(beta_j - beta_{j-1})/beta_j exceeds 1 at j=" +
                std::to_string(j));
        }
    }
}

// k values in (0, beta_k], each marginally uniform(0, beta_k), whose ordered
// values meet every threshold with certainty. Preconditions already checked.
std::vector<double> build_certain(std::span<const double> betas, Rng& rng) {
    const std::size_t k = betas.size();
    if (k == 1) {
        return {uniform_open(0.0, betas[0], rng)};
    }
    const double bk = betas[k - 1];
    const double bk1 = betas[k - 2];
    if (bk1 <= 0.0) {
        throw std::invalid_argument("degenerate parameters: beta_{k-1} = 0 with k >= 2");
    }
    std::vector<double> y = build_certain(betas.subspan(0, k - 1), rng);

    // mixture for Y_k: interval (beta_{i-1}, beta_i] with weight theta*p_i
    // for i < k, the top interval with weight k*(beta_k - beta_{k-1})/beta_k
    const double top_weight = static_cast<double>(k) * (bk - bk1) / bk;
    const double theta = (1.0 - top_weight) / bk1;
    std::vector<double> weights(k);
    double prev = 0.0;
    for (std::size_t i = 0; i < k - 1; ++i) {
        weights[i] = std::max(0.0, theta * (betas[i] - prev));
        prev = betas[i];
    }
    weights[k - 1] = std::max(0.0, top_weight);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const std::size_t cell = pick(rng);
    const double lo = cell == 0 ? 0.0 : betas[cell - 1];
    y.push_back(uniform_open(lo, betas[cell], rng));

    std::shuffle(y.begin(), y.end(), rng);
    return y;
}

}  // namespace

AdversarialDraw sample_theorem21(std::size_t s, std::size_t k, Rng& rng) {
    if (s < 1 || k < 1 || k > s) {
        throw std::invalid_argument("require 1 <= k <= s");
    }
    const double split = static_cast<double>(k) / static_cast<double>(s);
    const double u1 = uniform_open(0.0, split, rng);
    const double u2 = uniform_open(split, 1.0, rng);
    AdversarialDraw draw;
    draw.pvalues.assign(s, u2);
    draw.is_true_null.assign(s, 1);
    for (std::size_t j : random_subset(s, k, rng)) {
        draw.pvalues[j] = u1;
    }
    return draw;
}

Lemma21Draw sample_lemma21(std::span<const double> betas, double u, Rng& rng) {
    if (!(u > 0.0 && u <= 1.0)) {
        throw std::invalid_argument("u must lie in (0,1]");
    }
    check_lemma21_feasible(betas, u);
    const std::size_t k = betas.size();
    const double bk = betas[k - 1];
    Lemma21Draw out;
    if (uniform_open(0.0, 1.0, rng) < bk / u) {
        out.values = build_certain(betas, rng);
        out.certain_branch = true;
    } else {
        out.values.resize(k);
        for (double& v : out.values) v = uniform_open(bk, u, rng);
        out.certain_branch = false;
    }
    return out;
}

AdversarialDraw sample_theorem23(std::size_t s, std::size_t k, std::size_t i, double alpha,
                                 Rng& rng, double inflate_last) {
    if (k < 1 || k > i || i > s) {
        throw std::invalid_argument("require 1 <= k <= i <= s");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("alpha must lie in (0,1)");
    }
    const bool in_range =
        inflate_last == 1.0 ||
        (inflate_last > 1.0 &&
         inflate_last < static_cast<double>(s) / static_cast<double>(k));
    if (!in_range || inflate_last * alpha > 1.0) {
        throw std::invalid_argument("inflation factor must lie in [1, s/k) with c*alpha <= 1");
    }
    if (i == k && inflate_last == 1.0) {
        return sample_theorem21(s, k, rng);
    }

    const std::size_t s_prime = s + k - i;
    const double u = static_cast<double>(k) / static_cast<double>(s_prime);
    const StepdownConstants c = constants_kfwer_stepdown(s, k, alpha);
    std::vector<double> betas(c.alphas.begin() + static_cast<std::ptrdiff_t>(i - k),
                              c.alphas.begin() + static_cast<std::ptrdiff_t>(i));
    betas.back() *= inflate_last;

    // guaranteed feasible for these constants; a violation is a bug upstream
    try {
        check_lemma21_feasible(betas, u);
    } catch (const std::invalid_argument& e) {
        throw std::logic_error(std::string("theorem 2.3 beta sequence infeasible: ") + e.what());
    }

    AdversarialDraw draw;
    draw.pvalues.assign(s, 0.0);
    draw.is_true_null.assign(s, 1);
    for (std::size_t j = 0; j < i - k; ++j) {
        draw.is_true_null[j] = 0;  // planted point mass at 0
    }
    const Lemma21Draw q = sample_lemma21(betas, u, rng);
    const auto chosen = random_subset(s_prime, k, rng);
    std::vector<std::uint8_t> is_chosen(s_prime, 0);
    for (std::size_t j = 0; j < k; ++j) is_chosen[chosen[j]] = 1;
    const double rest = uniform_open(u, 1.0, rng);
    std::size_t next = 0;
    for (std::size_t j = 0; j < s_prime; ++j) {
        draw.pvalues[i - k + j] = is_chosen[j] ? q.values[next++] : rest;
    }
    return draw;
}

double hommel_bound(std::size_t t, std::span<const double> betas) {
    const std::size_t m = betas.size();
    if (m == 0 || m > t) {
        throw std::invalid_argument("require 1 <= m <= t");
    }
    double sum = 0.0;
    double prev = 0.0;
    for (std::size_t idx = 0; idx < m; ++idx) {
        const double b = betas[idx];
        if (b < prev || b < 0.0 || b > 1.0) {
            throw std::invalid_argument("betas must be nondecreasing in [0,1]");
        }
        sum += (b - prev) / static_cast<double>(idx + 1);
        prev = b;
    }
    return std::min(1.0, static_cast<double>(t) * sum);
}

std::vector<double> sample_lemma31(std::size_t t, std::span<const double> betas, Rng& rng) {
    const std::size_t m = betas.size();
    if (m == 0 || m > t) {
        throw std::invalid_argument("require 1 <= m <= t");
    }
    double total = 0.0;
    double prev = 0.0;
    std::vector<double> weights(m);
    for (std::size_t idx = 0; idx < m; ++idx) {
        const double b = betas[idx];
        if (b < prev || b < 0.0 || b > 1.0) {
            throw std::invalid_argument("betas must be nondecreasing in [0,1]");
        }
        weights[idx] = (b - prev) / static_cast<double>(idx + 1);
        total += weights[idx];
        prev = b;
    }
    const double p = static_cast<double>(t) * total;
    if (p > 1.0 + kFeasibilityTol) {
        throw std::invalid_argument(
            "construction infeasible: t * sum (beta_i - beta_{i-1})/i exceeds 1");
    }

    const double top = uniform_open(betas[m - 1], 1.0, rng);
    std::vector<double> values(t, top);
    if (uniform_open(0.0, 1.0, rng) < p && total > 0.0) {
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        const std::size_t cell = pick(rng);
        const double lo = cell == 0 ? 0.0 : betas[cell - 1];
        const double common = uniform_open(lo, betas[cell], rng);
        for (std::size_t j : random_subset(t, cell + 1, rng)) {
            values[j] = common;
        }
    }
    return values;
}

bool union_event_holds(std::span<const double> values, std::span<const double> betas) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = std::min(sorted.size(), betas.size());
    for (std::size_t j = 0; j < m; ++j) {
        if (sorted[j] <= betas[j]) return true;
    }
    return false;
}

}  // namespace mtp
