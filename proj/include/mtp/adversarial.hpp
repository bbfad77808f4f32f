#ifndef MTP_ADVERSARIAL_HPP
#define MTP_ADVERSARIAL_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace mtp {

using Rng = std::mt19937_64;

// One draw from an adversarial joint p-value distribution. Entries flagged
// false-null are the planted point masses; everything else is a true null
// whose marginal is exactly uniform(0,1) by construction.
struct AdversarialDraw {
    std::vector<double> pvalues;
    std::vector<std::uint8_t> is_true_null;
};

// Sharpness construction for the single-step k-FWER procedure: a random
// k-subset shares U1 ~ uniform(0, k/s), the rest share an independent
// U2 ~ uniform(k/s, 1). Every draw has exactly k values at or below k/s,
// and P{all k planted values <= alpha*k/s} = alpha.
AdversarialDraw sample_theorem21(std::size_t s, std::size_t k, Rng& rng);

struct Lemma21Draw {
    std::vector<double> values;
    // true for the branch (probability beta_k/u) on which the ordered values
    // meet all k thresholds with certainty
    bool certain_branch = false;
};

// Recursive joint construction: k values marginally uniform(0,u) whose
// ordered values satisfy q_(j) <= beta_j for all j with probability exactly
// beta_k/u. Requires j*(beta_j - beta_{j-1})/beta_j <= 1 for j = 2..k and
// beta_k <= u; throws std::invalid_argument when the construction is
// infeasible. k is capped at 64.
Lemma21Draw sample_lemma21(std::span<const double> betas, double u, Rng& rng);

// Unimprovability construction: i-k entries at exactly 0 (flagged false
// null); among the remaining s' = s+k-i entries a random k-subset carries a
// lemma-2.1 draw with u = k/s' and beta_j equal to the stepdown constants at
// ranks i-k+1..i, the rest share a value uniform on (k/s', 1). The joint
// event {p_(1) <= alpha_1, ..., p_(i) <= alpha_i} has probability exactly
// alpha. inflate_last multiplies the last beta (and hence the event
// probability) by c, for c in [1, s/k) with c*alpha <= 1.
AdversarialDraw sample_theorem23(std::size_t s, std::size_t k, std::size_t i, double alpha,
                                 Rng& rng, double inflate_last = 1.0);

// Sharpness construction for the generalized Hommel bound: t values, each
// marginally uniform(0,1), for which the union event
// {exists j <= m : p_(j) <= beta_j} has probability exactly
// t * sum_i (beta_i - beta_{i-1})/i. Throws when that bound exceeds 1.
std::vector<double> sample_lemma31(std::size_t t, std::span<const double> betas, Rng& rng);

// Right-hand side of the generalized Hommel inequality,
// t * sum_{i=1..m} (beta_i - beta_{i-1})/i, capped at 1.
double hommel_bound(std::size_t t, std::span<const double> betas);

// True iff some ordered value (ascending) is at or below its beta threshold.
bool union_event_holds(std::span<const double> values, std::span<const double> betas);

}  // namespace mtp

#endif
