#ifndef MTP_PROCEDURES_HPP
#define MTP_PROCEDURES_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtp/core.hpp"
#include "mtp/rational.hpp"

namespace mtp {

enum class Method {
    bonferroni,
    holm,
    kfwer_ss,   // single-step k-FWER
    kfwer_sd,   // stepdown k-FWER
    fdp_sd,     // FDP stepdown
    fdp_hommel, // FDP stepdown with harmonic correction
    bh,         // Benjamini-Hochberg stepup (comparison baseline)
    custom,
};

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct ProcedureParams {
    std::size_t s = 0;
    std::optional<std::size_t> k;
    std::optional<Rational> gamma;
    double alpha = 0.0;
    bool bh_harmonic_variant = false;  // replaces q by q / C_s
};

struct StepdownConstants {
    std::vector<double> alphas;  // nondecreasing critical values in [0,1]
    Method method = Method::custom;
    ProcedureParams params;

    std::size_t size() const { return alphas.size(); }
};

// Holm: alpha_i = alpha / (s - i + 1).
StepdownConstants constants_holm(std::size_t s, double alpha);

// k-FWER stepdown: alpha_i = k*alpha/s for i <= k, k*alpha/(s+k-i) for i > k.
StepdownConstants constants_kfwer_stepdown(std::size_t s, std::size_t k, double alpha);

// FDP stepdown: alpha_i = (floor(gamma*i)+1)*alpha / (s + floor(gamma*i)+1 - i),
// the floor taken in exact rational arithmetic.
StepdownConstants constants_fdp_stepdown(std::size_t s, const Rational& gamma, double alpha);

// FDP stepdown constants divided by C_{floor(gamma*s)+1}; valid with no
// dependence assumptions.
StepdownConstants constants_fdp_hommel(std::size_t s, const Rational& gamma, double alpha);

// Harmonic number C_j = sum_{i=1..j} 1/i.
double harmonic(std::size_t j);

// Number of leading ranks rejected by the stepdown rule: the largest r such
// that sorted_p[j] <= alphas[j] for every j < r (0 if the smallest p fails).
std::size_t stepdown_reject_count(std::span<const double> sorted_p,
                                  std::span<const double> alphas);

// Stepup rule: the largest r with sorted_p[r-1] <= thresholds[r-1], 0 if none.
std::size_t stepup_reject_count(std::span<const double> sorted_p,
                                std::span<const double> thresholds);

RejectionSet stepdown(const OrderedPValues& ord, const StepdownConstants& c);

// Rejects every hypothesis with p <= k*alpha/s.
RejectionSet singlestep_kfwer(const PValueVector& pv, std::size_t k, double alpha);

// Benjamini-Hochberg stepup with thresholds i*q/s; comparison baseline only.
// With harmonic_variant, q is replaced by q / C_s.
RejectionSet stepup_bh(const OrderedPValues& ord, double q, bool harmonic_variant = false);

// Optional union with the k-1 smallest-p hypotheses (always safe for the
// k-FWER, but rejecting regardless of the data is optimistic; off by default
// everywhere this library drives it).
RejectionSet automatic_k_minus_1_option(const RejectionSet& rej, const OrderedPValues& ord,
                                        std::size_t k);

struct AdjustmentRow {
    std::string id;
    double p = 0.0;
    std::size_t rank = 0;
    double threshold = 0.0;  // critical value applied at this rank
    bool rejected = false;
    double adjusted_p = 1.0;
};

struct AdjustmentReport {
    Method method = Method::custom;
    ProcedureParams params;
    std::size_t rejection_count = 0;
    std::vector<AdjustmentRow> rows;  // in rank order
};

// Adjusted p-values: the smallest level at which each hypothesis would be
// rejected. Stepdown methods use the running max of p_(j)/c_j where
// c_j = alpha_j / alpha (all constant families here are linear in alpha);
// BH uses the running min from the top of p_(j)*s/j.
AdjustmentReport adjusted_pvalues(const OrderedPValues& ord, Method method,
                                  const ProcedureParams& params);

// Unit critical constants c_i = alpha_i / alpha for a method; stepdown
// families only. Throws for methods whose constants are not linear in alpha.
std::vector<double> unit_constants(Method method, const ProcedureParams& params);

// Critical values with alpha folded in; the canonical thresholds used by the
// constants builders, the adjuster, the simulator, and the CLI alike.
std::vector<double> alpha_constants(Method method, const ProcedureParams& params);

}  // namespace mtp

#endif
