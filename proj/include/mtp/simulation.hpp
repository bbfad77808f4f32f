#ifndef MTP_SIMULATION_HPP
#define MTP_SIMULATION_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtp/adversarial.hpp"
#include "mtp/procedures.hpp"
#include "mtp/rational.hpp"

namespace mtp {

enum class ScenarioKind {
    independent_uniform,
    normal_means,
    equicorrelated_normal,
    adversarial_thm21,
    adversarial_thm23,
    adversarial_lemma31,
};

std::string scenario_kind_name(ScenarioKind k);
ScenarioKind parse_scenario_kind(const std::string& name);

struct Scenario {
    ScenarioKind kind = ScenarioKind::independent_uniform;
    std::size_t s = 0;
    std::size_t s0 = 0;     // true-null count (continuous kinds)
    double effect = 0.0;    // mean shift per false null (normal kinds); shrinks
                            // false-null p-values for independent-uniform
    double rho = 0.0;       // common correlation (equicorrelated kind)
    // adversarial construction parameters
    std::size_t k = 0;
    std::size_t i = 0;
    double alpha = 0.0;
    double inflate = 1.0;
    std::vector<double> betas;  // lemma-3.1 kind; its t equals s

    void validate() const;
    std::size_t true_null_count() const;
};

struct Draw {
    std::vector<double> pvalues;
    std::vector<std::uint8_t> is_true_null;
};

// One draw of s p-values with truth labels. True-null p-values are dominated
// by (here: exactly) uniform by construction.
Draw generate(const Scenario& scn, Rng& rng);

struct ProcedureSpec {
    Method method = Method::holm;
    ProcedureParams params;
    bool auto_reject_k_minus_1 = false;
    // overrides the method's critical values; used to probe inflated constants
    std::optional<std::vector<double>> custom_alphas;
};

struct MetricEstimate {
    double estimate = 0.0;
    double se = 0.0;
};

struct SimulationReport {
    std::map<std::string, MetricEstimate> metrics;  // k-fwer, fdp-exceed, fdr, avg-power
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
};

// Deterministic per-replicate RNG stream: depends only on (master seed,
// replicate index), never on execution order or thread count.
Rng replicate_rng(std::uint64_t master_seed, std::uint64_t replicate);

// Runs N independent replicates of the scenario under the procedure and
// aggregates k-FWER (k from the procedure spec, default 1), P{FDP > gamma}
// (when the spec carries gamma), FDR and average power, with standard errors.
// Results are bit-identical for any thread count.
SimulationReport run_experiment(const Scenario& scn, const ProcedureSpec& proc, std::size_t n,
                                std::uint64_t master_seed, unsigned threads = 0);

struct MarkovSandwichCheck {
    bool pass = false;
    double lower = 0.0;  // (FDR - gamma) / (1 - gamma)
    double middle = 0.0; // P{FDP > gamma}
    double upper = 0.0;  // FDR / gamma
    double lower_slack = 0.0;
    double upper_slack = 0.0;
};

// Verifies (FDR - g)/(1 - g) <= P{FDP > g} <= FDR/g within 3-SE slack, both
// estimates taken from the same report.
MarkovSandwichCheck check_markov_sandwich(const SimulationReport& report, const Rational& gamma);

// Smallest index m with m - #{false-null p-values <= alpha_m} > m*gamma,
// counting interval occupancies as in the FDP control proof; nullopt when no
// m <= s qualifies. Test oracle for where a true-null rejection must occur.
std::optional<std::size_t> theorem31_j_oracle(std::span<const double> false_null_pvalues,
                                              const StepdownConstants& constants,
                                              const Rational& gamma);

struct BoundCheckResult {
    bool pass = false;
    bool vacuous = false;   // no true nulls
    double lhs = 0.0;       // frequency of FDP > gamma
    double rhs = 0.0;       // frequency of the ordered-null union event
    double slack = 0.0;
};

// Empirical check of the intermediate FDP bound: over N replicates,
// freq{FDP > gamma} <= freq{union_{i<=M} q_(i) <= i*alpha/|I|} + 3*combined SE,
// with q the ordered true-null p-values and M = min(floor(gamma*s)+1, |I|).
BoundCheckResult theorem32_bound_check(const Scenario& scn, const ProcedureSpec& proc,
                                       const Rational& gamma, double alpha, std::size_t n,
                                       std::uint64_t master_seed);

// Applies a procedure spec to one draw; returns (rejections, false rejections).
struct AppliedOutcome {
    std::size_t rejections = 0;
    std::size_t false_rejections = 0;
};
AppliedOutcome apply_procedure(const Draw& draw, const ProcedureSpec& proc);

}  // namespace mtp

#endif
