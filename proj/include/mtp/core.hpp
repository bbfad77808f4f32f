#ifndef MTP_CORE_HPP
#define MTP_CORE_HPP

#include <cstddef>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace mtp {

struct PValueEntry {
    std::string id;
    double p;
};

// Validated collection of p-values with stable, unique identifiers.
class PValueVector {
public:
    explicit PValueVector(std::vector<PValueEntry> entries);

    const std::vector<PValueEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::vector<PValueEntry> entries_;
};

// Stable nondecreasing ordering of a PValueVector. Ranks are 1-based.
// tie_groups lists maximal runs of equal p as [first_rank, last_rank] pairs
// (runs of length 1 included).
struct OrderedPValues {
    std::vector<PValueEntry> sorted;
    std::unordered_map<std::string, std::size_t> rank_of;
    std::vector<std::pair<std::size_t, std::size_t>> tie_groups;

    std::size_t size() const { return sorted.size(); }
};

OrderedPValues order_pvalues(const PValueVector& pv);

// Partition of the hypothesis ids into true nulls and false nulls.
// Known only in simulation.
struct TruthAssignment {
    std::unordered_set<std::string> true_nulls;
    std::unordered_set<std::string> false_nulls;
};

struct RejectionSet {
    std::unordered_set<std::string> rejected;

    std::size_t count() const { return rejected.size(); }
};

// |rejected ∩ true_nulls|. Throws std::invalid_argument if a rejected id
// is unknown to the truth assignment.
std::size_t false_rejection_count(const RejectionSet& rej, const TruthAssignment& truth);

// False rejections over total rejections; 0 when nothing is rejected.
double fdp(const RejectionSet& rej, const TruthAssignment& truth);

}  // namespace mtp

#endif
