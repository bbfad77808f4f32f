#include "mtp/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mtp {

PValueVector::PValueVector(std::vector<PValueEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) {
        throw std::invalid_argument("PValueVector requires at least one entry");
    }
    std::unordered_set<std::string> seen;
    seen.reserve(entries_.size());
    for (const auto& e : entries_) {
        if (e.id.empty()) {
            throw std::invalid_argument("empty hypothesis id");
        }
        if (!seen.insert(e.id).second) {
            throw std::invalid_argument("duplicate hypothesis id: " + e.id);
        }
        if (!(e.p >= 0.0 && e.p <= 1.0)) {
            throw std::invalid_argument("p-value out of [0,1] for id " + e.id);
        }
    }
}

OrderedPValues order_pvalues(const PValueVector& pv) {
    const std::size_t s = pv.size();
    std::vector<std::size_t> idx(s);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return pv.entries()[a].p < pv.entries()[b].p;
    });

    OrderedPValues out;
    out.sorted.reserve(s);
    out.rank_of.reserve(s);
    for (std::size_t r = 0; r < s; ++r) {
        out.sorted.push_back(pv.entries()[idx[r]]);
        out.rank_of.emplace(out.sorted.back().id, r + 1);
    }
    std::size_t first = 0;
    for (std::size_t r = 1; r <= s; ++r) {
        if (r == s || out.sorted[r].p != out.sorted[first].p) {
            out.tie_groups.emplace_back(first + 1, r);
            first = r;
        }
    }
    return out;
}

std::size_t false_rejection_count(const RejectionSet& rej, const TruthAssignment& truth) {
    std::size_t n = 0;
    for (const auto& id : rej.rejected) {
        if (truth.true_nulls.count(id)) {
            ++n;
        } else if (!truth.false_nulls.count(id)) {
            throw std::invalid_argument("rejected id unknown to truth assignment: " + id);
        }
    }
    return n;
}

double fdp(const RejectionSet& rej, const TruthAssignment& truth) {
    if (rej.rejected.empty()) {
        return 0.0;
    }
    return static_cast<double>(false_rejection_count(rej, truth)) /
           static_cast<double>(rej.count());
}

}  // namespace mtp
