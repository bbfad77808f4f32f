#ifndef MTP_RATIONAL_HPP
#define MTP_RATIONAL_HPP

#include <cstdint>
#include <string>

namespace mtp {

// Exact nonnegative rational. Used for the FDP threshold gamma so that
// floor(gamma * i) is computed in integer arithmetic; double arithmetic
// misfloors cases like gamma = 0.29, i = 100.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(std::int64_t num, std::int64_t den);

    // Accepts a decimal string ("0.1", up to 15 fractional digits) or a
    // fraction string ("1/10"). Throws std::invalid_argument otherwise.
    static Rational parse(const std::string& text);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    // floor(this * i) for i >= 0.
    std::int64_t floor_mul(std::int64_t i) const;

    double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    // true iff a/b > this, with b > 0. Exact.
    bool less_than_ratio(std::int64_t a, std::int64_t b) const;

    std::string str() const;

private:
    std::int64_t num_;
    std::int64_t den_;  // > 0, gcd(num_, den_) == 1
};

}  // namespace mtp

#endif
