#include "mtp/rational.hpp"

#include <numeric>
#include <stdexcept>

namespace mtp {

Rational::Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ <= 0 || num_ < 0) {
        throw std::invalid_argument("rational requires num >= 0 and den > 0");
    }
    const std::int64_t g = std::gcd(num_, den_);
    if (g > 1) {
        num_ /= g;
        den_ /= g;
    }
}

Rational Rational::parse(const std::string& text) {
    if (text.empty()) {
        throw std::invalid_argument("empty rational string");
    }
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        const std::string a = text.substr(0, slash);
        const std::string b = text.substr(slash + 1);
        if (a.empty() || b.empty() ||
            a.find_first_not_of("0123456789") != std::string::npos ||
            b.find_first_not_of("0123456789") != std::string::npos) {
            throw std::invalid_argument("malformed fraction: " + text);
        }
        return Rational(std::stoll(a), std::stoll(b));
    }
    const auto dot = text.find('.');
    const std::string whole = (dot == std::string::npos) ? text : text.substr(0, dot);
    const std::string frac = (dot == std::string::npos) ? "" : text.substr(dot + 1);
    if ((whole.empty() && frac.empty()) ||
        whole.find_first_not_of("0123456789") != std::string::npos ||
        frac.find_first_not_of("0123456789") != std::string::npos) {
        throw std::invalid_argument("malformed decimal: " + text);
    }
    if (frac.size() > 15) {
        throw std::invalid_argument("too many fractional digits: " + text);
    }
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    std::int64_t num = whole.empty() ? 0 : std::stoll(whole);
    num *= den;
    if (!frac.empty()) num += std::stoll(frac);
    return Rational(num, den);
}

std::int64_t Rational::floor_mul(std::int64_t i) const {
    if (i < 0) {
        throw std::invalid_argument("floor_mul requires i >= 0");
    }
    return (num_ * i) / den_;
}

bool Rational::less_than_ratio(std::int64_t a, std::int64_t b) const {
    // a/b > num/den  <=>  a*den > num*b   (b, den > 0)
    return a * den_ > num_ * b;
}

std::string Rational::str() const {
    return std::to_string(num_) + "/" + std::to_string(den_);
}

}  // namespace mtp
