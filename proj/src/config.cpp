#include "shalika/config.hpp"

namespace shalika {

FieldConfig::FieldConfig(std::uint64_t p, int precision)
    : p_(p), precision_(precision) {
    if (p < 2)
        throw std::invalid_argument("FieldConfig: p must be at least 2");
    // Reject composite p (trial division is plenty for desk-scale primes).
    for (std::uint64_t d = 2; d * d <= p; ++d)
        if (p % d == 0)
            throw std::invalid_argument("FieldConfig: p must be prime");
    if (precision < 1 || precision > 48)
        throw std::invalid_argument("FieldConfig: precision out of range");
    pow_[0] = 1;
    for (int k = 1; k <= precision; ++k) {
        // Keep p^precision well inside 64 bits so that sums of a few
        // products (via 128-bit intermediates) never overflow.
        if (pow_[k - 1] > (std::uint64_t(1) << 62) / p)
            throw std::invalid_argument(
                "FieldConfig: p^precision exceeds 2^62; lower the precision");
        pow_[k] = pow_[k - 1] * p;
    }
}

std::uint64_t FieldConfig::p_pow(int k) const {
    if (k < 0 || k > precision_)
        throw std::invalid_argument("FieldConfig::p_pow: exponent out of range");
    return pow_[k];
}

} // namespace shalika
