#ifndef SHALIKA_CONFIG_HPP
#define SHALIKA_CONFIG_HPP

// Global arithmetic configuration: the base field Q_p and the working
// precision of truncated p-adic scalars.  Every scalar carries a pointer
// to the configuration it was created with; mixing scalars from distinct
// configurations is a programming error and raises immediately.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace shalika {

// Raised when an arithmetic step cannot be completed at the working
// precision (e.g. cancellation consumed every known digit, or an exact
// integral would need residues beyond the truncation cap).  Callers must
// either increase the precision or treat the computation as failed;
// results are never silently rounded to zero.
class PrecisionExhausted : public std::runtime_error {
public:
    explicit PrecisionExhausted(const std::string& what)
        : std::runtime_error(what) {}
};

// Raised when a lattice sum would have to leave the configured truncation
// window (radius / mesh caps) to be provably exact.
class TruncationCapExceeded : public std::runtime_error {
public:
    explicit TruncationCapExceeded(const std::string& what)
        : std::runtime_error(what) {}
};

// Configuration of the local field: residue characteristic p (the
// uniformizer is p itself) and the number N of significant base-p digits
// kept in every unit part.
class FieldConfig {
public:
    FieldConfig(std::uint64_t p, int precision = 12);

    std::uint64_t p() const { return p_; }
    int precision() const { return precision_; }

    // p^k for 0 <= k <= precision (precomputed).
    std::uint64_t p_pow(int k) const;

    // p^precision, the modulus of unit parts.
    std::uint64_t unit_modulus() const { return p_pow(precision_); }

private:
    std::uint64_t p_;
    int precision_;
    std::uint64_t pow_[64];
};

} // namespace shalika

#endif
