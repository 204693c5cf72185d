#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

// Emulation of the embedded controller's fixed-point number formats.
// Values are carried as scaled integers (raw * 2^-frac_bits) so that every
// rounding decision the controller would make is reproduced bit-exactly.

namespace wbsim {

enum class TieRule {
    AwayFromZero,  // symmetric under negation (default)
    ToEven,
    HalfUp,        // always toward +inf; asymmetric, provokes worse bias
};

struct QFormat {
    int total_bits = 18;
    int frac_bits = 14;
    bool is_signed = true;

    QFormat() = default;
    QFormat(int total, int frac, bool sign = true)
        : total_bits(total), frac_bits(frac), is_signed(sign) {
        if (frac < 1 || frac >= total || total > 64)
            throw std::invalid_argument("QFormat: need 1 <= frac_bits < total_bits <= 64");
    }

    double step() const { return std::ldexp(1.0, -frac_bits); }

    std::int64_t max_raw() const {
        int magnitude_bits = is_signed ? total_bits - 1 : total_bits;
        if (magnitude_bits >= 63) return INT64_MAX;
        return (std::int64_t{1} << magnitude_bits) - 1;
    }
    std::int64_t min_raw() const {
        if (!is_signed) return 0;
        if (total_bits - 1 >= 63) return INT64_MIN;
        return -(std::int64_t{1} << (total_bits - 1));
    }
    double max_value() const { return std::ldexp(double(max_raw()), -frac_bits); }
    double min_value() const { return std::ldexp(double(min_raw()), -frac_bits); }

    bool operator==(const QFormat&) const = default;
};

struct FixedValue {
    std::int64_t raw = 0;
    QFormat format;

    double to_double() const { return std::ldexp(double(raw), -format.frac_bits); }
};

struct QuantizeResult {
    FixedValue value;
    bool saturated = false;
};

// Round a real number to an integer-valued double under the given tie rule.
// Non-tie cases match ordinary round-to-nearest for all rules.
double round_real(double x, TieRule tie);

// Integer-exact rounding of a fixed-point value to the nearest integer.
std::int64_t round_to_integer(const FixedValue& v, TieRule tie = TieRule::AwayFromZero);

// Nearest representable value; saturates silently at the format bounds and
// reports the saturation in the result.
QuantizeResult quantize(double x, const QFormat& fmt, TieRule tie = TieRule::AwayFromZero);

}  // namespace wbsim
