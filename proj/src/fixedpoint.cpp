#include "wbsim/fixedpoint.hpp"

#include <cmath>

namespace wbsim {

double round_real(double x, TieRule tie) {
    double f = std::floor(x);
    double d = x - f;
    if (d > 0.5) return f + 1.0;
    if (d < 0.5) return f;
    switch (tie) {
        case TieRule::AwayFromZero:
            return x >= 0.0 ? f + 1.0 : f;
        case TieRule::ToEven:
            return std::fmod(f, 2.0) == 0.0 ? f : f + 1.0;
        case TieRule::HalfUp:
            return f + 1.0;
    }
    return f;  // unreachable
}

std::int64_t round_to_integer(const FixedValue& v, TieRule tie) {
    int frac = v.format.frac_bits;
    std::int64_t unit = std::int64_t{1} << frac;
    std::int64_t q = v.raw >> frac;  // floor
    std::int64_t rem = v.raw - (q << frac);
    std::int64_t half = unit >> 1;
    if (rem > half) return q + 1;
    if (rem < half) return q;
    switch (tie) {
        case TieRule::AwayFromZero:
            return v.raw >= 0 ? q + 1 : q;
        case TieRule::ToEven:
            return (q & 1) == 0 ? q : q + 1;
        case TieRule::HalfUp:
            return q + 1;
    }
    return q;  // unreachable
}

QuantizeResult quantize(double x, const QFormat& fmt, TieRule tie) {
    if (!std::isfinite(x)) throw std::invalid_argument("quantize: non-finite input");
    QuantizeResult r;
    r.value.format = fmt;
    // Exact for |raw| < 2^53, i.e. any format narrow enough to be a
    // plausible controller register.
    double scaled = round_real(std::ldexp(x, fmt.frac_bits), tie);
    double lo = double(fmt.min_raw());
    double hi = double(fmt.max_raw());
    if (scaled > hi) {
        r.value.raw = fmt.max_raw();
        r.saturated = true;
    } else if (scaled < lo) {
        r.value.raw = fmt.min_raw();
        r.saturated = true;
    } else {
        r.value.raw = std::int64_t(scaled);
    }
    return r;
}

}  // namespace wbsim
