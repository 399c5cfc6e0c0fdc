#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>

namespace trackgnn {

// Signed Q7.7 fixed point: 14-bit two's-complement raw value, 7 fractional
// bits, value = raw / 2^7. Range [-64.0, +63.9921875] in steps of 2^-7.
// Addition and multiplication saturate instead of wrapping; multiplication
// rounds to nearest with ties to even after an exact 28-bit intermediate.
class Fx {
public:
    static constexpr int frac_bits = 7;
    static constexpr int word_bits = 14;
    static constexpr std::int32_t scale = 1 << frac_bits;                  // 128
    static constexpr std::int32_t raw_max = (1 << (word_bits - 1)) - 1;    // 8191
    static constexpr std::int32_t raw_min = -(1 << (word_bits - 1));       // -8192

    constexpr Fx() = default;

    static constexpr Fx from_raw(std::int32_t raw) {
        Fx x;
        x.raw_ = static_cast<std::int16_t>(saturate_raw(raw));
        return x;
    }

    constexpr std::int32_t raw() const { return raw_; }
    constexpr double value() const { return static_cast<double>(raw_) / scale; }

    static constexpr Fx zero() { return Fx{}; }
    static constexpr Fx one() { return from_raw(scale); }
    static constexpr Fx max() { return from_raw(raw_max); }
    static constexpr Fx lowest() { return from_raw(raw_min); }
    static constexpr double resolution() { return 1.0 / scale; }

    friend constexpr bool operator==(Fx a, Fx b) = default;
    friend constexpr auto operator<=>(Fx a, Fx b) = default;

    static constexpr std::int64_t saturate_raw(std::int64_t raw) {
        if (raw > raw_max) return raw_max;
        if (raw < raw_min) return raw_min;
        return raw;
    }

private:
    std::int16_t raw_ = 0;
};

// Nearest integer of p / 2^shift with ties to even. Exact for any p; the
// floor-based remainder is non-negative, so negative inputs need no special
// casing.
constexpr std::int64_t round_shift_ties_even(std::int64_t p, int shift) {
    std::int64_t q = p >> shift;
    const std::int64_t r = p - (q << shift);
    const std::int64_t half = std::int64_t{1} << (shift - 1);
    if (r > half || (r == half && (q & 1))) ++q;
    return q;
}

// Nearest representable value to x, ties to even raw; saturates outside the
// range. Non-finite input is a domain error.
inline Fx quantize(double x) {
    if (!std::isfinite(x)) {
        throw std::domain_error("quantize: input must be finite");
    }
    // x * 2^7 is exact in double (power-of-two scaling), so the rounding
    // decision below is made on the true scaled value.
    const double scaled = x * static_cast<double>(Fx::scale);
    if (scaled >= static_cast<double>(Fx::raw_max)) return Fx::max();
    if (scaled <= static_cast<double>(Fx::raw_min)) return Fx::lowest();
    const double fl = std::floor(scaled);
    auto q = static_cast<std::int64_t>(fl);
    const double rem = scaled - fl;
    if (rem > 0.5 || (rem == 0.5 && (q & 1))) ++q;
    return Fx::from_raw(static_cast<std::int32_t>(q));
}

constexpr Fx fx_add(Fx a, Fx b) {
    return Fx::from_raw(static_cast<std::int32_t>(
        Fx::saturate_raw(std::int64_t{a.raw()} + b.raw())));
}

constexpr Fx fx_sub(Fx a, Fx b) {
    return Fx::from_raw(static_cast<std::int32_t>(
        Fx::saturate_raw(std::int64_t{a.raw()} - b.raw())));
}

// Exact 28-bit product, one round to 7 fractional bits, then saturation.
constexpr Fx fx_mul(Fx a, Fx b) {
    const std::int64_t wide = std::int64_t{a.raw()} * b.raw();
    return Fx::from_raw(static_cast<std::int32_t>(
        Fx::saturate_raw(round_shift_ties_even(wide, Fx::frac_bits))));
}

constexpr Fx fx_relu(Fx a) { return a.raw() > 0 ? a : Fx::zero(); }

// Piecewise-linear sigmoid: clamp(0.125*a + 0.5, 0, 1), all in Fx arithmetic.
constexpr Fx fx_hard_sigmoid(Fx a) {
    constexpr Fx eighth = Fx::from_raw(Fx::scale / 8);
    constexpr Fx half = Fx::from_raw(Fx::scale / 2);
    const Fx y = fx_add(fx_mul(a, eighth), half);
    if (y.raw() < 0) return Fx::zero();
    if (y.raw() > Fx::scale) return Fx::one();
    return y;
}

constexpr Fx operator+(Fx a, Fx b) { return fx_add(a, b); }
constexpr Fx operator-(Fx a, Fx b) { return fx_sub(a, b); }
constexpr Fx operator*(Fx a, Fx b) { return fx_mul(a, b); }

static_assert(Fx::lowest().value() == -64.0);
static_assert(Fx::max().value() == 63.9921875);
static_assert(Fx::resolution() == 0.0078125);
static_assert(fx_add(Fx::max(), Fx::one()) == Fx::max());
static_assert(fx_mul(Fx::from_raw(1), Fx::from_raw(1)) == Fx::zero());
static_assert(fx_hard_sigmoid(Fx::zero()).value() == 0.5);

}  // namespace trackgnn
