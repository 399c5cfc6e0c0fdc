#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "trackgnn/fxp.hpp"
#include "trackgnn/rng.hpp"

using namespace trackgnn;

TEST_CASE("quantize hits the documented grid points") {
    CHECK(quantize(1.0).raw() == 128);
    CHECK(quantize(1.0).value() == 1.0);
    CHECK(quantize(3.14159265).raw() == 402);
    CHECK(quantize(3.14159265).value() == 3.140625);
    CHECK(quantize(100.0).raw() == 8191);
    CHECK(quantize(100.0).value() == 63.9921875);
    CHECK(quantize(-100.0).raw() == -8192);
    CHECK(quantize(-0.0078125).raw() == -1);
    CHECK(quantize(0.0).raw() == 0);
}

TEST_CASE("quantize rejects non-finite input") {
    CHECK_THROWS_AS(quantize(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
    CHECK_THROWS_AS(quantize(std::numeric_limits<double>::infinity()), std::domain_error);
    CHECK_THROWS_AS(quantize(-std::numeric_limits<double>::infinity()), std::domain_error);
}

TEST_CASE("raw -> value -> raw is the identity for the whole word") {
    for (int raw = Fx::raw_min; raw <= Fx::raw_max; ++raw) {
        const Fx x = Fx::from_raw(raw);
        CHECK(quantize(x.value()).raw() == raw);
    }
}

TEST_CASE("quantize picks the nearest grid point, ties to even") {
    Rng rng(42);
    for (int i = 0; i < 20000; ++i) {
        const double x = rng.uniform(-80.0, 80.0);
        const Fx q = quantize(x);
        const double err = std::abs(q.value() - std::clamp(x, -64.0, 63.9921875));
        CHECK(err <= 1.0 / 256.0 + 1e-15);
        // No neighbouring grid point is strictly closer.
        for (int d : {-1, 1}) {
            const int nraw = q.raw() + d;
            if (nraw < Fx::raw_min || nraw > Fx::raw_max) continue;
            const double nerr = std::abs(Fx::from_raw(nraw).value() - x);
            CHECK(err <= nerr + 1e-15);
        }
    }
    // Exact halfway cases round to the even raw value.
    CHECK(quantize(0.5 / 128.0).raw() == 0);     // between 0 and 1
    CHECK(quantize(1.5 / 128.0).raw() == 2);     // between 1 and 2
    CHECK(quantize(-0.5 / 128.0).raw() == 0);    // between -1 and 0
    CHECK(quantize(-1.5 / 128.0).raw() == -2);   // between -2 and -1
}

namespace {

// Wide-integer reference for saturating add.
Fx oracle_add(Fx a, Fx b) {
    long long s = static_cast<long long>(a.raw()) + b.raw();
    if (s > Fx::raw_max) s = Fx::raw_max;
    if (s < Fx::raw_min) s = Fx::raw_min;
    return Fx::from_raw(static_cast<int>(s));
}

}  // namespace

TEST_CASE("fx_add examples and properties") {
    CHECK(fx_add(quantize(0.5), quantize(0.25)).value() == 0.75);
    CHECK(fx_add(Fx::max(), quantize(1.0)) == Fx::max());
    CHECK(fx_add(Fx::lowest(), quantize(-1.0)) == Fx::lowest());

    Rng rng(7);
    for (int i = 0; i < 100000; ++i) {
        const Fx a = Fx::from_raw(static_cast<int>(rng.below(16384)) + Fx::raw_min);
        const Fx b = Fx::from_raw(static_cast<int>(rng.below(16384)) + Fx::raw_min);
        CHECK(fx_add(a, b) == oracle_add(a, b));
        CHECK(fx_add(a, b) == fx_add(b, a));
        CHECK(fx_add(a, Fx::zero()) == a);
    }
}

TEST_CASE("fx_mul examples") {
    CHECK(fx_mul(quantize(0.5), quantize(0.5)).value() == 0.25);
    // 2^-7 * 2^-7 = 2^-14 rounds to zero at 2^-7 resolution.
    CHECK(fx_mul(Fx::from_raw(1), Fx::from_raw(1)) == Fx::zero());
    CHECK(fx_mul(quantize(-8.0), quantize(8.0)).value() == -64.0);
    CHECK(fx_mul(quantize(-8.0), quantize(8.0)) == Fx::lowest());
    CHECK(fx_mul(quantize(8.0), quantize(8.0)) == Fx::max());  // +64 saturates
}

TEST_CASE("fx_mul rounds ties to even") {
    // raw 1 * raw 64: product 64/128 = exactly 0.5 LSB, even neighbour is 0.
    CHECK(fx_mul(Fx::from_raw(1), Fx::from_raw(64)).raw() == 0);
    // raw 1 * raw 192: product 192/128 = 1.5 LSB, even neighbour is 2.
    CHECK(fx_mul(Fx::from_raw(1), Fx::from_raw(192)).raw() == 2);
    CHECK(fx_mul(Fx::from_raw(-1), Fx::from_raw(192)).raw() == -2);

    Rng rng(11);
    for (int i = 0; i < 100000; ++i) {
        const Fx a = Fx::from_raw(static_cast<int>(rng.below(16384)) + Fx::raw_min);
        const Fx b = Fx::from_raw(static_cast<int>(rng.below(16384)) + Fx::raw_min);
        CHECK(fx_mul(a, b) == fx_mul(b, a));
    }
}

TEST_CASE("fx_relu and fx_hard_sigmoid examples") {
    CHECK(fx_relu(quantize(-3.5)) == Fx::zero());
    CHECK(fx_relu(quantize(2.25)).value() == 2.25);
    CHECK(fx_relu(Fx::zero()) == Fx::zero());

    CHECK(fx_hard_sigmoid(Fx::zero()).value() == 0.5);
    CHECK(fx_hard_sigmoid(quantize(8.0)).value() == 1.0);
    CHECK(fx_hard_sigmoid(quantize(2.0)).value() == 0.75);
    CHECK(fx_hard_sigmoid(quantize(-4.0)).value() == 0.0);
    CHECK(fx_hard_sigmoid(quantize(4.0)).value() == 1.0);
    CHECK(fx_hard_sigmoid(Fx::lowest()).value() == 0.0);
    CHECK(fx_hard_sigmoid(Fx::max()).value() == 1.0);
}

TEST_CASE("relu and hard sigmoid are monotone over the whole word") {
    for (int raw = Fx::raw_min; raw < Fx::raw_max; ++raw) {
        const Fx a = Fx::from_raw(raw);
        const Fx b = Fx::from_raw(raw + 1);
        CHECK(fx_relu(a).raw() <= fx_relu(b).raw());
        CHECK(fx_hard_sigmoid(a).raw() <= fx_hard_sigmoid(b).raw());
    }
}

TEST_CASE("hard sigmoid output stays in [0, 1]") {
    for (int raw = Fx::raw_min; raw <= Fx::raw_max; ++raw) {
        const int s = fx_hard_sigmoid(Fx::from_raw(raw)).raw();
        CHECK(s >= 0);
        CHECK(s <= 128);
    }
}
