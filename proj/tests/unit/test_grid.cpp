#include <catch2/catch_amalgamated.hpp>

#include "skelmax/grid.hpp"
#include "skelmax/rng.hpp"

#include "oracles.hpp"

using namespace skelmax;

namespace {

Box randomBoxIn(const GridSpec& spec, Rng& rng) {
    Box b;
    b.n = spec.n;
    for (int i = 0; i < spec.n; ++i) {
        double a = rng.uniform(spec.lo(i), spec.hi(i));
        double c = rng.uniform(spec.lo(i), spec.hi(i));
        b.lo[i] = std::min(a, c);
        b.hi[i] = std::max(a, c) + spec.delta; // nonempty
    }
    return b;
}

} // namespace

TEST_CASE("single cell prefix table") {
    GridSpec g = makeGrid(1, 1.0, makeCoord({0.0}), makeCoord({1.0}));
    ScalarField f = makeField(g, 3.0);
    PrefixSumTable t = buildPrefix(f);
    REQUIRE(boxSum(t, wholeDomain(g)) == Catch::Approx(3.0));
}

TEST_CASE("all-zero field sums to zero everywhere") {
    GridSpec g = makeGrid(2, 0.25, makeCoord({0.0, 0.0}), makeCoord({1.0, 1.0}));
    PrefixSumTable t = buildPrefix(makeField(g, 0.0));
    Rng rng(7);
    for (int it = 0; it < 20; ++it)
        REQUIRE(boxSum(t, randomBoxIn(g, rng)) == 0.0);
}

TEST_CASE("prefix box sums match direct summation") {
    Rng rng(42);
    for (int n = 1; n <= 3; ++n) {
        double delta = 1.0 / 16.0;
        Coord lo{}, hi{};
        for (int i = 0; i < n; ++i) { lo[i] = 0.0; hi[i] = 2.0; }
        GridSpec g = makeGrid(n, delta, lo, hi);
        ScalarField f = oracle::randomField(g, rng);
        PrefixSumTable t = buildPrefix(f);
        for (int it = 0; it < 200; ++it) {
            Box b = randomBoxIn(g, rng);
            double fast = boxSum(t, b);
            double direct = oracle::directBoxSum(f, b);
            REQUIRE(fast == Catch::Approx(direct).margin(1e-9).epsilon(1e-9));
        }
    }
}

TEST_CASE("boxSum additivity under an axis cut") {
    Rng rng(11);
    GridSpec g = makeGrid(2, 0.125, makeCoord({-1.0, -1.0}), makeCoord({1.0, 1.0}));
    ScalarField f = oracle::randomField(g, rng);
    PrefixSumTable t = buildPrefix(f);
    for (int it = 0; it < 50; ++it) {
        Box b = randomBoxIn(g, rng);
        double cut = rng.uniform(b.lo[0] + 1e-6, b.hi[0] - 1e-6);
        Box left = b, right = b;
        left.hi[0] = cut;
        right.lo[0] = cut;
        double whole = boxSum(t, b);
        double parts = boxSum(t, left) + boxSum(t, right);
        REQUIRE(whole == Catch::Approx(parts).margin(1e-9).epsilon(1e-9));
    }
}

TEST_CASE("boxSum of a constant field counts cells") {
    GridSpec g = makeGrid(2, 0.25, makeCoord({0.0, 0.0}), makeCoord({2.0, 2.0}));
    const double c = 1.75;
    PrefixSumTable t = buildPrefix(makeField(g, c));
    Box b;
    b.n = 2;
    b.lo = makeCoord({0.25, 0.5});
    b.hi = makeCoord({1.0, 1.5}); // 3 x 4 cells
    REQUIRE(boxSum(t, b) == Catch::Approx(c * 12.0));
}

TEST_CASE("box straddling the domain edge is clipped") {
    GridSpec g = makeGrid(1, 0.25, makeCoord({0.0}), makeCoord({1.0}));
    ScalarField f = makeField(g, 1.0);
    PrefixSumTable t = buildPrefix(f);
    Box b;
    b.n = 1;
    b.lo[0] = -2.0;
    b.hi[0] = 0.5; // two interior cells
    REQUIRE(boxSum(t, b) == Catch::Approx(2.0));
}

TEST_CASE("fully outside box is an empty query") {
    GridSpec g = makeGrid(1, 0.25, makeCoord({0.0}), makeCoord({1.0}));
    PrefixSumTable t = buildPrefix(makeField(g, 1.0));
    Box b;
    b.n = 1;
    b.lo[0] = 2.0;
    b.hi[0] = 3.0;
    try {
        boxSum(t, b);
        FAIL("expected empty-query");
    } catch (const Error& e) {
        REQUIRE(e.code() == "empty-query");
    }
}

TEST_CASE("boxAverage of a constant field is the constant") {
    GridSpec g = makeGrid(3, 0.25, makeCoord({0.0, 0.0, 0.0}), makeCoord({2.0, 2.0, 2.0}));
    const double c = 0.375;
    PrefixSumTable t = buildPrefix(makeField(g, c));
    Rng rng(3);
    for (int it = 0; it < 20; ++it) {
        Box b;
        b.n = 3;
        for (int i = 0; i < 3; ++i) {
            std::int64_t a = rng.range(0, 6);
            std::int64_t w = rng.range(1, 7 - a);
            b.lo[i] = static_cast<double>(a) * 0.25;
            b.hi[i] = static_cast<double>(a + w) * 0.25;
        }
        REQUIRE(boxAverage(t, b) == Catch::Approx(c).epsilon(1e-12));
    }
}

TEST_CASE("boxAverage of its own grid-aligned indicator is 1") {
    GridSpec g = makeGrid(2, 0.125, makeCoord({0.0, 0.0}), makeCoord({2.0, 2.0}));
    Box b;
    b.n = 2;
    b.lo = makeCoord({0.25, 0.5});
    b.hi = makeCoord({1.25, 1.0});
    ScalarField f = makeField(g);
    for (std::int64_t c = 0; c < g.cellCount(); ++c)
        if (b.contains(g.cellCenter(g.unflatten(c)))) f.values[static_cast<std::size_t>(c)] = 1.0;
    PrefixSumTable t = buildPrefix(f);
    REQUIRE(boxAverage(t, b) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("boxAverage of the left-half indicator") {
    const double delta = 1.0 / 32.0;
    GridSpec g = makeGrid(2, delta, makeCoord({0.0, 0.0}), makeCoord({1.0, 1.0}));
    Box whole = unitBox(2);
    Box left = whole;
    left.hi[0] = 0.5;
    ScalarField f = makeField(g);
    for (std::int64_t c = 0; c < g.cellCount(); ++c)
        if (left.contains(g.cellCenter(g.unflatten(c)))) f.values[static_cast<std::size_t>(c)] = 1.0;
    PrefixSumTable t = buildPrefix(f);
    REQUIRE(boxAverage(t, whole) == Catch::Approx(0.5).margin(delta));
}

TEST_CASE("lpNorm basics") {
    const double delta = 1.0 / 8.0;
    GridSpec g = makeGrid(2, delta, makeCoord({0.0, 0.0}), makeCoord({1.0, 1.0}));
    Box region = unitBox(2);

    SECTION("constant 1 has unit norm for every p") {
        ScalarField f = makeField(g, 1.0);
        for (double p : {1.0, 2.0, 3.5, std::numeric_limits<double>::infinity()})
            REQUIRE(lpNorm(f, p, region) == Catch::Approx(1.0).epsilon(1e-12));
    }

    SECTION("single cell of value 1 has L1 norm delta^n") {
        ScalarField f = makeField(g);
        f.values[5] = 1.0;
        REQUIRE(lpNorm(f, 1.0, region) == Catch::Approx(delta * delta).epsilon(1e-12));
    }

    SECTION("L2 squared matches a direct scan") {
        Rng rng(9);
        ScalarField f = oracle::randomSignedField(g, rng);
        double fast = lpNorm(f, 2.0, region);
        REQUIRE(fast == Catch::Approx(oracle::directLpNormP(f, 2.0)).epsilon(1e-12));
    }

    SECTION("invalid exponent rejected") {
        ScalarField f = makeField(g, 1.0);
        try {
            lpNorm(f, 0.5, region);
            FAIL("expected invalid-exponent");
        } catch (const Error& e) {
            REQUIRE(e.code() == "invalid-exponent");
        }
    }
}

TEST_CASE("lpNorm triangle inequality on random pairs") {
    Rng rng(1234);
    GridSpec g = makeGrid(2, 1.0 / 16.0, makeCoord({0.0, 0.0}), makeCoord({1.0, 1.0}));
    Box region = unitBox(2);
    for (double p : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
        for (int it = 0; it < 10; ++it) {
            ScalarField f = oracle::randomSignedField(g, rng);
            ScalarField h = oracle::randomSignedField(g, rng);
            ScalarField sum = f;
            for (std::size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += h.values[i];
            REQUIRE(lpNorm(sum, p, region) <=
                    lpNorm(f, p, region) + lpNorm(h, p, region) + 1e-12);
        }
    }
}

TEST_CASE("spec validation") {
    GridSpec g;
    g.n = 2;
    g.delta = 0.3; // 1/0.3 is not an integer
    g.origin = makeCoord({0.0, 0.0});
    g.extent[0] = g.extent[1] = 4;
    REQUIRE_THROWS_AS(g.validate(), Error);
}
