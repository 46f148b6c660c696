#include <catch2/catch_amalgamated.hpp>

#include "skelmax/extremal.hpp"
#include "skelmax/maxop.hpp"

#include "oracles.hpp"

using namespace skelmax;

namespace {

RadiusFunction singleCenterRho(int n, double delta, const Coord& center, double r) {
    RadiusFunction rho;
    rho.grid.n = n;
    rho.grid.delta = delta;
    for (int i = 0; i < n; ++i) {
        rho.grid.origin[i] = center[i] - delta / 2.0;
        rho.grid.extent[i] = 1;
    }
    rho.radii = {r};
    return rho;
}

RadiusFunction constRho(int n, double delta, double r) {
    RadiusFunction rho;
    rho.grid = makeUnitDomain(n, delta);
    rho.radii.assign(static_cast<std::size_t>(rho.grid.cellCount()), r);
    return rho;
}

} // namespace

TEST_CASE("single-skeleton union matches inclusion-exclusion over its face boxes") {
    SkeletonConfig cfg{2, 1};
    const double delta = 1.0 / 16.0;
    GridSpec domain = makeCenteredDomain(2, delta, 7);
    Coord x = makeCoord({0.5 + delta / 2.0, 0.5 + delta / 2.0});
    const double r = 1.0 + 5.0 * delta;
    RadiusFunction rho = singleCenterRho(2, delta, x, r);
    OccupancyGrid occ = rasterizeUnion(rho, cfg, domain);

    Skeleton s{x, r};
    auto faces = enumerateFaces(cfg);
    std::vector<Box> boxes;
    for (const FaceId& f : faces) boxes.push_back(faceNeighborhood(cfg, s, f, delta));
    double incl = 0.0;
    for (unsigned mask = 1; mask < 16u; ++mask) {
        Box inter = boxes[0];
        bool first = true, empty = false;
        for (int b = 0; b < 4; ++b) {
            if (!(mask & (1u << b))) continue;
            if (first) {
                inter = boxes[static_cast<std::size_t>(b)];
                first = false;
                continue;
            }
            for (int i = 0; i < 2; ++i) {
                inter.lo[i] = std::max(inter.lo[i], boxes[static_cast<std::size_t>(b)].lo[i]);
                inter.hi[i] = std::min(inter.hi[i], boxes[static_cast<std::size_t>(b)].hi[i]);
                if (inter.hi[i] <= inter.lo[i]) empty = true;
            }
        }
        if (empty) continue;
        int bits = __builtin_popcount(mask);
        incl += ((bits % 2) ? 1.0 : -1.0) * inter.measure();
    }
    REQUIRE(occ.measure() == Catch::Approx(incl).epsilon(1e-9));
}

TEST_CASE("constant-radius union has order-one measure, stable across resolutions") {
    SkeletonConfig cfg{2, 1};
    const double delta = 1.0 / 32.0;
    GridSpec domain = makeCenteredDomain(2, delta, 7);
    RadiusFunction rho = constRho(2, delta, 1.5);
    OccupancyGrid occ = rasterizeUnion(rho, cfg, domain);
    REQUIRE(occ.measure() > 1.0);
    REQUIRE(occ.measure() < 30.0);

    // refinement pass at domain spacing delta/4, same geometric union
    GridSpec fine = makeCenteredDomain(2, delta / 4.0, 7);
    OccupancyGrid occFine = rasterizeUnion(rho, cfg, fine);
    REQUIRE(occFine.measure() == Catch::Approx(occ.measure()).epsilon(0.10));
}

TEST_CASE("union measure shrinks when delta is halved with the same pattern") {
    SkeletonConfig cfg{2, 1};
    const double delta = 1.0 / 16.0;
    Rng rng(3);
    RadiusFunction rho = constRho(2, delta, 1.0);
    auto qs = detail::radiiInRange(1.0, 2.0, delta, false);
    for (auto& r : rho.radii) r = delta * static_cast<double>(qs[rng.below(qs.size())]);

    OccupancyGrid coarse = rasterizeUnion(rho, cfg, makeCenteredDomain(2, delta, 7));
    RadiusFunction fine = refineRho(rho, delta / 2.0);
    OccupancyGrid fing = rasterizeUnion(fine, cfg, makeCenteredDomain(2, delta / 2.0, 7));
    REQUIRE(fing.measure() < coarse.measure());
}

TEST_CASE("union measure is invariant under permuting the pattern axes") {
    SkeletonConfig cfg{2, 1};
    const double delta = 1.0 / 16.0;
    Rng rng(9);
    RadiusFunction rho = constRho(2, delta, 1.0);
    auto qs = detail::radiiInRange(1.0, 2.0, delta, false);
    for (auto& r : rho.radii) r = delta * static_cast<double>(qs[rng.below(qs.size())]);

    RadiusFunction swapped = rho;
    for (std::int64_t f = 0; f < rho.grid.cellCount(); ++f) {
        Index idx = rho.grid.unflatten(f);
        Index t{};
        t[0] = idx[1];
        t[1] = idx[0];
        swapped.radii[static_cast<std::size_t>(swapped.grid.flatten(t))] =
            rho.radii[static_cast<std::size_t>(f)];
    }
    GridSpec domain = makeCenteredDomain(2, delta, 7);
    REQUIRE(rasterizeUnion(rho, cfg, domain).measure() ==
            Catch::Approx(rasterizeUnion(swapped, cfg, domain).measure()).epsilon(1e-12));
}

TEST_CASE("search strategies") {
    SkeletonConfig cfg{2, 1};
    const double delta = 1.0 / 64.0; // 2^-6

    SearchOptions randOpt;
    randOpt.strategy = "random-restart";
    randOpt.seed = 11;
    randOpt.restarts = 3;
    WitnessReport rnd = searchRadiusFunction(cfg, delta, randOpt);

    SearchOptions alignOpt;
    alignOpt.strategy = "coordinate-align";
    alignOpt.seed = 11;
    alignOpt.restarts = 3;
    WitnessReport ali = searchRadiusFunction(cfg, delta, alignOpt);

    SECTION("deterministic given the seed") {
        WitnessReport again = searchRadiusFunction(cfg, delta, alignOpt);
        REQUIRE(again.unionMeasure == ali.unionMeasure);
        REQUIRE(again.rho.radii == ali.rho.radii);
    }

    SECTION("alignment beats random restarts at this scale") {
        REQUIRE(ali.unionMeasure < rnd.unionMeasure);
    }

    SECTION("no witness can be sparser than the upper bound allows") {
        // log(measure)/log(delta) <= (n-k)/(2n) + 0.05
        for (const WitnessReport* rep : {&rnd, &ali}) {
            double slope = std::log(rep->unionMeasure) / std::log(delta);
            REQUIRE(slope <= 0.25 + 0.05);
        }
    }

    SECTION("alignment never loses to the constant baseline") {
        RadiusFunction c = constRho(2, delta, 1.0);
        double constMeasure =
            rasterizeUnion(c, cfg, makeCenteredDomain(2, delta, 7)).measure();
        REQUIRE(ali.unionMeasure <= constMeasure + 1e-12);
    }

    SECTION("norm lower bound from the report") {
        REQUIRE(ali.normLowerBound(1.0) == Catch::Approx(1.0 / ali.unionMeasure));
        REQUIRE(ali.normLowerBound(2.0) ==
                Catch::Approx(1.0 / std::sqrt(ali.unionMeasure)));
    }
}

TEST_CASE("anneal improves on its starting points") {
    SkeletonConfig cfg{2, 1};
    const double delta = 1.0 / 32.0;
    SearchOptions opt;
    opt.strategy = "anneal";
    opt.seed = 5;
    opt.restarts = 2;
    opt.annealMoves = 20000;
    WitnessReport rep = searchRadiusFunction(cfg, delta, opt);

    RadiusFunction c = constRho(2, delta, 1.0);
    double constMeasure = rasterizeUnion(c, cfg, makeCenteredDomain(2, delta, 7)).measure();
    REQUIRE(rep.unionMeasure <= constMeasure + 1e-12);
}

TEST_CASE("every center sees value 1 on its own union indicator") {
    SkeletonConfig cfg{2, 1};
    const double delta = 1.0 / 16.0;
    Rng rng(31);
    RadiusFunction rho = constRho(2, delta, 1.0);
    auto qs = detail::radiiInRange(1.0, 2.0, delta, false);
    for (auto& r : rho.radii) r = delta * static_cast<double>(qs[rng.below(qs.size())]);

    GridSpec domain = makeCenteredDomain(2, delta, 7);
    ScalarField ind = rasterizeUnion(rho, cfg, domain).indicator();
    PrefixSumTable t = buildPrefix(ind);
    OperatorResult res = evaluateRestricted(t, cfg, rho.grid);
    for (double v : res.field.values) REQUIRE(v == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("box dimension estimates") {
    SECTION("constant measure gives the ambient dimension") {
        std::vector<std::pair<double, double>> series;
        for (double d : {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128}) series.emplace_back(d, 3.7);
        REQUIRE(boxDimEstimate(2, series) == Catch::Approx(2.0).margin(0.05));
    }

    SECTION("single k-face scales like delta^(n-k)") {
        SkeletonConfig cfg{2, 1};
        std::vector<std::pair<double, double>> series;
        for (double d : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
            Skeleton s{makeCoord({0.5, 0.5}), 1.25};
            FaceMeasure m = faceNbhdMeasure(cfg, s, d);
            series.emplace_back(d, m.exact);
        }
        REQUIRE(boxDimEstimate(2, series) == Catch::Approx(1.0).margin(0.1));
    }

    SECTION("too few scales rejected") {
        try {
            boxDimEstimate(2, {{0.1, 1.0}, {0.05, 1.0}});
            FAIL("expected insufficient-scales");
        } catch (const Error& e) {
            REQUIRE(e.code() == "insufficient-scales");
        }
    }
}

TEST_CASE("neighborhood-volume corollary chain on a witness") {
    // with B the witness skeleton set: the operator applied to the
    // indicator of B_(2 delta) is 1 on Q0, hence
    // L(Q0_delta) <= C * delta^((k-n)/(2n)) * L(B_(2 delta))
    SkeletonConfig cfg{2, 1};
    const double delta = 1.0 / 16.0;
    Rng rng(77);
    RadiusFunction rho = constRho(2, delta, 1.0);
    auto qs = detail::radiiInRange(1.0, 2.0, delta, false);
    for (auto& r : rho.radii) r = delta * static_cast<double>(qs[rng.below(qs.size())]);

    GridSpec domain = makeCenteredDomain(2, delta, 7);
    OccupancyGrid wide = rasterizeUnion(rho, cfg, domain, 2.0 * delta);
    ScalarField ind = wide.indicator();
    PrefixSumTable t = buildPrefix(ind);
    OperatorResult res = evaluateRestricted(t, cfg, rho.grid);
    for (double v : res.field.values) REQUIRE(v == Catch::Approx(1.0).margin(1e-9));

    double lhs = std::pow(1.0 + 2.0 * delta, 2.0); // L((Q0)_delta)
    double impliedC = lhs / (std::pow(delta, -0.25) * wide.measure());
    REQUIRE(impliedC > 0.0);
    REQUIRE(impliedC < 3.0);
}

TEST_CASE("refineRho rejects non-dividing spacings") {
    RadiusFunction rho = constRho(2, 1.0 / 8.0, 1.0);
    REQUIRE_THROWS_AS(refineRho(rho, 1.0 / 12.0), Error);
}
