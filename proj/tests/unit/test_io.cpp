#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "skelmax/csv.hpp"
#include "skelmax/field_io.hpp"
#include "skelmax/svg.hpp"

#include "oracles.hpp"

using namespace skelmax;

namespace {

std::string tmpPath(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("field files round-trip bit-exactly") {
    GridSpec g = makeGrid(3, 1.0 / 8.0, makeCoord({-3.0, 0.0, -1.0}),
                          makeCoord({-1.0, 1.0, 0.0}));
    Rng rng(77);
    ScalarField f = makeField(g);
    for (double& v : f.values) v = rng.uniform(-1e6, 1e6) * std::pow(2.0, rng.range(-30, 30));
    f.values[0] = 0.0;
    f.values[1] = -0.0;
    f.values[2] = 1e-300;

    std::string path = tmpPath("skelmax_field_test.bin");
    writeField(f, path);
    ScalarField back = readField(path);
    REQUIRE(back.spec.sameGeometry(f.spec));
    REQUIRE(back.values.size() == f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        // bitwise equality, not numeric equality
        std::uint64_t a, b;
        std::memcpy(&a, &f.values[i], 8);
        std::memcpy(&b, &back.values[i], 8);
        REQUIRE(a == b);
    }

    SECTION("writing twice produces identical bytes") {
        std::string path2 = tmpPath("skelmax_field_test2.bin");
        writeField(f, path2);
        REQUIRE(slurp(path) == slurp(path2));
        std::remove(path2.c_str());
    }
    std::remove(path.c_str());
}

TEST_CASE("truncated field files are rejected") {
    GridSpec g = makeGrid(1, 0.25, makeCoord({0.0}), makeCoord({1.0}));
    ScalarField f = makeField(g, 1.0);
    std::string path = tmpPath("skelmax_trunc.bin");
    writeField(f, path);
    // chop the payload
    std::string all = slurp(path);
    std::ofstream out(path, std::ios::binary);
    out.write(all.data(), static_cast<std::streamsize>(all.size() - 9));
    out.close();
    try {
        readField(path);
        FAIL("expected io-error");
    } catch (const Error& e) {
        REQUIRE(e.code() == "io-error");
    }
    std::remove(path.c_str());
}

TEST_CASE("skeleton csv round trip") {
    std::vector<Skeleton> sk = {{makeCoord({0.5, 0.25}), 1.5},
                                {makeCoord({-1.0, 0.75}), 1.0},
                                {makeCoord({0.0078125, 0.0}), 1.984375}};
    std::string path = tmpPath("skelmax_skel.csv");
    writeSkeletonCsv(sk, 2, path);
    auto back = readSkeletonCsv(path, 2);
    REQUIRE(back.size() == sk.size());
    for (std::size_t i = 0; i < sk.size(); ++i) {
        REQUIRE(back[i].halfSide == sk[i].halfSide);
        for (int ax = 0; ax < 2; ++ax) REQUIRE(back[i].center[ax] == sk[i].center[ax]);
    }
    std::remove(path.c_str());
}

TEST_CASE("rho and phi csv round trips") {
    SkeletonConfig cfg{2, 1};
    const double delta = 1.0 / 8.0;
    GridSpec grid = makeUnitDomain(2, delta);
    Rng rng(5);
    RadiusFunction rho;
    rho.grid = grid;
    auto qs = detail::radiiInRange(1.0, 2.0, delta, false);
    rho.radii.resize(static_cast<std::size_t>(grid.cellCount()));
    for (auto& r : rho.radii) r = delta * static_cast<double>(qs[rng.below(qs.size())]);

    std::string rpath = tmpPath("skelmax_rho.csv");
    writeRhoCsv(rho, rpath);
    RadiusFunction rback = readRhoCsv(rpath, grid);
    REQUIRE(rback.radii == rho.radii);
    std::remove(rpath.c_str());

    FaceAssignment phi;
    phi.cfg = cfg;
    auto faces = enumerateFaces(cfg);
    for (std::int64_t i = 0; i < grid.cellCount(); ++i)
        phi.faces.push_back(faces[rng.below(faces.size())]);
    std::string ppath = tmpPath("skelmax_phi.csv");
    writePhiCsv(phi, grid, ppath);
    FaceAssignment pback = readPhiCsv(ppath, cfg, grid);
    for (std::size_t i = 0; i < phi.faces.size(); ++i) REQUIRE(pback.faces[i] == phi.faces[i]);
    std::remove(ppath.c_str());
}

TEST_CASE("log-log svg plot") {
    std::vector<std::pair<double, double>> pts;
    for (int s = 3; s <= 8; ++s) {
        double d = std::ldexp(1.0, -s);
        pts.emplace_back(d, 2.0 * std::pow(d, -0.25));
    }
    std::string path = tmpPath("skelmax_plot.svg");
    writeLogLogSvg(path, pts, -0.25, std::log(2.0), "norm ratios");
    std::string body = slurp(path);
    REQUIRE(body.find("<svg") != std::string::npos);
    REQUIRE(body.find("</svg>") != std::string::npos);
    REQUIRE(body.find("circle") != std::string::npos);

    std::string path2 = tmpPath("skelmax_plot2.svg");
    writeLogLogSvg(path2, pts, -0.25, std::log(2.0), "norm ratios");
    REQUIRE(slurp(path) == slurp(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}
