#ifndef SKELMAX_CSV_HPP
#define SKELMAX_CSV_HPP

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "skelmax/common.hpp"
#include "skelmax/grid.hpp"
#include "skelmax/maxop.hpp"
#include "skelmax/skeleton.hpp"

namespace skelmax {

// shortest-exact float formatting so CSV payloads are reproducible
inline std::string fmtDouble(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = std::strtod(buf, nullptr);
    if (back == v) {
        for (int prec = 1; prec <= 16; ++prec) {
            char shorter[64];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            if (std::strtod(shorter, nullptr) == v) return shorter;
        }
    }
    return buf;
}

inline std::vector<std::vector<std::string>> readCsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io-error", "cannot open for reading: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

// Skeleton list: header x_1,...,x_n,r then one row per skeleton.
inline void writeSkeletonCsv(const std::vector<Skeleton>& skeletons, int n,
                             const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("io-error", "cannot open for writing: " + path);
    for (int i = 0; i < n; ++i) out << "x_" << (i + 1) << ',';
    out << "r\n";
    for (const Skeleton& s : skeletons) {
        for (int i = 0; i < n; ++i) out << fmtDouble(s.center[i]) << ',';
        out << fmtDouble(s.halfSide) << '\n';
    }
}

inline std::vector<Skeleton> readSkeletonCsv(const std::string& path, int n) {
    auto rows = readCsv(path);
    if (rows.empty()) throw Error("io-error", "empty skeleton csv: " + path);
    std::size_t start = 0;
    if (!rows[0].empty() && rows[0][0].rfind("x_", 0) == 0) start = 1;
    std::vector<Skeleton> out;
    for (std::size_t ri = start; ri < rows.size(); ++ri) {
        if (static_cast<int>(rows[ri].size()) != n + 1)
            throw Error("io-error", "skeleton csv row has wrong arity");
        Skeleton s;
        for (int i = 0; i < n; ++i) s.center[i] = std::stod(rows[ri][static_cast<std::size_t>(i)]);
        s.halfSide = std::stod(rows[ri][static_cast<std::size_t>(n)]);
        out.push_back(s);
    }
    return out;
}

// Radius function over a grid: same shape as the skeleton list (centers + r).
inline void writeRhoCsv(const RadiusFunction& rho, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("io-error", "cannot open for writing: " + path);
    const int n = rho.grid.n;
    for (int i = 0; i < n; ++i) out << "x_" << (i + 1) << ',';
    out << "r\n";
    for (std::int64_t f = 0; f < rho.grid.cellCount(); ++f) {
        Coord c = rho.grid.cellCenter(rho.grid.unflatten(f));
        for (int i = 0; i < n; ++i) out << fmtDouble(c[i]) << ',';
        out << fmtDouble(rho.radii[static_cast<std::size_t>(f)]) << '\n';
    }
}

inline RadiusFunction readRhoCsv(const std::string& path, const GridSpec& grid) {
    auto rows = readCsv(path);
    RadiusFunction rho;
    rho.grid = grid;
    rho.radii.assign(static_cast<std::size_t>(grid.cellCount()), 0.0);
    std::vector<char> seen(rho.radii.size(), 0);
    std::size_t start = 0;
    if (!rows.empty() && !rows[0].empty() && rows[0][0].rfind("x_", 0) == 0) start = 1;
    for (std::size_t ri = start; ri < rows.size(); ++ri) {
        if (static_cast<int>(rows[ri].size()) != grid.n + 1)
            throw Error("io-error", "rho csv row has wrong arity");
        Index idx{};
        for (int i = 0; i < grid.n; ++i) {
            double x = std::stod(rows[ri][static_cast<std::size_t>(i)]);
            double j = (x - grid.origin[i]) / grid.delta - 0.5;
            idx[i] = static_cast<std::int64_t>(std::llround(j));
            if (std::abs(j - static_cast<double>(idx[i])) > 1e-6 || idx[i] < 0 ||
                idx[i] >= grid.extent[i])
                throw Error("io-error", "rho csv center is not a cell center of the grid");
        }
        std::int64_t f = grid.flatten(idx);
        rho.radii[static_cast<std::size_t>(f)] = std::stod(rows[ri][static_cast<std::size_t>(grid.n)]);
        seen[static_cast<std::size_t>(f)] = 1;
    }
    for (char s : seen)
        if (!s) throw Error("io-error", "rho csv does not cover every cell center");
    return rho;
}

inline void writePhiCsv(const FaceAssignment& phi, const GridSpec& grid,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("io-error", "cannot open for writing: " + path);
    const int n = grid.n;
    for (int i = 0; i < n; ++i) out << "x_" << (i + 1) << ',';
    out << "face\n";
    for (std::int64_t f = 0; f < grid.cellCount(); ++f) {
        Coord c = grid.cellCenter(grid.unflatten(f));
        for (int i = 0; i < n; ++i) out << fmtDouble(c[i]) << ',';
        out << faceToken(phi.cfg, phi.faces[static_cast<std::size_t>(f)]) << '\n';
    }
}

inline FaceAssignment readPhiCsv(const std::string& path, const SkeletonConfig& cfg,
                                 const GridSpec& grid) {
    auto rows = readCsv(path);
    FaceAssignment phi;
    phi.cfg = cfg;
    phi.faces.assign(static_cast<std::size_t>(grid.cellCount()), FaceId{});
    std::vector<char> seen(phi.faces.size(), 0);
    std::size_t start = 0;
    if (!rows.empty() && !rows[0].empty() && rows[0][0].rfind("x_", 0) == 0) start = 1;
    for (std::size_t ri = start; ri < rows.size(); ++ri) {
        // the face token itself contains commas ("I=1,3;s=+"), so re-join
        if (static_cast<int>(rows[ri].size()) < grid.n + 1)
            throw Error("io-error", "phi csv row has wrong arity");
        Index idx{};
        for (int i = 0; i < grid.n; ++i) {
            double x = std::stod(rows[ri][static_cast<std::size_t>(i)]);
            double j = (x - grid.origin[i]) / grid.delta - 0.5;
            idx[i] = static_cast<std::int64_t>(std::llround(j));
            if (std::abs(j - static_cast<double>(idx[i])) > 1e-6 || idx[i] < 0 ||
                idx[i] >= grid.extent[i])
                throw Error("io-error", "phi csv center is not a cell center of the grid");
        }
        std::string token = rows[ri][static_cast<std::size_t>(grid.n)];
        for (std::size_t c = static_cast<std::size_t>(grid.n) + 1; c < rows[ri].size(); ++c)
            token += "," + rows[ri][c];
        std::int64_t f = grid.flatten(idx);
        phi.faces[static_cast<std::size_t>(f)] = faceFromToken(cfg, token);
        seen[static_cast<std::size_t>(f)] = 1;
    }
    for (char s : seen)
        if (!s) throw Error("io-error", "phi csv does not cover every cell center");
    return phi;
}

} // namespace skelmax

#endif
