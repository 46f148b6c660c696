#ifndef SKELMAX_SKELETON_HPP
#define SKELMAX_SKELETON_HPP

#include <bit>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "skelmax/common.hpp"
#include "skelmax/grid.hpp"

namespace skelmax {

// An n-cube has N(n,k) = C(n,k) * 2^(n-k) k-faces.
inline std::int64_t faceCount(int n, int k) {
    return binomial(n, k) * ipow(2, n - k);
}

struct SkeletonConfig {
    int n = 0;
    int k = 0;

    void validate() const {
        if (n < 1 || n > kMaxDim) throw Error("invalid-spec", "dimension out of range");
        if (k < 0 || k >= n) throw Error("invalid-face-dim", "face dimension must satisfy 0 <= k < n");
    }
};

// A k-face of an axis-parallel cube: k free axes (the face extends along
// them) and one sign per remaining axis picking which side it sits on.
struct FaceId {
    std::uint8_t freeMask = 0; // bit i set => axis i is free
    std::uint8_t signMask = 0; // bit p = sign (+ if set) of the p-th non-free axis, ascending

    bool isFree(int axis) const { return (freeMask >> axis) & 1u; }

    // sign of a non-free axis
    int sign(int n, int axis) const {
        int p = 0;
        for (int i = 0; i < axis; ++i)
            if (!isFree(i)) ++p;
        (void)n;
        return ((signMask >> p) & 1u) ? +1 : -1;
    }

    bool operator==(const FaceId& o) const {
        return freeMask == o.freeMask && signMask == o.signMask;
    }
};

// Canonical order: free-axis sets lexicographic (as ascending axis lists),
// signs as a binary counter with the lowest non-free axis most significant
// and - before +.
inline std::vector<FaceId> enumerateFaces(const SkeletonConfig& cfg) {
    cfg.validate();
    const int n = cfg.n, k = cfg.k;
    std::vector<FaceId> out;
    out.reserve(static_cast<std::size_t>(faceCount(n, k)));

    // all k-subsets of {0..n-1} in lexicographic order
    std::vector<int> pick(k);
    for (int i = 0; i < k; ++i) pick[i] = i;
    while (true) {
        std::uint8_t mask = 0;
        for (int i = 0; i < k; ++i) mask |= static_cast<std::uint8_t>(1u << pick[i]);
        const int m = n - k;
        for (std::uint32_t counter = 0; counter < (1u << m); ++counter) {
            FaceId f;
            f.freeMask = mask;
            std::uint8_t sm = 0;
            for (int p = 0; p < m; ++p) {
                std::uint32_t bit = (counter >> (m - 1 - p)) & 1u;
                if (bit) sm |= static_cast<std::uint8_t>(1u << p);
            }
            f.signMask = sm;
            out.push_back(f);
        }
        if (k == 0) break;
        int i = k - 1;
        while (i >= 0 && pick[i] == n - k + i) --i;
        if (i < 0) break;
        ++pick[i];
        for (int j = i + 1; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
    return out;
}

// Cube with center x and side length 2r; faces are indexed by FaceId.
struct Skeleton {
    Coord center{};
    double halfSide = 0.0;

    void validate() const {
        if (!(halfSide > 0.0)) throw Error("invalid-skeleton", "halfSide must be positive");
    }
};

// The delta-neighborhood of a k-face under the infinity norm is itself an
// axis-aligned box: side 2r+2delta on free axes and side 2delta centered at
// x_i + sign*r on the others.
inline Box faceNeighborhood(const SkeletonConfig& cfg, const Skeleton& s, const FaceId& face,
                            double delta) {
    s.validate();
    if (!(delta > 0.0)) throw Error("invalid-spec", "delta must be positive");
    Box b;
    b.n = cfg.n;
    const double r = s.halfSide;
    for (int i = 0; i < cfg.n; ++i) {
        if (face.isFree(i)) {
            b.lo[i] = s.center[i] - r - delta;
            b.hi[i] = s.center[i] + r + delta;
        } else {
            double mid = s.center[i] + face.sign(cfg.n, i) * r;
            b.lo[i] = mid - delta;
            b.hi[i] = mid + delta;
        }
    }
    return b;
}

struct FaceMeasure {
    double exact;      // (2r+2delta)^k (2delta)^(n-k), the box volume
    double closedForm; // 2^n (r^k delta^(n-k) + delta^n); equals exact only for k <= 1
    double upperBound; // 2^(n+1) r^k delta^(n-k)
};

inline FaceMeasure faceNbhdMeasure(const SkeletonConfig& cfg, const Skeleton& s, double delta) {
    s.validate();
    if (!(delta > 0.0)) throw Error("invalid-spec", "delta must be positive");
    const int n = cfg.n, k = cfg.k;
    const double r = s.halfSide;
    FaceMeasure m;
    m.exact = powi(2.0 * r + 2.0 * delta, k) * powi(2.0 * delta, n - k);
    m.closedForm = powi(2.0, n) * (powi(r, k) * powi(delta, n - k) + powi(delta, n));
    m.upperBound = powi(2.0, n + 1) * powi(r, k) * powi(delta, n - k);
    return m;
}

// Exact squared/true infinity-distance from a point to a k-face; used by
// rasterization oracles and the skeleton-neighborhood membership test.
inline double faceDistanceInf(const SkeletonConfig& cfg, const Skeleton& s, const FaceId& face,
                              const Coord& p) {
    double d = 0.0;
    const double r = s.halfSide;
    for (int i = 0; i < cfg.n; ++i) {
        double di;
        if (face.isFree(i)) {
            di = std::abs(p[i] - s.center[i]) - r;
            if (di < 0.0) di = 0.0;
        } else {
            di = std::abs(p[i] - (s.center[i] + face.sign(cfg.n, i) * r));
        }
        d = std::max(d, di);
    }
    return d;
}

inline double skeletonDistanceInf(const SkeletonConfig& cfg, const Skeleton& s,
                                  const std::vector<FaceId>& faces, const Coord& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const FaceId& f : faces) best = std::min(best, faceDistanceInf(cfg, s, f, p));
    return best;
}

// "I=1,3;s=+-" : free axes 1-based ascending, then one sign per non-free
// axis ascending.
inline std::string faceToken(const SkeletonConfig& cfg, const FaceId& face) {
    std::string t = "I=";
    bool firstAxis = true;
    for (int i = 0; i < cfg.n; ++i) {
        if (!face.isFree(i)) continue;
        if (!firstAxis) t += ',';
        t += std::to_string(i + 1);
        firstAxis = false;
    }
    t += ";s=";
    for (int i = 0; i < cfg.n; ++i) {
        if (face.isFree(i)) continue;
        t += (face.sign(cfg.n, i) > 0) ? '+' : '-';
    }
    return t;
}

inline FaceId faceFromToken(const SkeletonConfig& cfg, const std::string& token) {
    auto semi = token.find(";s=");
    if (token.rfind("I=", 0) != 0 || semi == std::string::npos)
        throw Error("invalid-face-token", "expected 'I=...;s=...': " + token);
    FaceId f;
    std::string axes = token.substr(2, semi - 2);
    std::size_t pos = 0;
    while (pos < axes.size()) {
        auto comma = axes.find(',', pos);
        if (comma == std::string::npos) comma = axes.size();
        int axis = std::stoi(axes.substr(pos, comma - pos));
        if (axis < 1 || axis > cfg.n) throw Error("invalid-face-token", "axis out of range");
        f.freeMask |= static_cast<std::uint8_t>(1u << (axis - 1));
        pos = comma + 1;
    }
    std::string signs = token.substr(semi + 3);
    int expected = cfg.n - static_cast<int>(std::popcount(static_cast<unsigned>(f.freeMask)));
    if (static_cast<int>(signs.size()) != expected)
        throw Error("invalid-face-token", "sign count mismatch");
    for (int p = 0; p < expected; ++p) {
        if (signs[static_cast<std::size_t>(p)] == '+')
            f.signMask |= static_cast<std::uint8_t>(1u << p);
        else if (signs[static_cast<std::size_t>(p)] != '-')
            throw Error("invalid-face-token", "signs must be '+' or '-'");
    }
    return f;
}

} // namespace skelmax

#endif
