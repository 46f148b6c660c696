#ifndef SKELMAX_TEST_ORACLES_HPP
#define SKELMAX_TEST_ORACLES_HPP

// Brute-force reference implementations, written straight from the
// definitions and kept independent of the prefix-sum / integer-index paths
// they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "skelmax/grid.hpp"
#include "skelmax/rng.hpp"
#include "skelmax/skeleton.hpp"

namespace oracle {

using namespace skelmax;

// direct cell scan: a cell contributes iff its center lies in [lo, hi)
inline double directBoxSum(const ScalarField& f, const Box& box) {
    const GridSpec& spec = f.spec;
    double sum = 0.0;
    for (std::int64_t c = 0; c < spec.cellCount(); ++c) {
        Coord p = spec.cellCenter(spec.unflatten(c));
        bool inside = true;
        for (int i = 0; i < spec.n; ++i)
            if (!(p[i] >= box.lo[i] - 1e-12 && p[i] < box.hi[i] - 1e-12)) {
                inside = false;
                break;
            }
        if (inside) sum += f.values[static_cast<std::size_t>(c)];
    }
    return sum;
}

inline double directLpNormP(const ScalarField& f, double p) {
    double s = 0.0;
    for (double v : f.values) s += std::pow(std::abs(v), p);
    return std::pow(s * powi(f.spec.delta, f.spec.n), 1.0 / p);
}

// operator evaluation straight from the definition: nested loops, direct
// sums, no prefix tables
inline double naiveFaceAverage(const ScalarField& absf, const SkeletonConfig& cfg,
                               const Skeleton& s, const FaceId& face, double delta) {
    Box b;
    b.n = cfg.n;
    for (int i = 0; i < cfg.n; ++i) {
        if ((face.freeMask >> i) & 1u) {
            b.lo[i] = s.center[i] - s.halfSide - delta;
            b.hi[i] = s.center[i] + s.halfSide + delta;
        } else {
            int p = 0;
            for (int j = 0; j < i; ++j)
                if (!((face.freeMask >> j) & 1u)) ++p;
            int sgn = ((face.signMask >> p) & 1u) ? +1 : -1;
            b.lo[i] = s.center[i] + sgn * s.halfSide - delta;
            b.hi[i] = s.center[i] + sgn * s.halfSide + delta;
        }
    }
    double vol = 1.0;
    for (int i = 0; i < cfg.n; ++i) vol *= b.hi[i] - b.lo[i];
    return directBoxSum(absf, b) * powi(delta, cfg.n) / vol;
}

inline double naiveMinFaceAverage(const ScalarField& absf, const SkeletonConfig& cfg,
                                  const Skeleton& s, double delta) {
    double best = std::numeric_limits<double>::infinity();
    for (const FaceId& face : enumerateFaces(cfg))
        best = std::min(best, naiveFaceAverage(absf, cfg, s, face, delta));
    return best;
}

inline double naiveRestrictedMax(const ScalarField& absf, const SkeletonConfig& cfg,
                                 const Coord& center, double delta) {
    std::int64_t qmin = static_cast<std::int64_t>(std::llround(1.0 / delta));
    std::int64_t qmax = static_cast<std::int64_t>(std::llround(2.0 / delta));
    double best = -1.0;
    for (std::int64_t q = qmin; q <= qmax; ++q) {
        Skeleton s;
        s.center = center;
        s.halfSide = delta * static_cast<double>(q);
        best = std::max(best, naiveMinFaceAverage(absf, cfg, s, delta));
    }
    return best;
}

// voxel counting at raster pitch h, raster anchored at `anchor`
inline double rasterBoxMeasure(const Box& box, double h, const Coord& anchor) {
    double m = 1.0;
    for (int i = 0; i < box.n; ++i) {
        std::int64_t count = 0;
        std::int64_t j0 = static_cast<std::int64_t>(
            std::floor((box.lo[i] - anchor[i]) / h)) - 2;
        std::int64_t j1 = static_cast<std::int64_t>(
            std::ceil((box.hi[i] - anchor[i]) / h)) + 2;
        for (std::int64_t j = j0; j <= j1; ++j) {
            double c = anchor[i] + (static_cast<double>(j) + 0.5) * h;
            if (c >= box.lo[i] && c < box.hi[i]) ++count;
        }
        m *= static_cast<double>(count) * h;
    }
    return m;
}

inline ScalarField randomField(const GridSpec& spec, Rng& rng) {
    ScalarField f = makeField(spec);
    for (double& v : f.values) v = rng.uniform();
    return f;
}

inline ScalarField randomSignedField(const GridSpec& spec, Rng& rng) {
    ScalarField f = makeField(spec);
    for (double& v : f.values) v = rng.uniform(-1.0, 1.0);
    return f;
}

} // namespace oracle

#endif
