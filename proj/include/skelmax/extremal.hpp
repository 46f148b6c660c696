#ifndef SKELMAX_EXTREMAL_HPP
#define SKELMAX_EXTREMAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "skelmax/common.hpp"
#include "skelmax/grid.hpp"
#include "skelmax/maxop.hpp"
#include "skelmax/rng.hpp"
#include "skelmax/skeleton.hpp"

namespace skelmax {

// Stamp-count grid over the experiment domain. occupancy = count > 0;
// counts stay exact under incremental restamping during search moves.
struct OccupancyGrid {
    GridSpec spec;
    std::vector<std::uint32_t> counts;
    std::int64_t occupied = 0;

    double measure() const {
        return static_cast<double>(occupied) * powi(spec.delta, spec.n);
    }

    ScalarField indicator() const {
        ScalarField f = makeField(spec);
        for (std::size_t i = 0; i < counts.size(); ++i)
            if (counts[i] > 0) f.values[i] = 1.0;
        return f;
    }
};

namespace detail {

// integer cell range of one face box of skeleton (centerIdxQ0 + offset, q)
struct Stamper {
    GridSpec domain;
    SkeletonConfig cfg;
    std::vector<FaceId> faces;
    Index centerOffset{}; // domain index of eval cell (0,...,0)
    std::int64_t w = 1;   // width in cells

    static Stamper make(const GridSpec& domain, const SkeletonConfig& cfg,
                        const GridSpec& evalGrid, double width) {
        if (std::abs(evalGrid.delta - domain.delta) > 1e-12 * domain.delta)
            throw Error("invalid-spec", "stamper needs matching grid spacings");
        Stamper st;
        st.domain = domain;
        st.cfg = cfg;
        st.faces = enumerateFaces(cfg);
        st.w = static_cast<std::int64_t>(std::llround(width / domain.delta));
        if (st.w < 1) throw Error("invalid-spec", "width below grid resolution");
        for (int i = 0; i < domain.n; ++i) {
            double off = (evalGrid.origin[i] - domain.origin[i]) / domain.delta;
            st.centerOffset[i] = static_cast<std::int64_t>(std::llround(off));
            if (std::abs(off - static_cast<double>(st.centerOffset[i])) > 1e-9)
                throw Error("invalid-spec", "grids are not aligned");
        }
        return st;
    }

    // visit(first, last) per face box, clipped to the domain
    template <typename Visit>
    void forEachFaceBox(const Index& centerIdx, std::int64_t q, Visit&& visit) const {
        const int n = cfg.n;
        for (const FaceId& face : faces) {
            Index first{}, last{};
            bool empty = false;
            for (int i = 0; i < n; ++i) {
                std::int64_t c = centerOffset[i] + centerIdx[i];
                if (face.isFree(i)) {
                    first[i] = c - q - w;
                    last[i] = c + q + w;
                } else {
                    std::int64_t mid = c + face.sign(n, i) * q;
                    first[i] = mid - w;
                    last[i] = mid + w;
                }
                first[i] = std::max<std::int64_t>(first[i], 0);
                last[i] = std::min<std::int64_t>(last[i], domain.extent[i]);
                if (first[i] >= last[i]) empty = true;
            }
            if (!empty) visit(first, last);
        }
    }
};

inline void stampRange(OccupancyGrid& occ, const Index& first, const Index& last, int dir) {
    const int n = occ.spec.n;
    Index idx = first;
    while (true) {
        std::int64_t f = occ.spec.flatten(idx);
        std::uint32_t& c = occ.counts[static_cast<std::size_t>(f)];
        if (dir > 0) {
            if (c == 0) ++occ.occupied;
            ++c;
        } else {
            --c;
            if (c == 0) --occ.occupied;
        }
        int i = n - 1;
        for (; i >= 0; --i) {
            if (++idx[i] < last[i]) break;
            idx[i] = first[i];
        }
        if (i < 0) break;
    }
}

} // namespace detail

// Occupancy of the union over all eval centers of all N face boxes of
// S(x*, rho(x*)), rasterized at the domain grid. width defaults to the
// radius-grid delta; pass 2*delta for the doubled-width neighborhood. The
// occupancy grid may be finer than the radius grid (refinement passes).
inline OccupancyGrid rasterizeUnion(const RadiusFunction& rho, const SkeletonConfig& cfg,
                                    const GridSpec& domain, double width = 0.0) {
    rho.validate();
    cfg.validate();
    if (width <= 0.0) width = rho.grid.delta;
    OccupancyGrid occ;
    occ.spec = domain;
    occ.counts.assign(static_cast<std::size_t>(domain.cellCount()), 0);

    const std::int64_t cells = rho.grid.cellCount();
    if (std::abs(domain.delta - rho.grid.delta) <= 1e-12 * domain.delta) {
        detail::Stamper st = detail::Stamper::make(domain, cfg, rho.grid, width);
        for (std::int64_t f = 0; f < cells; ++f) {
            Index idx = rho.grid.unflatten(f);
            std::int64_t q = static_cast<std::int64_t>(
                std::llround(rho.radii[static_cast<std::size_t>(f)] / domain.delta));
            st.forEachFaceBox(idx, q, [&](const Index& a, const Index& b) {
                detail::stampRange(occ, a, b, +1);
            });
        }
        return occ;
    }

    // general path for mismatched spacings: real-coordinate boxes, cell
    // ranges by the center-membership rule
    auto faces = enumerateFaces(cfg);
    for (std::int64_t f = 0; f < cells; ++f) {
        Skeleton s;
        s.center = rho.grid.cellCenter(rho.grid.unflatten(f));
        s.halfSide = rho.radii[static_cast<std::size_t>(f)];
        for (const FaceId& face : faces) {
            Box b = faceNeighborhood(cfg, s, face, width);
            Index first{}, last{};
            bool empty = false;
            for (int i = 0; i < domain.n; ++i) {
                cellRange(domain, i, b.lo[i], b.hi[i], first[i], last[i]);
                if (first[i] >= last[i]) empty = true;
            }
            if (!empty) detail::stampRange(occ, first, last, +1);
        }
    }
    return occ;
}

struct WitnessReport {
    RadiusFunction rho;
    double delta = 0.0;
    double unionMeasure = 0.0;
    std::string strategy;
    std::uint64_t seed = 0;
    int restarts = 0;

    // 1 / unionMeasure^{1/p}: every center is covered by construction, so
    // the operator applied to the union indicator is 1 on all of Q0.
    double normLowerBound(double p) const {
        return std::pow(unionMeasure, -1.0 / p);
    }
};

struct SearchOptions {
    std::string strategy = "coordinate-align"; // random-restart | coordinate-align | anneal
    std::uint64_t seed = 1;
    int restarts = 4;
    std::int64_t annealMoves = 0; // 0 = auto (scaled with center count)
};

namespace detail {

inline std::vector<std::int64_t> radiusChoices(double delta) {
    return radiiInRange(1.0, 2.0, delta, false);
}

// measure of a full stamp of rho
inline double measureOf(const RadiusFunction& rho, const SkeletonConfig& cfg,
                        const GridSpec& domain) {
    return rasterizeUnion(rho, cfg, domain).measure();
}

inline RadiusFunction constantRho(const GridSpec& evalGrid, double r) {
    RadiusFunction rho;
    rho.grid = evalGrid;
    rho.radii.assign(static_cast<std::size_t>(evalGrid.cellCount()), r);
    return rho;
}

inline RadiusFunction randomRho(const GridSpec& evalGrid, double delta, Rng& rng) {
    auto qs = radiusChoices(delta);
    RadiusFunction rho;
    rho.grid = evalGrid;
    rho.radii.resize(static_cast<std::size_t>(evalGrid.cellCount()));
    for (auto& r : rho.radii)
        r = delta * static_cast<double>(qs[rng.below(qs.size())]);
    return rho;
}

// Greedy alignment: process centers in a seeded order and pick, per center,
// the radius whose 2n face-plane offsets reuse already-used offsets the
// most. Offsets are keyed exactly in half-delta units; reuse of an offset
// means the new face lands in an existing plane, which is what keeps the
// union small.
inline RadiusFunction alignRho(const GridSpec& evalGrid, double delta, Rng& rng, bool shuffle) {
    auto qs = radiusChoices(delta);
    const int n = evalGrid.n;
    const std::int64_t cells = evalGrid.cellCount();

    std::vector<std::int64_t> order(static_cast<std::size_t>(cells));
    for (std::int64_t i = 0; i < cells; ++i) order[static_cast<std::size_t>(i)] = i;
    if (shuffle) {
        for (std::int64_t i = cells - 1; i > 0; --i)
            std::swap(order[static_cast<std::size_t>(i)],
                      order[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
    }

    // usage count per (axis, sign, offset in half-delta units)
    std::array<std::unordered_map<std::int64_t, std::int64_t>, 2 * kMaxDim> used;
    RadiusFunction rho;
    rho.grid = evalGrid;
    rho.radii.assign(static_cast<std::size_t>(cells), 1.0);

    for (std::int64_t oi = 0; oi < cells; ++oi) {
        std::int64_t f = order[static_cast<std::size_t>(oi)];
        Index idx = evalGrid.unflatten(f);
        // center in half-delta units: 2*j + 1 relative to origin
        std::array<std::int64_t, kMaxDim> c2{};
        for (int i = 0; i < n; ++i)
            c2[static_cast<std::size_t>(i)] =
                2 * idx[i] + 1 +
                2 * static_cast<std::int64_t>(std::llround(evalGrid.origin[i] / delta));

        std::int64_t bestQ = qs[0];
        std::int64_t bestScore = -1, bestTie = 0;
        for (std::int64_t q : qs) {
            std::int64_t score = 0, tie = 0;
            for (int i = 0; i < n; ++i) {
                for (int s = 0; s < 2; ++s) {
                    std::int64_t off = c2[static_cast<std::size_t>(i)] + (s ? 2 * q : -2 * q);
                    auto it = used[static_cast<std::size_t>(2 * i + s)].find(off);
                    if (it != used[static_cast<std::size_t>(2 * i + s)].end()) {
                        ++score;
                        tie += it->second;
                    }
                }
            }
            if (score > bestScore || (score == bestScore && tie > bestTie)) {
                bestScore = score;
                bestTie = tie;
                bestQ = q;
            }
        }
        rho.radii[static_cast<std::size_t>(f)] = delta * static_cast<double>(bestQ);
        for (int i = 0; i < n; ++i)
            for (int s = 0; s < 2; ++s) {
                std::int64_t off =
                    c2[static_cast<std::size_t>(i)] + (s ? 2 * bestQ : -2 * bestQ);
                used[static_cast<std::size_t>(2 * i + s)][off] += 1;
            }
    }
    return rho;
}

// Simulated annealing on the union size with incremental restamping.
inline double annealRho(RadiusFunction& rho, const SkeletonConfig& cfg, const GridSpec& domain,
                        Rng& rng, std::int64_t moves) {
    auto qs = radiusChoices(domain.delta);
    OccupancyGrid occ;
    occ.spec = domain;
    occ.counts.assign(static_cast<std::size_t>(domain.cellCount()), 0);
    Stamper st = Stamper::make(domain, cfg, rho.grid, domain.delta);

    const std::int64_t cells = rho.grid.cellCount();
    auto stampCenter = [&](std::int64_t f, std::int64_t q, int dir) {
        st.forEachFaceBox(rho.grid.unflatten(f), q, [&](const Index& a, const Index& b) {
            stampRange(occ, a, b, dir);
        });
    };
    for (std::int64_t f = 0; f < cells; ++f)
        stampCenter(f, static_cast<std::int64_t>(
                           std::llround(rho.radii[static_cast<std::size_t>(f)] / domain.delta)),
                    +1);

    std::vector<double> bestRadii = rho.radii;
    std::int64_t bestOcc = occ.occupied;

    const double t0 = static_cast<double>(occ.occupied) * 0.01 + 1.0;
    const double t1 = 1.0;
    for (std::int64_t m = 0; m < moves; ++m) {
        double frac = static_cast<double>(m) / static_cast<double>(std::max<std::int64_t>(moves - 1, 1));
        double temp = t0 * std::pow(t1 / t0, frac);

        std::int64_t f = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(cells)));
        std::int64_t oldQ = static_cast<std::int64_t>(
            std::llround(rho.radii[static_cast<std::size_t>(f)] / domain.delta));
        std::int64_t newQ = qs[rng.below(qs.size())];
        if (newQ == oldQ) continue;

        std::int64_t before = occ.occupied;
        stampCenter(f, oldQ, -1);
        stampCenter(f, newQ, +1);
        std::int64_t diff = occ.occupied - before;
        bool accept = diff <= 0 || rng.uniform() < std::exp(-static_cast<double>(diff) / temp);
        if (accept) {
            rho.radii[static_cast<std::size_t>(f)] = domain.delta * static_cast<double>(newQ);
            if (occ.occupied < bestOcc) {
                bestOcc = occ.occupied;
                bestRadii = rho.radii;
            }
        } else {
            stampCenter(f, newQ, -1);
            stampCenter(f, oldQ, +1);
        }
    }
    rho.radii = bestRadii;
    return static_cast<double>(bestOcc) * powi(domain.delta, domain.n);
}

} // namespace detail

// Search for a radius function whose skeleton-neighborhood union is small.
// Deterministic given seed; independent restarts, best kept (ties toward the
// earlier restart).
inline WitnessReport searchRadiusFunction(const SkeletonConfig& cfg, double delta,
                                          const SearchOptions& opt, const GridSpec* domainOpt = nullptr) {
    cfg.validate();
    GridSpec domain = domainOpt ? *domainOpt : makeCenteredDomain(cfg.n, delta, 7);
    GridSpec evalGrid = makeUnitDomain(cfg.n, delta);

    WitnessReport rep;
    rep.delta = delta;
    rep.strategy = opt.strategy;
    rep.seed = opt.seed;
    rep.restarts = opt.restarts;
    rep.unionMeasure = std::numeric_limits<double>::infinity();

    Rng root(opt.seed);
    auto consider = [&](RadiusFunction&& rho, double measure) {
        if (measure < rep.unionMeasure) {
            rep.unionMeasure = measure;
            rep.rho = std::move(rho);
        }
    };

    if (opt.strategy == "random-restart") {
        for (int rs = 0; rs < std::max(opt.restarts, 1); ++rs) {
            Rng rng = root.split(static_cast<std::uint64_t>(rs) + 1);
            RadiusFunction rho = detail::randomRho(evalGrid, delta, rng);
            double m = detail::measureOf(rho, cfg, domain);
            consider(std::move(rho), m);
        }
    } else if (opt.strategy == "coordinate-align") {
        for (int rs = 0; rs < std::max(opt.restarts, 1); ++rs) {
            Rng rng = root.split(static_cast<std::uint64_t>(rs) + 1);
            RadiusFunction rho = detail::alignRho(evalGrid, delta, rng, rs > 0);
            double m = detail::measureOf(rho, cfg, domain);
            consider(std::move(rho), m);
        }
        // constant radius is in the search space; never return worse
        RadiusFunction c = detail::constantRho(evalGrid, 1.0);
        double cm = detail::measureOf(c, cfg, domain);
        consider(std::move(c), cm);
    } else if (opt.strategy == "anneal") {
        std::int64_t moves = opt.annealMoves;
        if (moves <= 0) moves = std::min<std::int64_t>(40 * evalGrid.cellCount(), 300000);
        for (int rs = 0; rs < std::max(opt.restarts, 1); ++rs) {
            Rng rng = root.split(static_cast<std::uint64_t>(rs) + 101);
            RadiusFunction rho;
            if (rs == 0) {
                rho = detail::constantRho(evalGrid, 1.0);
            } else if (rs == 1) {
                Rng arng = root.split(777);
                rho = detail::alignRho(evalGrid, delta, arng, false);
            } else {
                rho = detail::randomRho(evalGrid, delta, rng);
            }
            double m = detail::annealRho(rho, cfg, domain, rng, moves);
            consider(std::move(rho), m);
        }
    } else {
        throw Error("invalid-strategy", "unknown strategy: " + opt.strategy);
    }
    return rep;
}

// Box-counting dimension from neighborhood volumes: n minus the log-log
// slope of measure against delta.
inline double boxDimEstimate(int n, const std::vector<std::pair<double, double>>& measures) {
    if (measures.size() < 3) throw Error("insufficient-scales", "need at least 3 scales");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [delta, m] : measures) {
        if (!(m > 0.0)) throw Error("invalid-input", "measures must be positive");
        double x = std::log(delta), y = std::log(m);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double cnt = static_cast<double>(measures.size());
    double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return static_cast<double>(n) - slope;
}

// Refine a radius pattern to a finer grid by block-constant extension. The
// pattern's radii stay valid (coarser delta divides the finer one's grid),
// and the refined union is contained in the coarse one.
inline RadiusFunction refineRho(const RadiusFunction& coarse, double fineDelta) {
    coarse.validate();
    const GridSpec& cg = coarse.grid;
    double ratio = cg.delta / fineDelta;
    std::int64_t k = static_cast<std::int64_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(k)) > 1e-9 || k < 1)
        throw Error("invalid-spec", "fine delta must divide the coarse delta");
    GridSpec fg = cg;
    fg.delta = fineDelta;
    for (int i = 0; i < cg.n; ++i) fg.extent[i] = cg.extent[i] * k;
    RadiusFunction fine;
    fine.grid = fg;
    fine.radii.resize(static_cast<std::size_t>(fg.cellCount()));
    for (std::int64_t f = 0; f < fg.cellCount(); ++f) {
        Index idx = fg.unflatten(f);
        Index cidx{};
        for (int i = 0; i < fg.n; ++i) cidx[i] = idx[i] / k;
        fine.radii[static_cast<std::size_t>(f)] = coarse.radii[static_cast<std::size_t>(cg.flatten(cidx))];
    }
    return fine;
}

} // namespace skelmax

#endif
