#ifndef SKELMAX_MAXOP_HPP
#define SKELMAX_MAXOP_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "skelmax/common.hpp"
#include "skelmax/grid.hpp"
#include "skelmax/skeleton.hpp"

namespace skelmax {

// One radius in [1,2] (restricted) per cell center of the evaluation grid.
// Radii are integer multiples of delta.
struct RadiusFunction {
    GridSpec grid;
    std::vector<double> radii;

    void validate() const {
        grid.validate();
        if (static_cast<std::int64_t>(radii.size()) != grid.cellCount())
            throw Error("invalid-rho", "radius count does not match grid");
        for (double r : radii) {
            double q = r / grid.delta;
            if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q))
                throw Error("invalid-rho", "radius is not a multiple of delta");
        }
    }
};

struct FaceAssignment {
    SkeletonConfig cfg;
    std::vector<FaceId> faces; // aligned with the evaluation grid cells
};

struct OperatorResult {
    ScalarField field; // one value per evaluation-grid cell
    std::optional<std::vector<double>> argmaxRadii;
};

namespace detail {

// Integer frame tying the evaluation grid to the table grid: same delta,
// eval centers at table cell centers.
struct EvalFrame {
    const PrefixSumTable* table;
    SkeletonConfig cfg;
    GridSpec evalGrid;
    Index centerOffset{}; // table index of eval cell (0,...,0)

    static EvalFrame make(const PrefixSumTable& table, const SkeletonConfig& cfg,
                          const GridSpec& evalGrid) {
        cfg.validate();
        evalGrid.validate();
        if (evalGrid.n != table.spec.n)
            throw Error("invalid-spec", "grid dimension mismatch");
        if (std::abs(evalGrid.delta - table.spec.delta) > 1e-12 * table.spec.delta)
            throw Error("invalid-spec", "evaluation grid spacing must equal the table spacing");
        EvalFrame fr;
        fr.table = &table;
        fr.cfg = cfg;
        fr.evalGrid = evalGrid;
        for (int i = 0; i < evalGrid.n; ++i) {
            double off = (evalGrid.origin[i] - table.spec.origin[i]) / table.spec.delta;
            std::int64_t o = static_cast<std::int64_t>(std::llround(off));
            if (std::abs(off - static_cast<double>(o)) > 1e-9)
                throw Error("invalid-spec", "evaluation grid is not aligned with the table grid");
            fr.centerOffset[i] = o;
        }
        return fr;
    }

    // every face box of a skeleton with q <= qmax must stay inside the table
    void requireReach(std::int64_t qmax, std::int64_t w) const {
        for (int i = 0; i < evalGrid.n; ++i) {
            std::int64_t cmin = centerOffset[i];
            std::int64_t cmax = centerOffset[i] + evalGrid.extent[i] - 1;
            if (cmin - qmax - w < 0 || cmax + qmax + w > table->spec.extent[i])
                throw Error("domain-too-small", "face neighborhood escapes the field domain");
        }
    }
};

// min over the N faces of the average over each face's width-neighborhood,
// in integer cell space. q = r/delta, w = width/delta. Bounds are the
// caller's responsibility (requireReach).
inline double minFaceAverageCells(const EvalFrame& fr, const std::vector<FaceId>& faces,
                                  const Index& centerIdx, std::int64_t q, std::int64_t w) {
    const int n = fr.cfg.n;
    double best = std::numeric_limits<double>::infinity();
    for (const FaceId& face : faces) {
        Index first{}, last{};
        std::int64_t cells = 1;
        for (int i = 0; i < n; ++i) {
            std::int64_t c = fr.centerOffset[i] + centerIdx[i];
            if (face.isFree(i)) {
                first[i] = c - q - w;
                last[i] = c + q + w;
            } else {
                std::int64_t mid = c + face.sign(n, i) * q;
                first[i] = mid - w;
                last[i] = mid + w;
            }
            cells *= last[i] - first[i];
        }
        double avg = boxSumCells(*fr.table, first, last) / static_cast<double>(cells);
        if (avg < best) best = avg;
    }
    return best;
}

inline std::vector<std::int64_t> radiiInRange(double rlo, double rhi, double delta,
                                              bool excludeLo) {
    std::int64_t qlo = static_cast<std::int64_t>(std::ceil(rlo / delta - 1e-9));
    std::int64_t qhi = static_cast<std::int64_t>(std::floor(rhi / delta + 1e-9));
    if (excludeLo && std::abs(static_cast<double>(qlo) * delta - rlo) <= 1e-9 * rlo) ++qlo;
    std::vector<std::int64_t> qs;
    for (std::int64_t q = qlo; q <= qhi; ++q) qs.push_back(q);
    return qs;
}

// Pointwise sup over the radius list at every eval center. Domain bounds are
// validated up front so workers never throw.
inline OperatorResult evaluateOverRadii(const PrefixSumTable& table, const SkeletonConfig& cfg,
                                        const GridSpec& evalGrid,
                                        const std::vector<std::int64_t>& qs, double width,
                                        int workers) {
    EvalFrame fr = EvalFrame::make(table, cfg, evalGrid);
    if (qs.empty()) throw Error("invalid-spec", "empty radius grid");
    std::int64_t w = static_cast<std::int64_t>(std::llround(width / table.spec.delta));
    if (w < 1) throw Error("invalid-spec", "width below grid resolution");
    std::int64_t qmax = 0;
    for (std::int64_t q : qs) qmax = std::max(qmax, q);
    fr.requireReach(qmax, w);

    auto faces = enumerateFaces(cfg);
    OperatorResult res;
    res.field = makeField(evalGrid);
    res.argmaxRadii = std::vector<double>(static_cast<std::size_t>(evalGrid.cellCount()), 0.0);

    const std::int64_t cells = evalGrid.cellCount();
    parallelFor(cells, workers, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t f = lo; f < hi; ++f) {
            Index idx = evalGrid.unflatten(f);
            double bestVal = -1.0, bestR = 0.0;
            for (std::int64_t q : qs) {
                double v = minFaceAverageCells(fr, faces, idx, q, w);
                if (v > bestVal) {
                    bestVal = v;
                    bestR = static_cast<double>(q) * table.spec.delta;
                }
            }
            res.field.values[static_cast<std::size_t>(f)] = bestVal;
            (*res.argmaxRadii)[static_cast<std::size_t>(f)] = bestR;
        }
    });
    return res;
}

} // namespace detail

// min_j of the face-neighborhood averages at one skeleton. The table must
// hold |f|.
inline double minFaceAverage(const PrefixSumTable& table, const SkeletonConfig& cfg,
                             const Skeleton& s, double delta) {
    cfg.validate();
    s.validate();
    auto faces = enumerateFaces(cfg);
    double best = std::numeric_limits<double>::infinity();
    for (const FaceId& face : faces) {
        Box b = faceNeighborhood(cfg, s, face, delta);
        for (int i = 0; i < cfg.n; ++i)
            if (b.lo[i] < table.spec.lo(i) - 1e-12 || b.hi[i] > table.spec.hi(i) + 1e-12)
                throw Error("domain-too-small", "face neighborhood escapes the field domain");
        best = std::min(best, boxAverage(table, b));
    }
    return best;
}

// sup over r in [1,2] on the delta grid of minFaceAverage; ties toward
// smaller r. Returns (value, argmax radius).
inline std::pair<double, double> restrictedMax(const PrefixSumTable& table,
                                               const SkeletonConfig& cfg, const Coord& center,
                                               double delta) {
    auto qs = detail::radiiInRange(1.0, 2.0, delta, false);
    double bestVal = -1.0, bestR = 0.0;
    for (std::int64_t q : qs) {
        Skeleton s;
        s.center = center;
        s.halfSide = delta * static_cast<double>(q);
        double v = minFaceAverage(table, cfg, s, delta);
        if (v > bestVal) {
            bestVal = v;
            bestR = s.halfSide;
        }
    }
    return {bestVal, bestR};
}

// The variants below evaluate at every cell center of evalGrid; the table
// must hold |f| and the result extends to the region as a piecewise-constant
// field on cells.

inline OperatorResult evaluateRestricted(const PrefixSumTable& table, const SkeletonConfig& cfg,
                                         const GridSpec& evalGrid, int workers = 1) {
    auto qs = detail::radiiInRange(1.0, 2.0, table.spec.delta, false);
    return detail::evaluateOverRadii(table, cfg, evalGrid, qs, table.spec.delta, workers);
}

// radii in [2^t, 2^(t+1)] intersected with the delta grid
inline OperatorResult evaluateDyadic(const PrefixSumTable& table, const SkeletonConfig& cfg,
                                     const GridSpec& evalGrid, int t, int workers = 1) {
    double rlo = std::ldexp(1.0, t), rhi = std::ldexp(1.0, t + 1);
    auto qs = detail::radiiInRange(rlo, rhi, table.spec.delta, false);
    if (qs.empty()) throw Error("invalid-spec", "dyadic radius grid is empty");
    return detail::evaluateOverRadii(table, cfg, evalGrid, qs, table.spec.delta, workers);
}

// radii in (delta, 2]: the floor is excluded, so the grid starts at 2*delta
inline OperatorResult evaluateUnrestricted(const PrefixSumTable& table, const SkeletonConfig& cfg,
                                           const GridSpec& evalGrid, int workers = 1) {
    auto qs = detail::radiiInRange(table.spec.delta, 2.0, table.spec.delta, true);
    return detail::evaluateOverRadii(table, cfg, evalGrid, qs, table.spec.delta, workers);
}

// Single-face average per center for a fixed radius function and face
// assignment; linear in f, so the table may hold a signed field.
inline OperatorResult evaluateLinearized(const PrefixSumTable& table, const RadiusFunction& rho,
                                         const FaceAssignment& phi, double width,
                                         int workers = 1) {
    rho.validate();
    detail::EvalFrame fr = detail::EvalFrame::make(table, phi.cfg, rho.grid);
    if (phi.faces.size() != rho.radii.size())
        throw Error("invalid-phi", "assignment size does not match rho");
    std::int64_t w = static_cast<std::int64_t>(std::llround(width / table.spec.delta));
    if (w < 1) throw Error("invalid-spec", "width below grid resolution");
    std::int64_t qmax = 0;
    for (double r : rho.radii)
        qmax = std::max(qmax, static_cast<std::int64_t>(std::llround(r / table.spec.delta)));
    fr.requireReach(qmax, w);

    const int n = phi.cfg.n;
    OperatorResult res;
    res.field = makeField(rho.grid);
    const std::int64_t cells = rho.grid.cellCount();
    parallelFor(cells, workers, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t f = lo; f < hi; ++f) {
            Index idx = rho.grid.unflatten(f);
            std::int64_t q = static_cast<std::int64_t>(
                std::llround(rho.radii[static_cast<std::size_t>(f)] / table.spec.delta));
            const FaceId& face = phi.faces[static_cast<std::size_t>(f)];
            Index first{}, last{};
            std::int64_t cnt = 1;
            for (int i = 0; i < n; ++i) {
                std::int64_t c = fr.centerOffset[i] + idx[i];
                if (face.isFree(i)) {
                    first[i] = c - q - w;
                    last[i] = c + q + w;
                } else {
                    std::int64_t mid = c + face.sign(n, i) * q;
                    first[i] = mid - w;
                    last[i] = mid + w;
                }
                cnt *= last[i] - first[i];
            }
            res.field.values[static_cast<std::size_t>(f)] =
                boxSumCells(table, first, last) / static_cast<double>(cnt);
        }
    });
    return res;
}

} // namespace skelmax

#endif
