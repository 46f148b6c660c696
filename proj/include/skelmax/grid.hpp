#ifndef SKELMAX_GRID_HPP
#define SKELMAX_GRID_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "skelmax/common.hpp"

namespace skelmax {

// Uniform grid over the box prod_i [origin_i, origin_i + extent_i*delta).
// Cell j has center origin + (j + 1/2)*delta componentwise; 1/delta is an
// integer and origin is an integer multiple of delta.
struct GridSpec {
    int n = 0;
    double delta = 0.0;
    Coord origin{};
    Index extent{};

    std::int64_t cellCount() const {
        std::int64_t c = 1;
        for (int i = 0; i < n; ++i) c *= extent[i];
        return c;
    }

    double lo(int axis) const { return origin[axis]; }
    double hi(int axis) const { return origin[axis] + static_cast<double>(extent[axis]) * delta; }

    Coord cellCenter(const Index& idx) const {
        Coord c{};
        for (int i = 0; i < n; ++i)
            c[i] = origin[i] + (static_cast<double>(idx[i]) + 0.5) * delta;
        return c;
    }

    // row-major, last axis fastest
    std::int64_t flatten(const Index& idx) const {
        std::int64_t f = 0;
        for (int i = 0; i < n; ++i) f = f * extent[i] + idx[i];
        return f;
    }

    Index unflatten(std::int64_t f) const {
        Index idx{};
        for (int i = n - 1; i >= 0; --i) {
            idx[i] = f % extent[i];
            f /= extent[i];
        }
        return idx;
    }

    bool sameGeometry(const GridSpec& o) const {
        if (n != o.n || delta != o.delta) return false;
        for (int i = 0; i < n; ++i)
            if (origin[i] != o.origin[i] || extent[i] != o.extent[i]) return false;
        return true;
    }

    void validate() const {
        if (n < 1 || n > kMaxDim) throw Error("invalid-spec", "dimension out of range");
        if (!(delta > 0.0)) throw Error("invalid-spec", "delta must be positive");
        double inv = 1.0 / delta;
        if (std::abs(inv - std::round(inv)) > 1e-9 * inv)
            throw Error("invalid-spec", "1/delta must be an integer");
        for (int i = 0; i < n; ++i) {
            if (extent[i] <= 0) throw Error("invalid-spec", "extent must be positive");
            double m = origin[i] / delta;
            if (std::abs(m - std::round(m)) > 1e-9 * std::max(1.0, std::abs(m)))
                throw Error("invalid-spec", "origin must be a multiple of delta");
        }
    }
};

// delta-grid over a region box (region boundaries must be delta-aligned)
inline GridSpec makeGrid(int n, double delta, const Coord& lo, const Coord& hi) {
    GridSpec g;
    g.n = n;
    g.delta = delta;
    for (int i = 0; i < n; ++i) {
        g.origin[i] = lo[i];
        double cells = (hi[i] - lo[i]) / delta;
        g.extent[i] = static_cast<std::int64_t>(std::llround(cells));
        if (std::abs(cells - static_cast<double>(g.extent[i])) > 1e-9 * std::max(1.0, cells))
            throw Error("invalid-spec", "region is not grid-aligned");
    }
    g.validate();
    return g;
}

// Canonical experiment domain: CQ0, the cube with the same center as the
// unit cube [0,1)^n and side C. All operator queries stay inside 7Q0.
inline GridSpec makeCenteredDomain(int n, double delta, int side) {
    Coord lo{}, hi{};
    double half = (static_cast<double>(side) - 1.0) / 2.0;
    for (int i = 0; i < n; ++i) {
        lo[i] = -half;
        hi[i] = half + 1.0;
    }
    return makeGrid(n, delta, lo, hi);
}

inline GridSpec makeUnitDomain(int n, double delta) {
    Coord lo{}, hi{};
    for (int i = 0; i < n; ++i) { lo[i] = 0.0; hi[i] = 1.0; }
    return makeGrid(n, delta, lo, hi);
}

struct Box {
    int n = 0;
    Coord lo{};
    Coord hi{};

    double measure() const {
        double m = 1.0;
        for (int i = 0; i < n; ++i) m *= hi[i] - lo[i];
        return m;
    }

    bool contains(const Coord& p) const { // half-open membership
        for (int i = 0; i < n; ++i)
            if (!(p[i] >= lo[i] && p[i] < hi[i])) return false;
        return true;
    }

    void validate() const {
        if (n < 1 || n > kMaxDim) throw Error("invalid-box", "dimension out of range");
        for (int i = 0; i < n; ++i)
            if (!(lo[i] < hi[i])) throw Error("invalid-box", "box has empty interior");
    }
};

struct ScalarField {
    GridSpec spec;
    std::vector<double> values;

    double& at(const Index& idx) { return values[spec.flatten(idx)]; }
    double at(const Index& idx) const { return values[spec.flatten(idx)]; }

    void validate() const {
        spec.validate();
        if (static_cast<std::int64_t>(values.size()) != spec.cellCount())
            throw Error("invalid-field", "value count does not match extent");
        for (double v : values)
            if (!std::isfinite(v)) throw Error("invalid-field", "non-finite value");
    }
};

inline ScalarField makeField(const GridSpec& spec, double fill = 0.0) {
    ScalarField f;
    f.spec = spec;
    f.values.assign(static_cast<std::size_t>(spec.cellCount()), fill);
    return f;
}

inline ScalarField absField(const ScalarField& f) {
    ScalarField g = f;
    for (double& v : g.values) v = std::abs(v);
    return g;
}

namespace detail {

// First cell index whose center lies in [x, inf) along one axis, i.e. the
// smallest j with origin + (j+1/2)delta >= x. Boundary resolved within a
// relative grid tolerance so that delta-aligned boxes count exactly.
inline std::int64_t firstCenterAtOrAfter(double x, double origin, double delta) {
    double t = (x - origin) / delta - 0.5;
    double tol = 1e-9 * std::max(1.0, std::abs(t));
    return static_cast<std::int64_t>(std::ceil(t - tol));
}

} // namespace detail

// Cell-index range [first, last) of centers inside [lo, hi) along one axis,
// clipped to the domain.
inline void cellRange(const GridSpec& spec, int axis, double lo, double hi,
                      std::int64_t& first, std::int64_t& last) {
    first = detail::firstCenterAtOrAfter(lo, spec.origin[axis], spec.delta);
    last = detail::firstCenterAtOrAfter(hi, spec.origin[axis], spec.delta);
    first = std::max<std::int64_t>(first, 0);
    last = std::min<std::int64_t>(last, spec.extent[axis]);
}

// Inclusive n-dimensional prefix sums with a zero halo; box sums cost 2^n
// lookups. Values accumulate through a compensated running sum per line.
struct PrefixSumTable {
    GridSpec spec;
    std::vector<double> sums; // extent+1 per axis, index 0 is the halo
    Index stride{};

    std::int64_t haloFlatten(const Index& idx) const {
        std::int64_t f = 0;
        for (int i = 0; i < spec.n; ++i) f += idx[i] * stride[i];
        return f;
    }
};

inline PrefixSumTable buildPrefix(const ScalarField& field) {
    field.validate();
    PrefixSumTable t;
    t.spec = field.spec;
    const int n = field.spec.n;

    Index ext{};
    std::int64_t total = 1;
    for (int i = 0; i < n; ++i) {
        ext[i] = field.spec.extent[i] + 1;
        total *= ext[i];
    }
    for (int i = n - 1; i >= 0; --i)
        t.stride[i] = (i == n - 1) ? 1 : t.stride[i + 1] * ext[i + 1];

    t.sums.assign(static_cast<std::size_t>(total), 0.0);

    // copy values into the interior (offset by 1 on every axis)
    {
        const std::int64_t cells = field.spec.cellCount();
        Index idx{};
        for (std::int64_t f = 0; f < cells; ++f) {
            std::int64_t p = 0;
            for (int i = 0; i < n; ++i) p += (idx[i] + 1) * t.stride[i];
            t.sums[static_cast<std::size_t>(p)] = field.values[static_cast<std::size_t>(f)];
            for (int i = n - 1; i >= 0; --i) {
                if (++idx[i] < field.spec.extent[i]) break;
                idx[i] = 0;
            }
        }
    }

    // axis-by-axis running prefix, compensated per line
    for (int axis = 0; axis < n; ++axis) {
        std::int64_t lineLen = ext[axis];
        std::int64_t lineStride = t.stride[axis];
        std::int64_t lines = total / lineLen;
        for (std::int64_t li = 0; li < lines; ++li) {
            // decompose line id over the remaining axes
            std::int64_t base = 0, rem = li;
            for (int i = n - 1; i >= 0; --i) {
                if (i == axis) continue;
                std::int64_t e = ext[i];
                base += (rem % e) * t.stride[i];
                rem /= e;
            }
            KahanSum acc;
            std::int64_t p = base;
            for (std::int64_t j = 0; j < lineLen; ++j, p += lineStride) {
                acc.add(t.sums[static_cast<std::size_t>(p)]);
                t.sums[static_cast<std::size_t>(p)] = acc.value();
            }
        }
    }
    return t;
}

namespace detail {

// Alternating-corner sum over the integer cell range [first, last) per axis.
inline double cornerSum(const PrefixSumTable& t, const Index& first, const Index& last) {
    const int n = t.spec.n;
    double total = 0.0;
    for (unsigned corner = 0; corner < (1u << n); ++corner) {
        Index idx{};
        int parity = 0;
        for (int i = 0; i < n; ++i) {
            if (corner & (1u << i)) {
                idx[i] = first[i];
                ++parity;
            } else {
                idx[i] = last[i];
            }
        }
        double v = t.sums[static_cast<std::size_t>(t.haloFlatten(idx))];
        total += (parity % 2 == 0) ? v : -v;
    }
    return total;
}

} // namespace detail

// Sum of cells whose centers lie in the half-open box, clipped to the domain.
// A box entirely outside the domain is an error ("empty-query").
inline double boxSum(const PrefixSumTable& table, const Box& box) {
    box.validate();
    const int n = table.spec.n;
    if (box.n != n) throw Error("invalid-box", "box dimension mismatch");
    for (int i = 0; i < n; ++i)
        if (box.hi[i] <= table.spec.lo(i) || box.lo[i] >= table.spec.hi(i))
            throw Error("empty-query", "box does not intersect the domain");

    Index first{}, last{};
    for (int i = 0; i < n; ++i) {
        cellRange(table.spec, i, box.lo[i], box.hi[i], first[i], last[i]);
        if (first[i] >= last[i]) return 0.0; // intersects but captures no centers
    }
    return detail::cornerSum(table, first, last);
}

// Integer-range box sum; the operator evaluators use this fast path.
// Requires 0 <= first < last <= extent on every axis.
inline double boxSumCells(const PrefixSumTable& table, const Index& first, const Index& last) {
    return detail::cornerSum(table, first, last);
}

// Riemann estimate of the normalized integral: boxSum * delta^n / L_n(box).
inline double boxAverage(const PrefixSumTable& table, const Box& box) {
    double m = box.measure();
    if (!(m > 0.0)) throw Error("invalid-box", "box has nonpositive measure");
    double cellVol = powi(table.spec.delta, table.spec.n);
    return boxSum(table, box) * cellVol / m;
}

// Discrete L^p norm over a grid-aligned region: (delta^n sum |f|^p)^{1/p};
// sup norm for p = infinity.
inline double lpNorm(const ScalarField& field, double p, const Box& region) {
    if (!(p >= 1.0)) throw Error("invalid-exponent", "p must be >= 1");
    region.validate();
    const GridSpec& spec = field.spec;
    if (region.n != spec.n) throw Error("invalid-box", "region dimension mismatch");

    Index first{}, last{};
    for (int i = 0; i < spec.n; ++i) {
        double flo = (region.lo[i] - spec.origin[i]) / spec.delta;
        double fhi = (region.hi[i] - spec.origin[i]) / spec.delta;
        if (std::abs(flo - std::round(flo)) > 1e-9 * std::max(1.0, std::abs(flo)) ||
            std::abs(fhi - std::round(fhi)) > 1e-9 * std::max(1.0, std::abs(fhi)))
            throw Error("region-misaligned", "region is not grid-aligned");
        cellRange(spec, i, region.lo[i], region.hi[i], first[i], last[i]);
        if (first[i] >= last[i]) return 0.0;
    }

    const bool isInf = std::isinf(p);
    KahanSum acc;
    double maxAbs = 0.0;
    Index idx = first;
    while (true) {
        double v = std::abs(field.at(idx));
        if (isInf) {
            maxAbs = std::max(maxAbs, v);
        } else if (p == 1.0) {
            acc.add(v);
        } else if (p == 2.0) {
            acc.add(v * v);
        } else {
            acc.add(std::pow(v, p));
        }
        int i = spec.n - 1;
        for (; i >= 0; --i) {
            if (++idx[i] < last[i]) break;
            idx[i] = first[i];
        }
        if (i < 0) break;
    }
    if (isInf) return maxAbs;
    double cellVol = powi(spec.delta, spec.n);
    return std::pow(acc.value() * cellVol, 1.0 / p);
}

inline Box wholeDomain(const GridSpec& spec) {
    Box b;
    b.n = spec.n;
    for (int i = 0; i < spec.n; ++i) {
        b.lo[i] = spec.lo(i);
        b.hi[i] = spec.hi(i);
    }
    return b;
}

inline Box unitBox(int n) {
    Box b;
    b.n = n;
    for (int i = 0; i < n; ++i) { b.lo[i] = 0.0; b.hi[i] = 1.0; }
    return b;
}

} // namespace skelmax

#endif
