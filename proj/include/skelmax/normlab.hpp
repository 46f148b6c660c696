#ifndef SKELMAX_NORMLAB_HPP
#define SKELMAX_NORMLAB_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "skelmax/common.hpp"
#include "skelmax/domination.hpp"
#include "skelmax/extremal.hpp"
#include "skelmax/grid.hpp"
#include "skelmax/maxop.hpp"
#include "skelmax/rng.hpp"
#include "skelmax/selection.hpp"
#include "skelmax/skeleton.hpp"

namespace skelmax {

struct ExponentConfig {
    double p = 2.0; // Lebesgue exponent in [1, inf)
    int m = 2;      // even-chain integer >= 2

    double q() const { return p > 1.0 ? p / (p - 1.0) : std::numeric_limits<double>::infinity(); }
    double mPrime() const { return static_cast<double>(m) / (static_cast<double>(m) - 1.0); }

    void validate() const {
        if (!(p >= 1.0) || std::isinf(p)) throw Error("invalid-exponent", "p must be in [1, inf)");
        if (m < 2) throw Error("invalid-exponent", "m must be an integer >= 2");
    }
};

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

// Ordinary least squares on (log delta, log value).
inline FitResult fitExponent(const std::vector<std::pair<double, double>>& series) {
    if (series.size() < 3) throw Error("insufficient-scales", "need at least 3 points");
    double sx = 0, sy = 0;
    for (const auto& [d, v] : series) {
        if (!(d > 0.0) || !(v > 0.0))
            throw Error("invalid-input", "fit needs positive scales and values");
        sx += std::log(d);
        sy += std::log(v);
    }
    const double cnt = static_cast<double>(series.size());
    const double mx = sx / cnt, my = sy / cnt;
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& [d, v] : series) {
        double x = std::log(d) - mx, y = std::log(v) - my;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    FitResult fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssRes = syy - fit.slope * sxy;
    fit.r2 = (syy > 1e-30) ? 1.0 - ssRes / syy : 1.0;
    return fit;
}

// ---- candidates ------------------------------------------------------------

struct Candidate {
    std::string id;
    std::string cls; // constant | random | bump | skeleton | witness | witness-dilation | pattern
    ScalarField field;
};

struct PoolOptions {
    bool constant = true;
    int randomFields = 1;
    int bumps = 1;
    int singleSkeletons = 1;
    bool witnesses = true;
    bool dilations = true;
    SearchOptions searchOpt{};
    std::vector<RadiusFunction> carryPatterns; // coarser-scale patterns to refine
};

inline ScalarField witnessIndicator(const RadiusFunction& rho, const SkeletonConfig& cfg,
                                    const GridSpec& domain, double width = 0.0) {
    return rasterizeUnion(rho, cfg, domain, width).indicator();
}

inline std::vector<Candidate> buildCandidatePool(const SkeletonConfig& cfg, double delta,
                                                 const GridSpec& domain, std::uint64_t seed,
                                                 const PoolOptions& opt,
                                                 std::vector<RadiusFunction>* foundPatterns = nullptr) {
    std::vector<Candidate> pool;
    Rng root(seed);

    if (opt.constant) {
        Candidate c{"const", "constant", makeField(domain, 1.0)};
        pool.push_back(std::move(c));
    }
    for (int i = 0; i < opt.randomFields; ++i) {
        Rng rng = root.split(10 + static_cast<std::uint64_t>(i));
        ScalarField f = makeField(domain);
        for (double& v : f.values) v = rng.uniform();
        pool.push_back({"random-" + std::to_string(i), "random", std::move(f)});
    }
    for (int i = 0; i < opt.bumps; ++i) {
        ScalarField f = makeField(domain);
        double w = 0.5 + 0.25 * static_cast<double>(i);
        for (std::int64_t c = 0; c < domain.cellCount(); ++c) {
            Coord p = domain.cellCenter(domain.unflatten(c));
            double d2 = 0.0;
            for (int ax = 0; ax < domain.n; ++ax) {
                double dd = p[ax] - 0.5;
                d2 += dd * dd;
            }
            f.values[static_cast<std::size_t>(c)] = std::exp(-d2 / (w * w));
        }
        pool.push_back({"bump-" + std::to_string(i), "bump", std::move(f)});
    }
    for (int i = 0; i < opt.singleSkeletons; ++i) {
        Rng rng = root.split(50 + static_cast<std::uint64_t>(i));
        RadiusFunction rho;
        rho.grid = makeUnitDomain(cfg.n, delta);
        rho.radii.assign(static_cast<std::size_t>(rho.grid.cellCount()), 1.0);
        // indicator of one skeleton's neighborhood: stamp a single center
        GridSpec one;
        one.n = cfg.n;
        one.delta = delta;
        Index ext{};
        for (int ax = 0; ax < cfg.n; ++ax) ext[ax] = 1;
        one.extent = ext;
        Index cidx{};
        for (int ax = 0; ax < cfg.n; ++ax) {
            std::int64_t cells = static_cast<std::int64_t>(std::llround(1.0 / delta));
            cidx[ax] = rng.range(0, cells - 1);
            one.origin[ax] = static_cast<double>(cidx[ax]) * delta;
        }
        RadiusFunction single;
        single.grid = one;
        auto qs = detail::radiusChoices(delta);
        single.radii.assign(1, delta * static_cast<double>(qs[rng.below(qs.size())]));
        pool.push_back({"skeleton-" + std::to_string(i), "skeleton",
                        witnessIndicator(single, cfg, domain)});
    }
    if (opt.witnesses) {
        SearchOptions so = opt.searchOpt;
        so.seed = root.split(99).next();
        WitnessReport rep = searchRadiusFunction(cfg, delta, so, &domain);
        if (foundPatterns) foundPatterns->push_back(rep.rho);
        pool.push_back({"witness-" + so.strategy, "witness",
                        witnessIndicator(rep.rho, cfg, domain)});
        if (opt.dilations)
            pool.push_back({"witness-" + so.strategy + "-2w", "witness-dilation",
                            witnessIndicator(rep.rho, cfg, domain, 2.0 * delta)});
        RadiusFunction c1 = detail::constantRho(makeUnitDomain(cfg.n, delta), 1.0);
        pool.push_back({"witness-const", "witness", witnessIndicator(c1, cfg, domain)});
    }
    int pi = 0;
    for (const RadiusFunction& pattern : opt.carryPatterns) {
        RadiusFunction fine =
            (pattern.grid.delta == delta) ? pattern : refineRho(pattern, delta);
        pool.push_back({"pattern-" + std::to_string(pi++), "pattern",
                        witnessIndicator(fine, cfg, domain)});
    }
    return pool;
}

// ---- norm scan -------------------------------------------------------------

struct Variant {
    enum Kind { Restricted, Unrestricted, Dyadic } kind = Restricted;
    int t = 0;

    std::string name() const {
        switch (kind) {
            case Restricted: return "restricted";
            case Unrestricted: return "unrestricted";
            default: return "dyadic:" + std::to_string(t);
        }
    }
};

inline OperatorResult evaluateVariant(const PrefixSumTable& absTable, const SkeletonConfig& cfg,
                                      const GridSpec& evalGrid, const Variant& variant,
                                      int workers) {
    switch (variant.kind) {
        case Variant::Restricted: return evaluateRestricted(absTable, cfg, evalGrid, workers);
        case Variant::Unrestricted: return evaluateUnrestricted(absTable, cfg, evalGrid, workers);
        default: return evaluateDyadic(absTable, cfg, evalGrid, variant.t, workers);
    }
}

namespace naive {

// Direct nested-loop evaluation at one center, no prefix sums; used to
// certify scan ratios on a subsample of cells.
inline double boxAverageDirect(const ScalarField& absField, const Box& box) {
    const GridSpec& spec = absField.spec;
    Index first{}, last{};
    for (int i = 0; i < spec.n; ++i) {
        cellRange(spec, i, box.lo[i], box.hi[i], first[i], last[i]);
        if (first[i] >= last[i]) return 0.0;
    }
    KahanSum acc;
    Index idx = first;
    while (true) {
        acc.add(absField.at(idx));
        int i = spec.n - 1;
        for (; i >= 0; --i) {
            if (++idx[i] < last[i]) break;
            idx[i] = first[i];
        }
        if (i < 0) break;
    }
    return acc.value() * powi(spec.delta, spec.n) / box.measure();
}

inline double operatorAtDirect(const ScalarField& absField, const SkeletonConfig& cfg,
                               const Coord& center, double delta, const Variant& variant) {
    std::vector<std::int64_t> qs;
    switch (variant.kind) {
        case Variant::Restricted: qs = detail::radiiInRange(1.0, 2.0, delta, false); break;
        case Variant::Unrestricted: qs = detail::radiiInRange(delta, 2.0, delta, true); break;
        default:
            qs = detail::radiiInRange(std::ldexp(1.0, variant.t), std::ldexp(1.0, variant.t + 1),
                                      delta, false);
    }
    auto faces = enumerateFaces(cfg);
    double best = -1.0;
    for (std::int64_t q : qs) {
        Skeleton s;
        s.center = center;
        s.halfSide = delta * static_cast<double>(q);
        double worst = std::numeric_limits<double>::infinity();
        for (const FaceId& face : faces)
            worst = std::min(worst, boxAverageDirect(absField, faceNeighborhood(cfg, s, face, delta)));
        best = std::max(best, worst);
    }
    return best;
}

} // namespace naive

struct ScanRow {
    double delta = 0.0;
    std::string candidateId;
    std::string candidateClass;
    double normRatio = 0.0;
};

struct NormScanResult {
    std::vector<ScanRow> rows;
    std::vector<std::pair<double, double>> bestPerDelta; // (delta, best ratio), delta descending
    FitResult fit;                                       // over best-per-delta
    std::vector<std::string> warnings;
};

// ratio = ||Op f||_{L^p(Q0)} / ||f||_{L^p(7Q0)} for one candidate; certified
// by re-evaluating numerator and denominator without prefix sums on a small
// subsample.
inline double normRatio(const SkeletonConfig& cfg, double delta, double p,
                        const Candidate& cand, const Variant& variant, int workers,
                        std::vector<std::string>* warnings = nullptr) {
    const GridSpec& domain = cand.field.spec;
    ScalarField absf = absField(cand.field);
    double denom = lpNorm(absf, p, wholeDomain(domain));
    if (!(denom > 0.0)) {
        if (warnings) warnings->push_back("zero-norm candidate skipped: " + cand.id);
        return -1.0;
    }
    PrefixSumTable table = buildPrefix(absf);
    GridSpec evalGrid = makeUnitDomain(cfg.n, delta);
    OperatorResult op = evaluateVariant(table, cfg, evalGrid, variant, workers);
    double numer = lpNorm(op.field, p, wholeDomain(evalGrid));

    // certification subsample
    Rng rng(0xC0FFEE ^ static_cast<std::uint64_t>(evalGrid.cellCount()));
    for (int s = 0; s < 3; ++s) {
        std::int64_t f = static_cast<std::int64_t>(
            rng.below(static_cast<std::uint64_t>(evalGrid.cellCount())));
        double direct = naive::operatorAtDirect(absf, cfg, evalGrid.cellCenter(evalGrid.unflatten(f)),
                                                delta, variant);
        double fast = op.field.values[static_cast<std::size_t>(f)];
        if (std::abs(direct - fast) > 1e-9 * std::max(1.0, std::abs(direct)))
            throw Error("certification-failed", "fast and direct operator evaluations disagree");
    }
    return numer / denom;
}

// Lower-bound rows for one delta over a candidate pool.
inline std::vector<ScanRow> estimateNormLower(const SkeletonConfig& cfg, double delta, double p,
                                              const std::vector<Candidate>& candidates,
                                              const Variant& variant, int workers,
                                              std::vector<std::string>* warnings = nullptr) {
    std::vector<ScanRow> rows;
    for (const Candidate& cand : candidates) {
        double ratio = normRatio(cfg, delta, p, cand, variant, workers, warnings);
        if (ratio < 0.0) continue;
        rows.push_back({delta, cand.id, cand.cls, ratio});
    }
    return rows;
}

// Full scan across deltas (descending); witness patterns found at coarser
// scales are refined into every finer scale so the best ratio can only grow
// as delta shrinks.
inline NormScanResult runNormScan(const SkeletonConfig& cfg, double p,
                                  std::vector<double> deltas, const Variant& variant,
                                  std::uint64_t seed, PoolOptions poolOpt, int workers) {
    std::sort(deltas.begin(), deltas.end(), std::greater<>());
    NormScanResult out;
    std::vector<RadiusFunction> carried = poolOpt.carryPatterns;
    for (double delta : deltas) {
        GridSpec domain = makeCenteredDomain(cfg.n, delta, 7);
        PoolOptions opts = poolOpt;
        opts.carryPatterns = carried;
        std::vector<RadiusFunction> found;
        auto pool = buildCandidatePool(cfg, delta, domain, seed, opts, &found);
        auto rows = estimateNormLower(cfg, delta, p, pool, variant, workers, &out.warnings);
        double best = 0.0;
        for (const auto& r : rows) best = std::max(best, r.normRatio);
        out.rows.insert(out.rows.end(), rows.begin(), rows.end());
        out.bestPerDelta.emplace_back(delta, best);
        for (auto& rho : found) carried.push_back(std::move(rho));
    }
    if (out.bestPerDelta.size() >= 3) out.fit = fitExponent(out.bestPerDelta);
    return out;
}

// ---- duality (dual-exponent weights) ---------------------------------------

struct WeightVector {
    std::vector<double> t;

    // delta^(n-kq) * sum t^q <= 1
    bool normalized(double delta, int n, int k, double q, double tol = 1e-9) const {
        double s = 0.0;
        for (double x : t) {
            if (!(x >= 0.0)) return false;
            s += std::pow(x, q);
        }
        return std::pow(delta, static_cast<double>(n) - static_cast<double>(k) * q) * s <=
               1.0 + tol;
    }
};

// positive weights scaled onto the normalization boundary
inline WeightVector randomBoundaryWeights(std::size_t u, double delta, int n, int k, double q,
                                          Rng& rng) {
    WeightVector w;
    w.t.resize(u);
    double s = 0.0;
    for (double& x : w.t) {
        x = 0.1 + rng.uniform();
        s += std::pow(x, q);
    }
    double scale = std::pow(std::pow(delta, static_cast<double>(n) - static_cast<double>(k) * q) * s,
                            -1.0 / q);
    for (double& x : w.t) x *= scale;
    return w;
}

struct DualityReport {
    double left = 0.0;        // ||Mlin f||_{L^p} over the class cells
    double K = 0.0;           // ||sum t_i 1_{face nbhd}||_q over 7Q0
    double fNorm = 0.0;       // ||f||_{L^p(7Q0)}
    double chainMiddle = 0.0; // delta^(n-k) sum t_i |Mlin f(x_i)|
    bool pass = false;        // left <= tol * K * fNorm
    bool chainOk = false;     // chainMiddle <= tol * K * fNorm (proven for any weights)
    std::size_t classSize = 0;
};

// Both sides of the duality inequality for one coordinate plane class,
// computed discretely. tol leaves room for cell-resolution quadrature.
inline DualityReport dualityCheck(const ScalarField& f, const RadiusFunction& rho,
                                  const FaceAssignment& phi, std::size_t classIndex,
                                  const WeightVector& weights, double delta, double p,
                                  double tol = 1.01, int workers = 1) {
    if (!(p > 1.0) || std::isinf(p))
        throw Error("invalid-exponent", "duality check needs p in (1, inf)");
    const double q = p / (p - 1.0);
    const int n = phi.cfg.n, k = phi.cfg.k;

    PlaneClassPartition part = planeClassPartition(phi);
    if (classIndex >= part.members.size())
        throw Error("invalid-input", "plane class index out of range");
    const auto& members = part.members[classIndex];
    if (weights.t.size() != members.size())
        throw Error("invalid-input", "one weight per class member required");
    if (!weights.normalized(delta, n, k, q))
        throw Error("weights-unnormalized", "delta^(n-kq) sum t^q must be <= 1");

    PrefixSumTable table = buildPrefix(f);
    OperatorResult lin = evaluateLinearized(table, rho, phi, delta, workers);

    DualityReport rep;
    rep.classSize = members.size();
    const double cellVol = powi(delta, n);
    double leftP = 0.0;
    double chain = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
        double v = std::abs(lin.field.values[static_cast<std::size_t>(members[i])]);
        leftP += cellVol * std::pow(v, p);
        chain += weights.t[i] * v;
    }
    rep.left = std::pow(leftP, 1.0 / p);
    rep.chainMiddle = powi(delta, n - k) * chain;

    // K = ||sum_i t_i 1_{face nbhd}||_{L^q(7Q0)}
    ScalarField sumInd = makeField(f.spec);
    for (std::size_t i = 0; i < members.size(); ++i) {
        std::int64_t cell = members[i];
        Skeleton s;
        s.center = rho.grid.cellCenter(rho.grid.unflatten(cell));
        s.halfSide = rho.radii[static_cast<std::size_t>(cell)];
        Box b = faceNeighborhood(phi.cfg, s, phi.faces[static_cast<std::size_t>(cell)], delta);
        Index first{}, last{};
        bool empty = false;
        for (int ax = 0; ax < n; ++ax) {
            cellRange(f.spec, ax, b.lo[ax], b.hi[ax], first[ax], last[ax]);
            if (first[ax] >= last[ax]) empty = true;
        }
        if (empty) continue;
        Index idx = first;
        while (true) {
            sumInd.at(idx) += weights.t[i];
            int ax = n - 1;
            for (; ax >= 0; --ax) {
                if (++idx[ax] < last[ax]) break;
                idx[ax] = first[ax];
            }
            if (ax < 0) break;
        }
    }
    rep.K = lpNorm(sumInd, q, wholeDomain(f.spec));
    rep.fNorm = lpNorm(f, p, wholeDomain(f.spec));
    rep.pass = rep.left <= tol * rep.K * rep.fNorm + 1e-15;
    rep.chainOk = rep.chainMiddle <= tol * rep.K * rep.fNorm + 1e-15;
    return rep;
}

// The duality-extremal weights for a given f: they maximize sum t_i a_i over
// the normalization ball, so the full inequality is provable for them.
inline WeightVector extremalWeights(const std::vector<double>& linValues, double delta, int n,
                                    int k, double p) {
    const double q = p / (p - 1.0);
    WeightVector w;
    w.t.resize(linValues.size());
    double normP = 0.0;
    for (double a : linValues) normP += std::pow(std::abs(a), p);
    normP = std::pow(normP, 1.0 / p);
    if (normP <= 0.0) {
        for (double& x : w.t) x = 0.0;
        return w;
    }
    // b_i = a_i^(p-1) / ||a||_p^(p/q), then t_i = delta^(n/p - (n-k)) b_i
    const double scale = std::pow(delta, static_cast<double>(n) / p - static_cast<double>(n - k));
    for (std::size_t i = 0; i < linValues.size(); ++i)
        w.t[i] = scale * std::pow(std::abs(linValues[i]), p - 1.0) / std::pow(normP, p / q);
    return w;
}

// ---- intersection bound ----------------------------------------------------

struct SelectedFace {
    Skeleton skeleton;
    FaceId face;
};

struct IntersectionReport {
    double I = 0.0;            // sum over ordered m-tuples of t-products times overlap
    double boundPower = 0.0;   // delta^((k-n)(m-1)/(2n))
    double empiricalCm = 0.0;  // I / boundPower
    double cStar = 0.0;        // empiricalCm^(1/m)
    double holderRhs = 0.0;    // sum_i1 t_i1^m sum_{i2..im} L
    bool holderOk = false;
    std::int64_t maxTuplesPerFirst = 0; // max over i1 of nonzero (i2..im) tuples
    double tupleCountPower = 0.0;       // u^((m-1)(1-(n-k)(2n-1)/(2n^2)))
    std::size_t u = 0;
};

namespace detail {

inline double boxOverlap(const Box& a, const Box& b) {
    double m = 1.0;
    for (int i = 0; i < a.n; ++i) {
        double lo = std::max(a.lo[i], b.lo[i]);
        double hi = std::min(a.hi[i], b.hi[i]);
        if (hi <= lo) return 0.0;
        m *= hi - lo;
    }
    return m;
}

inline double boxOverlap3(const Box& a, const Box& b, const Box& c) {
    double m = 1.0;
    for (int i = 0; i < a.n; ++i) {
        double lo = std::max({a.lo[i], b.lo[i], c.lo[i]});
        double hi = std::min({a.hi[i], b.hi[i], c.hi[i]});
        if (hi <= lo) return 0.0;
        m *= hi - lo;
    }
    return m;
}

} // namespace detail

// Measures of m-fold intersections of parallel-face neighborhoods, the
// empirical constant against the paper's power of delta, and the Hoelder
// rearrangement check. Intersections are exact interval-overlap products.
// Faces must all be parallel to one coordinate plane class.
inline IntersectionReport intersectionBoundCheck(const SkeletonConfig& cfg,
                                                 const std::vector<SelectedFace>& faces,
                                                 const WeightVector& weights, double delta,
                                                 int m) {
    cfg.validate();
    if (m != 2 && m != 3) throw Error("invalid-input", "m must be 2 or 3");
    if (faces.empty()) throw Error("invalid-input", "empty face family");
    if (weights.t.size() != faces.size())
        throw Error("invalid-input", "one weight per face required");
    const int n = cfg.n, k = cfg.k;
    for (const auto& sf : faces)
        if (sf.face.freeMask != faces.front().face.freeMask)
            throw Error("mixed-plane-class", "faces must be parallel to one coordinate plane");
    {
        double s = 0.0;
        for (double x : weights.t) {
            if (!(x >= 0.0)) throw Error("weights-unnormalized", "weights must be nonnegative");
            s += std::pow(x, static_cast<double>(m));
        }
        if (std::pow(delta, static_cast<double>(n - m * k)) * s > 1.0 + 1e-9)
            throw Error("weights-unnormalized", "delta^(n-mk) sum t^m must be <= 1");
    }

    const std::size_t u = faces.size();
    std::vector<Box> boxes(u);
    for (std::size_t i = 0; i < u; ++i)
        boxes[i] = faceNeighborhood(cfg, faces[i].skeleton, faces[i].face, delta);

    // sort by the first normal axis; all boxes are 2*delta wide there, so
    // overlapping tuples live inside a sliding window
    int axis0 = 0;
    for (int i = 0; i < n; ++i)
        if (!faces.front().face.isFree(i)) { axis0 = i; break; }
    std::vector<std::size_t> order(u);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return boxes[a].lo[axis0] < boxes[b].lo[axis0];
    });

    const std::vector<double>& t = weights.t;
    double I = 0.0;
    std::vector<double> perFirstL(u, 0.0);        // sum over (i2..im) of L with i1 fixed
    std::vector<std::int64_t> perFirstCnt(u, 0);  // nonzero tuples with i1 fixed

    if (m == 2) {
        for (std::size_t i = 0; i < u; ++i) {
            double L = boxes[i].measure();
            I += t[i] * t[i] * L;
            perFirstL[i] += L;
            perFirstCnt[i] += 1;
        }
        for (std::size_t a = 0; a < u; ++a) {
            std::size_t i = order[a];
            for (std::size_t b = a + 1; b < u; ++b) {
                std::size_t j = order[b];
                if (boxes[j].lo[axis0] >= boxes[i].hi[axis0]) break;
                double L = detail::boxOverlap(boxes[i], boxes[j]);
                if (L <= 0.0) continue;
                I += 2.0 * t[i] * t[j] * L;
                perFirstL[i] += L;
                perFirstL[j] += L;
                perFirstCnt[i] += 1;
                perFirstCnt[j] += 1;
            }
        }
    } else { // m == 3
        for (std::size_t a = 0; a < u; ++a) {
            std::size_t i = order[a];
            // window of boxes overlapping box i on axis0 (sorted by lo)
            std::vector<std::size_t> win;
            for (std::size_t b = a + 1; b < u; ++b) {
                std::size_t j = order[b];
                if (boxes[j].lo[axis0] >= boxes[i].hi[axis0]) break;
                win.push_back(j);
            }
            // (i,i,i)
            double Li = boxes[i].measure();
            I += t[i] * t[i] * t[i] * Li;
            perFirstL[i] += Li;
            perFirstCnt[i] += 1;
            for (std::size_t wa = 0; wa < win.size(); ++wa) {
                std::size_t j = win[wa];
                double Lij = detail::boxOverlap(boxes[i], boxes[j]);
                if (Lij <= 0.0) continue;
                // multisets {i,i,j} and {i,j,j}: 3 ordered arrangements each
                I += 3.0 * (t[i] * t[i] * t[j] + t[i] * t[j] * t[j]) * Lij;
                perFirstL[i] += 3.0 * Lij; // (j,j),(i,j),(j,i) with first = i
                perFirstCnt[i] += 3;
                perFirstL[j] += 3.0 * Lij;
                perFirstCnt[j] += 3;
                for (std::size_t wb = wa + 1; wb < win.size(); ++wb) {
                    std::size_t l = win[wb];
                    double L = detail::boxOverlap3(boxes[i], boxes[j], boxes[l]);
                    if (L <= 0.0) continue;
                    I += 6.0 * t[i] * t[j] * t[l] * L;
                    perFirstL[i] += 2.0 * L; // (j,l) and (l,j)
                    perFirstL[j] += 2.0 * L;
                    perFirstL[l] += 2.0 * L;
                    perFirstCnt[i] += 2;
                    perFirstCnt[j] += 2;
                    perFirstCnt[l] += 2;
                }
            }
        }
    }

    IntersectionReport rep;
    rep.u = u;
    rep.I = I;
    rep.boundPower = std::pow(delta, static_cast<double>((k - n) * (m - 1)) /
                                         static_cast<double>(2 * n));
    rep.empiricalCm = I / rep.boundPower;
    rep.cStar = std::pow(rep.empiricalCm, 1.0 / static_cast<double>(m));
    double rhs = 0.0;
    std::int64_t maxCnt = 0;
    for (std::size_t i = 0; i < u; ++i) {
        rhs += std::pow(t[i], static_cast<double>(m)) * perFirstL[i];
        maxCnt = std::max<std::int64_t>(maxCnt, perFirstCnt[i]);
    }
    rep.holderRhs = rhs;
    rep.holderOk = I <= rhs * (1.0 + 1e-9) + 1e-18;
    rep.maxTuplesPerFirst = maxCnt;
    rep.tupleCountPower = std::pow(static_cast<double>(u),
                                   static_cast<double>(m - 1) * selectionExponent(n, k));
    return rep;
}

// ---- upper-bound scan -------------------------------------------------------

struct UpperBoundReport {
    NormScanResult scan;
    std::vector<std::pair<double, double>> cStarPerDelta; // (delta, best ratio * delta^{(n-k)/(2np)})
    double maxOverMin = 0.0;
    bool bounded = false; // max/min <= 3
};

inline UpperBoundReport upperBoundScan(const SkeletonConfig& cfg, double p,
                                       const std::vector<double>& deltas, const Variant& variant,
                                       std::uint64_t seed, const PoolOptions& poolOpt,
                                       int workers) {
    UpperBoundReport rep;
    rep.scan = runNormScan(cfg, p, deltas, variant, seed, poolOpt, workers);
    const double expo = static_cast<double>(cfg.n - cfg.k) /
                        (2.0 * static_cast<double>(cfg.n) * p);
    double mx = 0.0, mn = std::numeric_limits<double>::infinity();
    for (const auto& [delta, ratio] : rep.scan.bestPerDelta) {
        double cstar = ratio * std::pow(delta, expo);
        rep.cStarPerDelta.emplace_back(delta, cstar);
        mx = std::max(mx, cstar);
        mn = std::min(mn, cstar);
    }
    rep.maxOverMin = (mn > 0.0) ? mx / mn : std::numeric_limits<double>::infinity();
    rep.bounded = rep.maxOverMin <= 3.0;
    return rep;
}

} // namespace skelmax

#endif
