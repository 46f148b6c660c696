#ifndef SKELMAX_SELECTION_HPP
#define SKELMAX_SELECTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "skelmax/common.hpp"
#include "skelmax/grid.hpp"
#include "skelmax/maxop.hpp"
#include "skelmax/skeleton.hpp"

namespace skelmax {

// Identity of the affine k-plane containing a face: the normal axes J (the
// complement of the face's free axes) and the plane's offset along each of
// them. Offsets are kept as exact integers in units of the keying quantum;
// float keying would silently merge or split planes. Cell centers sit at
// half-integer multiples of delta, so the quantum is delta/2 in operator
// contexts.
struct PlaneKey {
    int n = 0;
    std::uint8_t normalMask = 0;        // bit i set => axis i is normal to the plane
    std::array<std::int64_t, kMaxDim> offsetQ{}; // offsets (quantum units), normal axes ascending

    friend bool operator==(const PlaneKey& a, const PlaneKey& b) {
        return a.n == b.n && a.normalMask == b.normalMask && a.offsetQ == b.offsetQ;
    }
};

namespace detail {

inline std::int64_t snapToQuantum(double x, double quantum) {
    double q = x / quantum;
    double r = std::round(q);
    if (std::abs(q - r) > 1e-9 * std::max(1.0, std::abs(q)))
        throw Error("off-grid", "coordinate is not a multiple of the keying quantum");
    return static_cast<std::int64_t>(r);
}

// proper lexicographic comparison of normal-axis lists, then offsets
inline bool planeKeyLess(const PlaneKey& a, const PlaneKey& b) {
    std::array<int, kMaxDim> la{}, lb{};
    int ca = 0, cb = 0;
    for (int i = 0; i < a.n; ++i)
        if ((a.normalMask >> i) & 1u) la[ca++] = i;
    for (int i = 0; i < b.n; ++i)
        if ((b.normalMask >> i) & 1u) lb[cb++] = i;
    for (int i = 0; i < std::min(ca, cb); ++i)
        if (la[i] != lb[i]) return la[i] < lb[i];
    if (ca != cb) return ca < cb;
    for (int i = 0; i < ca; ++i)
        if (a.offsetQ[i] != b.offsetQ[i]) return a.offsetQ[i] < b.offsetQ[i];
    return false;
}

} // namespace detail

// Plane of a face: J = complement of the free axes, offset_i = x_i + sign*r
// for i in J. Center coordinates and radius must be exact multiples of the
// quantum.
inline PlaneKey planeOfFace(const SkeletonConfig& cfg, const Skeleton& s, const FaceId& face,
                            double quantum) {
    cfg.validate();
    s.validate();
    PlaneKey key;
    key.n = cfg.n;
    std::int64_t rq = detail::snapToQuantum(s.halfSide, quantum);
    int slot = 0;
    for (int i = 0; i < cfg.n; ++i) {
        std::int64_t xq = detail::snapToQuantum(s.center[i], quantum);
        if (face.isFree(i)) continue;
        key.normalMask |= static_cast<std::uint8_t>(1u << i);
        key.offsetQ[slot++] = xq + face.sign(cfg.n, i) * rq;
    }
    return key;
}

struct SelectionStage {
    std::int64_t remaining = 0;   // u_p before the stage
    std::int64_t planesAlive = 0; // |A_p|
    PlaneKey chosen;
    std::int64_t assigned = 0;    // n_{j0}
};

struct SelectionCertificate {
    std::int64_t u = 0;
    double exponent = 0.0;  // 1 - (n-k)(2n-1)/(2n^2)
    double tailThreshold = 0.0; // u^exponent
    std::vector<SelectionStage> stages;
    std::map<PlaneKey, std::int64_t, bool (*)(const PlaneKey&, const PlaneKey&)> perPlaneCounts{
        detail::planeKeyLess};
    std::int64_t tailSize = 0;
    std::int64_t distinctPlanes = 0; // |A| over the full family

    std::int64_t maxPerPlaneCount() const {
        std::int64_t m = 0;
        for (const auto& [k, c] : perPlaneCounts) m = std::max(m, c);
        return m;
    }
};

struct SelectionResult {
    std::vector<FaceId> faces; // one per input skeleton
    SelectionCertificate certificate;
};

inline double selectionExponent(int n, int k) {
    return 1.0 - static_cast<double>((n - k) * (2 * n - 1)) / static_cast<double>(2 * n * n);
}

inline double mainLemmaExponent(int n, int ell) {
    return static_cast<double>(ell * (2 * n - 1)) / static_cast<double>(2 * n * n);
}

// Greedy face selection: repeatedly pick the plane hit by the fewest
// remaining skeletons (ties by lexicographic PlaneKey), assign those
// skeletons their face in it, and stop once at most u^exponent skeletons
// remain; those get their canonical first face. Deterministic given input
// order.
inline SelectionResult greedySelect(const SkeletonConfig& cfg,
                                    const std::vector<Skeleton>& skeletons, double quantum) {
    cfg.validate();
    if (skeletons.empty()) throw Error("invalid-input", "empty skeleton list");
    const std::int64_t u = static_cast<std::int64_t>(skeletons.size());
    const auto faceList = enumerateFaces(cfg);
    const std::int64_t N = static_cast<std::int64_t>(faceList.size());

    struct PlaneEntry {
        PlaneKey key;
        std::vector<std::pair<std::int64_t, int>> members; // (skeleton, face index)
        std::int64_t alive = 0;
    };
    std::map<PlaneKey, std::int64_t, bool (*)(const PlaneKey&, const PlaneKey&)> planeIndex(
        detail::planeKeyLess);
    std::vector<PlaneEntry> planes;

    // planesOf[s] lists the plane of each face of skeleton s
    std::vector<std::vector<std::int64_t>> planesOf(static_cast<std::size_t>(u));
    for (std::int64_t si = 0; si < u; ++si) {
        planesOf[static_cast<std::size_t>(si)].reserve(static_cast<std::size_t>(N));
        for (int fi = 0; fi < N; ++fi) {
            PlaneKey key = planeOfFace(cfg, skeletons[static_cast<std::size_t>(si)],
                                       faceList[static_cast<std::size_t>(fi)], quantum);
            auto [it, inserted] = planeIndex.try_emplace(key,
                                                         static_cast<std::int64_t>(planes.size()));
            if (inserted) {
                planes.push_back(PlaneEntry{key, {}, 0});
            }
            std::int64_t pi = it->second;
            planes[static_cast<std::size_t>(pi)].members.emplace_back(si, fi);
            planes[static_cast<std::size_t>(pi)].alive += 1;
            planesOf[static_cast<std::size_t>(si)].push_back(pi);
        }
    }

    // lexicographic rank of each plane (planeIndex map is already sorted)
    std::vector<std::int64_t> lexRank(planes.size());
    {
        std::int64_t r = 0;
        for (const auto& [key, pi] : planeIndex) lexRank[static_cast<std::size_t>(pi)] = r++;
    }

    SelectionResult out;
    out.faces.assign(static_cast<std::size_t>(u), FaceId{});
    SelectionCertificate& cert = out.certificate;
    cert.u = u;
    cert.exponent = selectionExponent(cfg.n, cfg.k);
    cert.tailThreshold = std::pow(static_cast<double>(u), cert.exponent);
    cert.distinctPlanes = static_cast<std::int64_t>(planes.size());

    std::set<std::pair<std::int64_t, std::int64_t>> queue; // (alive count, lex rank)
    for (std::size_t pi = 0; pi < planes.size(); ++pi)
        queue.insert({planes[pi].alive, lexRank[pi]});
    std::vector<std::int64_t> byRank(planes.size());
    for (std::size_t pi = 0; pi < planes.size(); ++pi)
        byRank[static_cast<std::size_t>(lexRank[pi])] = static_cast<std::int64_t>(pi);

    std::vector<char> skeletonAlive(static_cast<std::size_t>(u), 1);
    std::vector<char> assigned(static_cast<std::size_t>(u), 0);
    std::int64_t aliveU = u;
    std::int64_t alivePlanes = static_cast<std::int64_t>(planes.size());

    while (static_cast<double>(aliveU) > cert.tailThreshold && aliveU > 0) {
        auto it = queue.begin();
        std::int64_t pi = byRank[static_cast<std::size_t>(it->second)];
        PlaneEntry& plane = planes[static_cast<std::size_t>(pi)];

        SelectionStage stage;
        stage.remaining = aliveU;
        stage.planesAlive = alivePlanes;
        stage.chosen = plane.key;
        stage.assigned = plane.alive;
        cert.stages.push_back(stage);

        // assign every remaining skeleton with a face in this plane
        for (const auto& [si, fi] : plane.members) {
            if (!skeletonAlive[static_cast<std::size_t>(si)]) continue;
            out.faces[static_cast<std::size_t>(si)] = faceList[static_cast<std::size_t>(fi)];
            assigned[static_cast<std::size_t>(si)] = 1;
            skeletonAlive[static_cast<std::size_t>(si)] = 0;
            --aliveU;
            for (std::int64_t qi : planesOf[static_cast<std::size_t>(si)]) {
                PlaneEntry& other = planes[static_cast<std::size_t>(qi)];
                queue.erase({other.alive, lexRank[static_cast<std::size_t>(qi)]});
                other.alive -= 1;
                if (other.alive > 0)
                    queue.insert({other.alive, lexRank[static_cast<std::size_t>(qi)]});
                else
                    --alivePlanes;
            }
        }
        cert.perPlaneCounts[plane.key] += stage.assigned;
    }

    // arbitrary (canonical first face) assignment for the tail
    for (std::int64_t si = 0; si < u; ++si) {
        if (assigned[static_cast<std::size_t>(si)]) continue;
        out.faces[static_cast<std::size_t>(si)] = faceList[0];
        PlaneKey key =
            planeOfFace(cfg, skeletons[static_cast<std::size_t>(si)], faceList[0], quantum);
        cert.perPlaneCounts[key] += 1;
        ++cert.tailSize;
    }
    return out;
}

// Internal consistency of a certificate against the pigeonhole step and the
// tail bound. Returns the first failed condition's name, or empty.
inline std::string checkCertificate(const SelectionCertificate& cert, int n, int k) {
    const double N = static_cast<double>(faceCount(n, k));
    std::int64_t totalAssigned = cert.tailSize;
    for (const auto& st : cert.stages) {
        totalAssigned += st.assigned;
        if (st.planesAlive <= 0) return "stage-planes-empty";
        double bound = static_cast<double>(st.remaining) * N / static_cast<double>(st.planesAlive);
        if (static_cast<double>(st.assigned) > bound * (1.0 + 1e-12))
            return "stage-pigeonhole";
    }
    if (totalAssigned != cert.u) return "assignment-count";
    if (static_cast<double>(cert.tailSize) > cert.tailThreshold * (1.0 + 1e-12))
        return "tail-bound";
    std::int64_t perPlaneTotal = 0;
    for (const auto& [key, c] : cert.perPlaneCounts) perPlaneTotal += c;
    if (perPlaneTotal != cert.u) return "per-plane-total";
    return "";
}

// For each coordinate k-plane class, the eval-grid cells whose assigned face
// is parallel to it. For k = 0 there is a single class.
struct PlaneClassPartition {
    SkeletonConfig cfg;
    std::vector<std::uint8_t> classMasks;            // free-axes mask per class
    std::vector<std::vector<std::int64_t>> members;  // eval-grid flat cell ids
};

inline PlaneClassPartition planeClassPartition(const FaceAssignment& phi) {
    phi.cfg.validate();
    PlaneClassPartition part;
    part.cfg = phi.cfg;
    const int n = phi.cfg.n, k = phi.cfg.k;
    if (k == 0) {
        part.classMasks.push_back(0);
        part.members.resize(1);
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(phi.faces.size()); ++i)
            part.members[0].push_back(i);
        return part;
    }
    auto faces = enumerateFaces(SkeletonConfig{n, k});
    std::map<std::uint8_t, std::size_t> classOf;
    for (const FaceId& f : faces) {
        if (classOf.count(f.freeMask)) continue;
        classOf[f.freeMask] = part.classMasks.size();
        part.classMasks.push_back(f.freeMask);
    }
    part.members.resize(part.classMasks.size());
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(phi.faces.size()); ++i)
        part.members[classOf.at(phi.faces[static_cast<std::size_t>(i)].freeMask)].push_back(i);
    return part;
}

// ---- (n,l)-dimensional main lemma machinery -------------------------------
//
// Hypothesis: for every x in X there is r > 0 with x_I + r*sigma in A for
// every l-subset I and every sign vector sigma. All coordinates are exact
// integers in quantum units.

struct IntPoint {
    std::array<std::int64_t, kMaxDim> c{};
    friend bool operator==(const IntPoint& a, const IntPoint& b) { return a.c == b.c; }
    friend bool operator<(const IntPoint& a, const IntPoint& b) { return a.c < b.c; }
};

namespace detail {

inline std::vector<std::vector<int>> subsets(int n, int ell) {
    std::vector<std::vector<int>> out;
    std::vector<int> pick(static_cast<std::size_t>(ell));
    for (int i = 0; i < ell; ++i) pick[static_cast<std::size_t>(i)] = i;
    while (true) {
        out.push_back(pick);
        int i = ell - 1;
        while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - ell + i) --i;
        if (i < 0) break;
        ++pick[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < ell; ++j)
            pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

} // namespace detail

// true iff some radius works for x; radius candidates are derived from the
// first (I, sigma) combination, so the enumeration is exhaustive.
inline bool mainLemmaPointCovered(int n, int ell, const IntPoint& x,
                                  const std::set<IntPoint>& A) {
    auto Is = detail::subsets(n, ell);
    const auto& I0 = Is.front();
    std::set<std::int64_t> candidates;
    for (const IntPoint& a : A) {
        // sigma0 = all -1: a_j = x_{I0[j]} - r
        std::int64_t r = x.c[static_cast<std::size_t>(I0[0])] - a.c[0];
        if (r <= 0) continue;
        bool ok = true;
        for (int j = 1; j < ell; ++j)
            if (a.c[static_cast<std::size_t>(j)] !=
                x.c[static_cast<std::size_t>(I0[static_cast<std::size_t>(j)])] - r) {
                ok = false;
                break;
            }
        if (ok) candidates.insert(r);
    }
    for (std::int64_t r : candidates) {
        bool all = true;
        for (const auto& I : Is) {
            for (std::uint32_t sm = 0; sm < (1u << ell) && all; ++sm) {
                IntPoint p;
                for (int j = 0; j < ell; ++j) {
                    std::int64_t s = ((sm >> j) & 1u) ? 1 : -1;
                    p.c[static_cast<std::size_t>(j)] =
                        x.c[static_cast<std::size_t>(I[static_cast<std::size_t>(j)])] + s * r;
                }
                if (!A.count(p)) all = false;
            }
            if (!all) break;
        }
        if (all) return true;
    }
    return false;
}

// |A| / |X|^{l(2n-1)/(2n^2)} after verifying the hypothesis; throws
// "hypothesis-violated" carrying the witness otherwise.
inline double mainLemmaRatio(int n, int ell, const std::vector<IntPoint>& X,
                             const std::set<IntPoint>& A) {
    if (ell < 1 || ell > n) throw Error("invalid-spec", "need 1 <= ell <= n");
    if (X.empty() || A.empty()) throw Error("invalid-input", "X and A must be nonempty");
    for (const IntPoint& x : X) {
        if (!mainLemmaPointCovered(n, ell, x, A)) {
            std::string msg = "no radius covers x = (";
            for (int i = 0; i < n; ++i)
                msg += std::to_string(x.c[static_cast<std::size_t>(i)]) + (i + 1 < n ? "," : ")");
            throw Error("hypothesis-violated", msg);
        }
    }
    return static_cast<double>(A.size()) /
           std::pow(static_cast<double>(X.size()), mainLemmaExponent(n, ell));
}

// Minimal A for one radius assignment: exactly the corner-offset points.
inline std::set<IntPoint> mainLemmaOffsets(int n, int ell, const std::vector<IntPoint>& X,
                                           const std::vector<std::int64_t>& radii) {
    auto Is = detail::subsets(n, ell);
    std::set<IntPoint> A;
    for (std::size_t xi = 0; xi < X.size(); ++xi) {
        std::int64_t r = radii[xi];
        for (const auto& I : Is) {
            for (std::uint32_t sm = 0; sm < (1u << ell); ++sm) {
                IntPoint p;
                for (int j = 0; j < ell; ++j) {
                    std::int64_t s = ((sm >> j) & 1u) ? 1 : -1;
                    p.c[static_cast<std::size_t>(j)] =
                        X[xi].c[static_cast<std::size_t>(I[static_cast<std::size_t>(j)])] + s * r;
                }
                A.insert(p);
            }
        }
    }
    return A;
}

struct BruteForceResult {
    double minRatio = 0.0;
    std::vector<std::int64_t> argminRadii;
    std::int64_t assignmentsTried = 0;
};

// Exhaustive scan over all |R|^|X| radius assignments; the minimal
// |A'| / |X|^exp over them is an empirical lower bound for the lemma
// constant on this configuration.
inline BruteForceResult mainLemmaBruteForce(int n, int ell, const std::vector<IntPoint>& X,
                                            const std::vector<std::int64_t>& radiusDomain) {
    if (X.empty() || radiusDomain.empty())
        throw Error("invalid-input", "need centers and a radius domain");
    for (std::int64_t r : radiusDomain)
        if (r <= 0) throw Error("invalid-input", "radii must be positive");
    BruteForceResult best;
    best.minRatio = std::numeric_limits<double>::infinity();
    const double denom = std::pow(static_cast<double>(X.size()), mainLemmaExponent(n, ell));
    std::vector<std::size_t> pick(X.size(), 0);
    std::vector<std::int64_t> radii(X.size());
    while (true) {
        for (std::size_t i = 0; i < X.size(); ++i) radii[i] = radiusDomain[pick[i]];
        auto A = mainLemmaOffsets(n, ell, X, radii);
        double ratio = static_cast<double>(A.size()) / denom;
        ++best.assignmentsTried;
        if (ratio < best.minRatio) {
            best.minRatio = ratio;
            best.argminRadii = radii;
        }
        std::size_t i = X.size();
        while (i > 0) {
            --i;
            if (++pick[i] < radiusDomain.size()) break;
            pick[i] = 0;
            if (i == 0) return best;
        }
    }
}

} // namespace skelmax

#endif
