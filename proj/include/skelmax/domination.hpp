#ifndef SKELMAX_DOMINATION_HPP
#define SKELMAX_DOMINATION_HPP

#include <cmath>
#include <vector>

#include "skelmax/common.hpp"
#include "skelmax/grid.hpp"
#include "skelmax/maxop.hpp"
#include "skelmax/selection.hpp"
#include "skelmax/skeleton.hpp"

namespace skelmax {

struct DominationResult {
    RadiusFunction rho;
    FaceAssignment phi;
    ScalarField restricted;      // M at width delta
    ScalarField linearized;      // M-tilde at width 3*delta with (rho, phi)
    double worstSlack = 0.0;     // max over centers of M - 3^(n-k) * M-tilde
    std::int64_t violations = 0;
};

// Builds rho from the per-center argmax radii of the restricted operator
// (already on the delta grid, smallest radius on ties), assigns faces by the
// greedy selection, and verifies the pointwise domination
//   M_delta f(x) <= 3^(n-k) * Mlin_{rho,3delta} f(x) + eps
// at every center. A violation is an implementation bug, not a data issue.
inline DominationResult buildDominatingRho(const PrefixSumTable& absTable,
                                           const SkeletonConfig& cfg, const GridSpec& evalGrid,
                                           double eps = 1e-9, int workers = 1) {
    DominationResult out;

    OperatorResult restricted = evaluateRestricted(absTable, cfg, evalGrid, workers);
    out.restricted = restricted.field;

    out.rho.grid = evalGrid;
    out.rho.radii = *restricted.argmaxRadii;

    const std::int64_t cells = evalGrid.cellCount();
    std::vector<Skeleton> skeletons(static_cast<std::size_t>(cells));
    for (std::int64_t f = 0; f < cells; ++f) {
        skeletons[static_cast<std::size_t>(f)].center = evalGrid.cellCenter(evalGrid.unflatten(f));
        skeletons[static_cast<std::size_t>(f)].halfSide = out.rho.radii[static_cast<std::size_t>(f)];
    }
    // cell centers are half-integer multiples of delta, radii integer ones
    SelectionResult sel = greedySelect(cfg, skeletons, evalGrid.delta / 2.0);
    out.phi.cfg = cfg;
    out.phi.faces = sel.faces;

    OperatorResult lin =
        evaluateLinearized(absTable, out.rho, out.phi, 3.0 * evalGrid.delta, workers);
    out.linearized = lin.field;

    const double factor = powi(3.0, cfg.n - cfg.k);
    double worst = -std::numeric_limits<double>::infinity();
    std::int64_t firstBad = -1;
    for (std::int64_t f = 0; f < cells; ++f) {
        double slack = out.restricted.values[static_cast<std::size_t>(f)] -
                       factor * out.linearized.values[static_cast<std::size_t>(f)];
        if (slack > worst) worst = slack;
        if (slack > eps) {
            ++out.violations;
            if (firstBad < 0) firstBad = f;
        }
    }
    out.worstSlack = worst;
    if (out.violations > 0) {
        Coord c = evalGrid.cellCenter(evalGrid.unflatten(firstBad));
        std::string msg = "domination violated at center (";
        for (int i = 0; i < evalGrid.n; ++i)
            msg += std::to_string(c[i]) + (i + 1 < evalGrid.n ? "," : ")");
        throw Error("domination-violated", msg);
    }
    return out;
}

} // namespace skelmax

#endif
