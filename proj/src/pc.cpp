#include "conjassess/pc.hpp"

#include <stdexcept>

namespace conjassess::pc {

double pc_hat(const ConjunctionState& state, double rel_tol) {
    encounter::validate(state);
    return numerics::gauss_disk_quadrature(state.x, state.cov, state.hbr, rel_tol);
}

double pc_true(const TrueState& truth, const SymMat2& cov, double hbr, double rel_tol) {
    return numerics::gauss_disk_quadrature(truth.xi, cov, hbr, rel_tol);
}

double expected_sq_miss(const TrueState& truth, const SymMat2& cov) {
    numerics::require_pd(cov, "expected_sq_miss");
    return truth.xi.norm_sq() + cov.trace();
}

std::vector<DilutionPoint> dilution_curve(const ConjunctionState& state,
                                          const std::vector<double>& scales, int ndof) {
    encounter::validate(state);
    std::vector<DilutionPoint> out;
    out.reserve(scales.size());
    for (double s : scales) {
        if (!(s > 0.0)) throw std::invalid_argument("dilution_curve: scales must be positive");
        ConjunctionState scaled{state.x, state.cov.scaled(s * s), state.hbr};
        DilutionPoint pt;
        pt.scale = s;
        pt.pc_hat = pc_hat(scaled);
        pt.p_obs = inference::ml_ci_pval(scaled, 0.01, ndof).p_obs;
        pt.p_obs_lr = inference::p_obs_lr(scaled, ndof);
        out.push_back(pt);
    }
    return out;
}

}  // namespace conjassess::pc
