#pragma once

#include "conjassess/inference.hpp"
#include "conjassess/pc.hpp"

namespace conjassess {

/// Full per-conjunction assessment: the traditional estimate alongside the
/// miss-distance inference outputs.
struct AssessmentResult {
    double pc_hat = 0.0;
    double p_obs = 0.0;       // ellipse-touch significance
    double p_obs_lr = 0.0;    // chi-square LR tail
    inference::ConfidenceInterval ci;
    std::array<double, 2> z_bounds{};
    double z_p = 0.0;
    double w_stat = 0.0;
    bool conditioned = false;
};

inline AssessmentResult assess(const encounter::ConjunctionState& state, double alpha = 0.01,
                               int ndof = 2) {
    AssessmentResult out;
    const inference::MlResult ml = inference::ml_ci_pval(state, alpha, ndof);
    out.pc_hat = pc::pc_hat(state);
    out.p_obs = ml.p_obs;
    out.p_obs_lr = inference::p_obs_lr(state, ndof);
    out.ci = ml.ci;
    out.z_bounds = ml.z_bounds;
    out.z_p = ml.z_p;
    out.w_stat = ml.w_stat;
    out.conditioned = ml.conditioned;
    return out;
}

}  // namespace conjassess
