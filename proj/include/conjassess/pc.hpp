#pragma once

#include <vector>

#include "conjassess/encounter.hpp"
#include "conjassess/inference.hpp"
#include "conjassess/numerics.hpp"

namespace conjassess::pc {

using encounter::ConjunctionState;
using encounter::TrueState;
using numerics::SymMat2;
using numerics::Vec2;

/// Traditional collision-probability estimate: Gaussian mass centered on the
/// prediction integrated over the HBR disk.
double pc_hat(const ConjunctionState& state, double rel_tol = numerics::kDefaultDiskRelTol);

/// Same disk integral centered on the true miss vector; simulation use only.
double pc_true(const TrueState& truth, const SymMat2& cov, double hbr,
               double rel_tol = numerics::kDefaultDiskRelTol);

/// E||x||^2 = ||xi||^2 + tr(cov) for x ~ N(xi, cov).
double expected_sq_miss(const TrueState& truth, const SymMat2& cov);

struct DilutionPoint {
    double scale = 0.0;     // multiplier on the covariance square root
    double pc_hat = 0.0;
    double p_obs = 0.0;     // ellipse-touch significance (the normative path)
    double p_obs_lr = 0.0;  // chi-square LR tail, for cross-checking
};

/// Sweeps a scalar scale on the covariance square root (cov -> s^2 cov) and
/// evaluates pc_hat alongside both significance conventions at each point.
std::vector<DilutionPoint> dilution_curve(const ConjunctionState& state,
                                          const std::vector<double>& scales, int ndof = 2);

}  // namespace conjassess::pc
