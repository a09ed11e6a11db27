#pragma once

#include <array>
#include <cstdint>

#include "conjassess/encounter.hpp"
#include "conjassess/numerics.hpp"

namespace conjassess::inference {

using encounter::ConjunctionState;
using numerics::SymMat2;
using numerics::Vec2;

struct ConfidenceInterval {
    double lower = 0.0;  // m, >= 0
    double upper = 0.0;  // m, >= lower
    double level = 0.0;  // in (0, 1)
    int ndof = 2;
};

/// Output of the ellipse-touch CI / significance computation.
/// z_p is the signed level of the ellipse that just touches the HBR circle:
/// negative when the prediction lies outside the circle, positive inside,
/// -inf when even the widest searched ellipse stays clear of it (p_obs = 0),
/// +inf in the mirrored deep-inside case (p_obs = 1).
struct MlResult {
    ConfidenceInterval ci;
    double p_obs = 0.0;
    std::array<double, 2> z_bounds{};  // k-sigma levels of the CI bounds
    double z_p = 0.0;
    double w_stat = 0.0;
    bool conditioned = false;  // small-eigenvalue floor was applied
};

/// Squared Mahalanobis distance (x - xi)^T cov^{-1} (x - xi), evaluated
/// through the eigendecomposition of cov.
double mahalanobis_sq(const ConjunctionState& state, Vec2 xi);

/// Membership of xi in the (1-alpha) confidence ellipse centered on the
/// prediction: Delta(xi) <= -2 ln(alpha).
bool confidence_ellipse_contains(const ConjunctionState& state, Vec2 xi, double alpha);

/// Significance probability of the point null xi = 0: exp(-Delta(0)/2).
double pvalue_center(const ConjunctionState& state);

/// Likelihood-ratio statistic for the composite null "truth inside the HBR
/// disk": min over the disk of Delta(xi). Zero when the prediction is inside.
double w_statistic(const ConjunctionState& state);

/// LR significance probability 1 - chi2_cdf(W, ndof); equals 1 when the
/// prediction lies inside the HBR disk.
double p_obs_lr(const ConjunctionState& state, int ndof = 2);

/// Ellipse-touch computation: the (1-alpha) CI on the miss distance is the
/// [min, max] distance of the k-sigma ellipse from the origin, and the
/// significance probability follows from the signed level z_p of the ellipse
/// that just touches the HBR circle:
///   p_obs = (1 - chi2_cdf(z_p^2, ndof))/2 for z_p <= 0,
///           (1 + chi2_cdf(z_p^2, ndof))/2 for z_p > 0.
MlResult ml_ci_pval(const ConjunctionState& state, double alpha, int ndof = 2);

/// Equal-tailed interval on ||x'|| with x' ~ N(x, cov), from n_samples draws
/// of a fixed internal stream; comparison baseline only.
ConfidenceInterval marginal_credible_interval(const ConjunctionState& state, double level,
                                              std::size_t n_samples);

/// Extreme (min or max) distance from the origin reached by the k-sigma
/// ellipse of the covariance around x. The min is zero when the origin lies
/// inside the ellipse. Exposed for the experiment harnesses and tests.
double ellipse_extreme_distance(Vec2 x, const numerics::EigenPair2& eig, double k,
                                bool want_max);

}  // namespace conjassess::inference
