#include "conjassess/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace conjassess::inference {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kThetaTol = 1e-12;
constexpr double kZTol = 1e-10;
constexpr double kKmax = 7.0;       // widest ellipse searched before declaring p_obs = 0
constexpr int kStarts = 8;          // multi-start seeds over [0, 2pi)
constexpr double kCondRatio = 1e12; // eigenvalue ratio beyond which the floor kicks in

using numerics::EigenPair2;

double mahalanobis_sq_eig(const EigenPair2& eig, Vec2 x, Vec2 xi) {
    const Vec2 d = x - xi;
    const double c1 = dot(d, eig.v1);
    const double c2 = dot(d, eig.v2);
    return c1 * c1 / eig.lambda1 + c2 * c2 / eig.lambda2;
}

/// Eigendecomposition with the documented conditioning: eigenvalue ratios
/// beyond 1e12 floor the small eigenvalue at 1e-12 of the large one.
EigenPair2 conditioned_eig(const SymMat2& cov, bool* flagged) {
    EigenPair2 eig = numerics::eig_sym2(cov);
    if (!(eig.lambda2 > 0.0))
        throw std::invalid_argument("inference: covariance is not positive definite");
    const double floor_value = eig.lambda2 / kCondRatio;
    if (eig.lambda1 < floor_value) {
        eig.lambda1 = floor_value;
        if (flagged) *flagged = true;
    } else if (flagged) {
        *flagged = false;
    }
    return eig;
}

double w_statistic_eig(const ConjunctionState& state, const EigenPair2& eig) {
    if (state.x.norm() <= state.hbr) return 0.0;
    if (state.hbr == 0.0) return mahalanobis_sq_eig(eig, state.x, {0.0, 0.0});
    const auto delta_on_circle = [&](double phi) {
        const Vec2 xi{state.hbr * std::cos(phi), state.hbr * std::sin(phi)};
        return mahalanobis_sq_eig(eig, state.x, xi);
    };
    return numerics::minimize_periodic(delta_on_circle, kTwoPi, kStarts, kThetaTol).f;
}

}  // namespace

double ellipse_extreme_distance(Vec2 x, const EigenPair2& eig, double k, bool want_max) {
    const double a = eig.lambda1, b = eig.lambda2;
    if (!want_max) {
        // Origin inside or on the k-sigma ellipse.
        const double c1 = dot(x, eig.v1), c2 = dot(x, eig.v2);
        if (c1 * c1 / a + c2 * c2 / b <= k * k) return 0.0;
    }
    const auto dist = [&](double th) {
        const double st = std::sin(th), ct = std::cos(th);
        const double m = std::sqrt(a * b / (a * st * st + b * ct * ct));
        const double u = k * m * ct, v = k * m * st;
        const Vec2 p = x + u * eig.v1 + v * eig.v2;
        return p.norm();
    };
    if (want_max) {
        const auto neg = [&](double th) { return -dist(th); };
        return -numerics::minimize_periodic(neg, kTwoPi, kStarts, kThetaTol).f;
    }
    return numerics::minimize_periodic(dist, kTwoPi, kStarts, kThetaTol).f;
}

double mahalanobis_sq(const ConjunctionState& state, Vec2 xi) {
    numerics::require_pd(state.cov, "mahalanobis_sq");
    const EigenPair2 eig = numerics::eig_sym2(state.cov);
    return mahalanobis_sq_eig(eig, state.x, xi);
}

bool confidence_ellipse_contains(const ConjunctionState& state, Vec2 xi, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("confidence_ellipse_contains: alpha must be in (0, 1)");
    return mahalanobis_sq(state, xi) <= -2.0 * std::log(alpha);
}

double pvalue_center(const ConjunctionState& state) {
    return std::exp(-0.5 * mahalanobis_sq(state, {0.0, 0.0}));
}

double w_statistic(const ConjunctionState& state) {
    encounter::validate(state);
    const EigenPair2 eig = conditioned_eig(state.cov, nullptr);
    return w_statistic_eig(state, eig);
}

double p_obs_lr(const ConjunctionState& state, int ndof) {
    return 1.0 - numerics::chi2_cdf(w_statistic(state), ndof);
}

MlResult ml_ci_pval(const ConjunctionState& state, double alpha, int ndof) {
    encounter::validate(state);
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("ml_ci_pval: alpha must be in (0, 1)");

    MlResult out;
    const EigenPair2 eig = conditioned_eig(state.cov, &out.conditioned);
    const double hbr = state.hbr;

    const double k = std::sqrt(numerics::chi2_inv(1.0 - alpha, ndof));
    double dmin = ellipse_extreme_distance(state.x, eig, k, /*want_max=*/false);
    const double dmax = ellipse_extreme_distance(state.x, eig, k, /*want_max=*/true);
    if (mahalanobis_sq_eig(eig, state.x, {0.0, 0.0}) <= k * k) dmin = 0.0;
    out.ci = {dmin, dmax, 1.0 - alpha, ndof};
    out.z_bounds = {k, k};

    const double dx = state.x.norm();
    const auto min_at = [&](double z) {
        return ellipse_extreme_distance(state.x, eig, z, /*want_max=*/false);
    };
    const auto max_at = [&](double z) {
        return ellipse_extreme_distance(state.x, eig, z, /*want_max=*/true);
    };

    double z_p;
    if (dmin == hbr) {
        z_p = -k;
    } else if (dmax == hbr) {
        z_p = k;
    } else if (dx == hbr) {
        z_p = 0.0;
    } else if (min_at(kKmax) > hbr) {
        z_p = -std::numeric_limits<double>::infinity();
    } else if (dx < hbr) {
        if (max_at(kKmax) < hbr) {
            // Even the widest ellipse stays inside the HBR circle.
            z_p = std::numeric_limits<double>::infinity();
        } else {
            z_p = numerics::find_root([&](double z) { return hbr - max_at(z); }, 0.0, kKmax,
                                      kZTol);
        }
    } else {
        z_p = -numerics::find_root([&](double z) { return hbr - min_at(z); }, 0.0, kKmax, kZTol);
    }
    out.z_p = z_p;

    if (std::isinf(z_p)) {
        out.p_obs = (z_p < 0.0) ? 0.0 : 1.0;
    } else if (z_p <= 0.0) {
        out.p_obs = 0.5 * (1.0 - numerics::chi2_cdf(z_p * z_p, ndof));
    } else {
        out.p_obs = 0.5 * (1.0 + numerics::chi2_cdf(z_p * z_p, ndof));
    }
    out.w_stat = w_statistic_eig(state, eig);
    return out;
}

ConfidenceInterval marginal_credible_interval(const ConjunctionState& state, double level,
                                              std::size_t n_samples) {
    encounter::validate(state);
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("marginal_credible_interval: level must be in (0, 1)");
    if (n_samples < 2)
        throw std::invalid_argument("marginal_credible_interval: need at least 2 samples");

    numerics::RngStream rng(0x6d6c6369ULL, 0);  // fixed stream: repeated calls are identical
    const numerics::Chol2 chol = numerics::cholesky(state.cov);
    std::vector<double> norms(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        norms[i] = rng.gaussian(state.x, chol).norm();
    std::sort(norms.begin(), norms.end());

    const auto quantile = [&](double p) {
        const double pos = p * static_cast<double>(n_samples - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        if (i + 1 >= n_samples) return norms.back();
        const double frac = pos - static_cast<double>(i);
        return norms[i] * (1.0 - frac) + norms[i + 1] * frac;
    };
    return {quantile(0.5 * (1.0 - level)), quantile(0.5 * (1.0 + level)), level, 2};
}

}  // namespace conjassess::inference
