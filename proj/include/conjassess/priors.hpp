#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "conjassess/encounter.hpp"
#include "conjassess/numerics.hpp"

namespace conjassess::priors {

using encounter::ConjunctionState;
using numerics::SymMat2;
using numerics::Vec2;

/// Conjunction-plane slice of the screening volume: support of the truncated
/// uniform prior.
struct ScreeningEllipse {
    double semi_a = 0.0;   // m
    double semi_b = 0.0;   // m
    double rotation = 0.0; // rad
    Vec2 center;           // m
};

void validate(const ScreeningEllipse& slice);

double ellipse_area(const ScreeningEllipse& slice);

/// Ratio of the HBR disk area to the slice area; requires hbr <= min semi-axis.
double prior_hit_probability(double hbr, const ScreeningEllipse& slice);

/// Significance threshold t with prior_hit * t ~ target posterior hit odds,
/// clamped into (0, 1].
double calibrated_pvalue_threshold(double target_posterior_odds, const ScreeningEllipse& slice,
                                   double hbr);

/// Evidence under the truncated uniform prior: (1/area) times the Gaussian
/// mass N(x, cov) inside the slice, by quadrature to rel_tol. Units m^-2.
double truncated_evidence(const ConjunctionState& state, const ScreeningEllipse& slice,
                          double rel_tol = 1e-9);

/// Evidence under the untruncated uniform prior of the same height: 1/area.
double untruncated_evidence(const ScreeningEllipse& slice);

/// Gamma prior on phi = psi^2 (shape a, rate b; b carries inverse squared
/// length in whatever length unit phi uses).
struct GammaMissPrior {
    double a = 0.0;
    double b = 0.0;
};

/// Fit reported for an operational conjunction population, with phi in km^2:
/// a pole at the origin, mean miss distance near 5.3 km, sd near 6 km. Not
/// recoverable from synthetic data; kept as a reference configuration.
inline constexpr GammaMissPrior kOperationalGammaFitKm2{0.23, 0.0036};

/// Per-event observation after diagonalization: components and axis standard
/// deviations, all in meters.
struct ConjunctionSample {
    double x1 = 0.0;
    double x2 = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

struct EbDiagnostics {
    std::size_t n_used = 0;
    std::size_t n_excluded = 0;  // below the d floor
    double m1 = 0.0;             // mean of t
    double m2 = 0.0;             // mean of t^2
    double mean_a = 0.0;         // mean of A_j
    double mean_a2 = 0.0;        // mean of A_j^2
    double mean_b2 = 0.0;        // mean of B_j^2
    double e_phi = 0.0;
    double e_phi2 = 0.0;
};

/// Moment-matching fit of the gamma prior from past conjunctions:
/// t_j = (x1/d1)^2 + (x2/d2)^2, E(t) = 2 + E(phi) Abar / 2,
/// E(t^2) = 8 + 4 E(phi) Abar + E(phi^2) (A2bar + B2bar/2) / 4.
/// Samples with either d below d_floor are excluded and counted.
/// Throws std::runtime_error (carrying the moment estimates) when the implied
/// moments admit no gamma distribution.
GammaMissPrior eb_fit(std::span<const ConjunctionSample> samples, double d_floor = 1.0,
                      EbDiagnostics* diag = nullptr);

/// Non-centrality of t for a miss at (phi, lambda) with axis sigmas (d1, d2):
/// (phi/2) {(1/d1^2 + 1/d2^2) + (1/d1^2 - 1/d2^2) cos 2 lambda}.
double noncentrality(double phi, double lambda_angle, double d1, double d2);

/// Joint density of (lambda, phi) under the prior: uniform angle times
/// gamma(a, b) in phi. Returns +inf at phi = 0 when a < 1 (pole).
double gamma_prior_density(const GammaMissPrior& prior, double phi);

/// CSV ingest with header `event_id,x1_m,x2_m,d1_m,d2_m`.
std::vector<ConjunctionSample> read_samples_csv(std::istream& in);

}  // namespace conjassess::priors
