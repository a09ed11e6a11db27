#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "conjassess/encounter.hpp"
#include "conjassess/inference.hpp"
#include "conjassess/numerics.hpp"

namespace conjassess::experiments {

using encounter::ConjunctionState;
using encounter::TrueState;
using numerics::RngStream;
using numerics::SymMat2;
using numerics::Vec2;

enum class Label { Hit, Miss };

struct LabeledCase {
    ConjunctionState state;
    TrueState truth;
    Label label = Label::Miss;
};

struct RocPoint {
    double threshold = 0.0;
    double mdr = 0.0;  // fraction of Hits classified Miss (score < threshold)
    double far = 0.0;  // fraction of Misses classified Hit (score >= threshold)
};

struct McSummary {
    long long n = 0;
    double alpha = 0.0;
    int ndof = 0;
    double empirical_mdr = 0.0;
    double miss_gt_hbr_frac = 0.0;
    double pc_below_1e4_frac = 0.0;
};

/// Zero-true-miss study: n predictions x ~ N(0, sigma^2 I); reports the
/// fraction with miss distance beyond the HBR and the fraction whose pc_hat
/// falls below the 1e-4 dismissal threshold.
McSummary zero_miss_experiment(double sigma, double hbr, long long n, std::uint64_t seed,
                               int threads = 1);

/// Missed-detection-rate study with the true miss on the HBR circle:
/// simulates x ~ N(xi, cov) and dismisses when the dof-calibrated significance
/// falls below alpha. The two-dof path uses the chi-square tail of the
/// likelihood-ratio statistic; the one-dof path uses the one-sided tail of its
/// signed root (the ellipse-touch convention).
McSummary mdr_dof_experiment(double psi0, const SymMat2& cov, double hbr, double alpha,
                             int ndof, long long n, std::uint64_t seed, int threads = 1);

/// Hit synthesis: truth at the origin, observation drawn with the base
/// covariance.
LabeledCase synth_hit(const ConjunctionState& base, RngStream& rng);

/// Miss synthesis: truth = s * base.x, rescaled strictly outside the HBR
/// circle when the shrinkage lands inside it; observation adds covariance
/// noise. Throws std::invalid_argument when base.x gives no direction.
LabeledCase synth_miss(const ConjunctionState& base, double s, RngStream& rng);

/// ROC sweep: for each threshold t, classify Miss when score < t.
/// Points are returned sorted by threshold. Requires both classes present.
std::vector<RocPoint> roc_curve(const std::vector<LabeledCase>& cases,
                                const std::function<double(const ConjunctionState&)>& score,
                                std::vector<double> thresholds);

/// Same sweep on precomputed per-case scores (parallel callers score once).
std::vector<RocPoint> roc_curve(const std::vector<Label>& labels,
                                const std::vector<double>& scores,
                                std::vector<double> thresholds);

struct Dominance {
    bool dominant = false;
    double max_violation = 0.0;
};

/// Whether curve_a's detection (1 - FAR) is at least curve_b's at every
/// missed-detection budget, within slack; also reports the worst violation.
Dominance dominance_check(const std::vector<RocPoint>& curve_a,
                          const std::vector<RocPoint>& curve_b, double slack);

struct RotSensRow {
    double angle = 0.0;  // rad
    double pc_hat = 0.0;
    double p_obs = 0.0;     // ellipse-touch significance
    double p_obs_lr = 0.0;  // LR tail
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    double pc_rel_change = 0.0;     // vs the previous row
    double p_obs_rel_change = 0.0;
};

/// Rotates the covariance about the conjunction-plane origin keeping the
/// prediction fixed, and evaluates all metrics at each angle.
std::vector<RotSensRow> rotation_sensitivity(const ConjunctionState& state,
                                             const std::vector<double>& angles,
                                             double alpha = 0.01, int ndof = 2);

/// Synthetic "original event" generator standing in for an operational CDM
/// archive: miss direction uniform, miss distance log-uniform in
/// [miss_lo, miss_hi], per-axis sigmas log-uniform in [sd_lo, sd_hi] with a
/// uniform orientation, HBR uniform in [hbr_lo, hbr_hi].
struct CorpusParams {
    std::size_t n_events = 2000;
    double miss_lo = 100.0;    // m
    double miss_hi = 50000.0;  // m
    double sd_lo = 50.0;       // m
    double sd_hi = 5000.0;     // m
    double hbr_lo = 5.0;       // m
    double hbr_hi = 30.0;      // m
};

std::vector<ConjunctionState> synth_corpus(const CorpusParams& params, std::uint64_t seed);

/// One Hit and one Miss per event (balanced classes); deterministic per
/// (seed, event index) regardless of worker count.
std::vector<LabeledCase> synth_cases(const std::vector<ConjunctionState>& events, double s,
                                     std::uint64_t seed);

/// Scores for the ROC comparison: the ellipse-touch significance and pc_hat.
double score_p_obs(const ConjunctionState& state, int ndof = 2);
double score_pc_hat(const ConjunctionState& state);

/// ROC curves for both scores on a labeled corpus: p_obs swept on a uniform
/// threshold grid in [0, 1], pc_hat on its observed score values.
struct RocPair {
    std::vector<RocPoint> p_obs_curve;
    std::vector<RocPoint> pc_hat_curve;
};
RocPair roc_compare(const std::vector<LabeledCase>& cases, std::size_t p_obs_grid = 2001,
                    int ndof = 2, int threads = 1);

/// Deterministic helper: splits [0, n) across threads, each index writing only
/// its own slot of any output the body captures.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace conjassess::experiments
