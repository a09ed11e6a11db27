#include "conjassess/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "conjassess/pc.hpp"

namespace conjassess::experiments {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDismissalPc = 1e-4;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    if (threads < 1) threads = 1;
    const std::size_t workers = std::min<std::size_t>(threads, std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mu;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = n * w / workers;
        const std::size_t hi = n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::scoped_lock lock(error_mu);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

McSummary zero_miss_experiment(double sigma, double hbr, long long n, std::uint64_t seed,
                               int threads) {
    if (!(sigma > 0.0) || !(hbr > 0.0) || n <= 0)
        throw std::invalid_argument("zero_miss_experiment: requires sigma, hbr > 0 and n > 0");
    const SymMat2 cov = SymMat2::isotropic(sigma * sigma);

    std::vector<unsigned char> miss_flags(n), pc_flags(n);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        RngStream rng(seed, i);
        const Vec2 x{sigma * rng.normal(), sigma * rng.normal()};
        miss_flags[i] = x.norm() > hbr ? 1 : 0;
        const double p = pc::pc_hat({x, cov, hbr});
        pc_flags[i] = p < kDismissalPc ? 1 : 0;
    });

    McSummary out;
    out.n = n;
    long long miss_count = 0, pc_count = 0;
    for (long long i = 0; i < n; ++i) {
        miss_count += miss_flags[i];
        pc_count += pc_flags[i];
    }
    out.miss_gt_hbr_frac = static_cast<double>(miss_count) / static_cast<double>(n);
    out.pc_below_1e4_frac = static_cast<double>(pc_count) / static_cast<double>(n);
    return out;
}

McSummary mdr_dof_experiment(double psi0, const SymMat2& cov, double hbr, double alpha,
                             int ndof, long long n, std::uint64_t seed, int threads) {
    numerics::require_pd(cov, "mdr_dof_experiment");
    if (!(psi0 >= 0.0) || !(hbr >= 0.0) || n <= 0)
        throw std::invalid_argument("mdr_dof_experiment: bad geometry or n");
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::invalid_argument("mdr_dof_experiment: alpha must lie in [0, 1)");
    if (ndof != 1 && ndof != 2)
        throw std::invalid_argument("mdr_dof_experiment: ndof must be 1 or 2");

    const numerics::Chol2 chol = numerics::cholesky(cov);
    std::vector<unsigned char> dismissed(n);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        RngStream rng(seed, i);
        const double ang = kTwoPi * rng.uniform();
        const Vec2 xi{psi0 * std::cos(ang), psi0 * std::sin(ang)};
        const Vec2 x = rng.gaussian(xi, chol);
        const ConjunctionState state{x, cov, hbr};
        const double w = inference::w_statistic(state);
        double p;
        if (ndof == 2) {
            p = 1.0 - numerics::chi2_cdf(w, 2);
        } else if (x.norm() > hbr) {
            // One-sided tail of the signed root, the ellipse-touch convention.
            p = 0.5 * (1.0 - numerics::chi2_cdf(w, 1));
        } else {
            p = 1.0;
        }
        dismissed[i] = (alpha > 0.0 && p < alpha) ? 1 : 0;
    });

    McSummary out;
    out.n = n;
    out.alpha = alpha;
    out.ndof = ndof;
    long long count = 0;
    for (long long i = 0; i < n; ++i) count += dismissed[i];
    out.empirical_mdr = static_cast<double>(count) / static_cast<double>(n);
    return out;
}

LabeledCase synth_hit(const ConjunctionState& base, RngStream& rng) {
    encounter::validate(base);
    LabeledCase out;
    out.truth.xi = {0.0, 0.0};
    out.state = {rng.gaussian(out.truth.xi, base.cov), base.cov, base.hbr};
    out.label = Label::Hit;
    return out;
}

LabeledCase synth_miss(const ConjunctionState& base, double s, RngStream& rng) {
    encounter::validate(base);
    if (!(s > 0.0 && s <= 1.0))
        throw std::invalid_argument("synth_miss: shrinkage must lie in (0, 1]");
    const double orig_norm = base.x.norm();
    if (orig_norm == 0.0)
        throw std::invalid_argument("synth_miss: original miss vector has no direction");

    Vec2 xi = s * base.x;
    const double norm = xi.norm();
    if (norm <= base.hbr) {
        // Rescaling clamp, pushed strictly outside the circle.
        const double target = base.hbr * (1.0 + 1e-9);
        xi = (target / norm) * xi;
    }
    LabeledCase out;
    out.truth.xi = xi;
    out.state = {rng.gaussian(xi, base.cov), base.cov, base.hbr};
    out.label = Label::Miss;
    return out;
}

std::vector<RocPoint> roc_curve(const std::vector<LabeledCase>& cases,
                                const std::function<double(const ConjunctionState&)>& score,
                                std::vector<double> thresholds) {
    std::vector<Label> labels(cases.size());
    std::vector<double> scores(cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) {
        labels[i] = cases[i].label;
        scores[i] = score(cases[i].state);
    }
    return roc_curve(labels, scores, std::move(thresholds));
}

std::vector<RocPoint> roc_curve(const std::vector<Label>& labels,
                                const std::vector<double>& scores,
                                std::vector<double> thresholds) {
    if (labels.size() != scores.size())
        throw std::invalid_argument("roc_curve: labels and scores differ in length");
    std::vector<double> hit_scores, miss_scores;
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] == Label::Hit ? hit_scores : miss_scores).push_back(scores[i]);
    if (hit_scores.empty() || miss_scores.empty())
        throw std::invalid_argument("roc_curve: need at least one Hit and one Miss case");
    std::sort(hit_scores.begin(), hit_scores.end());
    std::sort(miss_scores.begin(), miss_scores.end());
    std::sort(thresholds.begin(), thresholds.end());

    const auto frac_below = [](const std::vector<double>& v, double t) {
        const auto it = std::lower_bound(v.begin(), v.end(), t);
        return static_cast<double>(it - v.begin()) / static_cast<double>(v.size());
    };
    std::vector<RocPoint> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) {
        RocPoint pt;
        pt.threshold = t;
        pt.mdr = frac_below(hit_scores, t);
        pt.far = 1.0 - frac_below(miss_scores, t);
        out.push_back(pt);
    }
    return out;
}

namespace {

/// Best detection (1 - FAR) available from `curve` at missed-detection budget
/// `mdr`; 0 when no operating point fits the budget.
double detection_at(const std::vector<RocPoint>& curve, double mdr) {
    double best = 0.0;
    for (const RocPoint& pt : curve)
        if (pt.mdr <= mdr) best = std::max(best, 1.0 - pt.far);
    return best;
}

}  // namespace

Dominance dominance_check(const std::vector<RocPoint>& curve_a,
                          const std::vector<RocPoint>& curve_b, double slack) {
    std::vector<double> grid;
    grid.reserve(curve_a.size() + curve_b.size());
    for (const RocPoint& pt : curve_a) grid.push_back(pt.mdr);
    for (const RocPoint& pt : curve_b) grid.push_back(pt.mdr);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    Dominance out;
    for (double m : grid) {
        const double gap = detection_at(curve_b, m) - detection_at(curve_a, m);
        out.max_violation = std::max(out.max_violation, gap);
    }
    out.dominant = out.max_violation <= slack;
    return out;
}

std::vector<RotSensRow> rotation_sensitivity(const ConjunctionState& state,
                                             const std::vector<double>& angles, double alpha,
                                             int ndof) {
    encounter::validate(state);
    std::vector<RotSensRow> out;
    out.reserve(angles.size());
    for (double ang : angles) {
        const ConjunctionState rotated{state.x, numerics::rotate_cov(state.cov, ang),
                                       state.hbr};
        RotSensRow row;
        row.angle = ang;
        row.pc_hat = pc::pc_hat(rotated);
        const inference::MlResult ml = inference::ml_ci_pval(rotated, alpha, ndof);
        row.p_obs = ml.p_obs;
        row.p_obs_lr = inference::p_obs_lr(rotated, ndof);
        row.ci_lower = ml.ci.lower;
        row.ci_upper = ml.ci.upper;
        if (!out.empty()) {
            const auto rel = [](double cur, double prev) {
                const double scale = std::max(std::abs(prev), 1e-300);
                return (cur - prev) / scale;
            };
            row.pc_rel_change = rel(row.pc_hat, out.back().pc_hat);
            row.p_obs_rel_change = rel(row.p_obs, out.back().p_obs);
        }
        out.push_back(row);
    }
    return out;
}

std::vector<ConjunctionState> synth_corpus(const CorpusParams& params, std::uint64_t seed) {
    if (params.n_events == 0) throw std::invalid_argument("synth_corpus: n_events must be > 0");
    const auto log_uniform = [](RngStream& rng, double lo, double hi) {
        return lo * std::exp(rng.uniform() * std::log(hi / lo));
    };
    std::vector<ConjunctionState> events(params.n_events);
    for (std::size_t i = 0; i < params.n_events; ++i) {
        RngStream rng(seed, 3 * i);
        const double miss = log_uniform(rng, params.miss_lo, params.miss_hi);
        const double dir = kTwoPi * rng.uniform();
        const double sd1 = log_uniform(rng, params.sd_lo, params.sd_hi);
        const double sd2 = log_uniform(rng, params.sd_lo, params.sd_hi);
        const double orient = kTwoPi * rng.uniform();
        const double hbr = params.hbr_lo + (params.hbr_hi - params.hbr_lo) * rng.uniform();
        events[i].x = {miss * std::cos(dir), miss * std::sin(dir)};
        events[i].cov = numerics::rotate_cov(SymMat2::diagonal(sd1 * sd1, sd2 * sd2), orient);
        events[i].hbr = hbr;
    }
    return events;
}

std::vector<LabeledCase> synth_cases(const std::vector<ConjunctionState>& events, double s,
                                     std::uint64_t seed) {
    std::vector<LabeledCase> cases(2 * events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        RngStream hit_rng(seed, 3 * i + 1);
        RngStream miss_rng(seed, 3 * i + 2);
        cases[2 * i] = synth_hit(events[i], hit_rng);
        cases[2 * i + 1] = synth_miss(events[i], s, miss_rng);
    }
    return cases;
}

double score_p_obs(const ConjunctionState& state, int ndof) {
    return inference::ml_ci_pval(state, 0.01, ndof).p_obs;
}

double score_pc_hat(const ConjunctionState& state) { return pc::pc_hat(state); }

RocPair roc_compare(const std::vector<LabeledCase>& cases, std::size_t p_obs_grid, int ndof,
                    int threads) {
    if (p_obs_grid < 2) throw std::invalid_argument("roc_compare: grid needs >= 2 thresholds");
    std::vector<Label> labels(cases.size());
    std::vector<double> p_scores(cases.size()), pc_scores(cases.size());
    for (std::size_t i = 0; i < cases.size(); ++i) labels[i] = cases[i].label;
    parallel_for(cases.size(), threads, [&](std::size_t i) {
        p_scores[i] = score_p_obs(cases[i].state, ndof);
        pc_scores[i] = score_pc_hat(cases[i].state);
    });

    std::vector<double> grid(p_obs_grid);
    for (std::size_t i = 0; i < p_obs_grid; ++i)
        grid[i] = static_cast<double>(i) / static_cast<double>(p_obs_grid - 1);

    std::vector<double> pc_thresholds = pc_scores;
    pc_thresholds.push_back(0.0);
    pc_thresholds.push_back(1.0);
    std::sort(pc_thresholds.begin(), pc_thresholds.end());
    pc_thresholds.erase(std::unique(pc_thresholds.begin(), pc_thresholds.end()),
                        pc_thresholds.end());

    RocPair out;
    out.p_obs_curve = roc_curve(labels, p_scores, grid);
    out.pc_hat_curve = roc_curve(labels, pc_scores, pc_thresholds);
    return out;
}

}  // namespace conjassess::experiments
