#include "conjassess/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "conjassess/assessment.hpp"
#include "conjassess/experiments.hpp"
#include "conjassess/io.hpp"
#include "conjassess/priors.hpp"

namespace conjassess {

namespace {

using nlohmann::ordered_json;
using numerics::SymMat2;
using numerics::Vec2;

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct OutputSink {
    std::ostream* stream = nullptr;
    std::ofstream file;

    static OutputSink open(const std::string& path, std::ostream& fallback) {
        OutputSink sink;
        if (path.empty()) {
            sink.stream = &fallback;
            return sink;
        }
        sink.file.open(path, std::ios::binary);
        if (!sink.file)
            throw std::invalid_argument("cannot open output file: " + path);
        sink.stream = &sink.file;
        return sink;
    }
    std::ostream& out() { return *stream; }
};

/// Rows are flat ordered objects; CSV and JSON are two renderings of the same
/// table. Infinite values render as "inf"/"-inf" in both formats.
void emit_rows(const std::vector<ordered_json>& rows, const std::string& format,
               std::ostream& out) {
    if (rows.empty()) return;
    if (format == "json") {
        ordered_json arr = ordered_json::array();
        for (const auto& row : rows) {
            ordered_json clean = ordered_json::object();
            for (const auto& [key, value] : row.items()) {
                if (value.is_number_float() && !std::isfinite(value.get<double>()))
                    clean[key] = value.get<double>() > 0 ? "inf" : "-inf";
                else
                    clean[key] = value;
            }
            arr.push_back(std::move(clean));
        }
        out << arr.dump(2) << "\n";
        return;
    }
    bool first = true;
    for (const auto& [key, value] : rows.front().items()) {
        if (!first) out << ",";
        out << key;
        first = false;
        (void)value;
    }
    out << "\n";
    for (const auto& row : rows) {
        first = true;
        for (const auto& [key, value] : row.items()) {
            if (!first) out << ",";
            first = false;
            (void)key;
            if (value.is_number_float())
                out << io::g17(value.get<double>());
            else if (value.is_number_integer())
                out << value.get<long long>();
            else if (value.is_boolean())
                out << (value.get<bool>() ? 1 : 0);
            else
                out << value.get<std::string>();
        }
        out << "\n";
    }
}

SymMat2 parse_cov_flag(const std::vector<double>& entries) {
    if (entries.size() != 3)
        throw CLI::ValidationError("--cov", "expected three entries d11,d12,d22");
    return {entries[0], entries[1], entries[2]};
}

ordered_json assessment_row(const std::string& id, const AssessmentResult& r) {
    ordered_json row = ordered_json::object();
    row["event_id"] = id;
    row["pc_hat"] = r.pc_hat;
    row["p_obs"] = r.p_obs;
    row["p_obs_lr"] = r.p_obs_lr;
    row["ci_lower_m"] = r.ci.lower;
    row["ci_upper_m"] = r.ci.upper;
    row["ci_level"] = r.ci.level;
    row["z_ci"] = r.z_bounds[0];
    row["z_p"] = r.z_p;
    row["w_stat"] = r.w_stat;
    row["conditioned"] = r.conditioned;
    return row;
}

ordered_json mc_row(const experiments::McSummary& s) {
    ordered_json row = ordered_json::object();
    row["n"] = static_cast<long long>(s.n);
    row["alpha"] = s.alpha;
    row["ndof"] = s.ndof;
    row["empirical_mdr"] = s.empirical_mdr;
    row["miss_gt_hbr_frac"] = s.miss_gt_hbr_frac;
    row["pc_below_1e4_frac"] = s.pc_below_1e4_frac;
    return row;
}

}  // namespace

int cli_main(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Conjunction assessment: collision-probability estimate and miss-distance "
                 "inference (confidence intervals, significance probabilities, Bayesian "
                 "extensions, experiment harnesses)"};
    app.require_subcommand(1);

    // Common options, duplicated per subcommand so each -h is self-contained.
    std::string out_path;
    std::string format = "csv";
    std::uint64_t seed = 1;
    double alpha = 0.01;
    int ndof = 2;
    int threads = 1;

    const auto add_common = [&](CLI::App* cmd, bool with_stat_opts = true) {
        cmd->add_option("--out", out_path, "Output path (default stdout)");
        cmd->add_option("--format", format, "Output format")
            ->check(CLI::IsMember({"csv", "json"}));
        cmd->add_option("--seed", seed, "Master RNG seed");
        if (with_stat_opts) {
            cmd->add_option("--alpha", alpha, "Significance level")
                ->check(CLI::Range(1e-12, 1.0 - 1e-12));
            cmd->add_option("--ndof", ndof, "Degrees of freedom for the chi-square calibration")
                ->check(CLI::IsMember({1, 2}));
        }
        cmd->add_option("--threads", threads, "Worker threads (output is identical for any "
                                              "count)")
            ->check(CLI::PositiveNumber);
    };

    // assess
    std::string in_path;
    bool lenient = false;
    double x1 = 0.0, x2 = 0.0, hbr = 10.0;
    std::vector<double> cov_entries;
    CLI::App* assess_cmd =
        app.add_subcommand("assess", "Assess CDM records from a KVN file or one inline state");
    assess_cmd->add_option("--in", in_path, "KVN input file");
    assess_cmd->add_flag("--lenient", lenient, "Skip malformed KVN blocks with diagnostics");
    assess_cmd->add_option("--x1", x1, "Inline miss vector component (m)");
    assess_cmd->add_option("--x2", x2, "Inline miss vector component (m)");
    assess_cmd->add_option("--cov", cov_entries,
                           "Inline covariance d11,d12,d22 (m^2)")->delimiter(',');
    assess_cmd->add_option("--hbr", hbr, "Hard-body radius (m)");
    add_common(assess_cmd);

    // dilution
    double scale_lo = 0.05, scale_hi = 50.0;
    std::size_t n_scales = 50;
    CLI::App* dilution_cmd =
        app.add_subcommand("dilution", "Sweep a scalar covariance scale and tabulate "
                                       "pc_hat against both significance conventions");
    dilution_cmd->add_option("--x1", x1, "Miss vector component (m)");
    dilution_cmd->add_option("--x2", x2, "Miss vector component (m)");
    dilution_cmd->add_option("--cov", cov_entries, "Covariance d11,d12,d22 (m^2)")
        ->delimiter(',');
    dilution_cmd->add_option("--hbr", hbr, "Hard-body radius (m)");
    dilution_cmd->add_option("--scale-lo", scale_lo, "Smallest scale")->check(CLI::PositiveNumber);
    dilution_cmd->add_option("--scale-hi", scale_hi, "Largest scale")->check(CLI::PositiveNumber);
    dilution_cmd->add_option("--n-scales", n_scales, "Number of log-spaced scales");
    add_common(dilution_cmd);

    // roc
    std::size_t n_events = 2000;
    double shrinkage = 0.01;
    std::size_t grid = 2001;
    CLI::App* roc_cmd = app.add_subcommand(
        "roc", "Synthesize a balanced Hit/Miss corpus and emit ROC curves for both scores");
    roc_cmd->add_option("--n-events", n_events, "Number of synthetic events");
    roc_cmd->add_option("--s", shrinkage, "Miss shrinkage parameter in (0, 1]")
        ->check(CLI::Range(1e-12, 1.0));
    roc_cmd->add_option("--grid", grid, "Threshold grid size for the p_obs sweep");
    add_common(roc_cmd);

    // mc-zero-miss
    double sigma = 100.0;
    long long n_draws = 10000;
    CLI::App* zero_cmd = app.add_subcommand(
        "mc-zero-miss", "Zero-true-miss Monte Carlo: miss-distance and pc_hat dismissal "
                        "fractions");
    zero_cmd->add_option("--sigma", sigma, "Isotropic sigma (m)")->check(CLI::PositiveNumber);
    zero_cmd->add_option("--hbr", hbr, "Hard-body radius (m)")->check(CLI::PositiveNumber);
    zero_cmd->add_option("--n", n_draws, "Number of simulated predictions")
        ->check(CLI::PositiveNumber);
    add_common(zero_cmd);

    // mc-mdr
    double psi0 = -1.0;
    double mdr_sd = 10000.0;
    CLI::App* mdr_cmd = app.add_subcommand(
        "mc-mdr", "Missed-detection-rate study with the true miss on the HBR circle");
    mdr_cmd->add_option("--psi0", psi0, "True miss radius (m); defaults to --hbr");
    mdr_cmd->add_option("--sd", mdr_sd, "Circular sigma (m), used when --cov is absent")
        ->check(CLI::PositiveNumber);
    mdr_cmd->add_option("--cov", cov_entries, "Covariance d11,d12,d22 (m^2)")->delimiter(',');
    mdr_cmd->add_option("--hbr", hbr, "Hard-body radius (m)")->check(CLI::PositiveNumber);
    mdr_cmd->add_option("--n", n_draws, "Number of trials")->check(CLI::PositiveNumber);
    add_common(mdr_cmd);

    // prior-fit
    double d_floor = 1.0;
    CLI::App* fit_cmd = app.add_subcommand(
        "prior-fit", "Moment-matching gamma prior fit from a conjunction sample CSV");
    fit_cmd->add_option("--in", in_path, "Sample CSV (event_id,x1_m,x2_m,d1_m,d2_m)")
        ->required();
    fit_cmd->add_option("--d-floor", d_floor,
                        "Exclude samples with any axis sigma below this (m)");
    add_common(fit_cmd, /*with_stat_opts=*/false);

    // evidence
    double slice_a = 25000.0, slice_b = 25000.0, slice_rot_deg = 0.0;
    double slice_cx = 0.0, slice_cy = 0.0, rel_tol = 1e-9;
    CLI::App* ev_cmd = app.add_subcommand(
        "evidence", "Truncated-uniform-prior evidence for a state and screening slice");
    ev_cmd->add_option("--x1", x1, "Miss vector component (m)");
    ev_cmd->add_option("--x2", x2, "Miss vector component (m)");
    ev_cmd->add_option("--cov", cov_entries, "Covariance d11,d12,d22 (m^2)")->delimiter(',');
    ev_cmd->add_option("--slice-a", slice_a, "Slice semi-axis (m)")->check(CLI::PositiveNumber);
    ev_cmd->add_option("--slice-b", slice_b, "Slice semi-axis (m)")->check(CLI::PositiveNumber);
    ev_cmd->add_option("--slice-rot-deg", slice_rot_deg, "Slice rotation (deg)");
    ev_cmd->add_option("--slice-cx", slice_cx, "Slice center (m)");
    ev_cmd->add_option("--slice-cy", slice_cy, "Slice center (m)");
    ev_cmd->add_option("--rel-tol", rel_tol, "Quadrature relative tolerance")
        ->check(CLI::PositiveNumber);
    add_common(ev_cmd, /*with_stat_opts=*/false);

    // rot-sens
    std::vector<double> angles_deg{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    CLI::App* rot_cmd = app.add_subcommand(
        "rot-sens", "Sensitivity of all metrics to rotations of the covariance");
    rot_cmd->add_option("--x1", x1, "Miss vector component (m)");
    rot_cmd->add_option("--x2", x2, "Miss vector component (m)");
    rot_cmd->add_option("--cov", cov_entries, "Covariance d11,d12,d22 (m^2)")->delimiter(',');
    rot_cmd->add_option("--hbr", hbr, "Hard-body radius (m)");
    rot_cmd->add_option("--angles-deg", angles_deg, "Rotation angles (deg)")->delimiter(',');
    add_common(rot_cmd);

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        OutputSink sink = OutputSink::open(out_path, out);
        std::vector<ordered_json> rows;

        if (*assess_cmd) {
            if (!in_path.empty()) {
                std::ifstream in(in_path);
                if (!in) throw std::invalid_argument("cannot open input file: " + in_path);
                std::vector<std::string> diagnostics;
                const auto records = encounter::parse_cdm_kvn(in, lenient, &diagnostics);
                for (const std::string& d : diagnostics) err << "warning: " << d << "\n";
                for (const auto& rec : records) {
                    try {
                        const auto state = encounter::project_to_encounter_plane(rec);
                        rows.push_back(
                            assessment_row(rec.event_id, assess(state, alpha, ndof)));
                    } catch (const std::exception& e) {
                        err << "error: record " << rec.event_id << ": " << e.what() << "\n";
                        return 3;
                    }
                }
            } else {
                if (cov_entries.empty())
                    throw CLI::ValidationError("assess", "needs --in or --x1/--x2/--cov/--hbr");
                const encounter::ConjunctionState state{{x1, x2}, parse_cov_flag(cov_entries),
                                                        hbr};
                try {
                    rows.push_back(assessment_row("inline", assess(state, alpha, ndof)));
                } catch (const std::invalid_argument& e) {
                    err << "error: " << e.what() << "\n";
                    return 3;
                }
            }
        } else if (*dilution_cmd) {
            if (cov_entries.empty())
                throw CLI::ValidationError("dilution", "--cov is required");
            if (n_scales < 2 || !(scale_lo < scale_hi))
                throw CLI::ValidationError("dilution", "need --scale-lo < --scale-hi, >= 2 "
                                                       "scales");
            std::vector<double> scales(n_scales);
            const double ratio = std::log(scale_hi / scale_lo);
            for (std::size_t i = 0; i < n_scales; ++i)
                scales[i] = scale_lo * std::exp(ratio * static_cast<double>(i) /
                                                static_cast<double>(n_scales - 1));
            const encounter::ConjunctionState state{{x1, x2}, parse_cov_flag(cov_entries), hbr};
            for (const auto& pt : pc::dilution_curve(state, scales, ndof)) {
                ordered_json row = ordered_json::object();
                row["scale"] = pt.scale;
                row["pc_hat"] = pt.pc_hat;
                row["p_obs"] = pt.p_obs;
                row["p_obs_lr"] = pt.p_obs_lr;
                rows.push_back(std::move(row));
            }
        } else if (*roc_cmd) {
            experiments::CorpusParams params;
            params.n_events = n_events;
            const auto events = experiments::synth_corpus(params, seed);
            const auto cases = experiments::synth_cases(events, shrinkage, seed);
            const auto curves = experiments::roc_compare(cases, grid, ndof, threads);
            const auto emit_curve = [&](const char* name,
                                        const std::vector<experiments::RocPoint>& curve) {
                for (const auto& pt : curve) {
                    ordered_json row = ordered_json::object();
                    row["score_name"] = name;
                    row["threshold"] = pt.threshold;
                    row["mdr"] = pt.mdr;
                    row["far"] = pt.far;
                    rows.push_back(std::move(row));
                }
            };
            emit_curve("p_obs", curves.p_obs_curve);
            emit_curve("pc_hat", curves.pc_hat_curve);
        } else if (*zero_cmd) {
            rows.push_back(
                mc_row(experiments::zero_miss_experiment(sigma, hbr, n_draws, seed, threads)));
        } else if (*mdr_cmd) {
            const SymMat2 cov = cov_entries.empty() ? SymMat2::isotropic(mdr_sd * mdr_sd)
                                                    : parse_cov_flag(cov_entries);
            const double radius = psi0 < 0.0 ? hbr : psi0;
            rows.push_back(mc_row(experiments::mdr_dof_experiment(radius, cov, hbr, alpha, ndof,
                                                                  n_draws, seed, threads)));
        } else if (*fit_cmd) {
            std::ifstream in(in_path);
            if (!in) throw std::invalid_argument("cannot open input file: " + in_path);
            const auto samples = priors::read_samples_csv(in);
            priors::EbDiagnostics diag;
            const priors::GammaMissPrior prior = priors::eb_fit(samples, d_floor, &diag);
            ordered_json row = ordered_json::object();
            row["a"] = prior.a;
            row["b_per_m2"] = prior.b;
            row["b_per_km2"] = prior.b * 1e6;
            row["n_used"] = static_cast<long long>(diag.n_used);
            row["n_excluded"] = static_cast<long long>(diag.n_excluded);
            row["mean_t"] = diag.m1;
            row["mean_t2"] = diag.m2;
            rows.push_back(std::move(row));
        } else if (*ev_cmd) {
            if (cov_entries.empty())
                throw CLI::ValidationError("evidence", "--cov is required");
            const encounter::ConjunctionState state{{x1, x2}, parse_cov_flag(cov_entries), 0.0};
            const priors::ScreeningEllipse slice{slice_a, slice_b, slice_rot_deg * kDegToRad,
                                                 {slice_cx, slice_cy}};
            const double truncated = priors::truncated_evidence(state, slice, rel_tol);
            const double untruncated = priors::untruncated_evidence(slice);
            ordered_json row = ordered_json::object();
            row["evidence_truncated"] = truncated;
            row["evidence_untruncated"] = untruncated;
            row["ratio"] = truncated / untruncated;
            rows.push_back(std::move(row));
        } else if (*rot_cmd) {
            if (cov_entries.empty())
                throw CLI::ValidationError("rot-sens", "--cov is required");
            const encounter::ConjunctionState state{{x1, x2}, parse_cov_flag(cov_entries), hbr};
            std::vector<double> angles;
            angles.reserve(angles_deg.size());
            for (double a : angles_deg) angles.push_back(a * kDegToRad);
            for (const auto& row_data : experiments::rotation_sensitivity(state, angles, alpha,
                                                                          ndof)) {
                ordered_json row = ordered_json::object();
                row["angle_rad"] = row_data.angle;
                row["pc_hat"] = row_data.pc_hat;
                row["p_obs"] = row_data.p_obs;
                row["p_obs_lr"] = row_data.p_obs_lr;
                row["ci_lower_m"] = row_data.ci_lower;
                row["ci_upper_m"] = row_data.ci_upper;
                row["pc_rel_change"] = row_data.pc_rel_change;
                row["p_obs_rel_change"] = row_data.p_obs_rel_change;
                rows.push_back(std::move(row));
            }
        }

        emit_rows(rows, format, sink.out());
        sink.out().flush();
        return 0;
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace conjassess
