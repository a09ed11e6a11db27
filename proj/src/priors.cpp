#include "conjassess/priors.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace conjassess::priors {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void validate(const ScreeningEllipse& slice) {
    if (!(slice.semi_a > 0.0) || !(slice.semi_b > 0.0) || !std::isfinite(slice.semi_a) ||
        !std::isfinite(slice.semi_b) || !std::isfinite(slice.rotation) ||
        !std::isfinite(slice.center.x) || !std::isfinite(slice.center.y))
        throw std::invalid_argument("ScreeningEllipse: semi-axes must be positive and finite");
}

double ellipse_area(const ScreeningEllipse& slice) {
    validate(slice);
    return kPi * slice.semi_a * slice.semi_b;
}

double prior_hit_probability(double hbr, const ScreeningEllipse& slice) {
    validate(slice);
    if (!(hbr >= 0.0) || !std::isfinite(hbr))
        throw std::invalid_argument("prior_hit_probability: hbr must be finite, non-negative");
    if (hbr > std::min(slice.semi_a, slice.semi_b))
        throw std::invalid_argument(
            "prior_hit_probability: hbr exceeds the smallest slice semi-axis; the uniform-prior "
            "area ratio does not apply");
    return hbr * hbr / (slice.semi_a * slice.semi_b);
}

double calibrated_pvalue_threshold(double target_posterior_odds, const ScreeningEllipse& slice,
                                   double hbr) {
    if (!(target_posterior_odds > 0.0 && target_posterior_odds < 1.0))
        throw std::invalid_argument(
            "calibrated_pvalue_threshold: target odds must lie in (0, 1)");
    const double prior_hit = prior_hit_probability(hbr, slice);
    if (prior_hit == 0.0)
        throw std::invalid_argument("calibrated_pvalue_threshold: prior hit probability is zero");
    return std::min(1.0, target_posterior_odds / prior_hit);
}

double truncated_evidence(const ConjunctionState& state, const ScreeningEllipse& slice,
                          double rel_tol) {
    encounter::validate(state);
    validate(slice);
    // Map the slice to the unit disk: xi = center + R(rot) diag(a, b) u. The
    // Gaussian mass over the slice equals the mass of the mapped Gaussian over
    // the unit disk, so the disk quadrature engine applies directly.
    const double c = std::cos(slice.rotation), s = std::sin(slice.rotation);
    const Vec2 d = state.x - slice.center;
    const Vec2 mean{(c * d.x + s * d.y) / slice.semi_a, (-s * d.x + c * d.y) / slice.semi_b};

    // diag(1/a, 1/b) R^T cov R diag(1/a, 1/b)
    const SymMat2& m = state.cov;
    const double r11 = c * c * m.d11 + 2.0 * c * s * m.d12 + s * s * m.d22;
    const double r12 = c * s * (m.d22 - m.d11) + (c * c - s * s) * m.d12;
    const double r22 = s * s * m.d11 - 2.0 * c * s * m.d12 + c * c * m.d22;
    const SymMat2 cov_u{r11 / (slice.semi_a * slice.semi_a),
                        r12 / (slice.semi_a * slice.semi_b),
                        r22 / (slice.semi_b * slice.semi_b)};

    const double mass = numerics::gauss_disk_quadrature(mean, cov_u, 1.0, rel_tol);
    return mass / ellipse_area(slice);
}

double untruncated_evidence(const ScreeningEllipse& slice) { return 1.0 / ellipse_area(slice); }

GammaMissPrior eb_fit(std::span<const ConjunctionSample> samples, double d_floor,
                      EbDiagnostics* diag) {
    struct KahanSum {
        double sum = 0.0, carry = 0.0;
        void add(double v) {
            const double y = v - carry;
            const double t = sum + y;
            carry = (t - sum) - y;
            sum = t;
        }
    };
    KahanSum sum_t, sum_t2, sum_a, sum_a2, sum_b2;
    std::size_t used = 0, excluded = 0;
    for (const ConjunctionSample& smp : samples) {
        if (!(smp.d1 > 0.0) || !(smp.d2 > 0.0))
            throw std::invalid_argument("eb_fit: axis standard deviations must be positive");
        if (smp.d1 < d_floor || smp.d2 < d_floor) {
            ++excluded;
            continue;
        }
        const double t = (smp.x1 / smp.d1) * (smp.x1 / smp.d1) +
                         (smp.x2 / smp.d2) * (smp.x2 / smp.d2);
        const double a = 1.0 / (smp.d1 * smp.d1) + 1.0 / (smp.d2 * smp.d2);
        const double b = 1.0 / (smp.d1 * smp.d1) - 1.0 / (smp.d2 * smp.d2);
        sum_t.add(t);
        sum_t2.add(t * t);
        sum_a.add(a);
        sum_a2.add(a * a);
        sum_b2.add(b * b);
        ++used;
    }
    if (used < 2)
        throw std::invalid_argument("eb_fit: need at least 2 usable samples, have " +
                                    std::to_string(used));

    const double n = static_cast<double>(used);
    const double m1 = sum_t.sum / n;
    const double m2 = sum_t2.sum / n;
    const double mean_a = sum_a.sum / n;
    const double mean_a2 = sum_a2.sum / n;
    const double mean_b2 = sum_b2.sum / n;

    const double e_phi = 2.0 * (m1 - 2.0) / mean_a;
    const double e_phi2 = 4.0 * (m2 - 8.0 - 4.0 * e_phi * mean_a) / (mean_a2 + 0.5 * mean_b2);
    if (diag) {
        diag->n_used = used;
        diag->n_excluded = excluded;
        diag->m1 = m1;
        diag->m2 = m2;
        diag->mean_a = mean_a;
        diag->mean_a2 = mean_a2;
        diag->mean_b2 = mean_b2;
        diag->e_phi = e_phi;
        diag->e_phi2 = e_phi2;
    }

    const auto infeasible = [&](const char* what) {
        std::ostringstream os;
        os << "eb_fit: moment estimates admit no gamma prior (" << what << "): m1 = " << m1
           << ", m2 = " << m2 << ", E(phi) = " << e_phi << ", E(phi^2) = " << e_phi2;
        throw std::runtime_error(os.str());
    };
    if (!(e_phi > 0.0)) infeasible("implied E(phi) <= 0");
    if (!(e_phi2 > 0.0)) infeasible("implied E(phi^2) <= 0");
    const double var_phi = e_phi2 - e_phi * e_phi;
    if (!(var_phi > 0.0)) infeasible("implied Var(phi) <= 0");

    GammaMissPrior prior;
    prior.b = e_phi / var_phi;
    prior.a = prior.b * e_phi;
    return prior;
}

double noncentrality(double phi, double lambda_angle, double d1, double d2) {
    if (!(phi >= 0.0) || !(d1 > 0.0) || !(d2 > 0.0))
        throw std::invalid_argument("noncentrality: requires phi >= 0 and d1, d2 > 0");
    const double inv1 = 1.0 / (d1 * d1), inv2 = 1.0 / (d2 * d2);
    return 0.5 * phi * ((inv1 + inv2) + (inv1 - inv2) * std::cos(2.0 * lambda_angle));
}

double gamma_prior_density(const GammaMissPrior& prior, double phi) {
    if (!(prior.a > 0.0) || !(prior.b > 0.0))
        throw std::invalid_argument("gamma_prior_density: requires a > 0 and b > 0");
    if (phi < 0.0) throw std::invalid_argument("gamma_prior_density: phi must be non-negative");
    if (phi == 0.0) {
        if (prior.a < 1.0) return std::numeric_limits<double>::infinity();  // pole at the origin
        if (prior.a == 1.0) return prior.b / kTwoPi;
        return 0.0;
    }
    const double log_density = prior.a * std::log(prior.b) - std::lgamma(prior.a) +
                               (prior.a - 1.0) * std::log(phi) - prior.b * phi;
    return std::exp(log_density) / kTwoPi;
}

std::vector<ConjunctionSample> read_samples_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("sample CSV: empty input");
    // Tolerate a UTF-8 BOM and trailing CR.
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "event_id,x1_m,x2_m,d1_m,d2_m")
        throw std::invalid_argument(
            "sample CSV: expected header 'event_id,x1_m,x2_m,d1_m,d2_m', got '" + line + "'");

    std::vector<ConjunctionSample> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        ConjunctionSample smp;
        double* const slots[4] = {&smp.x1, &smp.x2, &smp.d1, &smp.d2};
        if (!std::getline(ls, field, ','))
            throw std::invalid_argument("sample CSV line " + std::to_string(line_no) +
                                        ": missing event_id");
        for (double* slot : slots) {
            if (!std::getline(ls, field, ','))
                throw std::invalid_argument("sample CSV line " + std::to_string(line_no) +
                                            ": expected 5 fields");
            try {
                size_t pos = 0;
                *slot = std::stod(field, &pos);
                if (pos != field.size()) throw std::invalid_argument(field);
            } catch (const std::exception&) {
                throw std::invalid_argument("sample CSV line " + std::to_string(line_no) +
                                            ": cannot parse number '" + field + "'");
            }
        }
        out.push_back(smp);
    }
    return out;
}

}  // namespace conjassess::priors
