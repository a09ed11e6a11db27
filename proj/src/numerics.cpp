#include "conjassess/numerics.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace conjassess::numerics {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

[[noreturn]] void fail_invalid(const std::string& msg) { throw std::invalid_argument(msg); }
[[noreturn]] void fail_numeric(const std::string& msg) { throw std::runtime_error(msg); }

}  // namespace

void require_pd(const SymMat2& m, const char* where) {
    if (!m.finite())
        fail_invalid(std::string(where) + ": covariance has non-finite entries");
    if (!(m.d11 > 0.0 && m.det() > 0.0))
        fail_invalid(std::string(where) + ": covariance is not positive definite");
}

SymMat2 rotate_cov(const SymMat2& m, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    // R [d11 d12; d12 d22] R^T with R = [c -s; s c]
    const double a = m.d11, b = m.d12, d = m.d22;
    return {c * c * a - 2.0 * c * s * b + s * s * d,
            c * s * (a - d) + (c * c - s * s) * b,
            s * s * a + 2.0 * c * s * b + c * c * d};
}

double inv_quad_form(const SymMat2& m, Vec2 v) {
    require_pd(m, "inv_quad_form");
    const double det = m.det();
    return (m.d22 * v.x * v.x - 2.0 * m.d12 * v.x * v.y + m.d11 * v.y * v.y) / det;
}

EigenPair2 eig_sym2(const SymMat2& m) {
    if (!m.finite()) fail_invalid("eig_sym2: non-finite entries");
    const double half_tr = 0.5 * (m.d11 + m.d22);
    const double disc = std::hypot(0.5 * (m.d11 - m.d22), m.d12);
    EigenPair2 out;
    out.lambda1 = half_tr - disc;
    out.lambda2 = half_tr + disc;

    // Eigenvector for the larger eigenvalue: take the larger of the two
    // cofactor candidates, falling back to (0,1) for isotropic input.
    Vec2 cand1{m.d12, out.lambda2 - m.d11};
    Vec2 cand2{out.lambda2 - m.d22, m.d12};
    Vec2 v2 = (cand1.norm_sq() >= cand2.norm_sq()) ? cand1 : cand2;
    double n = v2.norm();
    if (n == 0.0) v2 = {0.0, 1.0};
    else v2 = (1.0 / n) * v2;
    Vec2 v1{-v2.y, v2.x};

    auto fix_sign = [](Vec2 v) {
        const bool flip = std::abs(v.x) >= std::abs(v.y) ? (v.x < 0.0) : (v.y < 0.0);
        return flip ? Vec2{-v.x, -v.y} : v;
    };
    out.v1 = fix_sign(v1);
    out.v2 = fix_sign(v2);
    return out;
}

namespace {

// erf^{-1}(p) for p in [0, 1): Winitzki seed polished by Newton; the upper
// tail solves erfc(x) = 1-p to avoid cancellation.
double erf_inv(double p) {
    if (p == 0.0) return 0.0;
    const double q = 1.0 - p;
    const double log1mp2 = std::log(q * (1.0 + p));  // log(1 - p^2)
    const double aw = 0.147;
    const double u = 2.0 / (kPi * aw) + 0.5 * log1mp2;
    double x = std::sqrt(std::sqrt(u * u - log1mp2 / aw) - u);
    const double two_over_sqrt_pi = 2.0 / std::sqrt(kPi);
    for (int it = 0; it < 60; ++it) {
        const double resid = (p < 0.9) ? (std::erf(x) - p) : (q - std::erfc(x));
        const double deriv = two_over_sqrt_pi * std::exp(-x * x);
        if (deriv == 0.0) break;
        const double step = resid / deriv;
        x -= step;
        if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

void check_ndof(int ndof, const char* where) {
    if (ndof != 1 && ndof != 2)
        fail_invalid(std::string(where) + ": ndof must be 1 or 2, got " + std::to_string(ndof));
}

}  // namespace

double chi2_cdf(double w, int ndof) {
    check_ndof(ndof, "chi2_cdf");
    if (!(std::isfinite(w)) || w < 0.0)
        fail_invalid("chi2_cdf: w must be finite and non-negative");
    if (ndof == 2) return -std::expm1(-0.5 * w);
    return std::erf(std::sqrt(0.5 * w));
}

double chi2_inv(double p, int ndof) {
    check_ndof(ndof, "chi2_inv");
    if (!(p >= 0.0 && p < 1.0))
        fail_invalid("chi2_inv: p must lie in [0, 1)");
    if (ndof == 2) return -2.0 * std::log1p(-p);
    const double x = erf_inv(p);
    return 2.0 * x * x;
}

ScalarMin minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                          double xtol) {
    if (!(lo < hi)) fail_invalid("minimize_scalar: requires lo < hi");
    const auto eval = [&](double t) {
        const double v = f(t);
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "minimize_scalar: non-finite objective value at t = " << t;
            fail_numeric(os.str());
        }
        return v;
    };

    constexpr double cgold = 0.3819660112501051;
    double a = lo, b = hi;
    double x = a + cgold * (b - a), w = x, v = x;
    double fx = eval(x), fw = fx, fv = fx;
    double d = 0.0, e = 0.0;

    for (int iter = 0; iter < 200; ++iter) {
        const double xm = 0.5 * (a + b);
        const double tol1 = std::max(xtol, 1e-15 * std::abs(x));
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) break;

        bool golden = true;
        if (std::abs(e) > tol1) {
            // Parabolic fit through (x, w, v).
            const double r = (x - w) * (fx - fv);
            double qd = (x - v) * (fx - fw);
            double pn = (x - v) * qd - (x - w) * r;
            qd = 2.0 * (qd - r);
            if (qd > 0.0) pn = -pn;
            qd = std::abs(qd);
            const double etemp = e;
            e = d;
            if (std::abs(pn) < std::abs(0.5 * qd * etemp) && pn > qd * (a - x) &&
                pn < qd * (b - x)) {
                d = pn / qd;
                const double u = x + d;
                if (u - a < tol2 || b - u < tol2) d = (xm >= x) ? tol1 : -tol1;
                golden = false;
            }
        }
        if (golden) {
            e = (x >= xm) ? (a - x) : (b - x);
            d = cgold * e;
        }
        const double u = (std::abs(d) >= tol1) ? (x + d) : (x + ((d >= 0.0) ? tol1 : -tol1));
        const double fu = eval(u);
        if (fu <= fx) {
            if (u >= x) a = x; else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return {x, fx};
}

ScalarMin minimize_periodic(const std::function<double(double)>& f, double period,
                            int starts, double xtol) {
    if (!(period > 0.0) || starts < 1) fail_invalid("minimize_periodic: bad arguments");
    const double h = period / starts;
    ScalarMin best{0.0, f(0.0)};
    for (int i = 0; i < starts; ++i) {
        const double a = i * h, b = (i + 1) * h;
        const ScalarMin m = minimize_scalar(f, a, b, xtol);
        if (m.f < best.f) best = m;
        const double fb = f(b);
        if (fb < best.f) best = {b, fb};
    }
    return best;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double xtol) {
    if (!(lo < hi)) fail_invalid("find_root: requires lo < hi");
    const auto eval = [&](double t) {
        const double v = f(t);
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "find_root: non-finite value at t = " << t;
            fail_numeric(os.str());
        }
        return v;
    };
    double a = lo, b = hi;
    double fa = eval(a), fb = eval(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0.0) == (fb > 0.0)) {
        std::ostringstream os;
        os << "find_root: no sign change on bracket [" << a << ", " << b << "]: f(lo) = " << fa
           << ", f(hi) = " << fb;
        fail_numeric(os.str());
    }
    for (int iter = 0; iter < 400 && (b - a) > xtol; ++iter) {
        double c = 0.5 * (a + b);
        // Secant candidate on even iterations; midpoint keeps guaranteed halving.
        if ((iter & 1) == 0 && fb != fa) {
            const double s = b - fb * (b - a) / (fb - fa);
            if (s > a && s < b) c = s;
        }
        const double fc = eval(c);
        if (fc == 0.0) return c;
        if ((fc > 0.0) == (fa > 0.0)) {
            a = c; fa = fc;
        } else {
            b = c; fb = fc;
        }
    }
    return 0.5 * (a + b);
}

namespace {

struct GaussLegendre {
    std::vector<double> x;  // nodes on [-1, 1]
    std::vector<double> w;
};

GaussLegendre compute_gauss_legendre(int n) {
    GaussLegendre g;
    g.x.resize(n);
    g.w.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15) break;
        }
        g.x[i] = -z;
        g.x[n - 1 - i] = z;
        g.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        g.w[n - 1 - i] = g.w[i];
    }
    return g;
}

const GaussLegendre& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, GaussLegendre> cache;
    std::scoped_lock lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

}  // namespace

double gauss_disk_quadrature(Vec2 center, const SymMat2& cov, double radius, double rel_tol) {
    require_pd(cov, "gauss_disk_quadrature");
    if (!(std::isfinite(radius)) || radius < 0.0)
        fail_invalid("gauss_disk_quadrature: radius must be finite and non-negative");
    if (!(rel_tol > 0.0)) fail_invalid("gauss_disk_quadrature: rel_tol must be positive");
    if (radius == 0.0) return 0.0;

    const double det = cov.det();
    const double inv11 = cov.d22 / det, inv12 = -cov.d12 / det, inv22 = cov.d11 / det;
    const double norm_const = 1.0 / (kTwoPi * std::sqrt(det));
    const auto density = [&](double px, double py) {
        const double dx = px - center.x, dy = py - center.y;
        const double q = inv11 * dx * dx + 2.0 * inv12 * dx * dy + inv22 * dy * dy;
        return norm_const * std::exp(-0.5 * q);
    };

    // Restrict the radial range to where the Gaussian carries mass: beyond
    // 45 sigma of the largest axis the integrand is below double underflow.
    const double half_tr = 0.5 * cov.trace();
    const double lam_max = half_tr + std::hypot(0.5 * (cov.d11 - cov.d22), cov.d12);
    const double sig_max = std::sqrt(lam_max);
    const double r_peak = std::clamp(center.norm(), 0.0, radius);
    const double r_lo = std::max(0.0, r_peak - 45.0 * sig_max);
    const double r_hi = std::min(radius, r_peak + 45.0 * sig_max);
    if (!(r_hi > r_lo)) return 0.0;

    const auto level_estimate = [&](int n_r) {
        const GaussLegendre& gl = gauss_legendre(n_r);
        const int n_theta = 2 * n_r;
        const double dtheta = kTwoPi / n_theta;
        const double mid = 0.5 * (r_lo + r_hi), half = 0.5 * (r_hi - r_lo);
        double total = 0.0;
        for (int i = 0; i < n_r; ++i) {
            const double r = mid + half * gl.x[i];
            double ring = 0.0;
            for (int j = 0; j < n_theta; ++j) {
                const double th = j * dtheta;
                ring += density(r * std::cos(th), r * std::sin(th));
            }
            total += gl.w[i] * half * r * ring * dtheta;
        }
        return total;
    };

    double prev2 = -1.0, prev = -1.0;
    double est = 0.0;
    double achieved = std::numeric_limits<double>::infinity();
    for (int n_r = 16; n_r <= 4096; n_r *= 2) {
        est = level_estimate(n_r);
        if (prev >= 0.0 && prev2 >= 0.0) {
            if (est == 0.0 && prev == 0.0 && prev2 == 0.0) return 0.0;
            const double scale = std::max({std::abs(est), std::abs(prev), 1e-300});
            const double d1 = std::abs(est - prev) / scale;
            const double d2 = std::abs(prev - prev2) / scale;
            achieved = std::max(d1, d2);
            if (achieved <= rel_tol) return std::clamp(est, 0.0, 1.0);
        }
        prev2 = prev;
        prev = est;
    }
    std::ostringstream os;
    os << "gauss_disk_quadrature: refinement did not converge (achieved relative change "
       << achieved << ", requested " << rel_tol << ")";
    fail_numeric(os.str());
}

Chol2 cholesky(const SymMat2& m) {
    require_pd(m, "cholesky");
    Chol2 c;
    c.l11 = std::sqrt(m.d11);
    c.l21 = m.d12 / c.l11;
    c.l22 = std::sqrt(m.d22 - c.l21 * c.l21);
    return c;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl64(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::uint64_t key = master_seed;
    const std::uint64_t mixed_stream = splitmix64(stream_id);
    key ^= mixed_stream;
    for (auto& word : s_) word = splitmix64(key);
}

std::uint64_t RngStream::next_u64() {
    // xoshiro256++
    const std::uint64_t result = rotl64(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl64(s_[3], 45);
    return result;
}

double RngStream::uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

double RngStream::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_normal_;
    }
    // Marsaglia polar method.
    for (;;) {
        const double u = 2.0 * uniform() - 1.0;
        const double v = 2.0 * uniform() - 1.0;
        const double s = u * u + v * v;
        if (s >= 1.0 || s == 0.0) continue;
        const double factor = std::sqrt(-2.0 * std::log(s) / s);
        cached_normal_ = v * factor;
        has_cached_ = true;
        return u * factor;
    }
}

Vec2 RngStream::gaussian(Vec2 mean, const SymMat2& cov) { return gaussian(mean, cholesky(cov)); }

Vec2 RngStream::gaussian(Vec2 mean, const Chol2& chol) {
    const double z1 = normal(), z2 = normal();
    return {mean.x + chol.l11 * z1, mean.y + chol.l21 * z1 + chol.l22 * z2};
}

}  // namespace conjassess::numerics
