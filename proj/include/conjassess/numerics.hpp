#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

namespace conjassess::numerics {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    double norm() const { return std::hypot(x, y); }
    double norm_sq() const { return x * x + y * y; }
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

/// Symmetric 2x2 matrix stored as its three distinct entries (m^2 in this codebase).
struct SymMat2 {
    double d11 = 0.0;
    double d12 = 0.0;
    double d22 = 0.0;

    double trace() const { return d11 + d22; }
    double det() const { return d11 * d22 - d12 * d12; }
    bool finite() const {
        return std::isfinite(d11) && std::isfinite(d12) && std::isfinite(d22);
    }
    bool positive_definite() const { return finite() && d11 > 0.0 && det() > 0.0; }

    Vec2 mul(Vec2 v) const { return {d11 * v.x + d12 * v.y, d12 * v.x + d22 * v.y}; }
    SymMat2 scaled(double s) const { return {s * d11, s * d12, s * d22}; }

    static SymMat2 isotropic(double variance) { return {variance, 0.0, variance}; }
    static SymMat2 diagonal(double v1, double v2) { return {v1, 0.0, v2}; }
};

/// Throws std::invalid_argument if m is not finite and positive definite.
void require_pd(const SymMat2& m, const char* where);

/// R(angle) * m * R(angle)^T.
SymMat2 rotate_cov(const SymMat2& m, double angle);

/// x^T m^{-1} x via the cofactor inverse. Requires PD input.
double inv_quad_form(const SymMat2& m, Vec2 v);

struct EigenPair2 {
    double lambda1 = 0.0;  // ascending: lambda1 <= lambda2
    double lambda2 = 0.0;
    Vec2 v1;
    Vec2 v2;
};

/// Closed-form eigendecomposition of a symmetric 2x2 matrix, eigenvalues ascending,
/// eigenvectors orthonormal (sign fixed so the largest component is positive).
EigenPair2 eig_sym2(const SymMat2& m);

/// Chi-square CDF restricted to 1 or 2 degrees of freedom.
/// ndof = 2: 1 - exp(-w/2); ndof = 1: erf(sqrt(w/2)).
double chi2_cdf(double w, int ndof);

/// Inverse of chi2_cdf on p in [0, 1).
double chi2_inv(double p, int ndof);

struct ScalarMin {
    double x = 0.0;
    double f = 0.0;
};

/// Bounded local minimization on [lo, hi] (Brent: golden section with
/// parabolic interpolation), absolute tolerance on the abscissa.
/// A non-finite objective value raises std::runtime_error naming the abscissa.
ScalarMin minimize_scalar(const std::function<double(double)>& f, double lo, double hi,
                          double xtol);

/// Global minimum of a periodic function over [0, period): multi-start
/// minimize_scalar from `starts` equal subintervals, keeping the best.
ScalarMin minimize_periodic(const std::function<double(double)>& f, double period,
                            int starts, double xtol);

/// Bracketed root of f on [lo, hi]: bisection with secant acceleration,
/// deterministic. Requires a sign change; throws std::runtime_error carrying
/// the bracket endpoints otherwise.
double find_root(const std::function<double(double)>& f, double lo, double hi, double xtol);

inline constexpr double kDefaultDiskRelTol = 1e-9;

/// Mass of the bivariate Gaussian N(center, cov) inside the disk of the given
/// radius centered at the origin. Polar tensor quadrature (Gauss-Legendre in
/// radius x trapezoid in angle) with doubling refinement to rel_tol.
double gauss_disk_quadrature(Vec2 center, const SymMat2& cov, double radius,
                             double rel_tol = kDefaultDiskRelTol);

/// Lower-triangular Cholesky factor of a PD SymMat2.
struct Chol2 {
    double l11 = 0.0;
    double l21 = 0.0;
    double l22 = 0.0;
};
Chol2 cholesky(const SymMat2& m);

/// Deterministic, splittable random stream: identical (master_seed, stream_id)
/// yields an identical sequence on every run and thread schedule; distinct
/// stream ids give statistically independent sequences.
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    double uniform();   // [0, 1)
    double normal();    // standard normal (polar method)
    Vec2 normal2() { return {normal(), normal()}; }

    /// mean + L z with L the Cholesky factor of cov.
    Vec2 gaussian(Vec2 mean, const SymMat2& cov);
    Vec2 gaussian(Vec2 mean, const Chol2& chol);

  private:
    std::array<std::uint64_t, 4> s_{};
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace conjassess::numerics
