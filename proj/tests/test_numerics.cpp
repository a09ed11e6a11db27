#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "conjassess/numerics.hpp"
#include "test_util.hpp"

using namespace conjassess::numerics;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_CASE("chi2_cdf: pinned values") {
    CHECK(chi2_cdf(0.0, 2) == 0.0);
    // w = -2 ln(1e-4) = 18.42...
    const double w = -2.0 * std::log(1e-4);
    CHECK(chi2_cdf(w, 2) == doctest::Approx(0.9999).epsilon(1e-12));
    CHECK(w == doctest::Approx(18.42).epsilon(1e-3));

    // ndof = 1 at w = 1 against the independent series oracle for erf(sqrt(1/2)).
    const double oracle = testutil::erf_series(std::sqrt(0.5));
    CHECK(oracle == doctest::Approx(0.682689).epsilon(1e-6));
    CHECK(chi2_cdf(1.0, 1) == doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("chi2_cdf: domain errors and monotonicity") {
    CHECK_THROWS_AS(chi2_cdf(-1.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(chi2_cdf(1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(chi2_cdf(std::nan(""), 1), std::invalid_argument);
    for (int ndof : {1, 2}) {
        double prev = -1.0;
        for (double w = 0.0; w <= 60.0; w += 0.25) {
            const double c = chi2_cdf(w, ndof);
            CHECK(c >= prev);
            CHECK(c >= 0.0);
            CHECK(c < 1.0 + 1e-16);
            prev = c;
        }
    }
}

TEST_CASE("chi2_inv: pinned values") {
    CHECK(chi2_inv(0.0, 2) == 0.0);
    CHECK(chi2_inv(1.0 - 1e-4, 2) == doctest::Approx(18.42).epsilon(5e-4));
    // Inverse of the ndof = 1 example: p = erf(sqrt(1/2)) from the series oracle.
    CHECK(chi2_inv(testutil::erf_series(std::sqrt(0.5)), 1) ==
          doctest::Approx(1.0).epsilon(1e-6));
    CHECK_THROWS_AS(chi2_inv(1.0, 2), std::invalid_argument);
    CHECK_THROWS_AS(chi2_inv(-0.1, 1), std::invalid_argument);
}

TEST_CASE("chi2 cdf/inv round-trip to 1e-12 on a log-spaced grid") {
    std::vector<double> ps;
    for (double p = 1e-12; p < 0.6; p *= 3.1623) ps.push_back(p);
    for (double q = 1e-12; q < 0.6; q *= 3.1623) ps.push_back(1.0 - q);
    for (int ndof : {1, 2}) {
        for (double p : ps) {
            const double w = chi2_inv(p, ndof);
            CHECK(std::abs(chi2_cdf(w, ndof) - p) <= 1e-12);
        }
    }
}

TEST_CASE("eig_sym2: diagonal and hand-solved inputs") {
    const EigenPair2 d = eig_sym2(SymMat2::diagonal(4.0, 9.0));
    CHECK(d.lambda1 == doctest::Approx(4.0));
    CHECK(d.lambda2 == doctest::Approx(9.0));
    CHECK(d.v1.x == doctest::Approx(1.0));
    CHECK(d.v1.y == doctest::Approx(0.0));
    CHECK(d.v2.x == doctest::Approx(0.0));
    CHECK(d.v2.y == doctest::Approx(1.0));

    // [[5,3],[3,5]]: lambda = 2, 8 with eigenvectors (1,-1)/sqrt2 and (1,1)/sqrt2.
    const EigenPair2 e = eig_sym2({5.0, 3.0, 5.0});
    CHECK(e.lambda1 == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(e.lambda2 == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(std::abs(e.v1.x * e.v1.y) == doctest::Approx(0.5).epsilon(1e-12));  // (1,-1)/sqrt2 up to sign
    CHECK(e.v1.x * e.v1.y < 0.0);
    CHECK(e.v2.x * e.v2.y > 0.0);

    const EigenPair2 iso = eig_sym2(SymMat2::isotropic(2.5));
    CHECK(iso.lambda1 == doctest::Approx(2.5));
    CHECK(iso.lambda2 == doctest::Approx(2.5));
}

TEST_CASE("eig_sym2: orthonormality and reconstruction up to condition 1e8") {
    RngStream rng(2024, 0);
    for (int trial = 0; trial < 300; ++trial) {
        const double lam2 = std::exp(rng.uniform() * 20.0 - 4.0);
        const double cond = std::exp(rng.uniform() * std::log(1e8));
        const double ang = kTwoPi * rng.uniform();
        const SymMat2 m = rotate_cov(SymMat2::diagonal(lam2 / cond, lam2), ang);
        const EigenPair2 e = eig_sym2(m);

        CHECK(e.lambda1 <= e.lambda2);
        CHECK(std::abs(dot(e.v1, e.v2)) <= 1e-12);
        CHECK(std::abs(e.v1.norm() - 1.0) <= 1e-12);
        CHECK(std::abs(e.v2.norm() - 1.0) <= 1e-12);

        const double r11 = e.lambda1 * e.v1.x * e.v1.x + e.lambda2 * e.v2.x * e.v2.x;
        const double r12 = e.lambda1 * e.v1.x * e.v1.y + e.lambda2 * e.v2.x * e.v2.y;
        const double r22 = e.lambda1 * e.v1.y * e.v1.y + e.lambda2 * e.v2.y * e.v2.y;
        const double scale = std::max(std::abs(m.d11), std::abs(m.d22));
        CHECK(std::abs(r11 - m.d11) <= 1e-10 * scale);
        CHECK(std::abs(r12 - m.d12) <= 1e-10 * scale);
        CHECK(std::abs(r22 - m.d22) <= 1e-10 * scale);
    }
}

TEST_CASE("minimize_scalar: quadratic, cosine, ellipse distance") {
    const ScalarMin q = minimize_scalar([](double t) { return (t - 1.0) * (t - 1.0); }, 0.0,
                                        2.0, 1e-10);
    CHECK(q.x == doctest::Approx(1.0).epsilon(1e-8));

    const ScalarMin c = minimize_scalar([](double t) { return std::cos(t); }, 0.0, kTwoPi,
                                        1e-10);
    CHECK(c.x == doctest::Approx(kPi).epsilon(1e-8));

    // Circle geometry: distance from origin to the k-sigma circle around (m, 0).
    const double m = 500.0, sigma = 30.0, k = 3.0;
    const auto dist = [&](double th) {
        const double px = m + k * sigma * std::cos(th);
        const double py = k * sigma * std::sin(th);
        return std::hypot(px, py);
    };
    const ScalarMin g = minimize_scalar(dist, 0.0, kTwoPi, 1e-12);
    CHECK(g.f == doctest::Approx(m - k * sigma).epsilon(1e-10));
}

TEST_CASE("minimize_scalar: non-finite objective is reported with the abscissa") {
    CHECK_THROWS_AS(minimize_scalar([](double t) { return std::log(t - 1.0); }, 0.0, 2.0, 1e-8),
                    std::runtime_error);
}

TEST_CASE("minimize_periodic finds the global minimum among several local ones") {
    const auto f = [](double th) { return std::sin(th) + 0.9 * std::sin(3.0 * th); };
    const ScalarMin best = minimize_periodic(f, kTwoPi, 8, 1e-12);
    double grid_best = 1e300;
    for (int i = 0; i < 200000; ++i) grid_best = std::min(grid_best, f(kTwoPi * i / 200000.0));
    CHECK(best.f == doctest::Approx(grid_best).epsilon(1e-9));
}

TEST_CASE("find_root: linear, sqrt2, circle geometry, bracket error") {
    CHECK(find_root([](double z) { return z - 3.0; }, 0.0, 7.0, 1e-12) ==
          doctest::Approx(3.0).epsilon(1e-10));
    CHECK(find_root([](double z) { return z * z - 2.0; }, 0.0, 2.0, 1e-8) ==
          doctest::Approx(1.41421).epsilon(1e-5));

    // Circular case inside the HBR: max distance of the z-sigma circle is m + z sigma.
    const double hbr = 100.0, m = 40.0, sigma = 15.0;
    const double z = find_root([&](double zz) { return hbr - (m + zz * sigma); }, 0.0, 7.0,
                               1e-10);
    CHECK(z == doctest::Approx((hbr - m) / sigma).epsilon(1e-8));

    CHECK_THROWS_WITH_AS(find_root([](double t) { return t * t + 1.0; }, -1.0, 1.0, 1e-8),
                         doctest::Contains("no sign change"), std::runtime_error);
}

TEST_CASE("gauss_disk_quadrature: isotropic closed form and zero radius") {
    CHECK(gauss_disk_quadrature({0, 0}, SymMat2::isotropic(1.0), 0.0) == 0.0);
    // sigma = 100 m, r = 10 m: 1 - exp(-r^2 / (2 sigma^2)) = 4.9875e-3.
    const double p = gauss_disk_quadrature({0, 0}, SymMat2::isotropic(100.0 * 100.0), 10.0);
    CHECK(p == doctest::Approx(4.9875e-3).epsilon(1e-4));
    for (double sigma : {0.5, 3.0, 120.0, 4000.0}) {
        for (double ratio : {0.05, 0.4, 1.0, 2.5, 8.0, 25.0}) {
            const double r = ratio * sigma;
            const double got =
                gauss_disk_quadrature({0, 0}, SymMat2::isotropic(sigma * sigma), r, 1e-10);
            const double want = -std::expm1(-0.5 * r * r / (sigma * sigma));
            CHECK(got == doctest::Approx(want).epsilon(1e-8));
        }
    }
}

TEST_CASE("gauss_disk_quadrature: Monte Carlo oracle for an offset center") {
    const Vec2 center{300.0, 0.0};
    const SymMat2 cov = SymMat2::diagonal(100.0 * 100.0, 100.0 * 100.0);
    const double radius = 10.0;
    const double quad = gauss_disk_quadrature(center, cov, radius);

    RngStream rng(7771, 0);
    const long long n = 10'000'000;
    long long hits = 0;
    for (long long i = 0; i < n; ++i) {
        const Vec2 p{center.x + 100.0 * rng.normal(), center.y + 100.0 * rng.normal()};
        if (p.norm() <= radius) ++hits;
    }
    const double mc = static_cast<double>(hits) / static_cast<double>(n);
    const double se = std::sqrt(mc * (1.0 - mc) / static_cast<double>(n));
    CHECK(std::abs(quad - mc) <= 3.0 * se);
}

TEST_CASE("gauss_disk_quadrature: rotation invariance") {
    RngStream rng(99, 3);
    for (int trial = 0; trial < 20; ++trial) {
        const SymMat2 cov = testutil::random_pd_cov(rng, 20.0, 500.0);
        const Vec2 center{400.0 * (rng.uniform() - 0.5), 400.0 * (rng.uniform() - 0.5)};
        const double radius = 5.0 + 60.0 * rng.uniform();
        const double ang = kTwoPi * rng.uniform();
        const double c = std::cos(ang), s = std::sin(ang);
        const Vec2 rc{c * center.x - s * center.y, s * center.x + c * center.y};
        const double base = gauss_disk_quadrature(center, cov, radius, 1e-9);
        const double rot = gauss_disk_quadrature(rc, rotate_cov(cov, ang), radius, 1e-9);
        if (base > 1e-250)
            CHECK(std::abs(rot - base) <= 1e-8 * base);
    }
}

TEST_CASE("gauss_disk_quadrature: rejects bad input") {
    CHECK_THROWS_AS(gauss_disk_quadrature({0, 0}, {1.0, 2.0, 1.0}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gauss_disk_quadrature({0, 0}, SymMat2::isotropic(1.0), -1.0),
                    std::invalid_argument);
}

TEST_CASE("RngStream: determinism and stream separation") {
    RngStream a(42, 0), b(42, 0), c(42, 1);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const double va = a.normal(), vb = b.normal(), vc = c.normal();
        all_equal = all_equal && (va == vb);
        any_diff = any_diff || (va != vc);
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("RngStream: normal moments at 1e6 draws") {
    RngStream rng(12345, 9);
    const int n = 1'000'000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sum_sq += z * z;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) <= 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) <= 0.01);
}

TEST_CASE("RngStream: uniform range and mean") {
    RngStream rng(5, 17);
    double sum = 0.0;
    for (int i = 0; i < 200000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
    }
    CHECK(sum / 200000.0 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("cholesky round-trips the covariance") {
    RngStream rng(31, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const SymMat2 m = testutil::random_pd_cov(rng, 1.0, 1000.0);
        const Chol2 c = cholesky(m);
        CHECK(c.l11 * c.l11 == doctest::Approx(m.d11).epsilon(1e-12));
        CHECK(c.l11 * c.l21 == doctest::Approx(m.d12).epsilon(1e-10));
        CHECK(c.l21 * c.l21 + c.l22 * c.l22 == doctest::Approx(m.d22).epsilon(1e-10));
    }
}
