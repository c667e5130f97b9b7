#include "doctest.h"
#include "glv/green.hpp"
#include "glv/bessel.hpp"
#include <cmath>
#include <random>

using namespace glv;

namespace {

// one fitted desk-scale cylinder kernel shared across cases (construction
// is the expensive part; everything else probes it read-only)
const GreenKernel& desk_kernel() {
    static GreenKernel K(GLParams{1.0}, 1.0, 2.5);
    return K;
}

double fd_helmholtz_residual(const GreenKernel& K, const vec3& p, const vec3& y, double h,
                             double kappa) {
    double lap = 0.0;
    for (int d = 0; d < 3; ++d) {
        vec3 e = vec3::Zero();
        e[d] = h;
        lap += K.value(p + e, y) - 2.0 * K.value(p, y) + K.value(p - e, y);
    }
    return lap / (h * h) / (kappa * kappa) + K.value(p, y);
}

} // namespace

TEST_CASE("free kernel: closed form at distance pi for unit kappa") {
    vec3 x(0.2, -0.1, 0.4), y = x + vec3(0, 0, PI);
    // -cos(pi) / (4 pi^2) = +1 / (4 pi^2)
    CHECK(free_kernel(1.0, x, y) == doctest::Approx(1.0 / (4.0 * PI * PI)).epsilon(1e-12));
    CHECK(free_kernel(1.0, x, y) == doctest::Approx(0.025330).epsilon(1e-4));
}

TEST_CASE("free kernel scales as -kappa^2 cos(kappa r) / (4 pi r)") {
    vec3 x(0, 0, 0), y(0.3, -0.4, 1.2); // r = 1.3
    for (double kap : {0.5, 1.0, 2.0, 5.0}) {
        double r = 1.3;
        double want = -kap * kap * std::cos(kap * r) / (4.0 * PI * r);
        CHECK(free_kernel(kap, x, y) == doctest::Approx(want).epsilon(1e-13));
    }
}

TEST_CASE("free kernel refuses coincident points") {
    vec3 x(0.1, 0.2, 0.3);
    CHECK_THROWS_AS(free_kernel(1.0, x, x), CoincidentPoints);
    CHECK_THROWS_AS(free_kernel_grad(1.0, x, x), CoincidentPoints);
    CHECK_THROWS_AS(free_kernel_hess(1.0, x, x), CoincidentPoints);
}

TEST_CASE("free kernel satisfies the interior equation at second stencil order") {
    vec3 y(0.0, 0.0, 0.0), p(0.9, -0.4, 0.6);
    double kap = 2.0;
    GreenKernel K{GLParams{kap}};
    double r1 = std::abs(fd_helmholtz_residual(K, p, y, 0.02, kap));
    double r2 = std::abs(fd_helmholtz_residual(K, p, y, 0.01, kap));
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("free kernel gradient and Hessian agree with finite differences") {
    double kap = 1.7;
    vec3 x(0.4, 0.8, -0.3), y(-0.2, 0.1, 0.5);
    const double h = 1e-6;
    vec3 g = free_kernel_grad(kap, x, y);
    mat3 H = free_kernel_hess(kap, x, y);
    for (int d = 0; d < 3; ++d) {
        vec3 e = vec3::Zero();
        e[d] = h;
        double fd = (free_kernel(kap, x + e, y) - free_kernel(kap, x - e, y)) / (2 * h);
        CHECK(g[d] == doctest::Approx(fd).epsilon(1e-8));
        vec3 fdg = (free_kernel_grad(kap, x + e, y) - free_kernel_grad(kap, x - e, y)) / (2 * h);
        for (int c = 0; c < 3; ++c) CHECK(H(c, d) == doctest::Approx(fdg[c]).epsilon(1e-7));
    }
}

TEST_CASE("Neumann modes are eigenfunctions: wall derivative and FD eigen-equation") {
    double R = 1.0, hh = 2.5;
    auto modes = neumann_eigenvalues(R, hh, 12.0);
    REQUIRE(modes.size() > 10);
    // lambdas sorted, first is the constant mode
    CHECK(modes.front().lambda == doctest::Approx(0.0));
    double prev = -1.0;
    for (const auto& em : modes) {
        CHECK(em.lambda >= prev);
        prev = em.lambda;
    }
    for (size_t idx : {size_t(1), size_t(4), modes.size() - 1}) {
        const auto& em = modes[idx];
        double kz = em.p * PI / (2.0 * hh);
        double a2 = em.lambda - kz * kz; // (alpha / R)^2
        REQUIRE(a2 >= -1e-12);
        double al = std::sqrt(std::max(0.0, a2));
        auto phi = [&](double r, double z) {
            return std::cyl_bessel_j(double(em.m), al * r) * std::cos(kz * (z + hh));
        };
        // wall Neumann condition via FD in r
        double hr = 1e-6;
        CHECK(std::abs(phi(R + hr, 0.37) - phi(R - hr, 0.37)) / (2 * hr) < 1e-5);
        // FD Laplacian in (r, z) at a generic point reproduces -lambda phi
        double r0 = 0.53, z0 = -0.41, h = 1e-4;
        double lap = (phi(r0 + h, z0) - 2 * phi(r0, z0) + phi(r0 - h, z0)) / (h * h) +
                     (phi(r0 + h, z0) - phi(r0 - h, z0)) / (2 * h) / r0 +
                     (phi(r0, z0 + h) - 2 * phi(r0, z0) + phi(r0, z0 - h)) / (h * h) -
                     em.m * em.m / (r0 * r0) * phi(r0, z0);
        CHECK(lap == doctest::Approx(-em.lambda * phi(r0, z0)).epsilon(1e-4));
    }
}

TEST_CASE("spectral gap agrees with a brute-force scan and flags exact resonances") {
    auto g = check_spectral_gap(1.0, 1.0, 2.5);
    CHECK(g.ok);

    // independent scan over the same spectrum with library Bessel functions
    double best = 1e300;
    for (int m = 0; m <= 8; ++m) {
        std::vector<double> alphas;
        if (m == 0) alphas.push_back(0.0);
        double x = 0.05;
        auto jp = [&](double t) {
            if (m == 0) return -std::cyl_bessel_j(1.0, t);
            return 0.5 * (std::cyl_bessel_j(m - 1.0, t) - std::cyl_bessel_j(m + 1.0, t));
        };
        while (alphas.size() < 6 && x < 40.0) {
            if (jp(x) * jp(x + 0.02) < 0) {
                double a = x, b = x + 0.02;
                for (int it = 0; it < 60; ++it) {
                    double c = 0.5 * (a + b);
                    (jp(a) * jp(c) < 0 ? b : a) = c;
                }
                alphas.push_back(0.5 * (a + b));
            }
            x += 0.02;
        }
        for (double al : alphas)
            for (int p = 0; p <= 12; ++p) {
                double lam = al * al + sq(p * PI / 5.0);
                best = std::min(best, std::abs(1.0 - lam));
            }
    }
    CHECK(g.gap == doctest::Approx(best).epsilon(1e-9));

    // hh = pi puts the p = 2 axial mode exactly at kappa^2 = 1
    auto bad = check_spectral_gap(1.0, 1.0, PI);
    CHECK_FALSE(bad.ok);
    CHECK(bad.gap < 1e-12);
}

TEST_CASE("resonant cylinder construction throws before any fitting") {
    CHECK_THROWS_AS(GreenKernel(GLParams{1.0}, 1.0, PI), SpectralGapViolation);
}

TEST_CASE("fitted kernel is symmetric to machine precision") {
    const auto& K = desk_kernel();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ur(0, 1);
    double worst = 0.0;
    int done = 0;
    while (done < 100) {
        double r1 = 0.85 * ur(rng), a1 = 2 * PI * ur(rng), z1 = 2.2 * (2 * ur(rng) - 1);
        double r2 = 0.85 * ur(rng), a2 = 2 * PI * ur(rng), z2 = 2.2 * (2 * ur(rng) - 1);
        vec3 x(r1 * std::cos(a1), r1 * std::sin(a1), z1);
        vec3 y(r2 * std::cos(a2), r2 * std::sin(a2), z2);
        if ((x - y).norm() < 0.05) continue;
        ++done;
        double g1 = K.value(x, y), g2 = K.value(y, x);
        worst = std::max(worst, std::abs(g1 - g2) / std::max(1.0, std::abs(g1)));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("fitted kernel satisfies the interior equation at second stencil order") {
    const auto& K = desk_kernel();
    vec3 y(0.3, 0.1, -0.8), p(-0.2, 0.35, 0.7);
    double r1 = std::abs(fd_helmholtz_residual(K, p, y, 0.02, 1.0));
    double r2 = std::abs(fd_helmholtz_residual(K, p, y, 0.01, 1.0));
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("fitted kernel cancels the wall normal derivative") {
    const auto& K = desk_kernel();
    vec3 y(0.3, 0.1, -0.8);
    double worst = 0.0, scale = 0.0;
    for (int i = 0; i < 120; ++i) {
        double th = 2 * PI * i / 120.0, z = 2.3 * std::sin(3.7 * i);
        vec3 s(std::cos(th), std::sin(th), z), n(std::cos(th), std::sin(th), 0);
        worst = std::max(worst, std::abs(K.grad_x(s, y).dot(n)));
        scale = std::max(scale, free_kernel_grad(1.0, s, y).norm());
    }
    CHECK(worst / scale < 5e-3);
    CHECK(K.boundary_residual() < 5e-3);
    CHECK(K.tail_estimate() < 1e-6);
}

TEST_CASE("fitted kernel gradient and Hessian agree with finite differences") {
    const auto& K = desk_kernel();
    vec3 p(0.4, -0.3, 0.6), y(0.3, 0.1, -0.8);
    const double h = 1e-5;
    vec3 g = K.grad_x(p, y), fd;
    for (int d = 0; d < 3; ++d) {
        vec3 e = vec3::Zero();
        e[d] = h;
        fd[d] = (K.value(p + e, y) - K.value(p - e, y)) / (2 * h);
    }
    CHECK((g - fd).norm() / fd.norm() < 1e-7);
    mat3 H = K.hess_x(p, y), Hfd;
    for (int d = 0; d < 3; ++d) {
        vec3 e = vec3::Zero();
        e[d] = h;
        Hfd.col(d) = (K.grad_x(p + e, y) - K.grad_x(p - e, y)) / (2 * h);
    }
    CHECK((H - Hfd).norm() / Hfd.norm() < 1e-7);
}

TEST_CASE("difference from the free kernel stays bounded near coincidence") {
    const auto& K = desk_kernel();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ur(0, 1);
    vec3 base(0.1, -0.2, 0.3);
    // fit |G| * r on a moderate shell, then check it bounds the tight shell
    double cfit = 0.0;
    for (int i = 0; i < 60; ++i) {
        double rr = 0.05 + 0.45 * ur(rng);
        vec3 d(ur(rng) - 0.5, ur(rng) - 0.5, ur(rng) - 0.5);
        d.normalize();
        cfit = std::max(cfit, std::abs(K.value(base, base + rr * d)) * rr);
    }
    for (int i = 0; i < 60; ++i) {
        double rr = 0.01 + 0.04 * ur(rng);
        vec3 d(ur(rng) - 0.5, ur(rng) - 0.5, ur(rng) - 0.5);
        d.normalize();
        double v = std::abs(K.value(base, base + rr * d)) * rr;
        CHECK(v <= 2.0 * cfit);
    }
}

TEST_CASE("kernel parameter validation") {
    CHECK_THROWS_AS(GLParams{0.0}.validate(), BadParameter);
    CHECK_THROWS_AS(GLParams{-1.0}.validate(), BadParameter);
    CHECK_THROWS_AS(GreenKernel(GLParams{1.0}, -1.0, 2.5), BadParameter);
    CHECK_THROWS_AS(neumann_eigenvalues(0.0, 1.0, 4.0), BadParameter);
    CorrectionParams cp;
    cp.ang_order = -3;
    CHECK_THROWS_AS(GreenKernel(GLParams{1.0}, 1.0, 2.5, cp), BadParameter);
}
