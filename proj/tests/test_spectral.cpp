#include <catch2/catch_amalgamated.hpp>

#include "bq2d/spectral.hpp"
#include "test_util.hpp"

using namespace bq2d;
using bq2d_test::eval_field_at;
using bq2d_test::max_coeff_abs;
using bq2d_test::max_pointwise_gap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SpectralField cosine(const WaveGrid& grid, Mode k, double amplitude = 1.0) {
    SpectralField f(grid);
    f.set_pair(k, complexd{0.5 * amplitude, 0.0});
    return f;
}

SpectralField sine(const WaveGrid& grid, Mode k, double amplitude = 1.0) {
    SpectralField f(grid);
    f.set_pair(k, complexd{0.0, -0.5 * amplitude});
    return f;
}

}  // namespace

TEST_CASE("wave grid validation and mode layout", "[spectral]") {
    REQUIRE_THROWS_AS(WaveGrid(7), std::invalid_argument);
    REQUIRE_THROWS_AS(WaveGrid(6), std::invalid_argument);
    REQUIRE_THROWS_AS(WaveGrid(32, 11), std::invalid_argument);  // n < 3N
    REQUIRE_NOTHROW(WaveGrid(32, 10));

    WaveGrid grid(32);
    REQUIRE(grid.holds({16, 0}));
    REQUIRE_FALSE(grid.holds({-16, 0}));
    REQUIRE(grid.nyquist({16, 3}));
    // 2/3 rule: masked exactly when max(|k1|,|k2|) > n/3
    REQUIRE(grid.dealias_keep({10, -10}));
    REQUIRE_FALSE(grid.dealias_keep({11, 0}));
    REQUIRE_FALSE(grid.dealias_keep({0, -11}));
    // index round trip
    for (int k = -15; k <= 16; ++k) REQUIRE(grid.wavenumber(grid.index_of(k)) == k);
}

TEST_CASE("set_pair and reality enforcement", "[spectral]") {
    WaveGrid grid(16);
    SpectralField f(grid);
    f.set_pair({3, -2}, complexd{0.3, 0.7});
    REQUIRE(f.at({-3, 2}) == std::conj(f.at({3, -2})));
    REQUIRE(f.reality_defect() == 0.0);

    // a raw asymmetric write is repaired by enforce_reality
    f.at({1, 1}) = complexd{1.0, 0.0};
    REQUIRE(f.reality_defect() > 0.5);
    f.enforce_reality();
    REQUIRE(f.reality_defect() == 0.0);
    REQUIRE_THAT(f.at({1, 1}).real(), WithinAbs(0.5, 1e-15));
}

TEST_CASE("gradient multipliers", "[spectral]") {
    WaveGrid grid(32);

    SECTION("zero field maps to zero") {
        auto [d1, d2] = gradient(SpectralField(grid));
        REQUIRE(max_coeff_abs(d1) == 0.0);
        REQUIRE(max_coeff_abs(d2) == 0.0);
    }
    SECTION("d1 cos(2 pi x1) = -2 pi sin(2 pi x1), d2 = 0") {
        auto [d1, d2] = gradient(cosine(grid, {1, 0}));
        REQUIRE(max_pointwise_gap(d1, [](double x1, double) {
                    return -two_pi * std::sin(two_pi * x1);
                }) < 1e-12);
        REQUIRE(max_coeff_abs(d2) == 0.0);
    }
    SECTION("d1 of x2-only field vanishes") {
        auto [d1, d2] = gradient(sine(grid, {0, 1}));
        REQUIRE(max_coeff_abs(d1) == 0.0);
        REQUIRE(max_pointwise_gap(d2, [](double, double x2) {
                    return two_pi * std::cos(two_pi * x2);
                }) < 1e-12);
    }
    SECTION("reality preserved") {
        SpectralField f = random_field(grid, 11, 10);
        auto [d1, d2] = gradient(f);
        REQUIRE(d1.reality_defect() == 0.0);
        REQUIRE(d2.reality_defect() == 0.0);
    }
}

TEST_CASE("laplacian multiplier", "[spectral]") {
    WaveGrid grid(32);
    REQUIRE(max_coeff_abs(laplacian(SpectralField(grid))) == 0.0);

    SpectralField f = sine(grid, {0, 1});
    SpectralField lf = laplacian(f);
    REQUIRE_THAT(lf.at({0, 1}).imag(), WithinRel(-two_pi * two_pi * f.at({0, 1}).imag(), 1e-14));

    SpectralField g = cosine(grid, {2, 0});
    SpectralField lg = laplacian(g);
    // -16 pi^2 cos(4 pi x1)
    REQUIRE(max_pointwise_gap(lg, [](double x1, double) {
                return -16.0 * M_PI * M_PI * std::cos(2.0 * two_pi * x1);
            }) < 1e-11);
}

TEST_CASE("biot-savart inversion", "[spectral]") {
    WaveGrid grid(32);

    SECTION("zero vorticity gives zero velocity") {
        auto [u1, u2] = biot_savart(SpectralField(grid));
        REQUIRE(max_coeff_abs(u1) == 0.0);
        REQUIRE(max_coeff_abs(u2) == 0.0);
    }
    SECTION("omega = sin(2 pi x1) gives u = (0, -cos(2 pi x1)/(2 pi))") {
        auto [u1, u2] = biot_savart(sine(grid, {1, 0}));
        REQUIRE(max_coeff_abs(u1) == 0.0);
        REQUIRE(max_pointwise_gap(u2, [](double x1, double) {
                    return -std::cos(two_pi * x1) / two_pi;
                }) < 1e-13);
    }
    SECTION("curl of the velocity reproduces omega on all nonzero modes") {
        SpectralField w = random_field(grid, 21, 10);
        auto [u1, u2] = biot_savart(w);
        SpectralField curl = perp_divergence(u1, u2);
        for (std::size_t i = 0; i < w.coeffs.size(); ++i) {
            if (w.coeffs[i] == complexd{0.0, 0.0}) continue;
            REQUIRE(std::abs(curl.coeffs[i] - w.coeffs[i]) < 1e-13 * std::abs(w.coeffs[i]));
        }
    }
    SECTION("velocity is divergence-free to the rounding of the dot product") {
        SpectralField w = random_field(grid, 33, 10);
        auto [u1, u2] = biot_savart(w);
        for (std::size_t i = 0; i < u1.coeffs.size(); ++i) {
            const Mode k = grid.mode_at(i);
            const complexd a = static_cast<double>(k.k1) * u1.coeffs[i];
            const complexd b = static_cast<double>(k.k2) * u2.coeffs[i];
            const double scale = std::abs(a) + std::abs(b);
            if (scale > 0.0) REQUIRE(std::abs(a + b) <= 1e-15 * scale);
        }
    }
}

TEST_CASE("generalized kernel", "[spectral]") {
    WaveGrid grid(32);
    SpectralField w = random_field(grid, 5, 10);

    SECTION("eps = 1 coincides with the Biot-Savart kernel") {
        auto [u1, u2] = biot_savart(w);
        auto [v1, v2] = biot_savart_eps(w, 1.0);
        for (std::size_t i = 0; i < u1.coeffs.size(); ++i) {
            REQUIRE_THAT(v1.coeffs[i].real(), WithinAbs(u1.coeffs[i].real(), 1e-14));
            REQUIRE_THAT(v1.coeffs[i].imag(), WithinAbs(u1.coeffs[i].imag(), 1e-14));
            REQUIRE_THAT(v2.coeffs[i].real(), WithinAbs(u2.coeffs[i].real(), 1e-14));
            REQUIRE_THAT(v2.coeffs[i].imag(), WithinAbs(u2.coeffs[i].imag(), 1e-14));
        }
    }
    SECTION("zero in, zero out") {
        auto [v1, v2] = biot_savart_eps(SpectralField(grid), 0.5);
        REQUIRE(max_coeff_abs(v1) == 0.0);
        REQUIRE(max_coeff_abs(v2) == 0.0);
    }
    SECTION("single mode |k| = 2: eps = 0.5 vs eps = 1 amplitude ratio is sqrt(4 pi)") {
        SpectralField one = sine(grid, {2, 0});
        auto [a1, a2] = biot_savart_eps(one, 0.5);
        auto [b1, b2] = biot_savart_eps(one, 1.0);
        const double ratio = std::abs(a2.at({2, 0})) / std::abs(b2.at({2, 0}));
        REQUIRE_THAT(ratio, WithinRel(std::sqrt(2.0 * two_pi), 1e-12));
    }
    SECTION("eps outside (0, 1] is rejected") {
        REQUIRE_THROWS_AS(biot_savart_eps(w, 0.0), std::invalid_argument);
        REQUIRE_THROWS_AS(biot_savart_eps(w, -0.3), std::invalid_argument);
        REQUIRE_THROWS_AS(biot_savart_eps(w, 1.2), std::invalid_argument);
    }
}

TEST_CASE("galerkin projection", "[spectral]") {
    WaveGrid grid(32);
    SpectralField f = random_field(grid, 8, 10);

    SECTION("identity when the cutoff covers all retained support") {
        SpectralField p = project_galerkin(f, 15);  // support box is 10, |k| <= 10 sqrt 2
        REQUIRE(p.coeffs == f.coeffs);
    }
    SECTION("single mode |k|^2 = 5 is dropped by N = 2") {
        SpectralField one = sine(grid, {1, 2});
        REQUIRE(max_coeff_abs(project_galerkin(one, 2)) == 0.0);
        REQUIRE(max_coeff_abs(project_galerkin(one, 3)) > 0.0);
    }
    SECTION("idempotent") {
        SpectralField p = project_galerkin(f, 5);
        REQUIRE(project_galerkin(p, 5).coeffs == p.coeffs);
    }
    SECTION("orthogonal projection: norm contraction and orthogonality") {
        SpectralField p = project_galerkin(f, 5);
        REQUIRE(l2_norm(p) <= l2_norm(f) + 1e-15);
        REQUIRE(std::abs(inner_product(f - p, p).real()) <= 1e-12 * l2_norm(f) * l2_norm(f));
    }
}

TEST_CASE("pseudo-spectral advection", "[spectral]") {
    WaveGrid grid(32);
    Fft fft(grid.n);

    SECTION("advecting the zero field gives zero") {
        SpectralField w = random_field(grid, 3, 8);
        auto [u1, u2] = biot_savart(w);
        REQUIRE(max_coeff_abs(advect(u1, u2, SpectralField(grid), fft)) == 0.0);
    }
    SECTION("shear aligned with level sets transports nothing") {
        // u = (0, -cos(2 pi x1)/(2 pi)) from omega = sin(2 pi x1); f = sin(2 pi x1)
        SpectralField w = sine(grid, {1, 0});
        auto [u1, u2] = biot_savart(w);
        SpectralField out = advect(u1, u2, w, fft);
        REQUIRE(max_coeff_abs(out) < 1e-15);
    }
    SECTION("energy neutrality <u.grad f, f> = 0 for random dealiased inputs") {
        for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u, 6u, 7u, 8u, 9u, 10u}) {
            SpectralField w = random_field(grid, seed, 10);
            SpectralField f = random_field(grid, seed + 100, 10);
            auto [u1, u2] = biot_savart(w);
            SpectralField adv = advect(u1, u2, f, fft);
            const double bound =
                1e-12 * std::max(1.0, l2_norm(f) * l2_norm(f) * std::max(l2_norm(u1), l2_norm(u2)));
            REQUIRE(std::abs(inner_product(adv, f).real()) <= bound);
            REQUIRE(adv.reality_defect() == 0.0);
            REQUIRE(std::abs(adv.at({0, 0})) == 0.0);
        }
    }
    SECTION("grid mismatch is rejected") {
        WaveGrid other(48);
        SpectralField w = random_field(grid, 3, 8);
        auto [u1, u2] = biot_savart(w);
        REQUIRE_THROWS_AS(advect(u1, u2, SpectralField(other), fft), std::invalid_argument);
    }
}

TEST_CASE("fft round trip and sampling", "[spectral]") {
    for (int n : {16, 32, 48}) {
        WaveGrid grid(n);
        Fft fft(n);
        SpectralField f = random_field(grid, 77, n / 3);
        std::vector<double> phys;
        fft.to_physical(f, phys);
        SpectralField back(grid);
        fft.to_spectral(phys, back);
        for (std::size_t i = 0; i < f.coeffs.size(); ++i)
            REQUIRE(std::abs(back.coeffs[i] - f.coeffs[i]) < 1e-13);
    }
    // sampling an analytic function recovers exact coefficients
    WaveGrid grid(32);
    Fft fft(32);
    SpectralField f = field_from_function(
        grid, fft, [](double x1, double x2) { return std::sin(two_pi * x2) + 0.25 * std::cos(two_pi * (x1 + x2)); });
    REQUIRE_THAT(f.at({0, 1}).imag(), WithinAbs(-0.5, 1e-14));
    REQUIRE_THAT(f.at({1, 1}).real(), WithinAbs(0.125, 1e-14));
    REQUIRE(f.reality_defect() == 0.0);
}

TEST_CASE("random field determinism", "[spectral]") {
    WaveGrid grid(32);
    SpectralField a = random_field(grid, 123, 9);
    SpectralField b = random_field(grid, 123, 9);
    REQUIRE(a.coeffs == b.coeffs);
    SpectralField c = random_field(grid, 124, 9);
    REQUIRE(a.coeffs != c.coeffs);
}
