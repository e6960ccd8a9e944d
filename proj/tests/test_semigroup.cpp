#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fdelab/rng.hpp"
#include "fdelab/semigroup.hpp"

using namespace fdelab;

namespace {

SpatialField random_field(const SemigroupModel& model, Rng& rng) {
    auto grid = model.default_grid();
    std::vector<double> v(model.components() * grid->size());
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return SpatialField(model.components(), grid, std::move(v));
}

/// Closed form for A = [[-1, 10], [0, -1]]: e^{tA} = e^{-t} [[1, 10t], [0, 1]].
SpatialField shear_closed_form(double t, const SpatialField& x) {
    const double e = std::exp(-t);
    std::vector<double> v{e * (x(0, 0) + 10.0 * t * x(1, 0)), e * x(1, 0)};
    return SpatialField(2, x.grid(), std::move(v));
}

} // namespace

TEST_CASE("identity at t = 0 is bit exact") {
    Rng rng(1);
    SpectralNeumannSemigroup heat({0.1}, 1.0, 8);
    const SpatialField x = random_field(heat, rng);
    const SpatialField y = heat.apply(0.0, x);
    CHECK(max_abs_diff(x, y) == 0.0);

    MatrixSemigroup shear(2, {-1.0, 10.0, 0.0, -1.0});
    const SpatialField z = random_field(shear, rng);
    CHECK(max_abs_diff(z, shear.apply(0.0, z)) == 0.0);
}

TEST_CASE("zero-flux diffusion preserves constants exactly") {
    SpectralNeumannSemigroup heat({0.3, 0.05}, 2.0, 6);
    const SpatialField c = SpatialField::constant(2, heat.default_grid(), 0.731);
    for (double t : {1e-4, 0.01, 0.5, 3.0}) {
        CHECK(max_abs_diff(heat.apply(t, c), c) == 0.0);
    }
}

TEST_CASE("scalar generator gives the scalar exponential") {
    const double a = 0.8;
    MatrixSemigroup model(1, {-a});
    const SpatialField x = SpatialField::constant(1, model.default_grid(), 2.0);
    for (double t : {0.1, 1.0, 2.5}) {
        CHECK(model.apply(t, x)(0, 0) ==
              doctest::Approx(2.0 * std::exp(-a * t)).epsilon(1e-13));
    }
}

TEST_CASE("negative time and shape mismatches are rejected") {
    SpectralNeumannSemigroup heat({0.1}, 1.0, 4);
    const SpatialField x = SpatialField::zeros(1, heat.default_grid());
    CHECK_THROWS_AS(heat.apply(-0.5, x), DomainError);
    CHECK_THROWS_AS(heat.apply(1.0, SpatialField::zeros(1, make_uniform_grid(1.0, 4))),
                    DimensionError);
    CHECK_THROWS_AS(heat.apply(1.0, SpatialField::zeros(2, heat.default_grid())),
                    DimensionError);
}

TEST_CASE("semigroup law") {
    Rng rng(42);
    SpectralNeumannSemigroup heat({0.1}, 1.0, 8);
    MatrixSemigroup shear(2, {-1.0, 10.0, 0.0, -1.0});
    for (const SemigroupModel* model :
         {static_cast<const SemigroupModel*>(&heat), static_cast<const SemigroupModel*>(&shear)}) {
        for (int trial = 0; trial < 40; ++trial) {
            const double s = rng.uniform(0.0, 2.0);
            const double t = rng.uniform(0.0, 2.0);
            const SpatialField x = random_field(*model, rng);
            const SpatialField two_leg = model->apply(s, model->apply(t, x));
            const SpatialField one_leg = model->apply(s + t, x);
            CHECK(max_abs_diff(two_leg, one_leg) <= 1e-10 * (1.0 + sup_norm(x)));
        }
    }
}

TEST_CASE("grid sup norm never grows under the diffusion model") {
    // The propagator is the exponential of a Metzler generator, so this holds
    // down to rounding even for rough data and tiny times.
    Rng rng(5);
    SpectralNeumannSemigroup heat({0.1}, 1.0, 16);
    for (double t : {1e-6, 1e-3, 1.0 / 128.0, 0.05, 0.5, 4.0}) {
        for (int trial = 0; trial < 30; ++trial) {
            const SpatialField x = random_field(heat, rng);
            CHECK(sup_norm(heat.apply(t, x)) <= sup_norm(x) * (1.0 + 1e-13) + 1e-15);
        }
    }
}

TEST_CASE("discrete eigenvalues are consistent with d (k pi / ell)^2") {
    const double d = 0.37, ell = 1.7;
    SpectralNeumannSemigroup heat({d}, ell, 16);
    CHECK(heat.eigenvalue(0, 0) == 0.0);
    double prev = -1.0;
    for (std::size_t k = 0; k < heat.mode_count(); ++k) {
        CHECK(heat.eigenvalue(0, k) > prev);
        prev = heat.eigenvalue(0, k);
    }
    for (std::size_t k = 1; k <= 4; ++k) {
        const double continuum = d * std::pow(static_cast<double>(k) * std::numbers::pi / ell, 2);
        CHECK(heat.eigenvalue(0, k) == doctest::Approx(continuum).epsilon(0.02));
    }
}

TEST_CASE("operator norms") {
    SpectralNeumannSemigroup heat({0.1}, 1.0, 8);
    for (double t : {0.0, 0.01, 1.0, 10.0}) CHECK(heat.operator_norm(t) == 1.0);

    auto base = std::make_shared<SpectralNeumannSemigroup>(std::vector<double>{0.1}, 1.0, 8);
    DampedSemigroup damped(base, 1.3);
    for (double t : {0.2, 1.0, 2.0})
        CHECK(damped.operator_norm(t) == doctest::Approx(std::exp(-1.3 * t)).epsilon(1e-15));

    MatrixSemigroup shear(2, {-1.0, 10.0, 0.0, -1.0});
    CHECK(shear.operator_norm(0.0) == 1.0);
    // Row sums of the closed form: e^{-t} (1 + 10 t).
    CHECK(shear.operator_norm(1.0) ==
          doctest::Approx(std::exp(-1.0) * 11.0).epsilon(1e-12));
}

TEST_CASE("damped bound for contraction bases") {
    Rng rng(11);
    auto base = std::make_shared<SpectralNeumannSemigroup>(std::vector<double>{0.2}, 1.0, 8);
    DampedSemigroup damped(base, 0.9);
    CHECK(damped.is_contraction());
    for (int trial = 0; trial < 20; ++trial) {
        const double t = rng.uniform(0.0, 3.0);
        const SpatialField x = random_field(damped, rng);
        CHECK(sup_norm(damped.apply(t, x)) <=
              std::exp(-0.9 * t) * sup_norm(x) * (1.0 + 1e-13) + 1e-15);
    }
}

TEST_CASE("orbit sup norm") {
    Rng rng(3);
    SUBCASE("contraction models short-circuit to the sup norm") {
        SpectralNeumannSemigroup heat({0.1}, 1.0, 8);
        const SpatialField x = random_field(heat, rng);
        const std::vector<double> grid{0.0, 0.5, 1.0};
        CHECK(orbit_sup_norm(heat, x, grid) == sup_norm(x));
        CHECK(orbit_sup_norm(heat, SpatialField::zeros(1, heat.default_grid()), grid) == 0.0);
    }
    SUBCASE("grid must be sane") {
        SpectralNeumannSemigroup heat({0.1}, 1.0, 4);
        const SpatialField x = random_field(heat, rng);
        CHECK_THROWS_AS(orbit_sup_norm(heat, x, std::vector<double>{}), UsageError);
        CHECK_THROWS_AS(orbit_sup_norm(heat, x, std::vector<double>{0.5, 1.0}), UsageError);
    }
    SUBCASE("transient growth of a non-normal generator") {
        MatrixSemigroup shear(2, {-1.0, 10.0, 0.0, -1.0});
        CHECK_FALSE(shear.is_contraction());
        const SpatialField x(2, shear.default_grid(), {0.0, 1.0});

        const auto grid = orbit_time_grid(shear, 400);
        const double star = orbit_sup_norm(shear, x, grid);
        CHECK(star > sup_norm(x));

        // Independent dense sweep of the closed form. The true sup is
        // 10 t e^{-t} at t = 1.
        double dense = 0.0;
        for (int i = 0; i <= 20000; ++i) {
            const double t = 10.0 * i / 20000.0;
            dense = std::max(dense, sup_norm(shear_closed_form(t, x)));
        }
        CHECK(dense == doctest::Approx(10.0 * std::exp(-1.0)).epsilon(1e-6));
        CHECK(star == doctest::Approx(dense).epsilon(1e-3));
        CHECK(star <= shear.bound() * sup_norm(x) * (1.0 + 1e-12));
    }
}

TEST_CASE("orbit norm sandwich and shift bound") {
    Rng rng(17);
    MatrixSemigroup shear(2, {-1.0, 10.0, 0.0, -1.0});
    const auto grid = orbit_time_grid(shear, 300);
    for (int trial = 0; trial < 25; ++trial) {
        const SpatialField x = random_field(shear, rng);
        const double star = orbit_sup_norm(shear, x, grid);
        CHECK(sup_norm(x) <= star * (1.0 + 1e-12));
        CHECK(star <= shear.bound() * sup_norm(x) * (1.0 + 1e-12));

        // Orbit norm of T(t)x on a grid never exceeds the orbit norm of x on
        // the same grid shifted by t (plus the origin).
        const double t = rng.uniform(0.0, 2.0);
        std::vector<double> shifted{0.0};
        for (double s : grid) shifted.push_back(s + t);
        CHECK(orbit_sup_norm(shear, shear.apply(t, x), grid) <=
              orbit_sup_norm(shear, x, shifted) + 1e-12);
    }
}

TEST_CASE("matrix generator screening") {
    CHECK_THROWS_AS(MatrixSemigroup(1, {0.5}), ModelError);
    CHECK_THROWS_AS(MatrixSemigroup(2, {0.0, 1.0, 0.0, 0.0}), ModelError);  // Jordan growth
    CHECK_NOTHROW(MatrixSemigroup(2, {0.0, 0.0, 0.0, 0.0}));
    CHECK(MatrixSemigroup(2, {0.0, 0.0, 0.0, 0.0}).is_contraction());
    CHECK_THROWS_AS(MatrixSemigroup(2, {1.0, 2.0, 3.0}), DimensionError);
}

TEST_CASE("continuity modulus") {
    SUBCASE("single decaying mode, analytic cross-check") {
        auto base = std::make_shared<MatrixSemigroup>(1, std::vector<double>{0.0});
        DampedSemigroup damped(base, 1.0);
        const double eps = 0.1, t = 1.0;
        const double delta = uniform_continuity_delta(damped, eps, t);
        CHECK(delta > 0.0);
        CHECK(delta < eps);

        // Dense certification: every admissible pair moves by less than eps.
        double worst = 0.0;
        for (int i = 0; i <= 400; ++i) {
            const double s1 = eps + (t - eps) * i / 400.0;
            for (int g = 1; g <= 40; ++g) {
                const double s2 = std::min(t, s1 + delta * g / 40.0);
                worst = std::max(worst, std::abs(std::exp(-s1) - std::exp(-s2)));
            }
        }
        CHECK(worst < eps);
        // For one mode the modulus is e^{-eps}(1 - e^{-delta}).
        CHECK(std::exp(-eps) * (1.0 - std::exp(-delta)) <= 0.6 * eps + 1e-12);
    }
    SUBCASE("spectral model certified against dense operator sampling") {
        auto base = std::make_shared<SpectralNeumannSemigroup>(std::vector<double>{0.1}, 1.0, 8);
        DampedSemigroup damped(base, 0.5);
        const double eps = 0.05, t = 1.0;
        const double delta = uniform_continuity_delta(damped, eps, t);
        CHECK(delta > 0.0);
        CHECK(delta < eps);
        double worst = 0.0;
        for (int i = 0; i <= 300; ++i) {
            const double s1 = eps + (t - eps) * i / 300.0;
            for (int g = 1; g <= 20; ++g) {
                const double s2 = std::min(t, s1 + delta * g / 20.0);
                if (s2 <= s1) continue;
                worst = std::max(worst, damped.damped_norm_difference(s1, s2, 0.0));
            }
        }
        CHECK(worst < eps);
    }
    SUBCASE("identity family is rejected") {
        auto base = std::make_shared<MatrixSemigroup>(1, std::vector<double>{0.0});
        DampedSemigroup identity(base, 0.0);
        CHECK_THROWS_AS(uniform_continuity_delta(identity, 0.1, 1.0), UnsupportedModelError);
    }
    SUBCASE("usage errors") {
        auto base = std::make_shared<SpectralNeumannSemigroup>(std::vector<double>{0.1}, 1.0, 4);
        DampedSemigroup damped(base, 1.0);
        CHECK_THROWS_AS(uniform_continuity_delta(damped, 1.0, 0.5), UsageError);
        CHECK_THROWS_AS(uniform_continuity_delta(damped, 0.0, 0.5), UsageError);
    }
}
