#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "liouville/developing_map.hpp"

using namespace liouville;

namespace {

std::mt19937_64 rng(0x5eed03);

complex random_z(double r = 3.0) {
    std::uniform_real_distribution<double> u(-r, r);
    return {u(rng), u(rng)};
}

MobiusTransform random_rotation() {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const complex alpha(u(rng), u(rng)), beta(u(rng), u(rng));
    if (std::abs(alpha) + std::abs(beta) < 0.1) return MobiusTransform::identity();
    return {alpha, beta, -std::conj(beta), std::conj(alpha)};
}

LinearOdeProblem airy_type_problem(double tol = 1e-10) {
    return LinearOdeProblem(PolynomialCoefficient({complex(0), complex(1)}), complex(0.0),
                            {complex(1), complex(0), complex(0), complex(1)}, tol);
}

// Independent oracle for u: log(2 |f'| / (1+|f|^2)) with f' from a central
// difference of eval_f. Only valid away from poles.
double u_oracle(const DevelopingMap& m, complex z, double h = 1e-5) {
    const complex fp = eval_f(m, z + h).value, fm = eval_f(m, z - h).value;
    const complex f = eval_f(m, z).value;
    const double df = std::abs((fp - fm) / (2.0 * h));
    return std::log(2.0 * df / (1.0 + std::norm(f)));
}

}  // namespace

TEST_CASE("eval_f closed forms") {
    const DevelopingMap se = ShiftedExpMap{complex(0.0)};
    CHECK(std::abs(eval_f(se, complex(0.0)).value - 1.0) < 1e-15);

    const DevelopingMap mob = MobiusMap{MobiusTransform::inversion()};
    CHECK(eval_f(mob, complex(0.0)).at_infinity);

    const DevelopingMap ef =
        ExpFamilyMap(MobiusTransform::identity(), complex(1.0), complex(0.0, pi));
    CHECK(std::abs(eval_f(ef, complex(0.0)).value + 1.0) < 1e-14);
}

TEST_CASE("conformal factor closed forms") {
    const DevelopingMap se = ShiftedExpMap{complex(0.0)};
    CHECK(conformal_factor(se, complex(0.0)) == Catch::Approx(1.0).margin(1e-14));
    CHECK(conformal_factor(se, complex(std::log(3.0))) ==
          Catch::Approx(0.6).margin(1e-14));

    const DevelopingMap mob = MobiusMap{MobiusTransform::identity()};
    CHECK(conformal_factor(mob, complex(0.0)) == Catch::Approx(2.0).margin(1e-14));
}

TEST_CASE("u field closed forms and log-space evaluation") {
    const DevelopingMap se = ShiftedExpMap{complex(0.0)};
    CHECK(u_field(se, complex(0.0)) == Catch::Approx(0.0).margin(1e-14));
    CHECK(u_field(se, complex(5.0)) ==
          Catch::Approx(-std::log(std::cosh(5.0))).margin(1e-12));

    // Far down the cusp u ~ -x + log 2 must stay representable.
    const double x = 1e6;
    CHECK(u_field(se, complex(x)) == Catch::Approx(-x + std::log(2.0)).margin(1e-6));

    // ExpFamily with rotation L: u = log|a| - log cosh(Re(az+b)); the value
    // at z=0, a=2, b=0 is log 2, confirmed by direct evaluation.
    const DevelopingMap ef =
        ExpFamilyMap(MobiusTransform::identity(), complex(2.0), complex(0.0));
    CHECK(u_field(ef, complex(0.0)) == Catch::Approx(std::log(2.0)).margin(1e-12));
    CHECK(u_field(ef, complex(0.0)) == Catch::Approx(u_oracle(ef, complex(0.0))).margin(1e-8));
    for (int i = 0; i < 20; ++i) {
        const complex z = random_z(2.0);
        const double closed = std::log(2.0) - std::log(std::cosh((2.0 * z).real()));
        CHECK(u_field(ef, z) == Catch::Approx(closed).margin(1e-11));
    }
}

TEST_CASE("u matches the direct-evaluation oracle on all closed-form families") {
    const std::vector<DevelopingMap> maps = {
        MobiusMap{MobiusTransform(complex(2, 1), complex(0, 3), complex(1), complex(4))},
        ExpFamilyMap(MobiusTransform(complex(1), complex(0.5), complex(-0.2), complex(1)),
                     complex(0.7, 0.4), complex(0.1)),
        ShiftedExpMap{complex(1.0, 0.5)}};
    for (const auto& m : maps) {
        for (int i = 0; i < 25; ++i) {
            const complex z = random_z(1.5);
            if (!eval_f(m, z).finite() || std::abs(eval_f(m, z).value) > 0.8) continue;
            CHECK(u_field(m, z) == Catch::Approx(u_oracle(m, z)).margin(1e-7));
        }
    }
}

TEST_CASE("ode ratio map: identity-like frame and pole-safe rho") {
    // Frame (0,1,1,0): f1 = z, f2 = 1, so f(z) = z and rho(0) = 2.
    LinearOdeProblem ident(PolynomialCoefficient({complex(0)}), complex(0.0),
                           {complex(0), complex(1), complex(1), complex(0)});
    const DevelopingMap m = OdeRatioMap(ident);
    CHECK(std::abs(eval_f(m, complex(0.7, 0.2)).value - complex(0.7, 0.2)) < 1e-9);
    CHECK(conformal_factor(m, complex(0.0)) == Catch::Approx(2.0).margin(1e-10));

    // Frame (1,0,0,1): f2(z0) = 0, so f has a pole at the basepoint but rho
    // is still 2/(|f1|^2+|f2|^2) = 2 there.
    const DevelopingMap p = OdeRatioMap(airy_type_problem());
    CHECK(eval_f(p, complex(0.0)).at_infinity);
    CHECK(conformal_factor(p, complex(0.0)) == Catch::Approx(2.0).margin(1e-10));
}

TEST_CASE("rho stays positive for every family") {
    const std::vector<DevelopingMap> maps = {
        MobiusMap{MobiusTransform::identity()},
        ExpFamilyMap(MobiusTransform::identity(), complex(1.0), complex(0.0)),
        ShiftedExpMap{complex(1.0)}, OdeRatioMap(airy_type_problem()),
        MathieuRatioMap(complex(0.3, 0.1))};
    for (const auto& m : maps)
        for (int i = 0; i < 40; ++i) CHECK(std::isfinite(u_field(m, random_z())));
}

TEST_CASE("rotating a map leaves the conformal factor unchanged") {
    SECTION("closed forms, 100 samples at 1e-10") {
        const std::vector<DevelopingMap> maps = {
            MobiusMap{MobiusTransform::identity()},
            ExpFamilyMap(MobiusTransform::identity(), complex(1.0, 0.3), complex(0.2)),
            ShiftedExpMap{complex(0.5, -0.4)}};
        for (const auto& m : maps) {
            for (int i = 0; i < 34; ++i) {
                const MobiusTransform r = random_rotation();
                const DevelopingMap rm = rotate_map(m, r);
                const complex z = random_z();
                const double a = u_field(m, z), b = u_field(rm, z);
                CHECK(std::abs(a - b) < 1e-10);
            }
        }
    }
    SECTION("ode ratio maps at 1e-9") {
        const DevelopingMap m = OdeRatioMap(airy_type_problem(1e-12));
        for (int i = 0; i < 10; ++i) {
            const MobiusTransform r = random_rotation();
            const DevelopingMap rm = rotate_map(m, r);
            const complex z = random_z(2.5);
            CHECK(std::abs(u_field(m, z) - u_field(rm, z)) < 1e-9);
        }
    }
    SECTION("shifted exp rotated by z -> -1/z") {
        const MobiusTransform neg_inv(complex(0), complex(-1), complex(1), complex(0));
        REQUIRE(neg_inv.is_rotation());
        const DevelopingMap rm = rotate_map(DevelopingMap(ShiftedExpMap{complex(0.0)}), neg_inv);
        CHECK(std::abs(eval_f(rm, complex(0.0)).value + 1.0) < 1e-14);
    }
    SECTION("identity rotation preserves behaviour") {
        const DevelopingMap m = ShiftedExpMap{complex(2.0)};
        const DevelopingMap rm = rotate_map(m, MobiusTransform::identity());
        const complex z(0.3, 0.7);
        CHECK(std::abs(u_field(m, z) - u_field(rm, z)) < 1e-14);
        CHECK(chordal_distance(eval_f(m, z), eval_f(rm, z)) < 1e-14);
    }
    SECTION("non-rotation rejected") {
        const MobiusTransform t(complex(2), complex(0), complex(0), complex(1));
        CHECK_THROWS_AS(rotate_map(DevelopingMap(ShiftedExpMap{complex(0.0)}), t),
                        std::invalid_argument);
    }
}

TEST_CASE("u of a rotated exponential family depends on Re(az+b) only") {
    const MobiusTransform l = random_rotation();
    const complex a(1.3, -0.4), b(0.2, 0.9);
    const DevelopingMap m = ExpFamilyMap(l, a, b);
    for (int i = 0; i < 20; ++i) {
        const complex z0 = random_z(2.0);
        // Slide along the level line Re(a z + b) = const.
        const complex dir = complex(0, 1) / a;
        std::uniform_real_distribution<double> us(-2.0, 2.0);
        const complex z1 = z0 + us(rng) * dir;
        CHECK(std::abs(u_field(m, z0) - u_field(m, z1)) < 1e-10);
    }
}

TEST_CASE("numeric schwarzian") {
    SECTION("moebius maps have zero schwarzian") {
        const DevelopingMap id = MobiusMap{MobiusTransform::identity()};
        CHECK(std::abs(numeric_schwarzian(id, complex(0.0), 1e-3)) < 1e-6);
        CHECK(std::abs(numeric_schwarzian(id, complex(2.0, 2.0), 1e-3)) < 1e-6);
        const DevelopingMap m =
            MobiusMap{MobiusTransform(complex(2, 1), complex(0, 3), complex(1), complex(4))};
        CHECK(std::abs(numeric_schwarzian(m, complex(-2.0, 1.0), 1e-3)) < 1e-6);
        CHECK(std::abs(numeric_schwarzian(m, complex(2.0, 2.0), 1e-3)) < 1e-6);
    }
    SECTION("S(e^z + t) = -1/2") {
        const DevelopingMap m = ShiftedExpMap{complex(0.0)};
        CHECK(std::abs(numeric_schwarzian(m, complex(0.2, -0.6), 1e-3) + 0.5) < 1e-6);
        const DevelopingMap m1 = ShiftedExpMap{complex(2.0, 1.0)};
        CHECK(std::abs(numeric_schwarzian(m1, complex(0.5), 1e-3) + 0.5) < 1e-6);
    }
    SECTION("ode ratio: S(f) = 2A, with second-order step dependence") {
        const DevelopingMap m = OdeRatioMap(airy_type_problem(1e-12));
        CHECK(std::abs(numeric_schwarzian(m, complex(2.0), 5e-4) - 4.0) < 1e-4);

        // h = 5e-4 sits below the truncation knee for the whole box but
        // above the hop-noise floor.
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int i = 0; i < 10; ++i) {
            const complex z(u(rng), u(rng));
            CHECK(std::abs(numeric_schwarzian(m, z, 5e-4) - 2.0 * z) < 1e-4);
        }

        // Richardson order estimate over h, 2h, 4h.
        const complex z(1.3, 0.4);
        const double h = 0.01;
        const complex s1 = numeric_schwarzian(m, z, h);
        const complex s2 = numeric_schwarzian(m, z, 2 * h);
        const complex s4 = numeric_schwarzian(m, z, 4 * h);
        const double order = std::log2(std::abs(s4 - s2) / std::abs(s2 - s1));
        CHECK(order > 1.8);
        CHECK(order < 2.2);
    }
    SECTION("rejects nonsensical steps") {
        const DevelopingMap m = ShiftedExpMap{complex(0.0)};
        CHECK_THROWS_AS(numeric_schwarzian(m, complex(0.0), -1.0), std::invalid_argument);
    }
}

TEST_CASE("mathieu ratio map evaluates") {
    const DevelopingMap m = MathieuRatioMap(complex(0.5, 0.2));
    const double u0 = u_field(m, complex(0.0));
    CHECK(u0 == Catch::Approx(std::log(2.0)).margin(1e-9));  // frame (1,0,0,1)
    CHECK(std::isfinite(u_field(m, complex(3.0, 1.0))));
    CHECK(eval_f(m, complex(0.0)).at_infinity);  // f2(0) = 0
}

TEST_CASE("exp family requires a nonzero") {
    CHECK_THROWS_AS(ExpFamilyMap(MobiusTransform::identity(), complex(0.0), complex(1.0)),
                    std::invalid_argument);
}
