#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "liouville/sphere_geometry.hpp"

using namespace liouville;

namespace {

std::mt19937_64 rng(0x5eed01);

SpherePoint random_sphere_point() {
    // Uniform on the sphere, then stereographic.
    std::uniform_real_distribution<double> uz(-1.0, 1.0), uphi(0.0, 2.0 * pi);
    const double zc = uz(rng);
    const double phi = uphi(rng);
    const double s = std::sqrt(std::max(0.0, 1.0 - zc * zc));
    if (1.0 - zc < 1e-12) return SpherePoint::infinity();
    return SpherePoint(complex(s * std::cos(phi), s * std::sin(phi)) / (1.0 - zc));
}

}  // namespace

TEST_CASE("chordal distance closed forms") {
    CHECK(chordal_distance(SpherePoint(0.0), SpherePoint::infinity()) ==
          Catch::Approx(2.0).margin(1e-15));
    CHECK(chordal_distance(SpherePoint(0.0), SpherePoint(1.0)) ==
          Catch::Approx(std::sqrt(2.0)).margin(1e-15));
    CHECK(chordal_distance(SpherePoint(complex(0, 1)), SpherePoint(complex(0, 1))) == 0.0);
    CHECK(chordal_distance(SpherePoint::infinity(), SpherePoint::infinity()) == 0.0);
}

TEST_CASE("spherical distance closed forms") {
    CHECK(spherical_distance(SpherePoint(0.0), SpherePoint::infinity()) ==
          Catch::Approx(pi).margin(1e-14));
    CHECK(spherical_distance(SpherePoint(0.0), SpherePoint(1.0)) ==
          Catch::Approx(pi / 2).margin(1e-14));
    const double t = pi / 2;
    CHECK(spherical_distance(SpherePoint(std::polar(1.0, t / 2)),
                             SpherePoint(std::polar(1.0, -t / 2))) ==
          Catch::Approx(t).margin(1e-14));
}

TEST_CASE("chordal equals 2 sin(spherical/2) on random pairs") {
    for (int i = 0; i < 200; ++i) {
        const SpherePoint p = random_sphere_point(), q = random_sphere_point();
        const double chi = chordal_distance(p, q);
        const double sph = spherical_distance(p, q);
        CHECK(chi == Catch::Approx(2.0 * std::sin(sph / 2.0)).margin(1e-12));
    }
}

TEST_CASE("spherical distance satisfies the triangle inequality") {
    for (int i = 0; i < 300; ++i) {
        const SpherePoint a = random_sphere_point(), b = random_sphere_point(),
                          c = random_sphere_point();
        CHECK(spherical_distance(a, c) <=
              spherical_distance(a, b) + spherical_distance(b, c) + 1e-12);
    }
}

TEST_CASE("mobius apply handles poles and infinity") {
    const MobiusTransform id = MobiusTransform::identity();
    const SpherePoint p(complex(5, 2));
    const SpherePoint r = id.apply(p);
    CHECK(r.finite());
    CHECK(std::abs(r.value - complex(5, 2)) < 1e-15);

    CHECK(MobiusTransform::inversion().apply(SpherePoint(0.0)).at_infinity);

    const MobiusTransform t(complex(1), complex(1), complex(1), complex(-1));
    CHECK(t.apply(SpherePoint(1.0)).at_infinity);  // pole of (z+1)/(z-1)
}

TEST_CASE("mobius compose and inverse") {
    const MobiusTransform t(complex(2, 1), complex(0, 3), complex(1), complex(4));
    const MobiusTransform id = MobiusTransform::identity();
    for (int i = 0; i < 50; ++i) {
        const SpherePoint z = random_sphere_point();
        const SpherePoint a = (id * t).apply(z), b = t.apply(z);
        CHECK(chordal_distance(a, b) < 1e-12);
        const SpherePoint c = (t * t.inverse()).apply(z);
        CHECK(chordal_distance(c, z) < 1e-12);
    }
    // inversion is an involution
    const MobiusTransform inv = MobiusTransform::inversion();
    const SpherePoint w = inv.inverse().apply(SpherePoint(complex(0.3, -2.0)));
    CHECK(std::abs(w.value - 1.0 / complex(0.3, -2.0)) < 1e-14);
    // compose(z+1, 2z) applied to 3 -> 7
    const MobiusTransform shift = MobiusTransform::translation(complex(1.0));
    const MobiusTransform dbl(complex(2), complex(0), complex(0), complex(1));
    CHECK(std::abs((shift * dbl).apply(SpherePoint(3.0)).value - 7.0) < 1e-13);
}

TEST_CASE("degenerate mobius rejected") {
    CHECK_THROWS_AS(MobiusTransform(complex(1), complex(2), complex(2), complex(4)),
                    std::invalid_argument);
}

TEST_CASE("rotation_sending maps p to q and is rigid") {
    SECTION("identity case") {
        const MobiusTransform r = rotation_sending(SpherePoint(0.0), SpherePoint(0.0));
        CHECK(r.is_rotation());
        CHECK(chordal_distance(r.apply(SpherePoint(complex(0.2, 1))),
                               SpherePoint(complex(0.2, 1))) < 1e-14);
    }
    SECTION("zero to infinity") {
        const MobiusTransform r = rotation_sending(SpherePoint(0.0), SpherePoint::infinity());
        CHECK(r.is_rotation());
        CHECK(r.apply(SpherePoint(0.0)).at_infinity);
    }
    SECTION("random pairs, distance preservation") {
        for (int i = 0; i < 100; ++i) {
            const SpherePoint p = random_sphere_point(), q = random_sphere_point();
            const MobiusTransform r = rotation_sending(p, q);
            CHECK(r.is_rotation());
            CHECK(chordal_distance(r.apply(p), q) < 1e-10);
            const SpherePoint x = random_sphere_point(), y = random_sphere_point();
            CHECK(std::abs(spherical_distance(r.apply(x), r.apply(y)) -
                           spherical_distance(x, y)) < 1e-12);
        }
    }
}

TEST_CASE("geodesic arc validation") {
    CHECK_THROWS_AS(GeodesicArc(SpherePoint(1.0), SpherePoint(1.0)), std::invalid_argument);
    CHECK_THROWS_AS(GeodesicArc(SpherePoint(0.0), SpherePoint::infinity()),
                    std::invalid_argument);
    const GeodesicArc k = GeodesicArc::canonical(1.2);
    CHECK(k.length() == Catch::Approx(1.2).margin(1e-12));
}

TEST_CASE("dist_to_arc canonical cases") {
    const double t = pi / 2;
    const GeodesicArc k = GeodesicArc::canonical(t);
    CHECK(dist_to_arc(SpherePoint(std::polar(1.0, 0.1)), k) < 1e-12);  // on the arc
    CHECK(dist_to_arc(SpherePoint(-1.0), k) == Catch::Approx(3 * pi / 4).margin(1e-12));
    const double s = 0.05;
    CHECK(dist_to_arc(SpherePoint(std::polar(1.0, t / 2 + s)), k) ==
          Catch::Approx(s).margin(1e-12));
}

TEST_CASE("dist_to_arc(-1, K_t) = pi - t/2 over a sweep of t") {
    for (int i = 1; i <= 50; ++i) {
        const double t = pi * i / 51.0;
        const GeodesicArc k = GeodesicArc::canonical(t);
        CHECK(dist_to_arc(SpherePoint(-1.0), k) ==
              Catch::Approx(pi - t / 2).margin(1e-11));
    }
}

TEST_CASE("dist_to_arc is rotation invariant") {
    const GeodesicArc k = GeodesicArc::canonical(1.0);
    for (int i = 0; i < 25; ++i) {
        const MobiusTransform r =
            rotation_sending(random_sphere_point(), random_sphere_point());
        const GeodesicArc rk(r.apply(k.endpoint0()), r.apply(k.endpoint1()));
        const SpherePoint p = random_sphere_point();
        CHECK(std::abs(dist_to_arc(r.apply(p), rk) - dist_to_arc(p, k)) < 1e-9);
    }
}

TEST_CASE("arc sup distance check") {
    CHECK_THROWS_AS(arc_sup_distance_check(0.0, 1000), std::invalid_argument);
    CHECK_THROWS_AS(arc_sup_distance_check(pi, 1000), std::invalid_argument);
    CHECK_THROWS_AS(arc_sup_distance_check(1.0, 50), std::invalid_argument);

    const ArcSupCheck c = arc_sup_distance_check(pi / 2, 20000);
    CHECK(c.analytic == Catch::Approx(3 * pi / 4).margin(1e-15));
    CHECK(c.numeric_sup <= c.analytic + 1e-12);
    CHECK(c.numeric_sup > c.analytic - 0.03);

    // The sampled sup tightens as the lattice grows.
    const double gap1 = arc_sup_distance_check(1.0, 5000).analytic -
                        arc_sup_distance_check(1.0, 5000).numeric_sup;
    const double gap2 = arc_sup_distance_check(1.0, 80000).analytic -
                        arc_sup_distance_check(1.0, 80000).numeric_sup;
    CHECK(gap2 < gap1);
    CHECK(gap2 < 0.02);
}
