#pragma once

// Geometry on the Riemann sphere of curvature +1: extended complex points,
// chordal/spherical distances, Moebius transforms and rigid rotations, and
// geodesic arcs with their canonical frame.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace liouville {

using complex = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

// Values with |z| beyond this are indistinguishable from the point at
// infinity at double precision (chordal gap < 1e-150); they collapse to the
// infinity tag so that no formula ever sees a near-overflow float.
inline constexpr double kInfinityClamp = 1e150;

/// A point of the extended complex plane; infinity is a tag, not a big float.
struct SpherePoint {
    complex value{0.0, 0.0};
    bool at_infinity = false;

    SpherePoint() = default;
    SpherePoint(complex v) {  // NOLINT: implicit by design
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) ||
            std::abs(v) > kInfinityClamp) {
            at_infinity = true;
            value = complex(0.0, 0.0);
        } else {
            value = v;
        }
    }
    SpherePoint(double re, double im = 0.0) : SpherePoint(complex(re, im)) {}

    static SpherePoint infinity() {
        SpherePoint p;
        p.at_infinity = true;
        return p;
    }
    bool finite() const { return !at_infinity; }
};

// chi(z,w) = 2|z-w| / sqrt((1+|z|^2)(1+|w|^2)), range [0,2], 2 iff antipodal.
inline double chordal_distance(const SpherePoint& p, const SpherePoint& q) {
    if (p.at_infinity && q.at_infinity) return 0.0;
    if (p.at_infinity) return 2.0 / std::hypot(1.0, std::abs(q.value));
    if (q.at_infinity) return 2.0 / std::hypot(1.0, std::abs(p.value));
    const double num = 2.0 * std::abs(p.value - q.value);
    const double den =
        std::hypot(1.0, std::abs(p.value)) * std::hypot(1.0, std::abs(q.value));
    return std::min(2.0, num / den);
}

/// Great-circle distance, = 2 asin(chordal/2), range [0, pi].
inline double spherical_distance(const SpherePoint& p, const SpherePoint& q) {
    return 2.0 * std::asin(std::clamp(chordal_distance(p, q) / 2.0, 0.0, 1.0));
}

/// z -> (az+b)/(cz+d), stored with determinant normalized to 1.
class MobiusTransform {
  public:
    MobiusTransform() : a_(1.0), b_(0.0), c_(0.0), d_(1.0) {}
    MobiusTransform(complex a, complex b, complex c, complex d)
        : a_(a), b_(b), c_(c), d_(d) {
        const complex det = a_ * d_ - b_ * c_;
        if (std::abs(det) < 1e-14)
            throw std::invalid_argument("MobiusTransform: degenerate coefficients");
        const complex s = std::sqrt(det);
        a_ /= s;
        b_ /= s;
        c_ /= s;
        d_ /= s;
    }

    static MobiusTransform identity() { return MobiusTransform(); }
    static MobiusTransform inversion() { return {complex(0), complex(1), complex(1), complex(0)}; }
    static MobiusTransform translation(complex t) { return {complex(1), t, complex(0), complex(1)}; }

    complex a() const { return a_; }
    complex b() const { return b_; }
    complex c() const { return c_; }
    complex d() const { return d_; }

    SpherePoint apply(const SpherePoint& p) const {
        if (p.at_infinity) {
            if (std::abs(c_) == 0.0) return SpherePoint::infinity();
            return SpherePoint(a_ / c_);
        }
        const complex den = c_ * p.value + d_;
        if (std::abs(den) == 0.0) return SpherePoint::infinity();
        return SpherePoint((a_ * p.value + b_) / den);
    }

    MobiusTransform inverse() const {
        MobiusTransform t;
        t.a_ = d_;
        t.b_ = -b_;
        t.c_ = -c_;
        t.d_ = a_;
        return t;
    }

    // Rigid rotation of the sphere: after det-1 normalization the matrix has
    // the unitary form (az+b)/(-conj(b) z + conj(a)). Sign ambiguity of the
    // normalization does not affect the test.
    bool is_rotation(double tol = 1e-10) const {
        return std::abs(d_ - std::conj(a_)) <= tol &&
               std::abs(c_ + std::conj(b_)) <= tol;
    }

    friend MobiusTransform operator*(const MobiusTransform& lhs,
                                     const MobiusTransform& rhs) {
        MobiusTransform t;
        t.a_ = lhs.a_ * rhs.a_ + lhs.b_ * rhs.c_;
        t.b_ = lhs.a_ * rhs.b_ + lhs.b_ * rhs.d_;
        t.c_ = lhs.c_ * rhs.a_ + lhs.d_ * rhs.c_;
        t.d_ = lhs.c_ * rhs.b_ + lhs.d_ * rhs.d_;
        return t;
    }

  private:
    complex a_, b_, c_, d_;
};

inline SpherePoint mobius_apply(const MobiusTransform& t, const SpherePoint& p) {
    return t.apply(p);
}
inline MobiusTransform mobius_compose(const MobiusTransform& t1,
                                      const MobiusTransform& t2) {
    return t1 * t2;
}
inline MobiusTransform mobius_inverse(const MobiusTransform& t) {
    return t.inverse();
}

/// Rotation taking p to 0: (z-p)/(conj(p) z+1), or z -> -1/z when p = inf.
inline MobiusTransform rotation_to_zero(const SpherePoint& p) {
    if (p.at_infinity)
        return {complex(0), complex(-1), complex(1), complex(0)};
    return {complex(1), -p.value, std::conj(p.value), complex(1)};
}

/// A rigid rotation of the sphere mapping p to q.
inline MobiusTransform rotation_sending(const SpherePoint& p, const SpherePoint& q) {
    return rotation_to_zero(q).inverse() * rotation_to_zero(p);
}

/// Arc of a great circle with length t in (0, pi); endpoints non-antipodal.
class GeodesicArc {
  public:
    GeodesicArc(const SpherePoint& e0, const SpherePoint& e1) : e0_(e0), e1_(e1) {
        length_ = spherical_distance(e0, e1);
        if (length_ < 1e-9)
            throw std::invalid_argument("GeodesicArc: endpoints coincide");
        if (length_ > pi - 1e-9)
            throw std::invalid_argument("GeodesicArc: endpoints antipodal");
        canonical_ = make_canonical_rotation();
    }

    const SpherePoint& endpoint0() const { return e0_; }
    const SpherePoint& endpoint1() const { return e1_; }
    double length() const { return length_; }

    /// Rotation taking the arc onto {e^{i phi} : |phi| <= t/2}, endpoint0 to
    /// e^{-it/2} and endpoint1 to e^{+it/2}.
    const MobiusTransform& canonical_rotation() const { return canonical_; }

    /// Canonical arc of length t centered on 1 along the unit circle.
    static GeodesicArc canonical(double t) {
        if (!(t > 0.0 && t < pi))
            throw std::invalid_argument("GeodesicArc: length must lie in (0, pi)");
        return {SpherePoint(std::polar(1.0, -t / 2.0)),
                SpherePoint(std::polar(1.0, t / 2.0))};
    }

  private:
    MobiusTransform make_canonical_rotation() const {
        const SpherePoint target0(std::polar(1.0, -length_ / 2.0));
        const SpherePoint target1(std::polar(1.0, length_ / 2.0));
        const MobiusTransform r1 = rotation_sending(e0_, target0);
        // Fix target0, spin the image of e1_ onto target1. Both lie at
        // spherical distance t from target0, so in the frame where target0
        // sits at the origin they differ by a phase only.
        const MobiusTransform s = rotation_to_zero(target0);
        const SpherePoint cur = s.apply(r1.apply(e1_));
        const SpherePoint want = s.apply(target1);
        const double theta = std::arg(want.value) - std::arg(cur.value);
        const MobiusTransform spin(std::polar(1.0, theta / 2.0), complex(0),
                                   complex(0), std::polar(1.0, -theta / 2.0));
        return s.inverse() * spin * s * r1;
    }

    SpherePoint e0_, e1_;
    double length_ = 0.0;
    MobiusTransform canonical_;
};

/// min over arc points of the spherical distance from p.
inline double dist_to_arc(const SpherePoint& p, const GeodesicArc& arc) {
    const SpherePoint w = arc.canonical_rotation().apply(p);
    const double t = arc.length();
    if (w.at_infinity || std::abs(w.value) == 0.0) {
        // Equidistant from the whole unit circle.
        return pi / 2.0;
    }
    const double theta = std::arg(w.value);
    const double phi = std::clamp(theta, -t / 2.0, t / 2.0);
    return spherical_distance(w, SpherePoint(std::polar(1.0, phi)));
}

/// Quasi-uniform deterministic sphere sampling (Fibonacci lattice), returned
/// as stereographic images from the north pole.
inline std::vector<SpherePoint> fibonacci_sphere(int n) {
    if (n < 1) throw std::invalid_argument("fibonacci_sphere: n must be positive");
    std::vector<SpherePoint> pts;
    pts.reserve(static_cast<size_t>(n));
    const double golden_angle = pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
        const double zc = 1.0 - (2.0 * k + 1.0) / n;
        const double s = std::sqrt(std::max(0.0, 1.0 - zc * zc));
        const double phi = golden_angle * k;
        pts.emplace_back(complex(s * std::cos(phi), s * std::sin(phi)) /
                         (1.0 - zc));
    }
    return pts;
}

struct ArcSupCheck {
    double numeric_sup;   // max over the lattice of dist_to_arc
    double analytic;      // pi - t/2
};

/// Compares the sampled sup of dist(., K_t) with the closed form pi - t/2.
inline ArcSupCheck arc_sup_distance_check(double t, int n) {
    if (!(t > 0.0 && t < pi))
        throw std::invalid_argument("arc_sup_distance_check: t must lie in (0, pi)");
    if (n < 100)
        throw std::invalid_argument("arc_sup_distance_check: need at least 100 samples");
    const GeodesicArc arc = GeodesicArc::canonical(t);
    double sup = 0.0;
    for (const SpherePoint& p : fibonacci_sphere(n))
        sup = std::max(sup, dist_to_arc(p, arc));
    return {sup, pi - t / 2.0};
}

}  // namespace liouville
