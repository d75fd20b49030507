#pragma once

// Liouville variable Z = int sqrt(A), WKB comparison solutions
// A^{-1/4} e^{-+iZ}, the reduced-equation perturbation F0, and the sectorial
// decay fit u ~ -c r^{(d+2)/2} cos((d+2)theta/2) for polynomial A.

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "liouville/developing_map.hpp"
#include "liouville/ode_analysis.hpp"
#include "liouville/quadrature.hpp"

namespace liouville {

struct ZContinuation {
    complex z;
    complex zval;  // Z(z) with Z(zref) = 0
    complex log_a; // log A(z) continued along the path (the branch record)
};

namespace detail {

inline double point_segment_distance(complex p, complex a, complex b) {
    const complex d = b - a;
    const double len2 = std::norm(d);
    if (len2 == 0.0) return std::abs(p - a);
    double t = ((p - a) * std::conj(d)).real() / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(p - (a + t * d));
}

}  // namespace detail

/// Z(z) = int_{zref}^{z} A(t)^{1/2} dt with the square-root branch continued
/// along the path (principal at zref). The default path is the straight
/// segment; waypoints insert intermediate vertices. Paths that pass within
/// 1e-6 of a zero of A are rejected.
inline ZContinuation liouville_Z(const PolynomialCoefficient& a, complex z,
                                 complex zref, std::span<const complex> waypoints = {},
                                 const QuadratureOptions& opt = {1e-10, 1e-14, 40}) {
    std::vector<complex> path;
    path.push_back(zref);
    path.insert(path.end(), waypoints.begin(), waypoints.end());
    path.push_back(z);

    const auto zeros = a.roots();
    for (const complex w : zeros)
        for (size_t i = 0; i + 1 < path.size(); ++i)
            if (detail::point_segment_distance(w, path[i], path[i + 1]) < 1e-6)
                throw std::invalid_argument(
                    "liouville_Z: path passes within 1e-6 of a zero of A");

    complex zval(0.0);
    complex cur = zref;
    complex log_a = std::log(a(zref));
    for (size_t i = 0; i + 1 < path.size(); ++i) {
        const complex target = path[i + 1];
        while (std::abs(cur - target) > 0.0) {
            complex next = target;
            const complex a0 = a(cur);
            // Shrink the sub-step until the argument of A moves by less than
            // pi/3 over it (checked at the midpoint too), so the relative
            // square root below stays on the principal branch.
            int depth = 0;
            for (;;) {
                const complex r_end = a(next) / a0;
                const complex r_mid = a(cur + 0.5 * (next - cur)) / a0;
                const bool ok = std::abs(std::arg(r_end)) < pi / 3.0 &&
                                std::abs(std::arg(r_mid)) < pi / 3.0 &&
                                std::abs(r_end) > 0.1 && std::abs(r_end) < 10.0 &&
                                std::abs(r_mid) > 0.1 && std::abs(r_mid) < 10.0;
                if (ok) break;
                next = cur + 0.5 * (next - cur);
                if (++depth > 60)
                    throw numeric_error("liouville_Z: cannot resolve the branch of sqrt(A)");
            }
            const complex base = std::exp(0.5 * log_a);
            const complex dz = next - cur;
            const complex seg = adaptive_simpson(
                [&](double t) {
                    return std::sqrt(a(cur + t * dz) / a0);  // principal, near 1
                },
                0.0, 1.0, opt);
            zval += base * dz * seg;
            log_a += std::log(a(next) / a0);
            cur = next;
        }
    }
    return {z, zval, log_a};
}

struct WkbFrame {
    complex z;
    complex zval;    // Liouville variable Z
    complex log_a;   // continued log A (branch record)
    complex u1, u2;  // A^{-1/4} e^{-iZ}, A^{-1/4} e^{+iZ}
    complex log_u1, log_u2;
};

inline WkbFrame wkb_frame(const PolynomialCoefficient& a, complex z, complex zref,
                          std::span<const complex> waypoints = {},
                          const QuadratureOptions& opt = {1e-10, 1e-14, 40}) {
    const ZContinuation c = liouville_Z(a, z, zref, waypoints, opt);
    WkbFrame f;
    f.z = z;
    f.zval = c.zval;
    f.log_a = c.log_a;
    f.log_u1 = -0.25 * c.log_a - complex(0, 1) * c.zval;
    f.log_u2 = -0.25 * c.log_a + complex(0, 1) * c.zval;
    f.u1 = std::exp(f.log_u1);
    f.u2 = std::exp(f.log_u2);
    return f;
}

/// F0 of the reduced equation W'' + (1 - F0) W = 0 obtained from the
/// Liouville transformation: F0 = A''/(4A^2) - 5 A'^2 / (16 A^3).
inline complex wkb_f0(const PolynomialCoefficient& a, complex z) {
    const PolynomialCoefficient d1 = a.derivative();
    const PolynomialCoefficient d2 = d1.derivative();
    const complex av = a(z);
    if (std::abs(av) == 0.0)
        throw std::invalid_argument("wkb_f0: evaluated at a zero of A");
    const complex ap = d1(z), app = d2(z);
    return app / (4.0 * av * av) - 5.0 * ap * ap / (16.0 * av * av * av);
}

/// Deep-decay directions of u for polynomial A: bisectors of the d+2 sectors
/// cut out by the rays where Im int sqrt(A) is neutral; determined by the
/// degree and the argument of the leading coefficient.
inline std::vector<double> decay_bisectors(const PolynomialCoefficient& a) {
    const int d = a.degree();
    if (d < 1) throw std::invalid_argument("decay_bisectors: need degree >= 1");
    const double base = -std::arg(a.leading()) / (d + 2);
    std::vector<double> out;
    for (int k = 0; k < d + 2; ++k) {
        double th = base + (2.0 * k + 1.0) * pi / (d + 2);
        while (th > pi) th -= 2.0 * pi;
        while (th <= -pi) th += 2.0 * pi;
        out.push_back(th);
    }
    return out;
}

struct SectorFitResult {
    double c;                          // fitted amplitude, u ~ -c r^p cos(p (theta-bisector))
    double exponent_slope;             // log-log slope of -u along the bisector
    std::vector<double> radii;
    std::vector<double> max_rel_residual;  // per radius, relative to c r^p
};

/// Least-squares fit of u(r e^{i theta}) against -c r^{(d+2)/2}
/// cos((d+2)(theta - theta_m)/2) over a sector [theta_lo, theta_hi] centred
/// at a decay bisector theta_m. The sector must lie strictly inside one
/// decay sector; a non-decaying sector is reported as an error.
inline SectorFitResult poly_sector_fit(const DevelopingMap& map,
                                       std::span<const double> radii, double theta_lo,
                                       double theta_hi, int theta_samples = 9) {
    const auto* ode = std::get_if<OdeRatioMap>(&map);
    if (!ode) throw std::invalid_argument("poly_sector_fit: map must be an ODE ratio");
    const auto* a = std::get_if<PolynomialCoefficient>(&ode->problem().coefficient);
    if (!a || a->degree() < 1)
        throw std::invalid_argument("poly_sector_fit: coefficient must be a polynomial of degree >= 1");
    if (radii.size() < 2 || theta_samples < 3 || !(theta_hi > theta_lo))
        throw std::invalid_argument("poly_sector_fit: bad sampling parameters");

    const int d = a->degree();
    const double p = (d + 2) / 2.0;
    const double theta_m = (theta_lo + theta_hi) / 2.0;

    // Decay probe at the outermost bisector point.
    const double r_max = *std::max_element(radii.begin(), radii.end());
    if (u_field(map, std::polar(r_max, theta_m)) > -5.0)
        throw numeric_error("poly_sector_fit: sector does not decay (u bounded below)");

    double sxx = 0.0, sxu = 0.0;
    std::vector<std::vector<double>> us(radii.size());
    for (size_t ri = 0; ri < radii.size(); ++ri) {
        for (int ti = 0; ti < theta_samples; ++ti) {
            const double th =
                theta_lo + (theta_hi - theta_lo) * ti / (theta_samples - 1.0);
            const double u = u_field(map, std::polar(radii[ri], th));
            const double x = std::pow(radii[ri], p) * std::cos(p * (th - theta_m));
            us[ri].push_back(u);
            sxx += x * x;
            sxu += x * u;
        }
    }
    SectorFitResult out;
    out.c = -sxu / sxx;
    out.radii.assign(radii.begin(), radii.end());
    for (size_t ri = 0; ri < radii.size(); ++ri) {
        double worst = 0.0;
        for (int ti = 0; ti < theta_samples; ++ti) {
            const double th =
                theta_lo + (theta_hi - theta_lo) * ti / (theta_samples - 1.0);
            const double x = std::pow(radii[ri], p) * std::cos(p * (th - theta_m));
            worst = std::max(worst, std::abs(us[ri][static_cast<size_t>(ti)] + out.c * x) /
                                        (out.c * std::pow(radii[ri], p)));
        }
        out.max_rel_residual.push_back(worst);
    }
    // Exponent from the bisector line.
    double slx = 0.0, sly = 0.0, slxx = 0.0, slxy = 0.0;
    for (const double r : radii) {
        const double u = u_field(map, std::polar(r, theta_m));
        if (u >= 0.0) throw numeric_error("poly_sector_fit: u not decaying on the bisector");
        const double lx = std::log(r), ly = std::log(-u);
        slx += lx;
        sly += ly;
        slxx += lx * lx;
        slxy += lx * ly;
    }
    const double n = static_cast<double>(radii.size());
    out.exponent_slope = (n * slxy - slx * sly) / (n * slxx - slx * slx);
    return out;
}

struct WkbFitPoint {
    double radius;
    double rel_error;
};

struct WkbFitResult {
    complex c, d;  // fitted coefficients of c*u1 + d*u2
    std::vector<WkbFitPoint> errors;
};

/// Fits an integrated solution of w'' + A w = 0 against the WKB pair on the
/// ray arg z = theta: coefficients are solved from the two fit radii, then
/// the relative error is reported at each test radius.
inline WkbFitResult wkb_fit_on_ray(const LinearOdeProblem& problem, double theta,
                                   std::pair<double, double> fit_radii,
                                   std::span<const double> test_radii,
                                   double zref_radius) {
    const auto* a = std::get_if<PolynomialCoefficient>(&problem.coefficient);
    if (!a) throw std::invalid_argument("wkb_fit_on_ray: polynomial coefficient required");
    const complex dir = std::polar(1.0, theta);
    const complex zref = zref_radius * dir;

    auto solution_at = [&](double r) {
        const std::array<complex, 2> path = {problem.basepoint, r * dir};
        const SolutionFrame f = integrate_along(problem, path);
        if (f.kappa > 600.0)
            throw numeric_error("wkb_fit_on_ray: solution grows beyond double range");
        return f.value(0);
    };
    auto wkb_at = [&](double r) { return wkb_frame(*a, r * dir, zref); };

    const WkbFrame w1 = wkb_at(fit_radii.first);
    const WkbFrame w2 = wkb_at(fit_radii.second);
    const complex s1 = solution_at(fit_radii.first);
    const complex s2 = solution_at(fit_radii.second);
    const complex det = w1.u1 * w2.u2 - w1.u2 * w2.u1;
    if (std::abs(det) == 0.0) throw numeric_error("wkb_fit_on_ray: degenerate fit system");
    WkbFitResult out;
    out.c = (s1 * w2.u2 - s2 * w1.u2) / det;
    out.d = (w1.u1 * s2 - w2.u1 * s1) / det;
    for (const double r : test_radii) {
        // Worst envelope-relative mismatch across one local beat period of
        // e^{2iZ}: the pointwise quotient oscillates with the beat phase and
        // spikes at near-zeros of the solution, so neither would give a
        // well-defined per-radius error.
        const double beat = pi / std::sqrt(std::abs(a->operator()(r * dir)));
        double worst = 0.0;
        for (int k = -2; k <= 2; ++k) {
            const double rk = r + k * beat / 4.0;
            const WkbFrame w = wkb_at(rk);
            const complex s = solution_at(rk);
            const double envelope =
                std::abs(out.c) * std::abs(w.u1) + std::abs(out.d) * std::abs(w.u2);
            worst = std::max(worst, std::abs(out.c * w.u1 + out.d * w.u2 - s) / envelope);
        }
        out.errors.push_back({r, worst});
    }
    return out;
}

}  // namespace liouville
