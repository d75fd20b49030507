#pragma once

// Field diagnostics for u = log rho: the defining PDE residual
// Lap(u) + e^{2u}, finite-difference Hessians with a built-in trace
// cross-check, concavity and superlevel-set convexity scans, and the guided
// search for quasiconcavity violations of ODE-ratio maps.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "liouville/developing_map.hpp"
#include "liouville/metric_geometry.hpp"
#include "liouville/wkb.hpp"

namespace liouville {

/// Five-point residual of Lap(u) + e^{2u} at z; O(h^2) for every built-in
/// map since u solves the equation exactly.
inline double liouville_residual(const DevelopingMap& map, complex z, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("liouville_residual: h must be positive");
    const std::array<complex, 5> pts = {z, z + h, z - h, z + complex(0, h),
                                        z - complex(0, h)};
    std::array<double, 5> u;
    u_field_batch(map, z, pts, u);
    const double lap = (u[1] + u[2] + u[3] + u[4] - 4.0 * u[0]) / (h * h);
    return lap + std::exp(2.0 * u[0]);
}

struct HessianSample {
    complex z;
    double hxx = 0.0, hxy = 0.0, hyy = 0.0;
    double eig_min = 0.0, eig_max = 0.0;
    double u = 0.0;
    double trace_residual = 0.0;  // |hxx + hyy + e^{2u}|, the cross-check
};

/// Central second differences of u, symmetrized cross term, eigenvalues
/// sorted. The trace is cross-checked against -e^{2u}; failure of that check
/// signals a cancellation-dominated step and is reported as an error when
/// `validate` is set.
inline HessianSample hessian_u(const DevelopingMap& map, complex z, double h,
                               bool validate = true) {
    if (!(h > 0.0)) throw std::invalid_argument("hessian_u: h must be positive");
    const complex ih(0, h);
    const std::array<complex, 9> pts = {z,          z + h,      z - h,
                                        z + ih,     z - ih,     z + h + ih,
                                        z + h - ih, z - h + ih, z - h - ih};
    std::array<double, 9> u;
    u_field_batch(map, z, pts, u);
    HessianSample s;
    s.z = z;
    s.u = u[0];
    s.hxx = (u[1] - 2.0 * u[0] + u[2]) / (h * h);
    s.hyy = (u[3] - 2.0 * u[0] + u[4]) / (h * h);
    s.hxy = (u[5] - u[6] - u[7] + u[8]) / (4.0 * h * h);
    const double m = 0.5 * (s.hxx + s.hyy);
    const double r = std::hypot(0.5 * (s.hxx - s.hyy), s.hxy);
    s.eig_min = m - r;
    s.eig_max = m + r;
    s.trace_residual = std::abs(s.hxx + s.hyy + std::exp(2.0 * u[0]));
    if (validate) {
        const double scale =
            std::max({1.0, std::abs(s.hxx) + std::abs(s.hyy), std::exp(2.0 * u[0])});
        if (s.trace_residual > 0.05 * scale)
            throw numeric_error("hessian_u: trace cross-check failed (cancellation)");
    }
    return s;
}

/// Picks the finite-difference step minimizing the trace cross-check
/// residual at a few probe points (a small Richardson sweep).
inline double calibrate_fd_step(const DevelopingMap& map,
                                std::span<const complex> probes) {
    const std::array<double, 6> candidates = {2e-2, 1e-2, 5e-3, 2e-3, 1e-3, 5e-4};
    double best_h = candidates[0];
    double best_score = std::numeric_limits<double>::infinity();
    for (const double h : candidates) {
        double score = 0.0;
        bool ok = true;
        for (const complex z : probes) {
            try {
                score += hessian_u(map, z, h, false).trace_residual;
            } catch (const std::exception&) {
                ok = false;
                break;
            }
        }
        if (ok && score < best_score) {
            best_score = score;
            best_h = h;
        }
    }
    return best_h;
}

struct ConcavityScan {
    double fraction_nsd = 0.0;
    double worst_eig = -std::numeric_limits<double>::infinity();
    complex worst_z{0.0};
    double fd_step = 0.0;
    std::vector<HessianSample> samples;  // one per grid node, row-major
};

/// Hessian at every window node; a node counts as negative semidefinite when
/// its largest eigenvalue is at most +1e-8 (difference-noise allowance).
inline ConcavityScan concavity_scan(const DevelopingMap& map, const GridWindow& window,
                                    double fd_step = 0.0) {
    ConcavityScan out;
    if (fd_step <= 0.0) {
        const std::array<complex, 3> probes = {
            window.center, window.center + complex(window.rx * 0.4, window.ry * 0.2),
            window.center - complex(window.rx * 0.3, window.ry * 0.5)};
        fd_step = calibrate_fd_step(map, probes);
    }
    out.fd_step = fd_step;
    out.samples.reserve(window.node_count());
    size_t nsd = 0;
    for (int j = -window.ny(); j <= window.ny(); ++j)
        for (int i = -window.nx(); i <= window.nx(); ++i) {
            const HessianSample s = hessian_u(map, window.node_z(i, j), fd_step);
            if (s.eig_max <= 1e-8) ++nsd;
            if (s.eig_max > out.worst_eig) {
                out.worst_eig = s.eig_max;
                out.worst_z = s.z;
            }
            out.samples.push_back(s);
        }
    out.fraction_nsd = static_cast<double>(nsd) / static_cast<double>(window.node_count());
    return out;
}

struct SuperlevelResult {
    bool pass = true;
    complex z1{0.0}, z2{0.0}, zmid{0.0};  // witness, when pass is false
    double u1 = 0.0, u2 = 0.0, umid = 0.0;
    int pool_size = 0;
    int pairs_tested = 0;
};

/// Samples pairs with u >= c and tests u at midpoints. A witness means
/// u(mid) < c while both endpoints clear c: the superlevel set is not
/// convex. Sampling is seeded and deterministic.
inline SuperlevelResult superlevel_convexity_check(const DevelopingMap& map, double c,
                                                   const GridWindow& window, int samples,
                                                   uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("superlevel_convexity_check: samples < 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(-window.rx, window.rx), uy(-window.ry, window.ry);
    std::vector<complex> pool;
    std::vector<double> pool_u;
    const int max_attempts = samples * 40;
    for (int a = 0; a < max_attempts && static_cast<int>(pool.size()) < std::max(samples, 64);
         ++a) {
        const complex z = window.center + complex(ux(rng), uy(rng));
        const double u = u_field(map, z);
        if (u >= c) {
            pool.push_back(z);
            pool_u.push_back(u);
        }
    }
    if (pool.size() < 2)
        throw std::invalid_argument(
            "superlevel_convexity_check: level set {u >= c} not sampled in the window");
    SuperlevelResult out;
    out.pool_size = static_cast<int>(pool.size());
    std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
    for (int t = 0; t < samples; ++t) {
        const size_t i = pick(rng), j = pick(rng);
        if (i == j) continue;
        const complex mid = 0.5 * (pool[i] + pool[j]);
        const double umid = u_field(map, mid);
        ++out.pairs_tested;
        if (umid < c) {
            out.pass = false;
            out.z1 = pool[i];
            out.z2 = pool[j];
            out.zmid = mid;
            out.u1 = pool_u[i];
            out.u2 = pool_u[j];
            out.umid = umid;
            return out;
        }
    }
    return out;
}

struct WitnessTrial {
    double r = 0.0;
    double direction = 0.0;  // sector bisector (or segment axis) angle
    complex a1{0.0}, a2{0.0};
    double u1 = 0.0, u2 = 0.0, umid = 0.0;
    double gap = 0.0;  // min(u1,u2) - u(mid)
};

struct WitnessReport {
    bool success = false;
    double requested_gap = 0.0;
    complex a1{0.0}, a2{0.0};
    double gap = -std::numeric_limits<double>::infinity();
    std::vector<WitnessTrial> trace;
};

/// Guided search for pairs violating quasiconcavity by more than M:
/// candidates bracket each deep-decay sector of a polynomial-coefficient
/// ratio map, a_j = omega r e^{+-i(pi/(d+2) - delta)} with omega running
/// over the d+2 sector bisectors; the midpoint then lies far down the decay
/// bisector while the endpoints stay near the neutral rays. For the bounded
/// closed-form families the same probe runs on vertical segments and finds
/// nothing (u is concave along them).
inline WitnessReport quasiconcavity_witness(const DevelopingMap& map, double m,
                                            std::span<const double> r_schedule,
                                            double delta) {
    if (!(m > 0.0)) throw std::invalid_argument("quasiconcavity_witness: M must be positive");
    if (!(delta > 0.0) || r_schedule.empty())
        throw std::invalid_argument("quasiconcavity_witness: bad schedule");
    WitnessReport out;
    out.requested_gap = m;

    auto run_trial = [&](double r, double direction, complex a1, complex a2) {
        WitnessTrial t;
        t.r = r;
        t.direction = direction;
        t.a1 = a1;
        t.a2 = a2;
        const complex mid = 0.5 * (a1 + a2);
        t.u1 = u_field(map, a1);
        t.u2 = u_field(map, a2);
        t.umid = u_field(map, mid);
        t.gap = std::min(t.u1, t.u2) - t.umid;
        out.trace.push_back(t);
        if (t.gap > out.gap) {
            out.gap = t.gap;
            out.a1 = a1;
            out.a2 = a2;
        }
        return t.gap > m;
    };

    if (const auto* ode = std::get_if<OdeRatioMap>(&map)) {
        const auto* a = std::get_if<PolynomialCoefficient>(&ode->problem().coefficient);
        if (!a || a->degree() < 1)
            throw std::invalid_argument(
                "quasiconcavity_witness: needs a polynomial coefficient of degree >= 1");
        const int d = a->degree();
        const double half = pi / (d + 2) - delta;
        if (!(half > 0.0))
            throw std::invalid_argument("quasiconcavity_witness: delta too large for the degree");
        const auto bisectors = decay_bisectors(*a);
        for (const double r : r_schedule) {
            for (const double theta : bisectors) {
                const complex a1 = std::polar(r, theta + half);
                const complex a2 = std::polar(r, theta - half);
                if (run_trial(r, theta, a1, a2)) {
                    out.success = true;
                    return out;
                }
            }
        }
        return out;
    }
    if (std::holds_alternative<MathieuRatioMap>(map))
        throw std::invalid_argument(
            "quasiconcavity_witness: polynomial coefficient required");

    // Bounded families: probe vertical segments at several abscissae.
    for (const double r : r_schedule) {
        for (const double x0 : {0.0, 1.0, -1.0, 2.0, -2.0}) {
            const complex a1(x0, r), a2(x0, -r);
            if (run_trial(r, pi / 2, a1, a2)) {
                out.success = true;
                return out;
            }
        }
    }
    return out;
}

}  // namespace liouville
