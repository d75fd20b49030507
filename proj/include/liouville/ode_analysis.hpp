#pragma once

// Linear second-order ODE machinery: w'' + A w = 0 integrated along paths in
// the complex plane with an adaptive Dormand-Prince 5(4) pair. Frames are
// stored with a running log-scale kappa so that solutions of magnitude
// e^{+-1000} stay representable. Includes monodromy matrices for periodic
// coefficients and the Mathieu-lambda periodicity score search.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "liouville/dop853_tableau.hpp"
#include "liouville/sphere_geometry.hpp"

namespace liouville {

/// Raised when a numeric procedure cannot reach its tolerance; never returns
/// a silently wrong value instead.
class numeric_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Polynomial with complex coefficients, ascending powers.
struct PolynomialCoefficient {
    std::vector<complex> coeffs;

    PolynomialCoefficient() : coeffs{complex(0.0)} {}
    explicit PolynomialCoefficient(std::vector<complex> c) : coeffs(std::move(c)) {
        if (coeffs.empty()) coeffs.push_back(complex(0.0));
    }

    complex operator()(complex z) const {
        complex acc(0.0);
        for (size_t i = coeffs.size(); i-- > 0;) acc = acc * z + coeffs[i];
        return acc;
    }

    int degree() const {
        for (size_t i = coeffs.size(); i-- > 0;)
            if (std::abs(coeffs[i]) != 0.0) return static_cast<int>(i);
        return 0;
    }

    complex leading() const { return coeffs[static_cast<size_t>(degree())]; }

    PolynomialCoefficient derivative() const {
        std::vector<complex> d;
        for (size_t i = 1; i < coeffs.size(); ++i)
            d.push_back(coeffs[i] * static_cast<double>(i));
        return PolynomialCoefficient(std::move(d));
    }

    /// All roots via Durand-Kerner; empty for (near-)constant polynomials.
    std::vector<complex> roots() const {
        const int d = degree();
        if (d == 0) return {};
        std::vector<complex> c(coeffs.begin(), coeffs.begin() + d + 1);
        const complex lead = c.back();
        for (auto& x : c) x /= lead;
        double bound = 0.0;
        for (const auto& x : c) bound = std::max(bound, std::abs(x));
        std::vector<complex> r(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i)
            r[static_cast<size_t>(i)] = std::polar(1.0 + bound, 2.0 * pi * i / d + 0.5);
        auto eval = [&](complex z) {
            complex acc(0.0);
            for (size_t i = c.size(); i-- > 0;) acc = acc * z + c[i];
            return acc;
        };
        for (int iter = 0; iter < 200; ++iter) {
            double move = 0.0;
            for (int i = 0; i < d; ++i) {
                complex den(1.0);
                for (int j = 0; j < d; ++j)
                    if (j != i) den *= r[static_cast<size_t>(i)] - r[static_cast<size_t>(j)];
                const complex delta = eval(r[static_cast<size_t>(i)]) / den;
                r[static_cast<size_t>(i)] -= delta;
                move = std::max(move, std::abs(delta));
            }
            if (move < 1e-13) break;
        }
        return r;
    }
};

/// A(z) = cos(z/2) + lambda; the potential has period 4*pi in z.
struct MathieuCoefficient {
    complex lambda{0.0};
    double period = 4.0 * pi;

    complex operator()(complex z) const { return std::cos(z / 2.0) + lambda; }
};

using OdeCoefficient = std::variant<PolynomialCoefficient, MathieuCoefficient>;

inline complex eval_coefficient(const OdeCoefficient& a, complex z) {
    return std::visit([&](const auto& c) { return c(z); }, a);
}

/// Basis values (f1, f1', f2, f2') at a point, scaled so the largest modulus
/// stays in [1/2, 2]; true value = e^kappa * scaled value.
struct SolutionFrame {
    complex z{0.0};
    std::array<complex, 4> v{complex(1.0), complex(0.0), complex(0.0), complex(1.0)};
    double kappa = 0.0;

    complex scaled_wronskian() const { return v[1] * v[2] - v[0] * v[3]; }
    /// True Wronskian f1' f2 - f1 f2'; loses accuracy once e^{2 kappa} is
    /// astronomically large (unavoidable cancellation).
    complex wronskian() const { return std::exp(2.0 * kappa) * scaled_wronskian(); }
    /// True component value; may overflow for huge kappa.
    complex value(int i) const { return std::exp(kappa) * v[static_cast<size_t>(i)]; }
    double log_abs(int i) const { return kappa + std::log(std::abs(v[static_cast<size_t>(i)])); }

    void renormalize() {
        double m = 0.0;
        for (const auto& x : v) m = std::max(m, std::abs(x));
        if (m > 2.0 || m < 0.5) {
            for (auto& x : v) x /= m;
            kappa += std::log(m);
        }
    }
};

/// w'' + A w = 0 with a basepoint frame; |Wronskian| is normalized to 1 at
/// construction (overall scale only, so f1/f2 is untouched).
struct LinearOdeProblem {
    OdeCoefficient coefficient;
    complex basepoint{0.0};
    SolutionFrame initial;
    double rel_tol = 1e-10;

    LinearOdeProblem(OdeCoefficient a, complex z0,
                     std::array<complex, 4> frame = {complex(1.0), complex(0.0),
                                                     complex(0.0), complex(1.0)},
                     double tol = 1e-10)
        : coefficient(std::move(a)), basepoint(z0), rel_tol(tol) {
        initial.z = z0;
        initial.v = frame;
        initial.kappa = 0.0;
        const double w = std::abs(initial.scaled_wronskian());
        if (w < 1e-14)
            throw std::invalid_argument("LinearOdeProblem: degenerate basis frame");
        const double s = 1.0 / std::sqrt(w);
        for (auto& x : initial.v) x *= s;
        initial.renormalize();
    }
};

struct IntegrationStats {
    long steps = 0;
    long rejected = 0;
};

namespace detail {

using State = std::array<complex, 4>;

template <class Coef>
inline State ode_rhs(const Coef& a, complex z, complex dz, const State& y) {
    const complex av = eval_coefficient(a, z);
    return {dz * y[1], dz * (-av * y[0]), dz * y[3], dz * (-av * y[2])};
}

// One polyline edge, adaptive DOP853 stepping in the segment parameter
// t in [0,1]; the frame is renormalized in place as it grows.
inline void integrate_edge(const OdeCoefficient& a, SolutionFrame& f, complex zb,
                           double rel_tol, IntegrationStats* stats) {
    const complex za = f.z;
    const complex dz = zb - za;
    const double seg = std::abs(dz);
    if (seg == 0.0) {
        f.z = zb;
        return;
    }
    const double atol = 0.5 * rel_tol;  // absolute, in scaled-frame units
    double t = 0.0;
    // Start conservatively relative to the local oscillation rate sqrt(|A|).
    const double rate = std::sqrt(1.0 + std::abs(eval_coefficient(a, za)));
    double h = std::min(1.0, 0.5 / (seg * std::sqrt(rate) + 1.0));
    State y = f.v;
    State k[13];
    k[0] = ode_rhs(a, za, dz, y);
    while (t < 1.0) {
        h = std::min(h, 1.0 - t);
        State y_new;
        for (int s = 1; s < dop853_stages; ++s) {
            State stage;
            for (int i = 0; i < 4; ++i) {
                complex acc = y[static_cast<size_t>(i)];
                for (int j = 0; j < s; ++j)
                    acc += h * dop853_a[s][j] * k[j][static_cast<size_t>(i)];
                stage[static_cast<size_t>(i)] = acc;
            }
            k[s] = ode_rhs(a, za + (t + dop853_c[s] * h) * dz, dz, stage);
        }
        for (int i = 0; i < 4; ++i) {
            complex acc = y[static_cast<size_t>(i)];
            for (int j = 0; j < dop853_stages; ++j)
                acc += h * dop853_b[j] * k[j][static_cast<size_t>(i)];
            y_new[static_cast<size_t>(i)] = acc;
        }
        // Combined 5th/3rd-order error estimate (Hairer's controller).
        double err5_sq = 0.0, err3_sq = 0.0;
        for (int i = 0; i < 4; ++i) {
            complex e5(0.0), e3(0.0);
            for (int j = 0; j < dop853_stages; ++j) {
                e5 += dop853_e5[j] * k[j][static_cast<size_t>(i)];
                e3 += dop853_e3[j] * k[j][static_cast<size_t>(i)];
            }
            const double sc =
                atol + rel_tol * std::max(std::abs(y[static_cast<size_t>(i)]),
                                          std::abs(y_new[static_cast<size_t>(i)]));
            err5_sq += std::norm(e5 / sc);
            err3_sq += std::norm(e3 / sc);
        }
        double err = 0.0;
        if (err5_sq > 0.0 || err3_sq > 0.0)
            err = h * err5_sq / std::sqrt((err5_sq + 0.01 * err3_sq) * 4.0);
        if (err <= 1.0) {
            t += h;
            k[12] = ode_rhs(a, za + t * dz, dz, y_new);  // FSAL
            y = y_new;
            k[0] = k[12];
            if (stats) ++stats->steps;
            // Renormalize magnitude, rescaling the cached slope as well.
            double m = 0.0;
            for (const auto& x : y) m = std::max(m, std::abs(x));
            if (m > 2.0 || m < 0.5) {
                for (auto& x : y) x /= m;
                for (auto& x : k[0]) x /= m;
                f.kappa += std::log(m);
            }
        } else if (stats) {
            ++stats->rejected;
        }
        const double fac =
            std::clamp(0.9 * std::pow(std::max(err, 1e-12), -1.0 / 8.0), 0.2, 6.0);
        h *= fac;
        if (h < 1e-13 && t < 1.0)
            throw numeric_error("integrate_along: step size underflow near z = (" +
                                std::to_string((za + t * dz).real()) + ", " +
                                std::to_string((za + t * dz).imag()) + ")");
    }
    f.v = y;
    f.z = zb;
}

}  // namespace detail

/// Continues a frame to `to` along the straight segment from its location.
inline SolutionFrame continue_frame(const OdeCoefficient& a, SolutionFrame from,
                                    complex to, double rel_tol,
                                    IntegrationStats* stats = nullptr) {
    detail::integrate_edge(a, from, to, rel_tol, stats);
    return from;
}

/// Integrates the basis along a polyline starting at the problem basepoint.
inline SolutionFrame integrate_along(const LinearOdeProblem& p,
                                     std::span<const complex> path,
                                     double rel_tol_override = 0.0,
                                     IntegrationStats* stats = nullptr) {
    if (path.empty()) throw std::invalid_argument("integrate_along: empty path");
    if (std::abs(path.front() - p.basepoint) > 1e-12)
        throw std::invalid_argument("integrate_along: path must start at the basepoint");
    const double tol = rel_tol_override > 0.0 ? rel_tol_override : p.rel_tol;
    SolutionFrame f = p.initial;
    f.z = path.front();
    for (size_t i = 1; i < path.size(); ++i)
        detail::integrate_edge(p.coefficient, f, path[i], tol, stats);
    return f;
}

/// Fixed-step integration (no adaptivity); used to measure convergence order.
inline SolutionFrame integrate_fixed(const LinearOdeProblem& p,
                                     std::span<const complex> path,
                                     int steps_per_edge) {
    if (path.empty() || steps_per_edge < 1)
        throw std::invalid_argument("integrate_fixed: bad arguments");
    SolutionFrame f = p.initial;
    f.z = path.front();
    using detail::State;
    for (size_t e = 1; e < path.size(); ++e) {
        const complex za = f.z;
        const complex dz = path[e] - za;
        const double h = 1.0 / steps_per_edge;
        State y = f.v;
        for (int n = 0; n < steps_per_edge; ++n) {
            const double t = n * h;
            State k[12];
            k[0] = detail::ode_rhs(p.coefficient, za + t * dz, dz, y);
            for (int s = 1; s < detail::dop853_stages; ++s) {
                State stage;
                for (int i = 0; i < 4; ++i) {
                    complex acc = y[static_cast<size_t>(i)];
                    for (int j = 0; j < s; ++j)
                        acc += h * detail::dop853_a[s][j] * k[j][static_cast<size_t>(i)];
                    stage[static_cast<size_t>(i)] = acc;
                }
                k[s] = detail::ode_rhs(p.coefficient,
                                       za + (t + detail::dop853_c[s] * h) * dz, dz, stage);
            }
            for (int i = 0; i < 4; ++i) {
                complex acc = y[static_cast<size_t>(i)];
                for (int j = 0; j < detail::dop853_stages; ++j)
                    acc += h * detail::dop853_b[j] * k[j][static_cast<size_t>(i)];
                y[static_cast<size_t>(i)] = acc;
            }
            double m = 0.0;
            for (const auto& x : y) m = std::max(m, std::abs(x));
            if (m > 2.0 || m < 0.5) {
                for (auto& x : y) x /= m;
                f.kappa += std::log(m);
            }
        }
        f.v = y;
        f.z = path[e];
    }
    return f;
}

struct Matrix2c {
    complex m00{1.0}, m01{0.0}, m10{0.0}, m11{1.0};
    complex det() const { return m00 * m11 - m01 * m10; }
    complex trace() const { return m00 + m11; }
};

/// Monodromy over one period P for the canonical basis at z0 = 0: columns are
/// (value, derivative) of the two basis solutions continued to P.
inline Matrix2c monodromy_matrix(const OdeCoefficient& a, double period,
                                 double rel_tol = 1e-11) {
    if (!(period > 0.0)) throw std::invalid_argument("monodromy: period must be positive");
    LinearOdeProblem p(a, complex(0.0), {complex(1.0), complex(0.0), complex(0.0), complex(1.0)},
                       rel_tol);
    const std::array<complex, 2> path = {complex(0.0), complex(period)};
    const SolutionFrame f = integrate_along(p, path);
    Matrix2c m;
    m.m00 = f.value(0);
    m.m01 = f.value(2);
    m.m10 = f.value(1);
    m.m11 = f.value(3);
    return m;
}

inline Matrix2c mathieu_monodromy(complex lambda, double period = 4.0 * pi,
                                  double rel_tol = 1e-11) {
    return monodromy_matrix(MathieuCoefficient{lambda, period}, period, rel_tol);
}

struct LambdaScore {
    complex lambda;
    double score;
    complex monodromy_trace;
};

struct LambdaSearchResult {
    std::vector<LambdaScore> table;      // one row per grid value, input order
    std::vector<LambdaScore> candidates; // local minimizers of the score
};

/// Periodicity score: max over probes of the chordal distance between
/// F(z + 2*pi) and F(z), F = f1/f2 for the canonical Mathieu frame. A zero
/// score is the target; the algebraic condition on lambda is left open.
inline double mathieu_periodicity_score(complex lambda,
                                        std::span<const complex> probes,
                                        double rel_tol = 1e-10) {
    LinearOdeProblem p(MathieuCoefficient{lambda}, complex(0.0),
                       {complex(1.0), complex(0.0), complex(0.0), complex(1.0)}, rel_tol);
    auto ratio_at = [&](complex z) -> SpherePoint {
        const std::array<complex, 2> path = {complex(0.0), z};
        const SolutionFrame f = integrate_along(p, path);
        if (std::abs(f.v[2]) == 0.0) return SpherePoint::infinity();
        return SpherePoint(f.v[0] / f.v[2]);
    };
    double score = 0.0;
    for (const complex z : probes)
        score = std::max(score,
                         chordal_distance(ratio_at(z + 2.0 * pi), ratio_at(z)));
    return score;
}

inline LambdaSearchResult mathieu_lambda_search(std::span<const complex> lambdas,
                                                std::span<const complex> probes,
                                                double rel_tol = 1e-10) {
    LambdaSearchResult out;
    out.table.reserve(lambdas.size());
    for (const complex l : lambdas) {
        const double s = mathieu_periodicity_score(l, probes, rel_tol);
        out.table.push_back({l, s, mathieu_monodromy(l).trace()});
    }
    for (size_t i = 0; i < out.table.size(); ++i) {
        const bool left_ok = i == 0 || out.table[i].score < out.table[i - 1].score;
        const bool right_ok =
            i + 1 == out.table.size() || out.table[i].score <= out.table[i + 1].score;
        if (i > 0 && i + 1 < out.table.size() && left_ok && right_ok)
            out.candidates.push_back(out.table[i]);
    }
    return out;
}

}  // namespace liouville
