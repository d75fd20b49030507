#pragma once

// Developing maps f and the conformal factor rho = 2|f'|/(1+|f|^2) of the
// curvature-+1 metric they pull back, with u = log rho as the primary
// (overflow-safe) output. Map families: Moebius, L(e^{az+b}), e^z + t,
// ratios f1/f2 of solutions of w'' + A w = 0, and the Mathieu-potential
// ratio. ODE-defined maps evaluate through a lattice of cached frames so
// that nearby evaluations share one continuation path.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <variant>
#include <vector>

#include "liouville/ode_analysis.hpp"
#include "liouville/sphere_geometry.hpp"

namespace liouville {

struct MobiusMap {
    MobiusTransform t;
};

/// f(z) = L(e^{az+b}), a != 0.
struct ExpFamilyMap {
    MobiusTransform l;
    complex a;
    complex b;
    ExpFamilyMap(MobiusTransform l_, complex a_, complex b_) : l(l_), a(a_), b(b_) {
        if (std::abs(a) == 0.0)
            throw std::invalid_argument("ExpFamilyMap: parameter a must be nonzero");
    }
};

/// f(z) = e^z + t. Kept separate from ExpFamilyMap for its closed forms.
struct ShiftedExpMap {
    complex t;
};

/// f = f1/f2 for a unit-Wronskian basis, evaluated by continuation from a
/// deterministic lattice of anchor frames (parent chains toward the
/// basepoint, so cached values do not depend on evaluation order).
class OdeRatioMap {
  public:
    explicit OdeRatioMap(LinearOdeProblem p, double anchor_spacing = 0.25)
        : problem_(std::move(p)),
          spacing_(anchor_spacing),
          cache_(std::make_shared<Cache>()) {}

    const LinearOdeProblem& problem() const { return problem_; }

    SolutionFrame frame_at(complex z) const { return frame_near(z, z); }

    /// Frame at z continued from the anchor cell of `hint`; callers batch
    /// stencil evaluations through one hint so the continuation error is a
    /// common perturbation of the basis rather than per-point noise.
    SolutionFrame frame_near(complex hint, complex z) const {
        return continue_frame(problem_.coefficient, anchor_frame(cell_of(hint)), z,
                              problem_.rel_tol);
    }

  private:
    struct Cell {
        int64_t i, j;
    };
    struct Cache {
        std::mutex mu;
        std::unordered_map<uint64_t, SolutionFrame> frames;
    };

    Cell cell_of(complex z) const {
        const complex d = (z - problem_.basepoint) / spacing_;
        return {std::llround(d.real()), std::llround(d.imag())};
    }
    complex cell_center(Cell c) const {
        return problem_.basepoint +
               spacing_ * complex(static_cast<double>(c.i), static_cast<double>(c.j));
    }
    static uint64_t key_of(Cell c) {
        return (static_cast<uint64_t>(static_cast<uint32_t>(c.i)) << 32) |
               static_cast<uint64_t>(static_cast<uint32_t>(c.j));
    }
    static Cell parent_of(Cell c) {
        if (std::llabs(c.i) >= std::llabs(c.j) && c.i != 0)
            return {c.i - (c.i > 0 ? 1 : -1), c.j};
        return {c.i, c.j - (c.j > 0 ? 1 : -1)};
    }

    SolutionFrame anchor_frame(Cell c) const {
        if (c.i == 0 && c.j == 0) return problem_.initial;
        {
            std::lock_guard<std::mutex> lock(cache_->mu);
            auto it = cache_->frames.find(key_of(c));
            if (it != cache_->frames.end()) return it->second;
        }
        // Materialize the missing tail of the parent chain, root to leaf.
        std::vector<Cell> chain{c};
        SolutionFrame base = problem_.initial;
        for (;;) {
            const Cell p = parent_of(chain.back());
            if (p.i == 0 && p.j == 0) break;
            bool found = false;
            {
                std::lock_guard<std::mutex> lock(cache_->mu);
                auto it = cache_->frames.find(key_of(p));
                if (it != cache_->frames.end()) {
                    base = it->second;
                    found = true;
                }
            }
            if (found) break;
            chain.push_back(p);
        }
        SolutionFrame f = base;
        for (size_t i = chain.size(); i-- > 0;) {
            f = continue_frame(problem_.coefficient, f, cell_center(chain[i]),
                               problem_.rel_tol);
            std::lock_guard<std::mutex> lock(cache_->mu);
            cache_->frames.emplace(key_of(chain[i]), f);
        }
        return f;
    }

    LinearOdeProblem problem_;
    double spacing_;
    std::shared_ptr<Cache> cache_;
};

/// Ratio of solutions of w'' + (cos(z/2) + lambda) w = 0.
struct MathieuRatioMap {
    complex lambda;
    double period;
    OdeRatioMap ode;

    explicit MathieuRatioMap(complex lambda_, double period_ = 4.0 * pi,
                             std::array<complex, 4> frame = {complex(1.0), complex(0.0),
                                                             complex(0.0), complex(1.0)},
                             double tol = 1e-10)
        : lambda(lambda_),
          period(period_),
          ode(LinearOdeProblem(MathieuCoefficient{lambda_, period_}, complex(0.0), frame,
                               tol)) {}
};

using DevelopingMap =
    std::variant<MobiusMap, ExpFamilyMap, ShiftedExpMap, OdeRatioMap, MathieuRatioMap>;

struct MetricSample {
    complex z;
    SpherePoint f;
    double rho;
    double u;
};

namespace detail {

inline SpherePoint eval_mobius(const MobiusTransform& t, complex z) {
    return t.apply(SpherePoint(z));
}

inline SpherePoint eval_exp_family(const ExpFamilyMap& m, complex z) {
    const complex w = m.a * z + m.b;
    const double x = w.real();
    if (x > 300.0) {
        // f = (alpha + beta/E) / (gamma + delta/E) with 1/E tiny.
        const complex e1 = std::exp(-w);
        const complex den = m.l.c() + m.l.d() * e1;
        if (std::abs(den) == 0.0) return SpherePoint::infinity();
        return SpherePoint((m.l.a() + m.l.b() * e1) / den);
    }
    const complex e = std::exp(w);
    const complex den = m.l.c() * e + m.l.d();
    if (std::abs(den) == 0.0) return SpherePoint::infinity();
    return SpherePoint((m.l.a() * e + m.l.b()) / den);
}

inline SpherePoint eval_shifted_exp(const ShiftedExpMap& m, complex z) {
    if (z.real() > 700.0) return SpherePoint::infinity();
    return SpherePoint(std::exp(z) + m.t);
}

inline SpherePoint eval_ode_ratio(const SolutionFrame& f) {
    if (std::abs(f.v[2]) == 0.0) return SpherePoint::infinity();
    return SpherePoint(f.v[0] / f.v[2]);
}

inline double u_mobius(const MobiusTransform& t, complex z) {
    // rho = 2|det| / (|az+b|^2 + |cz+d|^2) with det = 1.
    return std::log(2.0) -
           std::log(std::norm(t.a() * z + t.b()) + std::norm(t.c() * z + t.d()));
}

inline double u_exp_family(const ExpFamilyMap& m, complex z) {
    const complex w = m.a * z + m.b;
    const double x = w.real();
    const double lead = std::log(2.0 * std::abs(m.a));
    if (x >= 0.0) {
        const complex e1 = std::exp(-w);
        const double s = std::norm(m.l.c() + m.l.d() * e1) +
                         std::norm(m.l.a() + m.l.b() * e1);
        return lead - x - std::log(s);
    }
    const complex e = std::exp(w);
    const double s =
        std::norm(m.l.c() * e + m.l.d()) + std::norm(m.l.a() * e + m.l.b());
    return lead + x - std::log(s);
}

inline double u_shifted_exp(const ShiftedExpMap& m, complex z) {
    const double x = z.real();
    if (x >= 0.0) {
        const complex e1 = std::exp(-z);
        const double s = std::exp(-2.0 * x) + std::norm(1.0 + m.t * e1);
        return std::log(2.0) - x - std::log(s);
    }
    return std::log(2.0) + x - std::log1p(std::norm(std::exp(z) + m.t));
}

inline double u_from_frame(const SolutionFrame& f) {
    const double s = std::norm(f.v[0]) + std::norm(f.v[2]);
    if (s == 0.0)
        throw numeric_error("u_field: frame has vanishing f1 and f2 (lost basis)");
    return std::log(2.0) - 2.0 * f.kappa - std::log(s);
}

}  // namespace detail

inline SpherePoint eval_f(const DevelopingMap& m, complex z) {
    struct V {
        complex z;
        SpherePoint operator()(const MobiusMap& m) const { return detail::eval_mobius(m.t, z); }
        SpherePoint operator()(const ExpFamilyMap& m) const { return detail::eval_exp_family(m, z); }
        SpherePoint operator()(const ShiftedExpMap& m) const { return detail::eval_shifted_exp(m, z); }
        SpherePoint operator()(const OdeRatioMap& m) const {
            return detail::eval_ode_ratio(m.frame_at(z));
        }
        SpherePoint operator()(const MathieuRatioMap& m) const {
            return detail::eval_ode_ratio(m.ode.frame_at(z));
        }
    };
    return std::visit(V{z}, m);
}

inline double u_field(const DevelopingMap& m, complex z) {
    struct V {
        complex z;
        double operator()(const MobiusMap& m) const { return detail::u_mobius(m.t, z); }
        double operator()(const ExpFamilyMap& m) const { return detail::u_exp_family(m, z); }
        double operator()(const ShiftedExpMap& m) const { return detail::u_shifted_exp(m, z); }
        double operator()(const OdeRatioMap& m) const {
            return detail::u_from_frame(m.frame_at(z));
        }
        double operator()(const MathieuRatioMap& m) const {
            return detail::u_from_frame(m.ode.frame_at(z));
        }
    };
    return std::visit(V{z}, m);
}

/// u at z, continued from the anchor cell of `hint` for ODE-defined maps.
inline double u_field_near(const DevelopingMap& m, complex hint, complex z) {
    if (const auto* r = std::get_if<OdeRatioMap>(&m))
        return detail::u_from_frame(r->frame_near(hint, z));
    if (const auto* r = std::get_if<MathieuRatioMap>(&m))
        return detail::u_from_frame(r->ode.frame_near(hint, z));
    return u_field(m, z);
}

/// Batch of u values sharing one anchor; finite-difference stencils use this
/// so that continuation error perturbs the basis coherently (the perturbed
/// basis is still an exact solution pair, so identities in u survive).
inline void u_field_batch(const DevelopingMap& m, complex hint,
                          std::span<const complex> zs, std::span<double> out) {
    for (size_t i = 0; i < zs.size(); ++i) out[i] = u_field_near(m, hint, zs[i]);
}

inline double conformal_factor(const DevelopingMap& m, complex z) {
    return std::exp(u_field(m, z));
}

inline MetricSample sample(const DevelopingMap& m, complex z) {
    const double u = u_field(m, z);
    return {z, eval_f(m, z), std::exp(u), u};
}

/// R o f for a rigid rotation R; the conformal factor is unchanged.
inline DevelopingMap rotate_map(const DevelopingMap& m, const MobiusTransform& r) {
    if (!r.is_rotation())
        throw std::invalid_argument("rotate_map: transform is not a rigid rotation");
    struct V {
        const MobiusTransform& r;
        DevelopingMap operator()(const MobiusMap& m) const { return MobiusMap{r * m.t}; }
        DevelopingMap operator()(const ExpFamilyMap& m) const {
            return ExpFamilyMap(r * m.l, m.a, m.b);
        }
        DevelopingMap operator()(const ShiftedExpMap& m) const {
            // e^z + t = (translation by t)(e^z).
            return ExpFamilyMap(r * MobiusTransform::translation(m.t), complex(1.0),
                                complex(0.0));
        }
        LinearOdeProblem rotated_problem(const LinearOdeProblem& p) const {
            const auto& f = p.initial.v;
            // New basis rows (alpha f1 + beta f2, gamma f1 + delta f2): a
            // det-1 change of basis preserves the Wronskian.
            std::array<complex, 4> g = {r.a() * f[0] + r.b() * f[2],
                                        r.a() * f[1] + r.b() * f[3],
                                        r.c() * f[0] + r.d() * f[2],
                                        r.c() * f[1] + r.d() * f[3]};
            return LinearOdeProblem(p.coefficient, p.basepoint, g, p.rel_tol);
        }
        DevelopingMap operator()(const OdeRatioMap& m) const {
            return OdeRatioMap(rotated_problem(m.problem()));
        }
        DevelopingMap operator()(const MathieuRatioMap& m) const {
            MathieuRatioMap out = m;
            out.ode = OdeRatioMap(rotated_problem(m.ode.problem()));
            return out;
        }
    };
    return std::visit(V{r}, m);
}

namespace detail {

inline std::array<complex, 5> fd_f_values(const DevelopingMap& m, complex z, double h) {
    const std::array<complex, 5> pts = {z - 2.0 * h, z - h, z, z + h, z + 2.0 * h};
    std::array<SpherePoint, 5> f;
    const OdeRatioMap* ode = std::get_if<OdeRatioMap>(&m);
    if (const auto* mr = std::get_if<MathieuRatioMap>(&m)) ode = &mr->ode;
    if (ode) {
        // Continue once to the stencil center, then take tiny hops from it:
        // the shared continuation error perturbs the basis coherently (the
        // perturbed ratio is still an exact developing map), and the hops
        // are short enough to stay at machine-level noise.
        const SolutionFrame center = ode->frame_at(z);
        for (int i = 0; i < 5; ++i)
            f[static_cast<size_t>(i)] = eval_ode_ratio(
                continue_frame(ode->problem().coefficient, center,
                               pts[static_cast<size_t>(i)], ode->problem().rel_tol));
    } else {
        for (int i = 0; i < 5; ++i)
            f[static_cast<size_t>(i)] = eval_f(m, pts[static_cast<size_t>(i)]);
    }
    // Differentiate in the chart that rotates f(z) to 0: the Schwarzian is
    // Moebius-invariant and in this chart the stencil values stay small and
    // the first derivative is the spherical derivative rho/2, so pole
    // proximity cannot degrade the conditioning. The chart is applied in the
    // raw form (f - f0)/(conj(f0) f + 1) so the subtraction of nearby values
    // stays exact and adds no noise floor.
    std::array<complex, 5> out;
    const SpherePoint f0 = f[2];
    for (int i = 0; i < 5; ++i) {
        const SpherePoint& p = f[static_cast<size_t>(i)];
        complex g;
        if (f0.at_infinity) {
            if (p.at_infinity) {
                g = complex(0.0);
            } else if (std::abs(p.value) == 0.0) {
                throw numeric_error(
                    "numeric_schwarzian: stencil spans antipodal values; reduce the step");
            } else {
                g = -1.0 / p.value;
            }
        } else if (p.at_infinity) {
            if (std::abs(f0.value) == 0.0)
                throw numeric_error(
                    "numeric_schwarzian: stencil spans antipodal values; reduce the step");
            g = 1.0 / std::conj(f0.value);
        } else {
            g = (p.value - f0.value) / (std::conj(f0.value) * p.value + 1.0);
        }
        out[static_cast<size_t>(i)] = g;
    }
    return out;
}

inline complex schwarzian_once(const DevelopingMap& m, complex z, double h) {
    const auto f = fd_f_values(m, z, h);
    const complex d1 = (f[3] - f[1]) / (2.0 * h);
    const complex d2 = (f[3] - 2.0 * f[2] + f[1]) / (h * h);
    const complex d3 = (f[4] - 2.0 * f[3] + 2.0 * f[1] - f[0]) / (2.0 * h * h * h);
    if (std::abs(d1) == 0.0)
        throw numeric_error("numeric_schwarzian: vanishing first derivative estimate");
    const complex q = d2 / d1;
    return d3 / d1 - 1.5 * q * q;
}

}  // namespace detail

/// Central finite-difference Schwarzian (f''/f')' - (f''/f')^2 / 2, error
/// O(h^2); cross-checked against the 2h estimate so a bad step is reported
/// rather than returned.
inline complex numeric_schwarzian(const DevelopingMap& m, complex z, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("numeric_schwarzian: h must be positive");
    const complex s_h = detail::schwarzian_once(m, z, h);
    const complex s_2h = detail::schwarzian_once(m, z, 2.0 * h);
    if (std::abs(s_h - s_2h) > 0.25 * std::max(1.0, std::abs(s_h)))
        throw numeric_error(
            "numeric_schwarzian: consistency check failed (step too small or too large)");
    return s_h;
}

}  // namespace liouville
