#pragma once

// Adaptive Simpson quadrature for smooth integrands on a real interval,
// used for sigma-lengths of segments and for path integrals of sqrt(A).

#include <cmath>
#include <complex>
#include <stdexcept>

namespace liouville {

struct QuadratureOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-13;  // floor so that near-zero integrals terminate
    int max_depth = 40;
};

namespace detail {

template <class F, class V>
V simpson_recurse(F&& f, double a, double m, double b, V fa, V fm, V fb, V whole,
                  double rel_tol, double abs_tol, int depth, int max_depth) {
    const double lm = (a + m) / 2.0, rm = (m + b) / 2.0;
    const V flm = f(lm), frm = f(rm);
    const V left = (flm * 4.0 + fa + fm) * ((m - a) / 6.0);
    const V right = (frm * 4.0 + fm + fb) * ((b - m) / 6.0);
    const V sum = left + right;
    const double err = std::abs(sum - whole);
    if (err <= 15.0 * (abs_tol + rel_tol * std::abs(sum)))
        return sum + (sum - whole) / 15.0;
    if (depth >= max_depth)
        throw std::runtime_error("adaptive_simpson: interval depth cap exceeded");
    return simpson_recurse(f, a, lm, m, fa, flm, fm, left, rel_tol, abs_tol / 2.0,
                           depth + 1, max_depth) +
           simpson_recurse(f, m, rm, b, fm, frm, fb, right, rel_tol, abs_tol / 2.0,
                           depth + 1, max_depth);
}

}  // namespace detail

/// Integrates f over [a, b]; f may return double or std::complex<double>.
template <class F>
auto adaptive_simpson(F&& f, double a, double b, const QuadratureOptions& opt = {})
    -> decltype(f(a)) {
    using V = decltype(f(a));
    if (a == b) return V{};
    const double m = (a + b) / 2.0;
    const V fa = f(a), fm = f(m), fb = f(b);
    const V whole = (fm * 4.0 + fa + fb) * ((b - a) / 6.0);
    return detail::simpson_recurse(f, a, m, b, fa, fm, fb, whole, opt.rel_tol,
                                   opt.abs_tol, 0, opt.max_depth);
}

}  // namespace liouville
