#pragma once
// Complete elliptic integral of the first kind K(m) for complex parameter m = k^2,
// via the arithmetic-geometric mean, and the real principal-branch Lambert W.

#include <cmath>
#include <complex>
#include <stdexcept>

namespace latbath::specfun {

using cplx = std::complex<double>;

enum class EllipticSheet { Principal, ShiftedPlus, ShiftedMinus };

// Principal square root with the +0i side of the negative-real cut.
inline cplx principal_sqrt(cplx w) {
    if (w.imag() == 0.0) w = cplx(w.real(), +0.0);
    return std::sqrt(w);
}

namespace detail {

// AGM for K given b0 = sqrt(1-m). At each step pick the sign of the geometric
// mean closest to the arithmetic mean, which tracks the principal branch of K
// (cut on real m in [1, inf)).
inline cplx agm_from_b(cplx b) {
    cplx a = 1.0;
    double prev = std::abs(a - b);
    for (int it = 0; it < 80; ++it) {
        cplx an = 0.5 * (a + b);
        cplx g = principal_sqrt(a * b);
        if (std::abs(an - g) > std::abs(an + g)) g = -g;
        a = an;
        b = g;
        const double d = std::abs(a - b);
        // quadratic convergence stalls at the rounding floor; accept there too
        if (d <= 4e-16 * std::abs(a) || (it > 3 && d >= prev)) return M_PI / (2.0 * a);
        prev = d;
    }
    throw std::runtime_error("elliptic_k: AGM failed to converge");
}

}  // namespace detail

// K with the complement mc = 1-m supplied by the caller. Supplying an mc that
// is computed cancellation-free keeps K accurate near the logarithmic
// singularity m -> 1 (which the self-energy continuations hit at large |z|).
inline cplx elliptic_k_pair(cplx m, cplx mc, EllipticSheet sheet = EllipticSheet::Principal) {
    if (!std::isfinite(m.real()) || !std::isfinite(m.imag()))
        throw std::invalid_argument("elliptic_k: non-finite parameter");
    if (mc == cplx(0.0, 0.0)) throw std::runtime_error("elliptic_k: divergent at m=1");
    cplx k = detail::agm_from_b(principal_sqrt(mc));
    if (sheet == EllipticSheet::Principal) return k;
    const cplx kc = detail::agm_from_b(principal_sqrt(m));
    return sheet == EllipticSheet::ShiftedMinus ? k - cplx(0, 2) * kc : k + cplx(0, 2) * kc;
}

inline cplx elliptic_k(cplx m, EllipticSheet sheet = EllipticSheet::Principal) {
    return elliptic_k_pair(m, 1.0 - m, sheet);
}

// Principal branch W(x) for real x >= -1/e; solves w e^w = x by Halley iteration.
inline double lambert_w(double x) {
    if (!(x >= -1.0 / M_E)) throw std::domain_error("lambert_w: x < -1/e");
    double w;
    if (x < 1.0) {
        // series seed around 0 (good enough as a starting point everywhere here)
        w = x * (1.0 - x + 1.5 * x * x);
        if (x < -0.3) w = -1.0 + std::sqrt(2.0 * (1.0 + M_E * x));  // near the branch point
    } else {
        w = std::log(x);
        if (w > 1.0) w -= std::log(w);
    }
    for (int it = 0; it < 100; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        const double d = ew * (w + 1.0) - f * (w + 2.0) / (2.0 * (w + 1.0));
        const double step = f / d;
        w -= step;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(w))) return w;
    }
    throw std::runtime_error("lambert_w: no convergence");
}

}  // namespace latbath::specfun
