#pragma once
// Single-emitter self-energies Sigma(z) for the four baths, analytic (elliptic
// integrals, all Riemann-sheet regions) and brute-force (k-sums), plus collective
// self-energies and Markovian quantities. Internally J = 1; values are returned in
// units of g^2/J with g = 1 unless stated otherwise.

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <vector>

#include "latbath/lattice.hpp"
#include "latbath/specfun.hpp"

namespace latbath::selfenergy {

using lattice::Kind;
using specfun::cplx;
using specfun::EllipticSheet;

struct SheetRegion {
    Kind kind;
    int index = 1;  // 1-based, left to right
};

// Interior region boundaries on the real axis (also the location of the band
// edges / Van Hove kinks that the continuation regions attach to).
inline const std::vector<double>& region_bounds(Kind kind) {
    static const std::vector<double> cs{-6, -2, 0, 2, 6};
    static const std::vector<double> bcc{-8, 0, 8};
    static const std::vector<double> fcc{-12, 0, 4};
    static const std::vector<double> dia{-4, -2, 0, 2, 4};
    switch (kind) {
        case Kind::CS: return cs;
        case Kind::BCC: return bcc;
        case Kind::FCC: return fcc;
        case Kind::Diamond: return dia;
    }
    return cs;
}

inline int n_regions(Kind kind) { return static_cast<int>(region_bounds(kind).size()) + 1; }

// Energies where the inverse-Laplace contour needs a vertical detour. For CS the
// interior point E=0 is a region boundary but the two continuations join
// analytically there, so it is not a detour.
inline const std::vector<double>& detour_energies(Kind kind) {
    static const std::vector<double> cs{-6, -2, 2, 6};
    static const std::vector<double> bcc{-8, 0, 8};
    static const std::vector<double> fcc{-12, 0, 4};
    static const std::vector<double> dia{-4, -2, 0, 2, 4};
    switch (kind) {
        case Kind::CS: return cs;
        case Kind::BCC: return bcc;
        case Kind::FCC: return fcc;
        case Kind::Diamond: return dia;
    }
    return cs;
}

// Region containing Re z = re; points exactly on a boundary land in the right region.
inline SheetRegion region_of(Kind kind, double re) {
    const auto& b = region_bounds(kind);
    int idx = 1;
    for (double x : b)
        if (re >= x) ++idx;
    return {kind, idx};
}

namespace detail {

inline cplx csqrt(cplx w, bool flip) {
    cplx s = specfun::principal_sqrt(w);
    return flip ? -s : s;
}

constexpr double pi2 = M_PI * M_PI;

// The elliptic parameter m drifts logarithmically close to 1 at large |z| on
// several continued sheets, so every kernel below evaluates both m and its
// complement mc = 1-m through cancellation-free (rationalized) expressions and
// hands the pair to elliptic_k_pair.

// CS regions: boundaries -6,-2,0,2,6. flipA on sqrt(1-36/z^2) in II..V,
// flipB on sqrt(1-4/z^2) in III/IV; III/IV also switch the elliptic sheet
// depending on which side of the K-cut m lands on.
inline cplx sigma_cs(cplx z, int reg) {
    const bool flipA = reg >= 2 && reg <= 5;
    const bool flipB = reg == 3 || reg == 4;
    const cplx z2 = z * z;
    const cplx sAp = specfun::principal_sqrt(1.0 - 36.0 / z2);
    const cplx sBp = specfun::principal_sqrt(1.0 - 4.0 / z2);
    // A = 1 + sA, B = 1 - sB with the region flips applied
    const cplx A = flipA ? (36.0 / z2) / (1.0 + sAp) : 1.0 + sAp;
    const cplx B = flipB ? 1.0 + sBp : (4.0 / z2) / (1.0 + sBp);
    const cplx xi = specfun::principal_sqrt(B) / specfun::principal_sqrt(A);
    const cplx den = std::pow(1.0 - xi, 3) * (1.0 + 3.0 * xi);
    const cplx m = 16.0 * xi * xi * xi / den;
    cplx tau;  // 3 xi - 1 (vanishes at large |z| when only flipA acts)
    if (flipA && !flipB) {
        const cplx nine = (-32.0 / z2) / ((sAp + sBp) * (1.0 + sBp));  // 9 xi^2 - 1
        tau = nine / (3.0 * xi + 1.0);
    } else {
        tau = 3.0 * xi - 1.0;
    }
    const cplx opx = 1.0 + xi;
    const cplx mc = -tau * opx * opx * opx / den;  // 1 - m via m - 1 = tau (1+xi)^3 / den
    EllipticSheet sheet = EllipticSheet::Principal;
    if (reg == 3 && m.imag() > 0) sheet = EllipticSheet::ShiftedMinus;
    if (reg == 4 && m.imag() < 0) sheet = EllipticSheet::ShiftedPlus;
    const cplx K = specfun::elliptic_k_pair(m, mc, sheet);
    return (4.0 / (pi2 * z)) * (1.0 - 9.0 * xi * xi * xi * xi) / den * K * K;
}

inline cplx sigma_bcc(cplx z, int reg) {
    const bool flip = reg == 2 || reg == 3;
    const cplx s = specfun::principal_sqrt(1.0 - 64.0 / (z * z));
    const cplx half_sum = 0.5 * (1.0 + s);
    const cplx half_diff = (32.0 / (z * z)) / (1.0 + s);  // (1 - s)/2, rationalized
    const cplx m = flip ? half_sum : half_diff;
    const cplx K = specfun::elliptic_k_pair(m, flip ? half_diff : half_sum);
    return (4.0 / (pi2 * z)) * K * K;
}

inline cplx sigma_fcc(cplx z, int reg) {
    const bool flipA = reg == 2;  // sqrt(1+12/z)
    const bool flipB = reg == 3;  // sqrt(1-4/z)
    const cplx sAp = specfun::principal_sqrt(1.0 + 12.0 / z);
    const cplx sBp = specfun::principal_sqrt(1.0 - 4.0 / z);
    // xi = (-1 + sB)/(1 + sA) with flips; both factors rationalized
    const cplx nu = flipB ? -1.0 - sBp : (-4.0 / z) / (1.0 + sBp);
    const cplx de = flipA ? (-12.0 / z) / (1.0 + sAp) : 1.0 + sAp;
    const cplx xi = nu / de;
    const cplx den = std::pow(1.0 - xi, 3) * (1.0 + 3.0 * xi);
    const cplx m = 16.0 * xi * xi * xi / den;
    cplx tau, opx;  // 3 xi - 1 and 1 + xi, each stable in its limit
    if (flipA) {  // xi -> 1/3 at large |z|
        const cplx diff = (16.0 / z) / (sAp + sBp);  // sA' - sB'
        const cplx nine = diff * (2.0 + sAp + sBp) / ((1.0 + sBp) * (1.0 + sBp));  // 9 xi^2 - 1
        tau = nine / (3.0 * xi + 1.0);
        opx = 1.0 + xi;
    } else if (flipB) {  // xi -> -1 at large |z|
        opx = (16.0 / z) / ((sAp + sBp) * (1.0 + sAp));
        tau = 3.0 * xi - 1.0;
    } else {
        tau = 3.0 * xi - 1.0;
        opx = 1.0 + xi;
    }
    const cplx mc = -tau * opx * opx * opx / den;
    const cplx K = specfun::elliptic_k_pair(m, mc);
    const cplx a = 1.0 + 3.0 * xi * xi;
    return (4.0 / (pi2 * z)) * a * a / den * K * K;
}

inline cplx sigma_diamond(cplx z, int reg) {
    if (z == cplx(0.0, 0.0)) return 0.0;  // exact zero at the singular gap
    if (std::abs(z) < 1e-3) {
        // Logarithmic branch point at the gap: Sigma = -(3z/16pi^2)(2 log(z/8) - i pi)^2
        // with the log branch continued from the physical boundary values. Left
        // regions (index <= 3) wind across the negative real axis; the sheet
        // boundary is the negative imaginary axis. Relative error O(|z|^2 ln^2|z|).
        double th = std::arg(z);
        if (reg <= 3 && th < 0.5 * M_PI) th += 2.0 * M_PI;
        const cplx q = 2.0 * cplx(std::log(std::abs(z) / 8.0), th) - cplx(0, M_PI);
        return -(3.0 * z / (16.0 * pi2)) * q * q;
    }
    const bool flip4 = reg == 3 || reg == 4;  // sqrt(4-16/z^2)
    const bool flip1 = reg >= 2 && reg <= 5;  // sqrt(1-16/z^2)
    const cplx z2 = z * z;
    const cplx s4 = csqrt(4.0 - 16.0 / z2, flip4);
    const cplx s1 = csqrt(1.0 - 16.0 / z2, flip1);
    const cplx m = 0.5 - (4.0 / z2) * s4 - 0.25 * (2.0 - 16.0 / z2) * s1;
    cplx mc = 0.5 + (4.0 / z2) * s4 + 0.25 * (2.0 - 16.0 / z2) * s1;
    if (std::abs(z) > 8.0) {
        // At large |z| the naive m (or mc) cancels through order z^-4 and is
        // ~16/z^6; use forms rationalized to all orders. w = 1/z^2,
        // a = sqrt(1-4w) = s4p/2, b = sqrt(1-16w) = s1p (principal values).
        const cplx w = 1.0 / z2;
        const cplx a = specfun::principal_sqrt(1.0 - 4.0 * w);
        const cplx b = specfun::principal_sqrt(1.0 - 16.0 * w);
        const cplx d1 = 1.0 + (1.0 - 8.0 * w) * b;
        if (flip4 == flip1) {
            // small quantity = 1/2 - 4w s4p - (1/4)(2-16w) s1p
            const cplx d2 = (2.0 + w * (-20.0 + 64.0 * w)) + a * d1;
            const cplx d3 = (2.0 + w * (-40.0 + w * (208.0 - 256.0 * w))) +
                            2.0 * (1.0 - 4.0 * w) * (1.0 - 8.0 * w) * b;
            const cplx r =
                512.0 * w * w * w *
                (1.0 + w * (-20.0 + w * (164.0 + w * (-640.0 + 1024.0 * w))));
            const cplx small = r / (d1 * d2 * d3);
            if (flip4) mc = small;   // regions 3/4: m -> 1
            else {
                mc = 1.0 - small;    // regions 1/6: m -> 0
                return (4.0 / (pi2 * z)) * (s4 - s1) *
                       specfun::elliptic_k_pair(small, mc) *
                       specfun::elliptic_k_pair(small, mc);
            }
        } else {
            // regions 2/5 (flip1 only): mc = 4w [s4p + 4(1-10w+32w^2)/d1]
            mc = 4.0 * w * (2.0 * a + 4.0 * (1.0 + w * (-10.0 + 32.0 * w)) / d1);
        }
    }
    const cplx K = specfun::elliptic_k_pair(m, mc);
    return (4.0 / (pi2 * z)) * (s4 - s1) * K * K;
}

}  // namespace detail

// Sigma(z) in units g^2/J on the given sheet region (region 1 or the last region
// are the physical sheet). Real z exactly at a region boundary is a non-analytic
// point of the piecewise definition and is rejected.
inline cplx sigma(Kind kind, cplx z, int region) {
    if (region < 1 || region > n_regions(kind))
        throw std::invalid_argument("sigma: region index out of range");
    if (z.imag() == 0.0) {
        for (double b : region_bounds(kind))
            if (z.real() == b && !(kind == Kind::Diamond && b == 0.0))
                throw std::domain_error("sigma: non-analytic point, offset z from the real axis");
    }
    switch (kind) {
        case Kind::CS: return detail::sigma_cs(z, region);
        case Kind::BCC: return detail::sigma_bcc(z, region);
        case Kind::FCC: return detail::sigma_fcc(z, region);
        case Kind::Diamond: return detail::sigma_diamond(z, region);
    }
    return 0;
}

// Physical-sheet value (valid for Im z != 0, and for real z outside the band).
inline cplx sigma_physical(Kind kind, cplx z) { return sigma(kind, z, 1); }

// Analytic continuation of the upper boundary value into the lower half plane,
// region chosen by Re z. This is the function whose poles/residues drive the
// long-time dynamics; it is analytic across non-detour region boundaries.
inline cplx sigma_continued(Kind kind, cplx z) {
    if (z.imag() > 0.0) return sigma_physical(kind, z);
    return sigma(kind, z, region_of(kind, z.real()).index);
}

struct ComplexSelfEnergy {
    cplx z;       // units J
    cplx value;   // units g^2/J included, i.e. actual energy value
    SheetRegion region;
    double g = 1.0, J = 1.0;
};

inline ComplexSelfEnergy sigma_analytic(Kind kind, cplx z, SheetRegion region, double g = 1.0,
                                        double J = 1.0) {
    if (region.kind != kind) throw std::invalid_argument("sigma_analytic: region/kind mismatch");
    ComplexSelfEnergy r;
    r.z = z;
    r.region = region;
    r.g = g;
    r.J = J;
    r.value = g * g / J * sigma(kind, z / J, region.index);
    return r;
}

// Discrete k-sum on an N^3 grid; units g^2/J with g=J=1.
inline cplx sigma_brute(Kind kind, cplx z, int N) {
    if (N < 16) throw std::invalid_argument("sigma_brute: N >= 16 required");
    if (z.imag() == 0.0) {
        auto [lo, hi] = lattice::band_extent(kind);
        if (z.real() >= lo && z.real() <= hi)
            throw std::domain_error("sigma_brute: real z inside the band, supply Im z != 0");
    }
    cplx acc = 0.0;
    for (int i = 0; i < N; ++i) {
        cplx plane = 0.0;
        for (int j = 0; j < N; ++j)
            for (int l = 0; l < N; ++l) {
                lattice::KPoint k{lattice::grid_k(i, N), lattice::grid_k(j, N),
                                  lattice::grid_k(l, N)};
                if (kind == Kind::Diamond) {
                    const double a2 = std::norm(lattice::diamond_f(k));
                    plane += z / (z * z - a2);
                } else {
                    plane += 1.0 / (z - lattice::dispersion(kind, k));
                }
            }
        acc += plane;
    }
    return acc / (static_cast<double>(N) * N * N);
}

// Printed closed-form expansions near the special spectral points.
enum class Expansion { BccCenter, FccUpperEdge, DiamondGap };

// FccUpperEdge: Sigma(4J + x + i0+), argument is x (may be negative).
// BccCenter: continued Sigma(0+ - iy) just below the band-center detour, argument is y > 0.
// DiamondGap: Sigma(E + i0+) near the singular gap, argument is E.
inline cplx sigma_expansion(Expansion which, double arg) {
    using std::log;
    switch (which) {
        case Expansion::FccUpperEdge: {
            const double x = arg;
            const double L = log(std::abs(x) / 64.0);
            const double re = 3.0 / (16.0 * detail::pi2) * ((x < 0 ? -detail::pi2 : 0.0) + L * L);
            const double im = x < 0 ? 3.0 / (8.0 * M_PI) * L : 0.0;  // <= 0: decay into the band
            return {re, im};
        }
        case Expansion::BccCenter: {
            const double y = arg;
            if (y <= 0) throw std::invalid_argument("sigma_expansion: y > 0 required");
            const double L = log(y / 64.0);
            return {log(64.0 / y) / (2.0 * M_PI), (detail::pi2 - L * L) / (4.0 * detail::pi2)};
        }
        case Expansion::DiamondGap: {
            const double E = arg;
            if (E == 0) return 0.0;
            // (3E/16pi^2)[ln(64 e^pi/E^2) ln(E^2 e^pi/64) - 2 pi i sgn(E) ln(64/E^2)]
            const double L = log(E * E / 64.0);
            const double pref = 3.0 * E / (16.0 * detail::pi2);
            return {pref * (detail::pi2 - L * L), pref * 2.0 * M_PI * (E > 0 ? L : -L)};
        }
    }
    return 0;
}

enum class CollectiveMode { Single, SymPair, AntiPair, Subradiant8 };

struct CollectiveQuery {
    CollectiveMode mode = CollectiveMode::Single;
    std::array<int, 3> n12{0, 0, 0};  // pair separation, primitive coordinates
    int n = 1;                        // subradiant scale
};

// Two-emitter cross self-energy Sigma_12 (units g^2/J).
inline cplx sigma_pair_cross(Kind kind, const std::array<int, 3>& n12, cplx z, int N) {
    if (kind == Kind::Diamond)
        throw std::invalid_argument("sigma_pair_cross: pair modes need a symmetric single-band dispersion");
    cplx acc = 0.0;
    for (int i = 0; i < N; ++i) {
        cplx plane = 0.0;
        for (int j = 0; j < N; ++j)
            for (int l = 0; l < N; ++l) {
                lattice::KPoint k{lattice::grid_k(i, N), lattice::grid_k(j, N),
                                  lattice::grid_k(l, N)};
                const double ph = n12[0] * k.k1 + n12[1] * k.k2 + n12[2] * k.k3;
                plane += std::polar(1.0, ph) / (z - lattice::dispersion(kind, k));
            }
        acc += plane;
    }
    return acc / (static_cast<double>(N) * N * N);
}

// Collective self-energy of the 8-emitter subradiant state on BCC (units g^2/J).
inline cplx sigma_subradiant(int n, cplx z, int N) {
    cplx acc = 0.0;
    for (int i = 0; i < N; ++i) {
        cplx plane = 0.0;
        for (int j = 0; j < N; ++j)
            for (int l = 0; l < N; ++l) {
                lattice::KPoint k{lattice::grid_k(i, N), lattice::grid_k(j, N),
                                  lattice::grid_k(l, N)};
                const double om = lattice::dispersion(Kind::BCC, k);
                // corner-parity signs: sum_j s_j e^{ik r_j} = 2i [sin 2n(k1+k2+k3)
                // - sin 2nk1 - sin 2nk2 - sin 2nk3] = -8i sin(n q1) sin(n q2) sin(n q3)
                // in cartesian momenta; vanishes on the omega = 0 surface
                const double s = std::sin(2 * n * (k.k1 + k.k2 + k.k3)) - std::sin(2 * n * k.k1) -
                                 std::sin(2 * n * k.k2) - std::sin(2 * n * k.k3);
                plane += (0.5 * s * s) / (z - om);  // |.|^2/8
            }
        acc += plane;
    }
    return acc / (static_cast<double>(N) * N * N);
}

inline cplx sigma_collective(Kind kind, const CollectiveQuery& q, cplx z, int N) {
    switch (q.mode) {
        case CollectiveMode::Single: return sigma_brute(kind, z, N);
        case CollectiveMode::SymPair:
            return sigma_brute(kind, z, N) + sigma_pair_cross(kind, q.n12, z, N);
        case CollectiveMode::AntiPair:
            return sigma_brute(kind, z, N) - sigma_pair_cross(kind, q.n12, z, N);
        case CollectiveMode::Subradiant8:
            if (kind != Kind::BCC)
                throw std::invalid_argument("sigma_collective: Subradiant8 is BCC-only");
            return sigma_subradiant(q.n, z, N);
    }
    return 0;
}

struct MarkovParams {
    double delta_omega = 0;  // Lamb shift, Re Sigma(Delta + i0+)
    double gamma = 0;        // decay rate, -2 Im Sigma(Delta + i0+)
    double gamma_fgr = 0;    // 2 pi g^2 D(Delta) from the interpolated DOS
};

inline constexpr double kEta = 1e-8;  // realization of i0+

inline MarkovParams markov_params(Kind kind, double Delta, double g = 1.0,
                                  const lattice::DosHistogram* dos = nullptr) {
    const cplx s = g * g * sigma_physical(kind, cplx(Delta, kEta));
    MarkovParams m;
    m.delta_omega = s.real();
    m.gamma = -2.0 * s.imag();
    lattice::DosHistogram local;
    if (!dos) {
        local = lattice::dos_interpolated(kind, 64, 200);
        dos = &local;
    }
    auto [lo, hi] = lattice::band_extent(kind);
    if (Delta >= lo && Delta <= hi) {
        auto& e = dos->bin_edges;
        std::size_t b = std::min<std::size_t>(
            dos->weights.size() - 1,
            static_cast<std::size_t>((Delta - e.front()) / dos->bin_width()));
        m.gamma_fgr = 2.0 * M_PI * g * g * dos->density(b);
    }
    return m;
}

}  // namespace latbath::selfenergy
