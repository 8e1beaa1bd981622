#pragma once
// Bath geometries: dispersions, primitive vectors, BZ grids, histogram DOS.
// All momenta are reduced coordinates k_i = k.c_i in [-pi,pi); energies in units of J.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace latbath::lattice {

enum class Kind { CS, BCC, FCC, Diamond };

inline const char* name(Kind k) {
    switch (k) {
        case Kind::CS: return "cs";
        case Kind::BCC: return "bcc";
        case Kind::FCC: return "fcc";
        case Kind::Diamond: return "diamond";
    }
    return "?";
}

inline Kind kind_from_name(const std::string& s) {
    if (s == "cs") return Kind::CS;
    if (s == "bcc") return Kind::BCC;
    if (s == "fcc") return Kind::FCC;
    if (s == "diamond") return Kind::Diamond;
    throw std::invalid_argument("unknown lattice kind: " + s);
}

struct Vec3 {
    double x = 0, y = 0, z = 0;
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double norm() const { return std::sqrt(dot(*this)); }
};

struct KPoint {
    double k1 = 0, k2 = 0, k3 = 0;
};

struct LatticeSpec {
    Kind kind;
    std::array<Vec3, 3> real_primitives;
    std::array<Vec3, 3> reciprocal_primitives;
    std::vector<std::array<int, 3>> neighbour_offsets;
    int bands = 1;
};

inline int n_bands(Kind k) { return k == Kind::Diamond ? 2 : 1; }

inline double dispersion(Kind kind, const KPoint& k) {
    const double c1 = std::cos(k.k1), c2 = std::cos(k.k2), c3 = std::cos(k.k3);
    switch (kind) {
        case Kind::CS: return -2.0 * (c1 + c2 + c3);
        case Kind::BCC: return -2.0 * (c1 + c2 + c3 + std::cos(k.k1 + k.k2 + k.k3));
        case Kind::FCC:
            return -2.0 * (c1 + c2 + c3 + std::cos(k.k1 - k.k2) + std::cos(k.k2 - k.k3) +
                           std::cos(k.k1 - k.k3));
        case Kind::Diamond:
            throw std::invalid_argument("dispersion: Diamond has two bands, use diamond_f/dispersion2");
    }
    return 0;
}

// f(k) = 1 + e^{ik1} + e^{ik2} + e^{ik3}; bands are +-|f|.
inline std::complex<double> diamond_f(const KPoint& k) {
    return 1.0 + std::polar(1.0, k.k1) + std::polar(1.0, k.k2) + std::polar(1.0, k.k3);
}

// (lower, upper) band energies for Diamond.
inline std::pair<double, double> dispersion2(const KPoint& k) {
    const double a = std::abs(diamond_f(k));
    return {-a, a};
}

inline std::pair<double, double> band_extent(Kind kind) {
    switch (kind) {
        case Kind::CS: return {-6.0, 6.0};
        case Kind::BCC: return {-8.0, 8.0};
        case Kind::FCC: return {-12.0, 4.0};
        case Kind::Diamond: return {-4.0, 4.0};
    }
    return {0, 0};
}

inline LatticeSpec lattice_info(Kind kind) {
    LatticeSpec s;
    s.kind = kind;
    s.bands = n_bands(kind);
    auto V = [](double a, double b, double c) { return Vec3{a, b, c}; };
    switch (kind) {
        case Kind::CS:
            s.real_primitives = {V(1, 0, 0), V(0, 1, 0), V(0, 0, 1)};
            s.reciprocal_primitives = {V(1, 0, 0), V(0, 1, 0), V(0, 0, 1)};
            s.neighbour_offsets = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
            break;
        case Kind::BCC:
            s.real_primitives = {V(.5, .5, -.5), V(.5, -.5, .5), V(-.5, .5, .5)};
            s.reciprocal_primitives = {V(1, 1, 0), V(1, 0, 1), V(0, 1, 1)};
            s.neighbour_offsets = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},  {0, -1, 0},
                                   {0, 0, 1},  {0, 0, -1}, {1, 1, 1},  {-1, -1, -1}};
            break;
        case Kind::FCC:
        case Kind::Diamond:
            s.real_primitives = {V(.5, .5, 0), V(.5, 0, .5), V(0, .5, .5)};
            s.reciprocal_primitives = {V(1, 1, -1), V(1, -1, 1), V(-1, 1, 1)};
            if (kind == Kind::FCC)
                s.neighbour_offsets = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},  {0, -1, 0},
                                       {0, 0, 1},  {0, 0, -1}, {1, -1, 0}, {-1, 1, 0},
                                       {0, 1, -1}, {0, -1, 1}, {1, 0, -1}, {-1, 0, 1}};
            else
                // A->B connections of f(k): offsets entering 1 + sum e^{ik_i}
                s.neighbour_offsets = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
            break;
    }
    return s;
}

// Periodic BZ grid momentum component m -> 2 pi m/N - pi.
inline double grid_k(int m, int N) { return 2.0 * M_PI * m / N - M_PI; }

struct DosHistogram {
    std::vector<double> bin_edges;   // N_omega + 1 edges
    std::vector<double> weights;     // fraction of modes per bin, sums to 1
    std::int64_t n_modes_total = 0;

    double bin_width() const { return bin_edges[1] - bin_edges[0]; }
    double center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
    // density D(E) normalized so that integral over the band is 1
    double density(std::size_t i) const { return weights[i] / bin_width(); }
};

inline DosHistogram dos_histogram(Kind kind, int N, int n_bins) {
    if (N < 4) throw std::invalid_argument("dos_histogram: N >= 4 required");
    if (n_bins < 2) throw std::invalid_argument("dos_histogram: N_omega >= 2 required");
    auto [lo, hi] = band_extent(kind);
    DosHistogram h;
    h.bin_edges.resize(n_bins + 1);
    for (int i = 0; i <= n_bins; ++i) h.bin_edges[i] = lo + (hi - lo) * i / n_bins;
    h.weights.assign(n_bins, 0.0);
    const double w = (hi - lo) / n_bins;
    auto put = [&](double e) {
        int b = static_cast<int>((e - lo) / w);   // half-open bins, top edge closed
        if (b == n_bins) b = n_bins - 1;
        if (b < 0) b = 0;
        h.weights[b] += 1.0;
    };
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int l = 0; l < N; ++l) {
                KPoint k{grid_k(i, N), grid_k(j, N), grid_k(l, N)};
                if (kind == Kind::Diamond) {
                    auto [el, eu] = dispersion2(k);
                    put(el);
                    put(eu);
                } else {
                    put(dispersion(kind, k));
                }
            }
    h.n_modes_total = static_cast<std::int64_t>(N) * N * N * n_bands(kind);
    for (auto& x : h.weights) x /= static_cast<double>(h.n_modes_total);
    return h;
}

// Linear-tetrahedron DOS estimate from the same N^3 sample grid. The raw
// histogram carries large discreteness noise from the degenerate level
// structure of the cosine dispersions; the piecewise-linear interpolant of the
// sampled bands smooths it to the interpolation error O(1/N^2).
inline DosHistogram dos_interpolated(Kind kind, int N, int n_bins) {
    if (N < 4) throw std::invalid_argument("dos_interpolated: N >= 4 required");
    if (n_bins < 2) throw std::invalid_argument("dos_interpolated: N_omega >= 2 required");
    auto [lo, hi] = band_extent(kind);
    DosHistogram h;
    h.bin_edges.resize(n_bins + 1);
    for (int i = 0; i <= n_bins; ++i) h.bin_edges[i] = lo + (hi - lo) * i / n_bins;
    h.weights.assign(n_bins, 0.0);
    const double w = (hi - lo) / n_bins;
    const int nband = n_bands(kind);
    const std::size_t M = static_cast<std::size_t>(N) * N * N;
    std::vector<double> e(M * nband);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int l = 0; l < N; ++l) {
                const std::size_t s = (static_cast<std::size_t>(i) * N + j) * N + l;
                KPoint k{grid_k(i, N), grid_k(j, N), grid_k(l, N)};
                if (kind == Kind::Diamond) {
                    auto [el, eu] = dispersion2(k);
                    e[s] = el;
                    e[M + s] = eu;
                } else {
                    e[s] = dispersion(kind, k);
                }
            }
    // cube corners indexed by bits (x, y, z); 6 tetrahedra along the 0-7 diagonal
    static const int kTet[6][4] = {{0, 1, 3, 7}, {0, 2, 3, 7}, {0, 1, 5, 7},
                                   {0, 4, 5, 7}, {0, 2, 6, 7}, {0, 4, 6, 7}};
    const double vtet = 1.0 / (6.0 * static_cast<double>(M) * nband);
    const double tiny = (hi - lo) * 1e-12;
    // Blochl counting function of one tetrahedron, sorted corner energies
    auto count = [](double x, const double* s) {
        if (x <= s[0]) return 0.0;
        if (x >= s[3]) return 1.0;
        const double e21 = s[1] - s[0], e31 = s[2] - s[0], e41 = s[3] - s[0];
        const double e32 = s[2] - s[1], e42 = s[3] - s[1], e43 = s[3] - s[2];
        if (x < s[1]) {
            const double d = x - s[0];
            return d * d * d / (e21 * e31 * e41);
        }
        if (x < s[2]) {
            const double d = x - s[1];
            return (e21 * e21 + 3.0 * e21 * d + 3.0 * d * d -
                    (e31 + e42) / (e32 * e42) * d * d * d) /
                   (e31 * e41);
        }
        const double d = s[3] - x;
        return 1.0 - d * d * d / (e41 * e42 * e43);
    };
    auto wrap = [N](int x) { return x == N ? 0 : x; };
    for (int band = 0; band < nband; ++band)
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                for (int l = 0; l < N; ++l) {
                    double c[8];
                    for (int b = 0; b < 8; ++b) {
                        const std::size_t s =
                            (static_cast<std::size_t>(wrap(i + (b & 1))) * N +
                             wrap(j + ((b >> 1) & 1))) *
                                N +
                            wrap(l + ((b >> 2) & 1));
                        c[b] = e[band * M + s];
                    }
                    for (const auto& t : kTet) {
                        double s4[4] = {c[t[0]], c[t[1]], c[t[2]], c[t[3]]};
                        std::sort(s4, s4 + 4);
                        for (int q = 1; q < 4; ++q)
                            if (s4[q] < s4[q - 1] + tiny) s4[q] = s4[q - 1] + tiny;
                        int b0 = static_cast<int>((s4[0] - lo) / w);
                        int b1 = static_cast<int>((s4[3] - lo) / w);
                        b0 = std::clamp(b0, 0, n_bins - 1);
                        b1 = std::clamp(b1, 0, n_bins - 1);
                        double prev = count(h.bin_edges[b0], s4);
                        for (int b = b0; b <= b1; ++b) {
                            const double cur = count(h.bin_edges[b + 1], s4);
                            h.weights[b] += vtet * (cur - prev);
                            prev = cur;
                        }
                    }
                }
    h.n_modes_total = static_cast<std::int64_t>(M) * nband;
    return h;
}

}  // namespace latbath::lattice
