#pragma once
// Optical-lattice layer: laser interference potentials, plane-wave Bloch bands
// in primitive coordinates, hopping extraction, numerical DOS. Lengths in
// lambda-bar = lambda/(2 pi), energies in recoil units E_R.

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <vector>

#include "lattice.hpp"

namespace latbath::bloch {

using lattice::Kind;
using lattice::Vec3;
using cplx = std::complex<double>;
using IVec = std::array<int, 3>;

// Reciprocal primitive vectors D_j (q = sum m_j D_j labels the potential
// Fourier components; the cubic lattice constant is pi for CS, 2 pi otherwise).
inline std::array<Vec3, 3> reciprocal_basis(Kind kind) {
    switch (kind) {
        case Kind::CS: return {Vec3{2, 0, 0}, Vec3{0, 2, 0}, Vec3{0, 0, 2}};
        case Kind::BCC: return {Vec3{1, 1, 0}, Vec3{1, 0, 1}, Vec3{0, 1, 1}};
        case Kind::FCC:
        case Kind::Diamond: return {Vec3{1, 1, -1}, Vec3{1, -1, 1}, Vec3{-1, 1, 1}};
    }
    return {};
}

struct Beam {
    double amplitude = 1.0;
    Vec3 polarization{0, 0, 1};
    Vec3 propagation{1, 0, 0};
    int frequency_group = 0;  // beams interfere within a group; groups add intensities
};

struct BeamSet {
    std::vector<Beam> beams;
};

struct OpticalPotential {
    Kind kind = Kind::CS;
    double v0 = 0;
    std::map<IVec, cplx> coefficients;  // V_q keyed by integer m, q = sum m_j D_j
    bool separable = false;             // CS cos^2 form: 1D factorization applies

    void check_hermitian() const {
        for (const auto& [m, v] : coefficients) {
            IVec neg{-m[0], -m[1], -m[2]};
            auto it = coefficients.find(neg);
            if (it == coefficients.end() || std::abs(std::conj(it->second) - v) > 1e-12)
                throw std::runtime_error("OpticalPotential: potential is not real (V_-q != V_q*)");
        }
    }
};

// Fourier coefficients of sum_groups |E_group(R)|^2.
inline OpticalPotential interfere(Kind kind, const BeamSet& set) {
    const auto d = reciprocal_basis(kind);
    // invert the (integer) basis to map momentum differences to keys
    Eigen::Matrix3d dm;
    dm << d[0].x, d[1].x, d[2].x, d[0].y, d[1].y, d[2].y, d[0].z, d[1].z, d[2].z;
    const Eigen::Matrix3d inv = dm.inverse();
    OpticalPotential pot;
    pot.kind = kind;
    pot.v0 = 1.0;
    auto add = [&](const Vec3& q, cplx c) {
        if (std::abs(c) < 1e-14) return;
        const Eigen::Vector3d mr = inv * Eigen::Vector3d(q.x, q.y, q.z);
        IVec m;
        for (int i = 0; i < 3; ++i) {
            m[i] = static_cast<int>(std::lround(mr(i)));
            if (std::abs(mr(i) - m[i]) > 1e-9)
                throw std::invalid_argument(
                    "interfere: beam momentum difference is not a reciprocal lattice vector of "
                    "the declared kind");
        }
        pot.coefficients[m] += c;
    };
    for (const auto& b : set.beams) {
        const double p = b.polarization.norm();
        if (std::abs(p - 1.0) > 1e-9)
            throw std::invalid_argument("interfere: polarizations must be unit vectors");
        add({0, 0, 0}, b.amplitude * b.amplitude);
    }
    for (std::size_t i = 0; i < set.beams.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const auto &bi = set.beams[i], &bj = set.beams[j];
            if (bi.frequency_group != bj.frequency_group) continue;
            if (std::abs(bi.propagation.norm() - bj.propagation.norm()) > 1e-9)
                throw std::invalid_argument("interfere: beams in a group must share |p|");
            const double c = bi.amplitude * bj.amplitude * bi.polarization.dot(bj.polarization);
            const Vec3 dq = bi.propagation - bj.propagation;
            add(dq, c);
            add(dq * -1.0, c);
        }
    pot.check_hermitian();
    return pot;
}

// Closed-form coefficient sets of the four standard potentials.
inline OpticalPotential standard_potential(Kind kind, double v0) {
    OpticalPotential pot;
    pot.kind = kind;
    pot.v0 = v0;
    switch (kind) {
        case Kind::CS:
            // V0 (cos^2 x + cos^2 y + cos^2 z)
            pot.coefficients[{0, 0, 0}] = 1.5 * v0;
            for (int a = 0; a < 3; ++a)
                for (int s : {1, -1}) {
                    IVec m{0, 0, 0};
                    m[a] = s;
                    pot.coefficients[m] = 0.25 * v0;
                }
            pot.separable = true;
            break;
        case Kind::BCC:
            // V0 (cos x cos y + cos y cos z + cos x cos z)
            for (IVec m : {IVec{1, 0, 0}, IVec{0, 1, -1}, IVec{0, 1, 0}, IVec{1, 0, -1},
                           IVec{0, 0, 1}, IVec{1, -1, 0}}) {
                pot.coefficients[m] = 0.25 * v0;
                pot.coefficients[{-m[0], -m[1], -m[2]}] = 0.25 * v0;
            }
            break;
        case Kind::FCC:
        case Kind::Diamond:
            // V0 cos x cos y cos z (+ shifted copy for Diamond, f = (pi/2)(1,1,1))
            for (int s1 : {1, -1})
                for (int s2 : {1, -1})
                    for (int s3 : {1, -1}) {
                        // q = (s1,s2,s3); m solves sum m_j D_j = q
                        const IVec m{(s1 + s2) / 2, (s1 + s3) / 2, (s2 + s3) / 2};
                        cplx c = v0 / 8.0;
                        if (kind == Kind::Diamond)
                            c *= 1.0 + std::polar(1.0, 0.5 * M_PI * (s1 + s2 + s3));
                        pot.coefficients[m] = c;
                    }
            break;
    }
    pot.check_hermitian();
    return pot;
}

struct BlochBands {
    Kind kind = Kind::CS;
    int N = 0;
    int q_max = 0;
    int n_bands = 1;
    std::vector<std::vector<double>> energies;  // [band][(i*N+j)*N+l], k_j = 2 pi m/N - pi
};

namespace detail {

// Plane-wave Hamiltonian at fixed reduced k: diagonal kinetic |kappa(k,q)|^2
// plus the sparse potential convolution.
struct PlaneWaveH {
    int Q, L, dim;
    std::vector<double> kin;
    std::vector<std::pair<IVec, cplx>> stencil;

    PlaneWaveH(const OpticalPotential& pot, int q_max, const lattice::KPoint& k) : Q(q_max) {
        L = 2 * Q + 1;
        dim = L * L * L;
        const auto d = reciprocal_basis(pot.kind);
        kin.resize(dim);
        int idx = 0;
        for (int a = -Q; a <= Q; ++a)
            for (int b = -Q; b <= Q; ++b)
                for (int c = -Q; c <= Q; ++c, ++idx) {
                    const Vec3 kap = d[0] * (k.k1 / (2 * M_PI) + a) +
                                     d[1] * (k.k2 / (2 * M_PI) + b) +
                                     d[2] * (k.k3 / (2 * M_PI) + c);
                    kin[idx] = kap.dot(kap);
                }
        for (const auto& [m, v] : pot.coefficients)
            if (!(m[0] == 0 && m[1] == 0 && m[2] == 0) || std::abs(v) > 0)
                stencil.emplace_back(m, v);
    }

    void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
        for (int i = 0; i < dim; ++i) y(i) = kin[i] * x(i);
        for (const auto& [m, v] : stencil) {
            const int a0 = std::max(-Q, -Q + m[0]), a1 = std::min(Q, Q + m[0]);
            const int b0 = std::max(-Q, -Q + m[1]), b1 = std::min(Q, Q + m[1]);
            const int c0 = std::max(-Q, -Q + m[2]), c1 = std::min(Q, Q + m[2]);
            for (int a = a0; a <= a1; ++a)
                for (int b = b0; b <= b1; ++b) {
                    const int row = ((a + Q) * L + (b + Q)) * L;
                    const int src = ((a - m[0] + Q) * L + (b - m[1] + Q)) * L - m[2];
                    for (int c = c0; c <= c1; ++c) y(row + c + Q) += v * x(src + c + Q);
                }
        }
    }

    Eigen::MatrixXcd dense() const {
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
        for (int i = 0; i < dim; ++i) h(i, i) = kin[i];
        for (const auto& [m, v] : stencil)
            for (int a = -Q; a <= Q; ++a)
                for (int b = -Q; b <= Q; ++b)
                    for (int c = -Q; c <= Q; ++c) {
                        const int a2 = a - m[0], b2 = b - m[1], c2 = c - m[2];
                        if (std::abs(a2) > Q || std::abs(b2) > Q || std::abs(c2) > Q) continue;
                        h(((a + Q) * L + b + Q) * L + c + Q,
                          ((a2 + Q) * L + b2 + Q) * L + c2 + Q) += v;
                    }
        return h;
    }
};

// Locally optimal preconditioned solver for the nb lowest eigenvalues.
inline std::vector<double> lowest_eigs(const PlaneWaveH& h, int nb, double vscale) {
    const int dim = h.dim;
    // seeds: unit vectors at the nb smallest kinetic energies
    std::vector<int> order(dim);
    for (int i = 0; i < dim; ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + nb, order.end(),
                      [&](int a, int b) { return h.kin[a] < h.kin[b]; });
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(dim, nb);
    for (int j = 0; j < nb; ++j) x(order[j], j) = 1.0;
    Eigen::MatrixXcd p(dim, 0);
    Eigen::VectorXcd tmp(dim);
    std::vector<double> lam(nb, 0.0);
    // eigenvalue error ~ r^2/gap, so a 1e-7 residual gives ~1e-13 energies;
    // Ritz residuals floor near 1e-7 in double precision for these matrices
    const double tol = 1e-7 * std::max(1.0, vscale);
    double rprev = 1e300;
    int stall = 0;
    for (int it = 0; it < 400; ++it) {
        Eigen::MatrixXcd hx(dim, nb);
        for (int j = 0; j < nb; ++j) {
            h.apply(x.col(j), tmp);
            hx.col(j) = tmp;
        }
        Eigen::MatrixXcd r(dim, nb);
        double rmax = 0;
        for (int j = 0; j < nb; ++j) {
            lam[j] = x.col(j).dot(hx.col(j)).real();
            r.col(j) = hx.col(j) - lam[j] * x.col(j);
            rmax = std::max(rmax, r.col(j).norm());
        }
        if (rmax < tol) return lam;
        stall = rmax > 0.99 * rprev ? stall + 1 : 0;
        if (stall >= 5 && rmax < 1e-5 * std::max(1.0, vscale)) return lam;
        rprev = rmax;
        // kinetic preconditioner
        for (int j = 0; j < nb; ++j)
            for (int i = 0; i < dim; ++i)
                r(i, j) /= std::max(h.kin[i] - lam[j], 0.2 * std::max(1.0, vscale));
        Eigen::MatrixXcd s(dim, x.cols() + r.cols() + p.cols());
        s << x, r, p;
        // orthonormalize, dropping near-dependent directions
        int cols = 0;
        for (int j = 0; j < s.cols(); ++j) {
            Eigen::VectorXcd v = s.col(j);
            for (int pass = 0; pass < 2; ++pass)
                for (int i = 0; i < cols; ++i) v -= s.col(i).dot(v) * s.col(i);
            const double n = v.norm();
            if (n > 1e-8) s.col(cols++) = v / n;
        }
        s.conservativeResize(Eigen::NoChange, cols);
        Eigen::MatrixXcd hs(dim, cols);
        for (int j = 0; j < cols; ++j) {
            h.apply(s.col(j), tmp);
            hs.col(j) = tmp;
        }
        Eigen::MatrixXcd a = s.adjoint() * hs;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es((a + a.adjoint()) / 2.0);
        const Eigen::MatrixXcd y = es.eigenvectors().leftCols(nb);
        const Eigen::MatrixXcd xn = s * y;
        // next search direction: the part of the update outside span(x)
        Eigen::MatrixXcd pn = xn - x * (x.adjoint() * xn);
        x = xn;
        p = pn;
    }
    throw std::runtime_error("solve_bands: eigensolver failed to converge");
}

inline std::vector<double> solve_1d_chain(double v0, int q_max, double kred) {
    // -d2/dx2 + V0 cos^2 x on plane waves e^{i(k+2m)x}
    const int L = 2 * q_max + 1;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(L, L);
    for (int m = -q_max; m <= q_max; ++m) {
        const double kk = kred / (2 * M_PI);
        h(m + q_max, m + q_max) = 4.0 * (kk + m) * (kk + m) + 0.5 * v0;
        if (m < q_max) h(m + q_max, m + q_max + 1) = h(m + q_max + 1, m + q_max) = 0.25 * v0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    return {es.eigenvalues()(0)};
}

}  // namespace detail

inline BlochBands solve_bands(const OpticalPotential& pot, int q_max, int N, int n_bands,
                              bool allow_separable = true) {
    if (q_max < 3) throw std::invalid_argument("solve_bands: q_max >= 3 required");
    if (n_bands < 1 || n_bands > 2) throw std::invalid_argument("solve_bands: n_bands in {1,2}");
    pot.check_hermitian();
    BlochBands out;
    out.kind = pot.kind;
    out.N = N;
    out.q_max = q_max;
    out.n_bands = n_bands;
    out.energies.assign(n_bands, std::vector<double>(static_cast<std::size_t>(N) * N * N));
    if (pot.separable && allow_separable && n_bands == 1) {
        std::vector<double> e1(N);
        for (int m = 0; m < N; ++m)
            e1[m] = detail::solve_1d_chain(pot.v0, q_max, lattice::grid_k(m, N))[0];
        std::size_t idx = 0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                for (int l = 0; l < N; ++l, ++idx) out.energies[0][idx] = e1[i] + e1[j] + e1[l];
        return out;
    }
    double vscale = std::abs(pot.v0);
    for (const auto& [m, v] : pot.coefficients) vscale = std::max(vscale, std::abs(v));
    std::size_t idx = 0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int l = 0; l < N; ++l, ++idx) {
                lattice::KPoint k{lattice::grid_k(i, N), lattice::grid_k(j, N),
                                  lattice::grid_k(l, N)};
                detail::PlaneWaveH h(pot, q_max, k);
                auto lam = detail::lowest_eigs(h, n_bands, vscale);
                for (int b = 0; b < n_bands; ++b) out.energies[b][idx] = lam[b];
            }
    return out;
}

// J_n = (1/N^3) sum_k E_k e^{-i k.n}; two tables (E1 +- E2)/2 for Diamond.
struct HoppingTable {
    std::vector<IVec> offsets;
    std::vector<double> j_same;   // single band J_n, or diamond AA/BB
    std::vector<double> j_cross;  // diamond AB; empty otherwise
};

inline HoppingTable extract_hoppings(const BlochBands& bands, const std::vector<IVec>& offsets) {
    const int N = bands.N;
    HoppingTable t;
    t.offsets = offsets;
    const bool two = bands.n_bands == 2;
    // a real potential has E(k) = E(-k) exactly; the iterative eigensolver
    // leaves noise at its residual level, which for the very narrow deep-lattice
    // bands is not small against the bandwidth. Symmetrize over k <-> -k so the
    // transform is a pure cosine series, and guard the asymmetry against the
    // band spread rather than an absolute threshold.
    std::vector<std::vector<double>> e(bands.n_bands,
                                       std::vector<double>(static_cast<std::size_t>(N) * N * N));
    for (int b = 0; b < bands.n_bands; ++b) {
        double asym = 0, mn = 1e300, mx = -1e300;
        std::size_t idx = 0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                for (int l = 0; l < N; ++l, ++idx) {
                    const std::size_t m =
                        (static_cast<std::size_t>((N - i) % N) * N + (N - j) % N) * N + (N - l) % N;
                    const double a = bands.energies[b][idx], bb = bands.energies[b][m];
                    e[b][idx] = 0.5 * (a + bb);
                    asym = std::max(asym, std::abs(a - bb));
                    mn = std::min(mn, a);
                    mx = std::max(mx, a);
                }
        if (asym > std::max(1e-8, 1e-2 * (mx - mn)))
            throw std::runtime_error("extract_hoppings: complex hopping from a real potential");
    }
    for (const auto& n : offsets) {
        for (int c : n)
            if (std::abs(c) >= N) throw std::invalid_argument("extract_hoppings: offset outside grid");
        double same = 0, cross = 0;
        std::size_t idx = 0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                for (int l = 0; l < N; ++l, ++idx) {
                    const double ph = -(lattice::grid_k(i, N) * n[0] + lattice::grid_k(j, N) * n[1] +
                                        lattice::grid_k(l, N) * n[2]);
                    const double w = std::cos(ph);
                    if (two) {
                        same += w * 0.5 * (e[0][idx] + e[1][idx]);
                        cross += w * 0.5 * (e[0][idx] - e[1][idx]);
                    } else {
                        same += w * e[0][idx];
                    }
                }
        const double norm = static_cast<double>(N) * N * N;
        t.j_same.push_back(same / norm);
        if (two) t.j_cross.push_back(cross / norm);
    }
    return t;
}

// Histogram DOS of the solved bands; the band grid is first refined 4x by
// periodic trilinear interpolation to smooth small-N results.
inline lattice::DosHistogram numerical_dos(const BlochBands& bands, int n_bins, int refine = 4) {
    const int N = bands.N, M = N * refine;
    std::vector<std::vector<double>> fine;
    for (const auto& e : bands.energies) {
        std::vector<double> f(static_cast<std::size_t>(M) * M * M);
        std::size_t idx = 0;
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j)
                for (int l = 0; l < M; ++l, ++idx) {
                    const double x = static_cast<double>(i) / refine, y = static_cast<double>(j) / refine,
                                 z = static_cast<double>(l) / refine;
                    const int i0 = static_cast<int>(x), j0 = static_cast<int>(y), l0 = static_cast<int>(z);
                    const double fx = x - i0, fy = y - j0, fz = z - l0;
                    double acc = 0;
                    for (int di = 0; di < 2; ++di)
                        for (int dj = 0; dj < 2; ++dj)
                            for (int dl = 0; dl < 2; ++dl) {
                                const double w = (di ? fx : 1 - fx) * (dj ? fy : 1 - fy) *
                                                 (dl ? fz : 1 - fz);
                                acc += w * e[((static_cast<std::size_t>((i0 + di) % N)) * N +
                                              (j0 + dj) % N) * N + (l0 + dl) % N];
                            }
                    f[idx] = acc;
                }
        fine.push_back(std::move(f));
    }
    double lo = fine[0][0], hi = fine[0][0];
    for (const auto& f : fine)
        for (double e : f) {
            lo = std::min(lo, e);
            hi = std::max(hi, e);
        }
    lattice::DosHistogram h;
    h.bin_edges.resize(n_bins + 1);
    for (int i = 0; i <= n_bins; ++i) h.bin_edges[i] = lo + (hi - lo) * i / n_bins;
    h.weights.assign(n_bins, 0.0);
    const double w = (hi - lo) / n_bins;
    for (const auto& f : fine)
        for (double e : f) {
            int b = static_cast<int>((e - lo) / w);
            b = std::clamp(b, 0, n_bins - 1);
            h.weights[b] += 1.0;
        }
    h.n_modes_total = 0;
    for (const auto& f : fine) h.n_modes_total += static_cast<std::int64_t>(f.size());
    for (auto& x : h.weights) x /= static_cast<double>(h.n_modes_total);
    return h;
}

// Sup-norm distance between the solved (rescaled) DOS and the ideal
// nearest-neighbour DOS, excluding the 3 bins nearest each singular energy.
inline double dos_distance(const BlochBands& bands, int n_bins, int n_ideal,
                           const std::vector<double>& singular_energies) {
    const int N = bands.N;
    // rescale: fit onsite and NN hopping, map onto the ideal -2J sum-cos model
    std::vector<IVec> offs{{0, 0, 0}};
    const auto spec = lattice::lattice_info(bands.kind);
    for (const auto& o : spec.neighbour_offsets) offs.push_back(o);
    auto hop = extract_hoppings(bands, offs);
    const double j0 = hop.j_same[0];
    double j1 = 0;
    for (std::size_t i = 1; i < offs.size(); ++i) j1 += hop.j_same[i];
    j1 /= static_cast<double>(offs.size() - 1);
    if (std::abs(j1) < 1e-14) throw std::runtime_error("dos_distance: vanishing NN hopping");
    BlochBands resc = bands;
    for (auto& band : resc.energies)
        for (auto& e : band) e = -(e - j0) / j1;  // ideal convention: omega = -sum_n e^{ikn}
    auto [blo, bhi] = lattice::band_extent(bands.kind);
    auto num = numerical_dos(resc, n_bins);
    auto ideal = lattice::dos_histogram(bands.kind, n_ideal, n_bins);
    // resample the numerical histogram density onto the ideal bin centers
    double dist = 0;
    for (int b = 0; b < n_bins; ++b) {
        const double c = ideal.center(b);
        bool skip = false;
        const double wb = ideal.bin_width();
        for (double s : singular_energies)
            if (std::abs(c - s) < 3.0 * wb) skip = true;
        if (skip || c < num.bin_edges.front() || c > num.bin_edges.back()) continue;
        int nb = static_cast<int>((c - num.bin_edges.front()) / num.bin_width());
        nb = std::clamp(nb, 0, static_cast<int>(num.weights.size()) - 1);
        dist = std::max(dist, std::abs(num.density(nb) - ideal.density(b)));
    }
    (void)blo;
    (void)bhi;
    (void)N;
    return dist;
}

}  // namespace latbath::bloch
