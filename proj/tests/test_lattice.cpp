#include <catch2/catch_amalgamated.hpp>
#include <complex>

#include "latbath/lattice.hpp"

using namespace latbath::lattice;
using Catch::Approx;

TEST_CASE("kind names round-trip") {
    for (Kind k : {Kind::CS, Kind::BCC, Kind::FCC, Kind::Diamond})
        CHECK(kind_from_name(name(k)) == k);
    CHECK_THROWS_AS(kind_from_name("hexagonal"), std::invalid_argument);
}

TEST_CASE("dispersion equals the neighbour-offset Fourier sum") {
    // oracle: omega(k) = -sum_n e^{i k.n} over the tabulated offsets
    for (Kind kind : {Kind::CS, Kind::BCC, Kind::FCC}) {
        auto spec = lattice_info(kind);
        for (int trial = 0; trial < 50; ++trial) {
            KPoint k{grid_k(trial % 7, 7), grid_k((3 * trial) % 11, 11), grid_k((5 * trial) % 13, 13)};
            std::complex<double> s = 0;
            for (const auto& o : spec.neighbour_offsets)
                s += std::polar(1.0, k.k1 * o[0] + k.k2 * o[1] + k.k3 * o[2]);
            CHECK(std::abs(s.imag()) < 1e-12);
            CHECK(dispersion(kind, k) == Approx(-s.real()).margin(1e-12));
        }
    }
}

TEST_CASE("diamond bands from f(k)") {
    auto spec = lattice_info(Kind::Diamond);
    KPoint k{0.7, -1.3, 2.1};
    std::complex<double> f = 0;
    for (const auto& o : spec.neighbour_offsets)
        f += std::polar(1.0, k.k1 * o[0] + k.k2 * o[1] + k.k3 * o[2]);
    CHECK(std::abs(f - diamond_f(k)) < 1e-12);
    auto [lo, hi] = dispersion2(k);
    CHECK(lo == Approx(-std::abs(f)));
    CHECK(hi == Approx(std::abs(f)));
    CHECK_THROWS_AS(dispersion(Kind::Diamond, k), std::invalid_argument);
}

TEST_CASE("band extent matches the sampled extrema") {
    for (Kind kind : {Kind::CS, Kind::BCC, Kind::FCC, Kind::Diamond}) {
        auto [lo, hi] = band_extent(kind);
        double mn = 1e300, mx = -1e300;
        const int N = 24;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                for (int l = 0; l < N; ++l) {
                    KPoint k{grid_k(i, N), grid_k(j, N), grid_k(l, N)};
                    if (kind == Kind::Diamond) {
                        auto [a, b] = dispersion2(k);
                        mn = std::min(mn, a);
                        mx = std::max(mx, b);
                    } else {
                        const double e = dispersion(kind, k);
                        mn = std::min(mn, e);
                        mx = std::max(mx, e);
                    }
                }
        CHECK(mn >= lo - 1e-12);
        CHECK(mx <= hi + 1e-12);
        CHECK(mn == Approx(lo).margin(1e-9));   // extrema on the Gamma-containing grid
        CHECK(mx == Approx(hi).margin(1e-9));
    }
}

TEST_CASE("grid momenta cover [-pi, pi)") {
    CHECK(grid_k(0, 8) == Approx(-M_PI));
    CHECK(grid_k(4, 8) == Approx(0.0).margin(1e-15));
    CHECK(grid_k(7, 8) < M_PI);
}

TEST_CASE("dos histogram normalization and shape") {
    for (Kind kind : {Kind::CS, Kind::BCC, Kind::FCC, Kind::Diamond}) {
        auto h = dos_histogram(kind, 32, 101);
        double s = 0, integral = 0;
        for (std::size_t b = 0; b < h.weights.size(); ++b) {
            s += h.weights[b];
            integral += h.density(b) * h.bin_width();
        }
        CHECK(s == Approx(1.0).margin(1e-12));
        CHECK(integral == Approx(1.0).margin(1e-12));
        CHECK(h.n_modes_total == 32 * 32 * 32 * n_bands(kind));
    }
    // CS is symmetric about the band center; odd bin count keeps the exactly
    // degenerate levels off the bin edges, where half-open binning would break
    // the mirror pairing
    auto h = dos_histogram(Kind::CS, 32, 101);
    for (std::size_t b = 0; b < 50; ++b)
        CHECK(h.weights[b] == Approx(h.weights[100 - b]).margin(1e-12));
    // BCC has its logarithmic singularity at the band center
    auto hb = dos_histogram(Kind::BCC, 48, 101);
    std::size_t peak = 0;
    for (std::size_t b = 1; b < hb.weights.size(); ++b)
        if (hb.weights[b] > hb.weights[peak]) peak = b;
    CHECK(std::abs(static_cast<int>(peak) - 50) <= 1);
    CHECK_THROWS_AS(dos_histogram(Kind::CS, 2, 10), std::invalid_argument);
    CHECK_THROWS_AS(dos_histogram(Kind::CS, 16, 1), std::invalid_argument);
}

TEST_CASE("interpolated DOS is normalized and tracks the exact density") {
    for (Kind kind : {Kind::CS, Kind::Diamond}) {
        auto h = dos_interpolated(kind, 48, 120);
        double s = 0;
        for (double x : h.weights) s += x;
        CHECK(s == Approx(1.0).margin(1e-9));
    }
    // much smoother than the raw histogram: away from the Van Hove points the
    // bin-to-bin variation of a 3D DOS is small
    auto h = dos_interpolated(Kind::CS, 48, 120);
    for (std::size_t b = 0; b + 1 < h.weights.size(); ++b) {
        const double e0 = h.center(b), e1 = h.center(b + 1);
        bool near = false;
        for (double v : {-2.0, 0.0, 2.0})
            if (std::abs(e0 - v) < 0.6 || std::abs(e1 - v) < 0.6) near = true;
        // the sqrt edge tails have a large relative slope far into the band
        for (double v : {-6.0, 6.0})
            if (std::abs(e0 - v) < 1.5 || std::abs(e1 - v) < 1.5) near = true;
        if (near) continue;
        CHECK(std::abs(h.density(b + 1) - h.density(b)) < 0.05 * h.density(b));
    }
    CHECK_THROWS_AS(dos_interpolated(Kind::CS, 2, 10), std::invalid_argument);
}

TEST_CASE("primitive vector geometry") {
    for (Kind kind : {Kind::CS, Kind::BCC, Kind::FCC, Kind::Diamond}) {
        auto s = lattice_info(kind);
        // a_i . b_j = delta_ij (reciprocals in units of 2 pi)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(s.real_primitives[i].dot(s.reciprocal_primitives[j]) ==
                      Approx(i == j ? 1.0 : 0.0).margin(1e-12));
    }
}
