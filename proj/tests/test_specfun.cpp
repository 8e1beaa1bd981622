#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <complex>

#include "latbath/specfun.hpp"

using namespace latbath::specfun;
using Catch::Approx;

namespace {

// oracle: K(m) = int_0^{pi/2} dtheta / sqrt(1 - m sin^2 theta), adaptive Simpson
cplx k_quadrature(cplx m) {
    const int n = 1 << 17;  // resolves integrand poles as close as Im m ~ 1e-3 to the cut
    cplx s = 0;
    for (int i = 0; i < n; ++i) {
        // midpoint rule is spectrally accurate for this periodic-extension-smooth integrand
        const double th = (i + 0.5) * M_PI / (2.0 * n);
        const double sn = std::sin(th);
        s += 1.0 / std::sqrt(cplx(1.0, 0.0) - m * sn * sn);
    }
    return s * (M_PI / (2.0 * n));
}

}  // namespace

TEST_CASE("principal sqrt branch") {
    CHECK(principal_sqrt(cplx(-4.0, 0.0)) == cplx(0.0, 2.0));
    // negative zero imaginary part is glued to the upper side of the cut
    CHECK(std::abs(principal_sqrt(cplx(-4.0, -0.0)) - cplx(0.0, 2.0)) < 1e-15);
    CHECK(std::abs(principal_sqrt(cplx(-4.0, -1e-12)) + cplx(0.0, 2.0)) < 1e-9);
    CHECK(principal_sqrt(cplx(9.0, 0.0)).real() == Approx(3.0));
}

TEST_CASE("elliptic K against quadrature") {
    const cplx samples[] = {{0.3, 0.0},  {-2.0, 0.0},  {0.5, 0.7},   {0.95, -0.2},
                            {1.4, 0.3},  {1.4, -0.3},  {-5.0, 2.0},  {0.999, 0.05},
                            {2.5, 1e-3}, {2.5, -1e-3}, {-0.1, -0.9}, {0.01, 0.0}};
    for (cplx m : samples) {
        const cplx k = elliptic_k(m);
        const cplx q = k_quadrature(m);
        INFO("m = " << m.real() << " + " << m.imag() << "i");
        CHECK(std::abs(k - q) < 1e-9 * std::abs(q));
    }
}

TEST_CASE("elliptic K special values") {
    CHECK(elliptic_k(cplx(0.0, 0.0)).real() == Approx(M_PI / 2));
    // K(1/2) = Gamma(1/4)^2 / (4 sqrt(pi))
    const double g14 = 3.625609908221908;
    CHECK(elliptic_k(cplx(0.5, 0.0)).real() == Approx(g14 * g14 / (4.0 * std::sqrt(M_PI))));
    CHECK(std::abs(elliptic_k(cplx(0.5, 0.0)).imag()) < 1e-14);
}

TEST_CASE("pair form beats the naive complement near m = 1") {
    // rationalized complement keeps the log singularity accurate
    const cplx mc(1e-12, 3e-13);
    const cplx m = 1.0 - mc;
    const cplx k = elliptic_k_pair(m, mc);
    // K(m) ~ (1/2) ln(16/mc) as m -> 1
    const cplx asym = 0.5 * std::log(16.0 / mc);
    CHECK(std::abs(k - asym) < 1e-10 * std::abs(asym));
    CHECK_THROWS(elliptic_k_pair(cplx(1.0, 0.0), cplx(0.0, 0.0)));
}

TEST_CASE("shifted sheets differ by 2i K(1-m)") {
    const cplx m(1.7, 0.4);
    const cplx kp = elliptic_k(m), kc = elliptic_k(1.0 - m);
    CHECK(std::abs(elliptic_k(m, EllipticSheet::ShiftedPlus) - (kp + cplx(0, 2) * kc)) < 1e-12);
    CHECK(std::abs(elliptic_k(m, EllipticSheet::ShiftedMinus) - (kp - cplx(0, 2) * kc)) < 1e-12);
}

TEST_CASE("Schwarz reflection of K") {
    const cplx m(0.4, 0.8);
    CHECK(std::abs(elliptic_k(std::conj(m)) - std::conj(elliptic_k(m))) < 1e-13);
}

TEST_CASE("lambert W solves w e^w = x") {
    for (double x : {-0.35, -0.1, 0.0, 0.5, 1.0, 3.0, 50.0, 1e6}) {
        const double w = lambert_w(x);
        CHECK(w * std::exp(w) == Approx(x).margin(1e-12 * std::max(1.0, std::abs(x))));
    }
    CHECK(lambert_w(M_E) == Approx(1.0));
    CHECK_THROWS_AS(lambert_w(-1.0), std::domain_error);
}
