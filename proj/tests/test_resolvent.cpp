#include <catch2/catch_amalgamated.hpp>
#include <complex>

#include "latbath/resolvent.hpp"

using namespace latbath;
using namespace latbath::resolvent;
using specfun::cplx;
using lattice::Kind;
using Catch::Approx;

namespace {

const Pole* find_near(const std::vector<Pole>& poles, cplx z, double tol = 1e-3) {
    for (const auto& p : poles)
        if (std::abs(p.z - z) < tol) return &p;
    return nullptr;
}

}  // namespace

TEST_CASE("region intervals") {
    auto [a, b] = region_interval(Kind::CS, 1);
    CHECK(a == -std::numeric_limits<double>::infinity());
    CHECK(b == -6.0);
    auto [c, d] = region_interval(Kind::CS, 6);
    CHECK(c == 6.0);
    CHECK(d == std::numeric_limits<double>::infinity());
    auto [e, f] = region_interval(Kind::BCC, 2);
    CHECK(e == -8.0);
    CHECK(f == 0.0);
}

TEST_CASE("deep bound state pole and residue (CS)") {
    auto poles = find_poles(Kind::CS, -10.0, 1.0);
    const Pole* bs = find_near(poles, cplx(-10.105848, 0.0));
    REQUIRE(bs != nullptr);
    CHECK(bs->kind == PoleKind::BS);
    CHECK(bs->residue.real() == Approx(0.988032).margin(1e-4));
    CHECK(std::abs(bs->residue.imag()) < 1e-6);
}

TEST_CASE("unstable pole (CS, Delta = -3, g = 1.5)") {
    auto poles = find_poles(Kind::CS, -3.0, 1.5);
    const Pole* up = find_near(poles, cplx(-3.702974, -0.369896));
    REQUIRE(up != nullptr);
    CHECK(up->kind == PoleKind::UP);
    CHECK(up->residue.real() == Approx(0.924058).margin(1e-4));
    CHECK(up->residue.imag() == Approx(-0.136046).margin(1e-4));
}

TEST_CASE("seam pole at the CS band center (Delta = 0, g = 1)") {
    auto poles = find_poles(Kind::CS, 0.0, 1.0);
    const Pole* up = find_near(poles, cplx(0.0, -0.492516), 1e-3);
    REQUIRE(up != nullptr);
    CHECK(up->residue.real() == Approx(1.095107).margin(2e-4));
}

TEST_CASE("BCC band-center pole pair (Delta = 0, g = 1)") {
    auto poles = find_poles(Kind::BCC, 0.0, 1.0);
    const Pole* l = find_near(poles, cplx(-0.518155, -0.404792));
    const Pole* r = find_near(poles, cplx(+0.518155, -0.404792));
    REQUIRE(l != nullptr);
    REQUIRE(r != nullptr);
    CHECK(l->residue.real() == Approx(0.727833).margin(2e-4));
    CHECK(r->residue.real() == Approx(0.727833).margin(2e-4));
    // signs verified against the contour integral on each sheet
    CHECK(l->residue.imag() == Approx(-0.092358).margin(2e-4));
    CHECK(r->residue.imag() == Approx(+0.092358).margin(2e-4));
}

TEST_CASE("FCC upper bound state persists across the in-band scan") {
    // the edge-attached state exists for every Delta in [3, 5] at g = 1
    for (double d : {3.0, 3.5, 4.0, 4.5, 5.0}) {
        auto poles = find_poles(Kind::FCC, d, 1.0);
        bool found = false;
        for (const auto& p : poles)
            if (p.kind == PoleKind::BS && p.z.real() > 4.0) found = true;
        INFO("Delta=" << d);
        CHECK(found);
    }
    auto poles = find_poles(Kind::FCC, 4.3, 1.0);
    const Pole* bs = find_near(poles, cplx(4.685493, 0.0));
    REQUIRE(bs != nullptr);
    CHECK(bs->residue.real() == Approx(0.798488).margin(2e-4));
}

TEST_CASE("diamond unstable pole (Delta = 0.5, g = 0.5)") {
    auto poles = find_poles(Kind::Diamond, 0.5, 0.5);
    const Pole* up = find_near(poles, cplx(0.440611, -0.077123));
    REQUIRE(up != nullptr);
    CHECK(up->residue.real() == Approx(0.991294).margin(2e-4));
    CHECK(up->residue.imag() == Approx(-0.129223).margin(2e-4));
}

TEST_CASE("residues agree with the contour integral") {
    auto poles = find_poles(Kind::CS, -10.0, 1.0);
    const Pole* bs = find_near(poles, cplx(-10.105848, 0.0));
    REQUIRE(bs != nullptr);
    auto green = [&](cplx w) {
        return 1.0 / (w + 10.0 - selfenergy::sigma_continued(Kind::CS, w));
    };
    const cplx rc = residue_contour(green, bs->z);
    CHECK(std::abs(rc - bs->residue) < 1e-6);
}

TEST_CASE("critical detuning") {
    // CS lower edge: Delta_crit = -6 + g^2 c with c = 0.2527 (= |Sigma(-6)|);
    // the bound state survives slightly into the band
    const double d1 = critical_detuning(Kind::CS, 1.0, Edge::Lower);
    CHECK(d1 == Approx(-5.7473).margin(1e-3));
    const double c = (critical_detuning(Kind::CS, 2.0, Edge::Lower) + 6.0) / 4.0;
    CHECK(c == Approx(0.2527).margin(5e-4));
    CHECK_THROWS_AS(critical_detuning(Kind::FCC, 1.0, Edge::Upper), std::runtime_error);
}

TEST_CASE("FCC edge-attached state energy from the Lambert W form") {
    CHECK(ubs_energy_fcc(1.0) == Approx(4.4620).margin(2e-3));
    CHECK_THROWS_AS(ubs_energy_fcc(-1.0), std::invalid_argument);
}

TEST_CASE("detour construction guards") {
    CHECK_THROWS_AS(make_detour(Kind::CS, 1.0), std::invalid_argument);
    const Detour d = make_detour(Kind::BCC, 0.0);
    CHECK(d.left_region.index == 2);
    CHECK(d.right_region.index == 3);
    REQUIRE(d.panel_edges.size() > 2);
    CHECK(d.panel_edges.front() == 0.0);
    CHECK(d.panel_edges.back() == d.y_max);
    CHECK(std::is_sorted(d.panel_edges.begin(), d.panel_edges.end()));
}

TEST_CASE("sum rule: pole plus detour weights add to one") {
    struct Case {
        Kind kind;
        double delta, g;
    };
    const Case cases[] = {{Kind::CS, -3.0, 1.5}, {Kind::BCC, 2.0, 1.0},
                          {Kind::FCC, -5.0, 1.0}, {Kind::Diamond, 0.5, 0.5}};
    for (const auto& c : cases) {
        auto r = amplitude_series(c.kind, c.delta, c.g, {0.0});
        INFO(lattice::name(c.kind) << " Delta=" << c.delta);
        CHECK(std::abs(r.breakdown.total() - 1.0) < 1e-6);
        CHECK(std::abs(r.trace.primary()[0] - 1.0) < 1e-6);
    }
}

TEST_CASE("amplitude stays inside the unit disc") {
    std::vector<double> t;
    for (int i = 0; i <= 120; ++i) t.push_back(0.25 * i);
    auto r = amplitude_series(Kind::CS, 0.0, 1.0, t);
    for (const auto& a : r.trace.primary()) CHECK(std::abs(a) < 1.0 + 1e-6);
}

TEST_CASE("Markovian two-emitter exchange quantities") {
    std::vector<double> t{0.0, 1.0, 2.0};
    auto r = markov_two_qe(Kind::FCC, 4.3, 0.1, {1, 0, 0}, t, 48);
    CHECK(std::isfinite(r.j_exact));
    CHECK(r.j_exact != 0.0);
    CHECK(std::abs(r.j_markov - r.j_exact) < 0.2 * std::abs(r.j_exact));
    CHECK(r.p1[0] == Approx(1.0));
    CHECK(r.p2[0] == Approx(0.0).margin(1e-12));
    CHECK_THROWS_AS(markov_two_qe(Kind::Diamond, 0.0, 0.1, {1, 0, 0}, t, 16),
                    std::invalid_argument);
}
