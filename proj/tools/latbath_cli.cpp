// Command-line front end: one subcommand per pipeline, deterministic CSV/LBF1
// outputs with a JSON metadata sidecar per file. Exit 0 on success, 2 on config
// validation failure, 3 on numerical failure.

#include <chrono>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "latbath/bloch.hpp"
#include "latbath/exactdyn.hpp"
#include "latbath/io.hpp"
#include "latbath/lattice.hpp"
#include "latbath/resolvent.hpp"
#include "latbath/selfenergy.hpp"
#include "latbath/trace.hpp"

namespace lb = latbath;
using json = nlohmann::json;
using lb::lattice::Kind;
using lb::trace::cplx;

namespace {

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// sidecar state for the active run (also used to report failures)
std::string g_sub, g_out;
json g_cfg;
double g_t0 = 0;

void begin(const std::string& sub, const std::string& out, json cfg) {
    g_sub = sub;
    g_out = out;
    g_cfg = std::move(cfg);
    g_t0 = now_s();
}

void sidecar(json extra = {}, const std::string& error = "") {
    json j;
    j["subcommand"] = g_sub;
    j["config"] = g_cfg;
    j["library_version"] = lb::io::kVersion;
    j["wall_time_s"] = now_s() - g_t0;
    for (auto& [k, v] : extra.items()) j[k] = v;
    if (!error.empty()) j["error"] = error;
    lb::io::atomic_write(g_out + ".json", j.dump(2) + "\n");
}

std::vector<double> time_grid(double t_max, double dt) {
    std::vector<double> t;
    const long n = std::lround(std::ceil(t_max / dt - 1e-9));
    for (long i = 0; i <= n; ++i) t.push_back(std::min(i * dt, t_max));
    return t;
}

lb::exactdyn::Method method_from_name(const std::string& s) {
    if (s == "splitstep") return lb::exactdyn::Method::SplitStep;
    if (s == "freqbinned") return lb::exactdyn::Method::FreqBinned;
    if (s == "dense") return lb::exactdyn::Method::DenseOracle;
    throw std::invalid_argument("unknown method: " + s);
}

std::array<int, 3> parse_triple(const std::string& s) {
    std::array<int, 3> v{};
    if (std::sscanf(s.c_str(), "%d,%d,%d", &v[0], &v[1], &v[2]) != 3)
        throw std::invalid_argument("expected a,b,c integer triple, got: " + s);
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latbath: quantum emitters coupled to 3D structured lattice baths"};
    app.set_config("--config", "", "key-value config file with [subcommand] sections");
    app.require_subcommand(1);
    if (const char* tv = std::getenv("LATBATH_THREADS"))
        Eigen::setNbThreads(std::max(1, std::atoi(tv)));

    // ------------------------------------------------------------------ dos
    {
        auto* c = app.add_subcommand("dos", "histogram density of states");
        auto lat = std::make_shared<std::string>("cs");
        auto n = std::make_shared<int>(64);
        auto bins = std::make_shared<int>(200);
        auto out = std::make_shared<std::string>("dos.csv");
        c->add_option("--lattice", *lat, "cs|bcc|fcc|diamond");
        c->add_option("--n", *n, "momentum grid size per axis");
        c->add_option("--bins", *bins, "number of energy bins");
        c->add_option("--out", *out, "output CSV path");
        c->callback([=] {
            begin("dos", *out, {{"lattice", *lat}, {"n", *n}, {"bins", *bins}, {"out", *out}});
            const Kind k = lb::lattice::kind_from_name(*lat);
            auto h = lb::lattice::dos_histogram(k, *n, *bins);
            std::vector<std::vector<double>> rows;
            for (std::size_t b = 0; b < h.weights.size(); ++b)
                rows.push_back({h.center(b), h.density(b)});
            lb::io::write_csv(*out, {"energy_over_J", "dos"}, rows);
            sidecar({{"n_modes_total", h.n_modes_total}});
        });
    }

    // ----------------------------------------------------------- selfenergy
    {
        auto* c = app.add_subcommand("selfenergy", "self-energy scan along the real axis");
        auto lat = std::make_shared<std::string>("cs");
        auto g = std::make_shared<double>(1.0);
        auto emin = std::make_shared<double>(-8.0);
        auto emax = std::make_shared<double>(8.0);
        auto pts = std::make_shared<int>(200);
        auto eta = std::make_shared<double>(1e-8);
        auto region = std::make_shared<int>(0);
        auto out = std::make_shared<std::string>("sigma.csv");
        c->add_option("--lattice", *lat, "cs|bcc|fcc|diamond");
        c->add_option("--g", *g, "coupling g/J");
        c->add_option("--emin", *emin, "scan start, units J");
        c->add_option("--emax", *emax, "scan end, units J");
        c->add_option("--points", *pts, "number of sample energies");
        c->add_option("--eta", *eta, "imaginary offset of z (nonzero)");
        c->add_option("--region", *region, "sheet region index; 0 = physical/continued");
        c->add_option("--out", *out, "output CSV path");
        c->callback([=] {
            begin("selfenergy", *out,
                  {{"lattice", *lat}, {"g", *g}, {"emin", *emin}, {"emax", *emax},
                   {"points", *pts}, {"eta", *eta}, {"region", *region}, {"out", *out}});
            if (*eta == 0.0) throw std::invalid_argument("selfenergy: --eta must be nonzero");
            if (*pts < 2) throw std::invalid_argument("selfenergy: --points >= 2 required");
            const Kind k = lb::lattice::kind_from_name(*lat);
            std::vector<std::vector<double>> rows;
            for (int i = 0; i < *pts; ++i) {
                const double e = *emin + (*emax - *emin) * i / (*pts - 1);
                const cplx z(e, *eta);
                cplx s;
                if (*region == 0)
                    s = *eta > 0 ? lb::selfenergy::sigma_physical(k, z)
                                 : lb::selfenergy::sigma_continued(k, z);
                else
                    s = lb::selfenergy::sigma(k, z, *region);
                s *= (*g) * (*g);
                rows.push_back({e, s.real(), s.imag()});
            }
            lb::io::write_csv(*out, {"energy_over_J", "re_sigma", "im_sigma"}, rows);
            sidecar();
        });
    }

    // ---------------------------------------------------------------- poles
    {
        auto* c = app.add_subcommand("poles", "bound-state and unstable poles of the resolvent");
        auto lat = std::make_shared<std::string>("cs");
        auto g = std::make_shared<double>(1.0);
        auto delta = std::make_shared<double>(0.0);
        auto out = std::make_shared<std::string>("poles.csv");
        c->add_option("--lattice", *lat, "cs|bcc|fcc|diamond");
        c->add_option("--g", *g, "coupling g/J");
        c->add_option("--delta", *delta, "detuning Delta/J");
        c->add_option("--out", *out, "output CSV path");
        c->callback([=] {
            begin("poles", *out,
                  {{"lattice", *lat}, {"g", *g}, {"delta", *delta}, {"out", *out}});
            const Kind k = lb::lattice::kind_from_name(*lat);
            auto poles = lb::resolvent::find_poles(k, *delta, *g);
            std::vector<std::vector<std::string>> rows;
            for (const auto& p : poles)
                rows.push_back({p.kind == lb::resolvent::PoleKind::BS ? "BS" : "UP",
                                std::to_string(p.region.index), lb::io::format_g17(p.z.real()),
                                lb::io::format_g17(p.z.imag()),
                                lb::io::format_g17(p.residue.real()),
                                lb::io::format_g17(p.residue.imag())});
            lb::io::write_csv_mixed(
                *out, {"kind", "region", "re_z", "im_z", "re_residue", "im_residue"}, rows);
            sidecar({{"n_poles", poles.size()}});
        });
    }

    // ------------------------------------------------------------- dynamics
    {
        auto* c = app.add_subcommand("dynamics", "single-emitter amplitude C_e(t)");
        auto lat = std::make_shared<std::string>("cs");
        auto g = std::make_shared<double>(1.0);
        auto delta = std::make_shared<double>(0.0);
        auto tmax = std::make_shared<double>(30.0);
        auto dt = std::make_shared<double>(0.01);
        auto sample = std::make_shared<double>(0.1);
        auto domega = std::make_shared<double>(0.0);
        auto size = std::make_shared<int>(64);
        auto method = std::make_shared<std::string>("resolvent");
        auto out = std::make_shared<std::string>("ce.csv");
        c->add_option("--lattice", *lat, "cs|bcc|fcc|diamond");
        c->add_option("--g", *g, "coupling g/J");
        c->add_option("--delta", *delta, "detuning Delta/J");
        c->add_option("--t-max", *tmax, "final time, units 1/J");
        c->add_option("--dt", *dt, "split-step time step");
        c->add_option("--sample-dt", *sample, "output sampling interval");
        c->add_option("--domega", *domega, "frequency bin width (freqbinned)");
        c->add_option("--size", *size, "lattice size N (exact methods)");
        c->add_option("--method", *method, "resolvent|splitstep|freqbinned|dense");
        c->add_option("--out", *out, "output CSV path");
        c->callback([=] {
            begin("dynamics", *out,
                  {{"lattice", *lat}, {"g", *g}, {"delta", *delta}, {"t_max", *tmax},
                   {"dt", *dt}, {"sample_dt", *sample}, {"domega", *domega}, {"size", *size},
                   {"method", *method}, {"out", *out}});
            const Kind k = lb::lattice::kind_from_name(*lat);
            if (*method == "resolvent") {
                auto tg = time_grid(*tmax, *sample);
                auto res = lb::resolvent::amplitude_series(k, *delta, *g, tg);
                std::vector<std::string> header{"t", "re_ce", "im_ce"};
                for (const auto& [label, part] : res.trace.parts) {
                    header.push_back("re:" + label);
                    header.push_back("im:" + label);
                }
                std::vector<std::vector<double>> rows;
                for (std::size_t i = 0; i < tg.size(); ++i) {
                    std::vector<double> r{tg[i], res.trace.primary()[i].real(),
                                          res.trace.primary()[i].imag()};
                    for (const auto& [label, part] : res.trace.parts) {
                        r.push_back(part[i].real());
                        r.push_back(part[i].imag());
                    }
                    rows.push_back(std::move(r));
                }
                lb::io::write_csv(*out, header, rows);
                json wt = json::array();
                for (const auto& [label, w] : res.breakdown.weights)
                    wt.push_back({{"label", label}, {"re", w.real()}, {"im", w.imag()}});
                sidecar({{"weights", wt},
                         {"weight_sum_re", res.breakdown.total().real()},
                         {"weight_sum_im", res.breakdown.total().imag()}});
            } else {
                lb::exactdyn::EmitterLayout lay;
                lay.kind = k;
                lay.N = *size;
                lb::exactdyn::Emitter e;
                e.g = *g;
                e.delta = *delta;
                e.init = 1.0;
                lay.emitters.push_back(e);
                lb::exactdyn::EvolutionConfig cfg;
                cfg.method = method_from_name(*method);
                cfg.t_max = *tmax;
                cfg.dt = *dt;
                cfg.sample_dt = *sample;
                cfg.domega = *domega;
                auto res = lb::exactdyn::evolve(lay, cfg);
                std::vector<std::vector<double>> rows;
                for (std::size_t i = 0; i < res.trace.t.size(); ++i)
                    rows.push_back({res.trace.t[i], res.trace.primary()[i].real(),
                                    res.trace.primary()[i].imag()});
                lb::io::write_csv(*out, {"t", "re_ce", "im_ce"}, rows);
                sidecar();
            }
        });
    }

    // ------------------------------------------------------------- snapshot
    {
        auto* c = app.add_subcommand("snapshot", "bath field snapshot (binary LBF1)");
        auto lat = std::make_shared<std::string>("cs");
        auto g = std::make_shared<double>(1.0);
        auto delta = std::make_shared<double>(0.0);
        auto size = std::make_shared<int>(32);
        auto time = std::make_shared<double>(5.0);
        auto dt = std::make_shared<double>(0.01);
        auto pos = std::make_shared<std::string>("0,0,0");
        auto out = std::make_shared<std::string>("field.lbf");
        c->add_option("--lattice", *lat, "cs|bcc|fcc|diamond");
        c->add_option("--g", *g, "coupling g/J");
        c->add_option("--delta", *delta, "detuning Delta/J");
        c->add_option("--size", *size, "lattice size N");
        c->add_option("--time", *time, "snapshot time, units 1/J");
        c->add_option("--dt", *dt, "split-step time step");
        c->add_option("--pos", *pos, "emitter site a,b,c (primitive coordinates)");
        c->add_option("--out", *out, "output LBF1 path");
        c->callback([=] {
            begin("snapshot", *out,
                  {{"lattice", *lat}, {"g", *g}, {"delta", *delta}, {"size", *size},
                   {"time", *time}, {"dt", *dt}, {"pos", *pos}, {"out", *out}});
            const Kind k = lb::lattice::kind_from_name(*lat);
            lb::exactdyn::EmitterLayout lay;
            lay.kind = k;
            lay.N = *size;
            lb::exactdyn::Emitter e;
            e.position = parse_triple(*pos);
            e.g = *g;
            e.delta = *delta;
            e.init = 1.0;
            lay.emitters.push_back(e);
            lb::exactdyn::EvolutionConfig cfg;
            cfg.method = lb::exactdyn::Method::SplitStep;
            cfg.t_max = *time;
            cfg.dt = *dt;
            cfg.sample_dt = std::max(*time, *dt);
            cfg.snapshot_times = {*time};
            auto res = lb::exactdyn::evolve(lay, cfg);
            if (res.snapshots.empty())
                throw std::runtime_error("snapshot: no snapshot produced (check --time vs --dt)");
            lb::io::write_field(*out, res.snapshots.back());
            double pb = 0;
            for (const auto& a : res.snapshots.back().amplitudes) pb += std::norm(a);
            sidecar({{"bath_population", pb}});
        });
    }

    // ---------------------------------------------------------- subradiance
    {
        auto* c = app.add_subcommand("subradiance",
                                     "8-emitter interference-protected collective decay");
        auto n = std::make_shared<int>(1);
        auto g = std::make_shared<double>(0.1);
        auto size = std::make_shared<int>(128);
        auto tmax = std::make_shared<double>(512.0);
        auto sample = std::make_shared<double>(1.0);
        auto domega = std::make_shared<double>(0.0);
        auto out = std::make_shared<std::string>("sb.csv");
        c->add_option("--n", *n, "emitter separation scale");
        c->add_option("--g", *g, "coupling g/J");
        c->add_option("--size", *size, "lattice size N");
        c->add_option("--t-max", *tmax, "final time, units 1/J");
        c->add_option("--sample-dt", *sample, "output sampling interval");
        c->add_option("--domega", *domega, "frequency bin width");
        c->add_option("--out", *out, "output CSV path");
        c->callback([=] {
            begin("subradiance", *out,
                  {{"n", *n}, {"g", *g}, {"size", *size}, {"t_max", *tmax},
                   {"sample_dt", *sample}, {"domega", *domega}, {"out", *out}});
            auto lay = lb::exactdyn::subradiant_layout(*n, *g, *size);
            lb::exactdyn::EvolutionConfig cfg;
            cfg.method = lb::exactdyn::Method::FreqBinned;
            cfg.t_max = *tmax;
            cfg.sample_dt = *sample;
            cfg.domega = *domega;
            auto res = lb::exactdyn::evolve(lay, cfg);
            std::vector<std::vector<double>> rows;
            for (std::size_t i = 0; i < res.trace.t.size(); ++i) {
                cplx csb = 0;
                for (std::size_t q = 0; q < lay.emitters.size(); ++q)
                    csb += std::conj(lay.emitters[q].init) * res.trace.amplitudes[q][i];
                rows.push_back({res.trace.t[i], csb.real(), csb.imag(), std::norm(csb)});
            }
            lb::io::write_csv(*out, {"t", "re_csb", "im_csb", "abs2_csb"}, rows);
            sidecar({{"final_abs2_csb", rows.back()[3]}});
        });
    }

    // ------------------------------------------------------------- exchange
    {
        auto* c = app.add_subcommand("exchange", "two-emitter bound-state-mediated exchange");
        auto lat = std::make_shared<std::string>("fcc");
        auto g = std::make_shared<double>(0.1);
        auto delta = std::make_shared<double>(4.3);
        auto n12 = std::make_shared<std::string>("1,0,0");
        auto size = std::make_shared<int>(64);
        auto tmax = std::make_shared<double>(200.0);
        auto sample = std::make_shared<double>(0.5);
        auto domega = std::make_shared<double>(0.0);
        auto out = std::make_shared<std::string>("ex.csv");
        c->add_option("--lattice", *lat, "cs|bcc|fcc");
        c->add_option("--g", *g, "coupling g/J");
        c->add_option("--delta", *delta, "detuning Delta/J");
        c->add_option("--n12", *n12, "emitter separation a,b,c (primitive coordinates)");
        c->add_option("--size", *size, "lattice size N");
        c->add_option("--t-max", *tmax, "final time, units 1/J");
        c->add_option("--sample-dt", *sample, "output sampling interval");
        c->add_option("--domega", *domega, "frequency bin width");
        c->add_option("--out", *out, "output CSV path");
        c->callback([=] {
            begin("exchange", *out,
                  {{"lattice", *lat}, {"g", *g}, {"delta", *delta}, {"n12", *n12},
                   {"size", *size}, {"t_max", *tmax}, {"sample_dt", *sample},
                   {"domega", *domega}, {"out", *out}});
            const Kind k = lb::lattice::kind_from_name(*lat);
            const auto sep = parse_triple(*n12);
            lb::exactdyn::EmitterLayout lay;
            lay.kind = k;
            lay.N = *size;
            auto wrap = [&](int x) { return ((x % *size) + *size) % *size; };
            lb::exactdyn::Emitter e1, e2;
            e1.g = e2.g = *g;
            e1.delta = e2.delta = *delta;
            e1.init = 1.0;
            e2.init = 0.0;
            e2.position = {wrap(sep[0]), wrap(sep[1]), wrap(sep[2])};
            lay.emitters = {e1, e2};
            lb::exactdyn::EvolutionConfig cfg;
            cfg.method = lb::exactdyn::Method::FreqBinned;
            cfg.t_max = *tmax;
            cfg.sample_dt = *sample;
            cfg.domega = *domega;
            auto res = lb::exactdyn::two_emitter_transfer(lay, cfg);
            auto mk = lb::resolvent::markov_two_qe(k, *delta, *g, sep, res.t,
                                                   std::min(*size, 64));
            std::vector<std::vector<double>> rows;
            for (std::size_t i = 0; i < res.t.size(); ++i)
                rows.push_back({res.t[i], res.p1[i], res.p2[i], mk.p1[i], mk.p2[i]});
            lb::io::write_csv(*out, {"t", "p1", "p2", "p1_markov", "p2_markov"}, rows);
            sidecar({{"j_markov", mk.j_markov},
                     {"j_exact", mk.j_exact},
                     {"gamma_plus", mk.gamma_plus},
                     {"gamma_minus", mk.gamma_minus}});
        });
    }

    // ---------------------------------------------------------------- bloch
    auto add_bloch_common = [](CLI::App* c, auto lat, auto v0, auto qmax, auto size) {
        c->add_option("--lattice", *lat, "cs|bcc|fcc|diamond");
        c->add_option("--v0", *v0, "lattice depth, recoil units");
        c->add_option("--qmax", *qmax, "plane-wave cutoff per axis");
        c->add_option("--size", *size, "k grid size per axis");
    };
    {
        auto* c = app.add_subcommand("bloch", "lowest Bloch band(s) on the reduced k grid");
        auto lat = std::make_shared<std::string>("cs");
        auto v0 = std::make_shared<double>(8.0);
        auto qmax = std::make_shared<int>(5);
        auto size = std::make_shared<int>(16);
        auto bands = std::make_shared<int>(0);
        auto out = std::make_shared<std::string>("bands.csv");
        add_bloch_common(c, lat, v0, qmax, size);
        c->add_option("--bands", *bands, "number of bands (0 = lattice default)");
        c->add_option("--out", *out, "output CSV path");
        c->callback([=] {
            begin("bloch", *out,
                  {{"lattice", *lat}, {"v0", *v0}, {"qmax", *qmax}, {"size", *size},
                   {"bands", *bands}, {"out", *out}});
            const Kind k = lb::lattice::kind_from_name(*lat);
            const int nb = *bands > 0 ? *bands : lb::lattice::n_bands(k);
            auto pot = lb::bloch::standard_potential(k, *v0);
            auto b = lb::bloch::solve_bands(pot, *qmax, *size, nb);
            std::vector<std::string> header{"k1", "k2", "k3", "e1"};
            if (nb == 2) header.push_back("e2");
            std::vector<std::vector<double>> rows;
            std::size_t idx = 0;
            for (int i = 0; i < *size; ++i)
                for (int j = 0; j < *size; ++j)
                    for (int l = 0; l < *size; ++l, ++idx) {
                        std::vector<double> r{lb::lattice::grid_k(i, *size),
                                              lb::lattice::grid_k(j, *size),
                                              lb::lattice::grid_k(l, *size),
                                              b.energies[0][idx]};
                        if (nb == 2) r.push_back(b.energies[1][idx]);
                        rows.push_back(std::move(r));
                    }
            lb::io::write_csv(*out, header, rows);
            sidecar();
        });
    }

    // ------------------------------------------------------------- hoppings
    {
        auto* c = app.add_subcommand("hoppings", "tight-binding hoppings of the solved band");
        auto lat = std::make_shared<std::string>("cs");
        auto v0 = std::make_shared<double>(8.0);
        auto qmax = std::make_shared<int>(5);
        auto size = std::make_shared<int>(16);
        auto offsets = std::make_shared<std::vector<std::string>>();
        auto out = std::make_shared<std::string>("hoppings.csv");
        add_bloch_common(c, lat, v0, qmax, size);
        c->add_option("--offset", *offsets, "offset a,b,c (repeatable; default onsite + NN)");
        c->add_option("--out", *out, "output CSV path");
        c->callback([=] {
            begin("hoppings", *out,
                  {{"lattice", *lat}, {"v0", *v0}, {"qmax", *qmax}, {"size", *size},
                   {"offsets", *offsets}, {"out", *out}});
            const Kind k = lb::lattice::kind_from_name(*lat);
            std::vector<lb::bloch::IVec> offs;
            if (offsets->empty()) {
                offs.push_back({0, 0, 0});
                for (const auto& o : lb::lattice::lattice_info(k).neighbour_offsets)
                    if (o != std::array<int, 3>{0, 0, 0}) offs.push_back(o);
            } else {
                for (const auto& s : *offsets) offs.push_back(parse_triple(s));
            }
            auto pot = lb::bloch::standard_potential(k, *v0);
            auto b = lb::bloch::solve_bands(pot, *qmax, *size, lb::lattice::n_bands(k));
            auto h = lb::bloch::extract_hoppings(b, offs);
            std::vector<std::string> header{"n1", "n2", "n3", "j"};
            if (!h.j_cross.empty()) header.push_back("j_cross");
            std::vector<std::vector<double>> rows;
            for (std::size_t i = 0; i < offs.size(); ++i) {
                std::vector<double> r{static_cast<double>(offs[i][0]),
                                      static_cast<double>(offs[i][1]),
                                      static_cast<double>(offs[i][2]), h.j_same[i]};
                if (!h.j_cross.empty()) r.push_back(h.j_cross[i]);
                rows.push_back(std::move(r));
            }
            lb::io::write_csv(*out, header, rows);
            sidecar();
        });
    }

    // ------------------------------------------------------------ bloch-dos
    {
        auto* c = app.add_subcommand("bloch-dos", "histogram DOS of the solved band(s)");
        auto lat = std::make_shared<std::string>("cs");
        auto v0 = std::make_shared<double>(8.0);
        auto qmax = std::make_shared<int>(5);
        auto size = std::make_shared<int>(16);
        auto bins = std::make_shared<int>(100);
        auto out = std::make_shared<std::string>("bloch_dos.csv");
        add_bloch_common(c, lat, v0, qmax, size);
        c->add_option("--bins", *bins, "number of energy bins");
        c->add_option("--out", *out, "output CSV path");
        c->callback([=] {
            begin("bloch-dos", *out,
                  {{"lattice", *lat}, {"v0", *v0}, {"qmax", *qmax}, {"size", *size},
                   {"bins", *bins}, {"out", *out}});
            const Kind k = lb::lattice::kind_from_name(*lat);
            auto pot = lb::bloch::standard_potential(k, *v0);
            auto b = lb::bloch::solve_bands(pot, *qmax, *size, lb::lattice::n_bands(k));
            auto h = lb::bloch::numerical_dos(b, *bins);
            std::vector<std::vector<double>> rows;
            for (std::size_t i = 0; i < h.weights.size(); ++i)
                rows.push_back({h.center(i), h.density(i)});
            lb::io::write_csv(*out, {"energy_over_ER", "dos"}, rows);
            sidecar();
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "%s\n", e.what());
        if (!g_out.empty()) sidecar({}, e.what());
        return 2;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        if (!g_out.empty()) sidecar({}, e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "%s\n", e.what());
        if (!g_out.empty()) sidecar({}, e.what());
        return 3;
    }
    return 0;
}
