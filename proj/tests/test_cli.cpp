#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "latbath/io.hpp"

using Catch::Approx;

namespace {

std::string cli() {
    const char* p = std::getenv("LATBATH_CLI");
    REQUIRE(p != nullptr);
    return p;
}

int run(const std::string& args) {
    const std::string cmd = cli() + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string tmppath(const std::string& name) { return "/tmp/latbath_test_" + name; }

}  // namespace

TEST_CASE("dos subcommand writes the declared CSV and sidecar") {
    const std::string out = tmppath("dos.csv");
    REQUIRE(run("dos --lattice cs --n 32 --bins 40 --out " + out) == 0);
    const std::string csv = slurp(out);
    CHECK(csv.rfind("energy_over_J,dos\n", 0) == 0);
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 41);  // header + one row per bin
    const std::string side = slurp(out + ".json");
    CHECK(side.find("\"subcommand\": \"dos\"") != std::string::npos);
    CHECK(side.find("\"library_version\"") != std::string::npos);
    CHECK(side.find("\"wall_time_s\"") != std::string::npos);
    CHECK(side.find("\"lattice\": \"cs\"") != std::string::npos);
}

TEST_CASE("identical config gives byte-identical CSV") {
    const std::string a = tmppath("det_a.csv"), b = tmppath("det_b.csv");
    REQUIRE(run("selfenergy --lattice bcc --emin -10 --emax 10 --points 37 --out " + a) == 0);
    REQUIRE(run("selfenergy --lattice bcc --emin -10 --emax 10 --points 37 --out " + b) == 0);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("config validation failures exit with 2") {
    CHECK(run("dos --lattice hexagonal --out " + tmppath("bad.csv")) == 2);
    CHECK(run("selfenergy --eta 0 --out " + tmppath("bad2.csv")) == 2);
    CHECK(run("no-such-subcommand") == 2);
}

TEST_CASE("numerical failures exit with 3 and record the diagnostic") {
    // an uncoupled emitter leaves the binned star model with no bath modes
    const std::string out = tmppath("fail.csv");
    CHECK(run("dynamics --lattice cs --method freqbinned --g 0 --size 8 --t-max 5 --out " +
              out) == 3);
    const std::string side = slurp(out + ".json");
    CHECK(side.find("\"error\"") != std::string::npos);
    CHECK(side.find("no coupled bath modes") != std::string::npos);
}

TEST_CASE("poles subcommand emits the pole table") {
    const std::string out = tmppath("poles.csv");
    REQUIRE(run("poles --lattice cs --delta -10 --g 1 --out " + out) == 0);
    const std::string csv = slurp(out);
    CHECK(csv.rfind("kind,region,re_z,im_z,re_residue,im_residue\n", 0) == 0);
    CHECK(csv.find("BS,") != std::string::npos);
    CHECK(csv.find("-10.105") != std::string::npos);
}

TEST_CASE("dynamics resolvent CSV carries per-contribution columns") {
    const std::string out = tmppath("ce.csv");
    REQUIRE(run("dynamics --lattice cs --g 1 --delta 0 --t-max 5 --method resolvent --out " +
                out) == 0);
    const std::string csv = slurp(out);
    CHECK(csv.rfind("t,re_ce,im_ce,", 0) == 0);
    CHECK(csv.find("BCD@") != std::string::npos);
    CHECK(csv.find("UP@") != std::string::npos);
}

TEST_CASE("snapshot writes a readable LBF1 field") {
    const std::string out = tmppath("field.lbf");
    REQUIRE(run("snapshot --lattice cs --g 1 --delta 0 --size 12 --time 2 --dt 0.02 --out " +
                out) == 0);
    auto f = latbath::io::read_field(out);
    CHECK(f.kind == latbath::lattice::Kind::CS);
    CHECK(f.N == 12);
    CHECK(f.n_sublattices == 1);
    CHECK(f.time == Approx(2.0));
    REQUIRE(f.amplitudes.size() == 12u * 12 * 12);
    double nrm = 0;
    for (const auto& a : f.amplitudes) nrm += std::norm(a);
    CHECK(nrm > 0.1);   // most of the excitation has left the emitter by tJ=2
    CHECK(nrm < 1.0 + 1e-9);
    const std::string raw = slurp(out);
    CHECK(raw.compare(0, 4, "LBF1") == 0);
    CHECK(raw.size() == 28 + 16u * 12 * 12 * 12);
}

TEST_CASE("LBF1 round-trip preserves amplitudes exactly") {
    latbath::exactdyn::BathField f;
    f.kind = latbath::lattice::Kind::Diamond;
    f.N = 3;
    f.n_sublattices = 2;
    f.time = 1.25;
    for (int i = 0; i < 54; ++i) f.amplitudes.push_back({0.1 * i, -0.02 * i * i});
    const std::string path = tmppath("roundtrip.lbf");
    latbath::io::write_field(path, f);
    auto g = latbath::io::read_field(path);
    CHECK(g.kind == f.kind);
    CHECK(g.N == f.N);
    CHECK(g.n_sublattices == f.n_sublattices);
    CHECK(g.time == f.time);
    REQUIRE(g.amplitudes.size() == f.amplitudes.size());
    for (std::size_t i = 0; i < f.amplitudes.size(); ++i)
        CHECK(g.amplitudes[i] == f.amplitudes[i]);
}

TEST_CASE("config file values are overridden by flags") {
    const std::string cfgpath = tmppath("run.cfg");
    {
        std::ofstream f(cfgpath);
        f << "[dos]\nlattice=bcc\nn=24\nbins=10\nout=" << tmppath("cfg_dos.csv") << "\n";
    }
    REQUIRE(run("--config " + cfgpath + " dos --bins 17") == 0);
    const std::string csv = slurp(tmppath("cfg_dos.csv"));
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 18);  // flag wins over the file's 10 bins
    const std::string side = slurp(tmppath("cfg_dos.csv") + ".json");
    CHECK(side.find("\"lattice\": \"bcc\"") != std::string::npos);
}

TEST_CASE("subradiance subcommand reports the collective amplitude") {
    const std::string out = tmppath("sb.csv");
    REQUIRE(run("subradiance --n 1 --g 0.3 --size 24 --t-max 30 --sample-dt 5 --out " + out) == 0);
    const std::string csv = slurp(out);
    CHECK(csv.rfind("t,re_csb,im_csb,abs2_csb\n", 0) == 0);
    const std::string side = slurp(out + ".json");
    CHECK(side.find("final_abs2_csb") != std::string::npos);
}

TEST_CASE("hoppings subcommand writes the offset table") {
    const std::string out = tmppath("hop.csv");
    REQUIRE(run("hoppings --lattice cs --v0 8 --qmax 6 --size 16 --out " + out) == 0);
    const std::string csv = slurp(out);
    CHECK(csv.rfind("n1,n2,n3,j\n", 0) == 0);
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 8);  // header + onsite + 6 NN offsets
}
