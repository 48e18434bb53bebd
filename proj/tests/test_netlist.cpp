#include <catch_amalgamated.hpp>

#include <fstream>
#include <sstream>
#include <string>

#include "aptsim/mason.hpp"
#include "aptsim/netlist.hpp"
#include "test_support.hpp"

using namespace aptsim;
using aptsim::test::make_layer;
using aptsim::test::make_piezo;
using aptsim::test::StackGenerator;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string golden_path(const std::string& name) { return std::string(APTSIM_SOURCE_DIR) + "/tests/golden/" + name; }

Stack minimal_stack(double h_tx = 2.68e9, double h_rx = 2.68e9) {
    const double s = 1e-4;
    return Stack({make_piezo(1e-3, s, h_tx), make_layer(5e-3, 2700.0, 6320.0, 0.0, s), make_piezo(1e-3, s, h_rx)});
}

DriveCondition minimal_drive() {
    DriveCondition d;
    d.source_voltage = 10.0;
    d.source_impedance = 50.0;
    d.load_impedance = cplx(50.0, 20.0);
    return d;
}

/// Largest deviation over node voltages present in both networks and the source current.
double round_trip_gap(const Stack& stack, const DriveCondition& d, double f, const NetlistOptions& opt = {}) {
    const double w = 2.0 * pi * f;
    const Network direct = build_equivalent_network(stack, w, d);
    const MnaSolution a = mna_solve(direct, w);
    const ImportedNetlist imported = import_netlist(export_netlist(stack, d, f, opt));
    const MnaSolution b = mna_solve(imported.network, w);

    double scale = 0.0;
    double gap = 0.0;
    std::size_t shared = 0;
    for (NodeId n = 1; n < direct.node_count(); ++n) {
        const auto m = imported.network.find_node(direct.node_name(n));
        if (!m) continue;
        ++shared;
        scale = std::max({scale, std::abs(a.voltage(n)), std::abs(b.voltage(*m))});
        gap = std::max(gap, std::abs(a.voltage(n) - b.voltage(*m)));
    }
    CHECK(shared >= 3);
    const cplx ia = a.branch_currents[*direct.find_branch("VSRC")];
    const cplx ib = b.branch_currents[*imported.network.find_branch("VSRC")];
    return std::max(gap / scale, aptsim::test::rel_gap(ia, ib));
}

}  // namespace

TEST_CASE("golden netlists", "[netlist]") {
    CHECK(export_netlist(minimal_stack(), minimal_drive(), 1.5e6) == read_file(golden_path("minimal.cir")));
    CHECK(export_netlist(minimal_stack(2.68e9, 0.0), minimal_drive(), 1.5e6) ==
          read_file(golden_path("minimal_rx_uncoupled.cir")));
}

TEST_CASE("export is deterministic", "[netlist]") {
    StackGenerator gen(51);
    for (int s = 0; s < 10; ++s) {
        const Stack stack = gen.stack(gen.index(3, 7), {0.0, true});
        const DriveCondition d = gen.drive();
        CHECK(export_netlist(stack, d, 1e6) == export_netlist(stack, d, 1e6));
    }
}

TEST_CASE("uncoupled piezo has no controlled sources", "[netlist]") {
    const std::string text = export_netlist(minimal_stack(2.68e9, 0.0), minimal_drive(), 1.5e6);
    CHECK(text.find("EX1 ") != std::string::npos);
    CHECK(text.find("EX3 ") == std::string::npos);
    CHECK(text.find("FX3 ") == std::string::npos);
    CHECK(text.find("CN3 ") == std::string::npos);
}

TEST_CASE("lossy layers", "[netlist]") {
    const double s = 1e-4;
    const Stack lossy({make_piezo(1e-3, s, 2.68e9, 0.004), make_layer(5e-3, 2700.0, 6320.0, 0.01, s),
                       make_piezo(1e-3, s, 2.68e9, 0.004)});
    CHECK_THROWS_AS(export_netlist(lossy, minimal_drive(), 1.5e6), UnsupportedLossyLayer);
    NetlistOptions opt;
    opt.lossy_lines = true;
    const std::string text = export_netlist(lossy, minimal_drive(), 1.5e6, opt);
    CHECK(text.find(".MODEL LTRA2 LTRA") != std::string::npos);
    CHECK(round_trip_gap(lossy, minimal_drive(), 1.5e6, opt) < 1e-8);
}

TEST_CASE("round trip reproduces the directly built network", "[netlist][property]") {
    CHECK(round_trip_gap(minimal_stack(), minimal_drive(), 1.5e6) < 1e-8);
    CHECK(round_trip_gap(minimal_stack(2.68e9, 0.0), minimal_drive(), 1.5e6) < 1e-8);

    StackGenerator gen(52);
    for (int s = 0; s < 40; ++s) {
        const Stack stack = gen.stack(gen.index(3, 7), {0.0, s % 2 == 0});
        DriveCondition d = gen.drive();
        if (s % 5 == 0) d.source_impedance = 0.0;
        const double w = gen.omega(stack);
        CHECK(round_trip_gap(stack, d, w / (2.0 * pi)) < 1e-8);
    }
}

TEST_CASE("omitting the negative capacitance changes the circuit", "[netlist]") {
    NetlistOptions opt;
    opt.omit_negative_capacitance = true;
    const std::string text = export_netlist(minimal_stack(), minimal_drive(), 1.5e6, opt);
    CHECK(text.find("CN1 ") == std::string::npos);
    CHECK(text.find("nonstandard") != std::string::npos);
    const ImportedNetlist imp = import_netlist(text);
    CHECK_NOTHROW(mna_solve(imp.network, 2.0 * pi * 1.5e6));
}

TEST_CASE("import errors", "[netlist]") {
    CHECK_THROWS_AS(import_netlist(""), ParseError);
    CHECK_THROWS_AS(import_netlist("   \n\n"), ParseError);
    CHECK_THROWS_AS(import_netlist("title\nR1 a 0 5\n.AC LIN 1 1 1\n"), ParseError);
    CHECK_THROWS_AS(import_netlist("title\nR1 a 0 5\nV1 a 0 AC 1 0\n.END\n"), ParseError);
    CHECK_THROWS_AS(import_netlist("title\nQ1 a b c npn\n.AC LIN 1 1 1\n.END\n"), UnknownCard);
    CHECK_THROWS_AS(import_netlist("title\n.TRAN 1n 1u\n.END\n"), UnknownCard);

    try {
        (void)import_netlist("title\nV1 a 0 AC 1 0\nR1 a 0 abc\n.AC LIN 1 1 1\n.END\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    try {
        (void)import_netlist("title\nV1 a 0 AC 1 0\nR1 a 0 5\nR2 a stray 5\n.AC LIN 1 1000 1000\n.END\n");
        FAIL("expected an invariant error");
    } catch (const NetworkInvariantError& e) {
        CHECK(std::string(e.what()).find("stray") != std::string::npos);
    }
}

TEST_CASE("import of hand-written cards", "[netlist]") {
    const ImportedNetlist imp = import_netlist(
        "rc divider\n"
        "* comment\n"
        "V1 in 0 AC 1 0\n"
        "R1 in out 1000\n"
        "C1 out 0 1e-6\n"
        ".AC LIN 1 159.154943091895 159.154943091895\n"
        ".END\n");
    CHECK(imp.title == "rc divider");
    const MnaSolution sol = mna_solve(imp.network, 2.0 * pi * imp.frequency);
    CHECK_THAT(std::abs(sol.voltage(*imp.network.find_node("out"))),
               Catch::Matchers::WithinRel(1.0 / std::sqrt(2.0), 1e-12));
}
