// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "aptsim/aptsim.hpp"
#include "test_support.hpp"

using namespace aptsim;
using aptsim::test::rel_gap;
using aptsim::test::StackGenerator;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Outcome oracle_equivalence() {
    StackGenerator gen(1001);
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::size_t points = 0;
    for (int s = 0; s < 50; ++s) {
        const Stack stack = gen.stack(3 + static_cast<std::size_t>(s % 5), {0.1, s % 2 == 0});
        const DriveCondition d = gen.drive();
        for (int f = 0; f < 100; ++f) {
            worst = std::max(worst, cross_check(stack, gen.omega(stack), d).max_deviation);
            ++points;
        }
    }
    const double elapsed = seconds_since(t0);
    return {worst < 1e-8 && elapsed < 10.0,
            fmt::format("max deviation {:.2e} over {} points in {:.2f} s (limits 1e-8, 10 s)", worst, points, elapsed)};
}

Outcome energy_conservation() {
    StackGenerator gen(1002);
    double worst = 0.0;
    double worst_floor_ratio = 0.0;
    std::size_t points = 0;
    std::size_t violations = 0;
    for (int s = 0; s < 30; ++s) {
        const Stack stack = gen.stack(3 + static_cast<std::size_t>(s % 5));
        const DriveCondition d = gen.drive();
        for (const double f : FrequencyGrid{20e3, 5e6, 201, GridScale::log}.frequencies()) {
            const OperatingPoint op = solve_operating_point(stack, 2.0 * pi * f, d);
            const PowerFlow pf = power_flow(op, stack, d);
            const double gap = std::abs(pf.p_in - pf.p_load);
            ++points;
            worst = std::max(worst, pf.p_in > 0.0 ? gap / pf.p_in : HUGE_VAL);
            if (!(gap <= 1e-9 * pf.p_in)) {
                ++violations;
                // Resolution of 0.5 Re(U1 conj(I1)) in double precision is about eps * |U1 I1| / 2.
                const double floor = std::numeric_limits<double>::epsilon() * 0.5 * std::abs(op.u1 * std::conj(op.i1));
                worst_floor_ratio = std::max(worst_floor_ratio, gap / floor);
            }
        }
    }
    return {violations == 0,
            fmt::format("max |P_in - P_load| / P_in = {:.2e} (limit 1e-9); {} of {} points over the limit, all within "
                        "{:.1f} x the rounding floor of the input-power product (inf: rounding left P_in <= 0)",
                        worst, violations, points, worst_floor_ratio)};
}

Outcome half_wave_transparency() {
    const double x = 57.2e-3;
    const double f0 = 5900.0 / (2.0 * x);
    const double w = 2.0 * pi * f0;
    const Stack with_wall = aptsim::test::half_wave_fixture(x);
    const Stack without = aptsim::test::half_wave_fixture(x, false);
    const DriveCondition d = aptsim::test::half_wave_drive();
    const OperatingPoint a = solve_operating_point(with_wall, w, d);
    const OperatingPoint b = solve_operating_point(without, w, d);
    const PowerFlow pa = power_flow(a, with_wall, d);
    const PowerFlow pb = power_flow(b, without, d);
    // Quantities past the wall flip sign across a half-wave slab.
    const double gap = std::max({rel_gap(a.u1, b.u1), rel_gap(a.i1, b.i1), rel_gap(a.u2, -b.u2), rel_gap(a.i2, -b.i2),
                                 rel_gap(pa.p_load, pb.p_load), rel_gap(efficiency(pa), efficiency(pb))});

    const FrequencyGrid grid{0.9 * f0, 1.1 * f0, 1001, GridScale::linear};
    const double step = (grid.f_max - grid.f_min) / 1000.0;
    const auto peaks = find_resonances(frequency_sweep(with_wall, grid, d));
    double nearest = 1e300;
    for (const Resonance& p : peaks) nearest = std::min(nearest, std::abs(p.frequency - f0));
    return {gap < 1e-8 && nearest <= step,
            fmt::format("removal gap {:.2e} (limit 1e-8); nearest peak {:.3g} Hz from {:.6g} Hz, grid step {:.3g} Hz",
                        gap, nearest, f0, step)};
}

Outcome quarter_wave_matching() {
    const Layer m = design_matching_layer(1.0, 4.0, 1e6, 2000.0);
    const std::array<Layer, 1> layers{m};
    const double t = power_transmission(layers, 1.0, 4.0, 2.0 * pi * 1e6);
    return {t >= 1.0 - 1e-9, fmt::format("transmission at f_design = 1 - {:.2e} (limit 1 - 1e-9)", 1.0 - t)};
}

Outcome layer_identity() {
    StackGenerator gen(1005);
    double worst_identity = 0.0;
    double worst_det = 0.0;
    std::size_t samples = 0;
    while (samples < 10000) {
        const Layer l = gen.layer(gen.log_uniform(1e-5, 1e-2), samples % 2 ? 0.1 : 0.0);
        const double w = 2.0 * pi * gen.log_uniform(1e3, 1e7);
        if (std::abs(std::sin(electrical_length(l, w))) < 1e-6) continue;
        const auto m = passive_layer_matrix(l, w);
        const cplx z = characteristic_impedance(l);
        worst_identity = std::max(worst_identity, aptsim::test::identity_gap(m, z));
        worst_det = std::max(worst_det, aptsim::test::det_gap(chain_matrix(l, w)));
        ++samples;
    }
    return {worst_identity < 1e-12 && worst_det < 1e-12,
            fmt::format("identity {:.2e}, det {:.2e} relative to term magnitude over {} samples (limit 1e-12)", worst_identity, worst_det,
                        samples)};
}

Outcome input_force_row() {
    StackGenerator gen(1006);
    double worst = 0.0;
    std::size_t points = 0;
    for (int s = 0; s < 50; ++s) {
        const Stack stack = gen.stack(3 + static_cast<std::size_t>(s % 5), {0.1, s % 2 == 0});
        const DriveCondition d = gen.drive();
        for (int f = 0; f < 100; ++f) {
            worst = std::max(worst, aptsim::test::input_force_gap(stack, solve_operating_point(stack, gen.omega(stack), d)));
            ++points;
        }
    }
    return {worst < 1e-10, fmt::format("max F_1 gap {:.2e} over {} operating points (limit 1e-10)", worst, points)};
}

Outcome conjugate_match() {
    struct Case {
        Stack stack;
        DriveCondition drive;
        double omega;
    };
    std::vector<Case> cases;
    const StackConfig demo = load_config(std::string(APTSIM_SOURCE_DIR) + "/configs/steel_wall.toml");
    cases.push_back({demo.stack(), demo.drive(), 2.0 * pi * 1.181e6});
    StackGenerator gen(1007);
    for (int s = 0; s < 4; ++s) {
        Stack stack = gen.stack(3 + static_cast<std::size_t>(s), {0.05, true});
        const double w = gen.omega(stack);
        cases.push_back({std::move(stack), gen.drive(), w});
    }

    double worst_pmax = 0.0;
    double worst_excess = -1.0;
    for (const Case& c : cases) {
        const LoadOptimum opt = optimal_load(c.stack, c.omega, c.drive);
        const double direct = load_power(c.stack, c.omega, c.drive, opt.z_opt);
        worst_pmax = std::max(worst_pmax, rel_gap(direct, opt.p_max));
        const double span = 0.5 * std::abs(opt.z_opt);
        for (int i = 0; i <= 100; ++i) {
            for (int k = 0; k <= 100; ++k) {
                if (i == 50 && k == 50) continue;
                const cplx z(std::max(opt.z_opt.real() + span * (i - 50) / 50.0, 0.0),
                             opt.z_opt.imag() + span * (k - 50) / 50.0);
                worst_excess = std::max(worst_excess, load_power(c.stack, c.omega, c.drive, z) / direct - 1.0);
            }
        }
    }
    return {worst_excess <= 0.0 && worst_pmax < 1e-9,
            fmt::format("best grid load / P(z_opt) - 1 = {:.2e} (must be <= 0); p_max gap {:.2e} (limit 1e-9); {} stacks",
                        worst_excess, worst_pmax, cases.size())};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome netlist_round_trip() {
    StackGenerator gen(1008);
    double worst = 0.0;
    for (int s = 0; s < 40; ++s) {
        const Stack stack = gen.stack(3 + static_cast<std::size_t>(s % 5), {0.0, s % 2 == 0});
        const DriveCondition d = gen.drive();
        const double w = gen.omega(stack);
        const Network direct = build_equivalent_network(stack, w, d);
        const MnaSolution a = mna_solve(direct, w);
        const ImportedNetlist imp = import_netlist(export_netlist(stack, d, w / (2.0 * pi)));
        const MnaSolution b = mna_solve(imp.network, w);
        double scale = 0.0;
        double gap = 0.0;
        for (NodeId n = 1; n < direct.node_count(); ++n) {
            if (const auto m = imp.network.find_node(direct.node_name(n))) {
                scale = std::max({scale, std::abs(a.voltage(n)), std::abs(b.voltage(*m))});
                gap = std::max(gap, std::abs(a.voltage(n) - b.voltage(*m)));
            }
        }
        worst = std::max({worst, gap / scale,
                          rel_gap(a.branch_currents[*direct.find_branch("VSRC")],
                                  b.branch_currents[*imp.network.find_branch("VSRC")])});
    }

    const double s = 1e-4;
    auto minimal = [&](double h_rx) {
        return Stack({aptsim::test::make_piezo(1e-3, s), aptsim::test::make_layer(5e-3, 2700.0, 6320.0, 0.0, s),
                      aptsim::test::make_piezo(1e-3, s, h_rx)});
    };
    DriveCondition d;
    d.source_voltage = 10.0;
    d.source_impedance = 50.0;
    d.load_impedance = cplx(50.0, 20.0);
    const std::string golden_dir = std::string(APTSIM_SOURCE_DIR) + "/tests/golden/";
    const std::string first = export_netlist(minimal(2.68e9), d, 1.5e6);
    const bool golden = first == read_file(golden_dir + "minimal.cir") && first == export_netlist(minimal(2.68e9), d, 1.5e6) &&
                        export_netlist(minimal(0.0), d, 1.5e6) == read_file(golden_dir + "minimal_rx_uncoupled.cir");
    return {worst < 1e-8 && golden,
            fmt::format("round-trip deviation {:.2e} over 40 stacks (limit 1e-8); golden files {}", worst,
                        golden ? "byte-exact" : "DIFFER")};
}

Outcome demo_scenario() {
    const StackConfig cfg = load_config(std::string(APTSIM_SOURCE_DIR) + "/configs/steel_wall.toml");
    const auto t0 = Clock::now();
    const SweepResult rows = frequency_sweep(cfg.stack(), cfg.grid(), cfg.drive(), 0);
    const double elapsed = seconds_since(t0);
    bool bounded = rows.size() == 1001;
    for (const SweepRow& r : rows) bounded = bounded && r.ok() && r.efficiency >= 0.0 && r.efficiency <= 1.0;
    const auto peaks = find_resonances(rows);
    const double wall = cfg.layers.at(2).thickness;
    return {bounded && elapsed < 1.0 && !peaks.empty() && wall == 57.2e-3,
            fmt::format("{} rows in {:.3f} s, efficiencies {}in [0,1], {} resonance peaks, wall {:g} mm", rows.size(),
                        elapsed, bounded ? "" : "NOT ", peaks.size(), wall * 1e3)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"oracle equivalence", oracle_equivalence},
        {"energy conservation", energy_conservation},
        {"half-wave transparency", half_wave_transparency},
        {"quarter-wave matching", quarter_wave_matching},
        {"layer-matrix identity", layer_identity},
        {"input-force row oracle", input_force_row},
        {"conjugate-match optimality", conjugate_match},
        {"netlist round-trip", netlist_round_trip},
        {"demo scenario", demo_scenario},
    };
    int failed = 0;
    int index = 0;
    for (const auto& [name, check] : criteria) {
        ++index;
        Outcome out;
        try {
            out = check();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        failed += out.pass ? 0 : 1;
        std::cout << (out.pass ? "PASS" : "FAIL") << " [" << index << "] " << name << ": " << out.detail << '\n';
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
