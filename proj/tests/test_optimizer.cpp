#include <catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>

#include "aptsim/optimizer.hpp"
#include "test_support.hpp"

using namespace aptsim;
using aptsim::test::make_layer;
using aptsim::test::make_piezo;
using aptsim::test::rel_gap;
using aptsim::test::StackGenerator;

TEST_CASE("Thevenin model of the receiver", "[optimizer]") {
    SECTION("predicts load power at random loads") {
        StackGenerator gen(41);
        for (int s = 0; s < 20; ++s) {
            const Stack stack = gen.stack(gen.index(3, 7), {0.1, s % 2 == 0});
            const DriveCondition d = gen.drive();
            const double w = gen.omega(stack);
            const TheveninEquivalent th = thevenin_at_output(stack, w, d);
            for (int k = 0; k < 10; ++k) {
                const cplx z(gen.log_uniform(0.1, 1e4), gen.uniform(-1e3, 1e3));
                CHECK(rel_gap(predicted_load_power(th, z), load_power(stack, w, d, z)) < 1e-9);
            }
        }
    }
    SECTION("uncoupled receiver has no open-circuit voltage and looks like C0") {
        PiezoLayer rx = make_piezo(2e-3, 5e-4);
        rx.h_coupling = 0.0;
        const Stack stack({make_piezo(2e-3, 5e-4), make_layer(10e-3, 7850.0, 5900.0, 0.002, 5e-4), rx});
        const double w = 2.0 * pi * 1.01e6;
        const TheveninEquivalent th = thevenin_at_output(stack, w, {});
        CHECK(std::abs(th.v_th) == 0.0);
        CHECK(rel_gap(th.z_th, 1.0 / cplx(0.0, w * piezo_clamped_capacitance(rx))) < 1e-12);
        CHECK_THROWS_AS(optimal_load(th), NonDissipativeOutput);
    }
}

TEST_CASE("conjugate match", "[optimizer]") {
    SECTION("closed-form cases") {
        const LoadOptimum a = optimal_load(TheveninEquivalent{1.0, 50.0});
        CHECK(a.z_opt == cplx{50.0});
        CHECK(a.p_max == Catch::Approx(1.0 / 400.0).epsilon(1e-15));
        const LoadOptimum b = optimal_load(TheveninEquivalent{1.0, cplx(50.0, -30.0)});
        CHECK(b.z_opt == cplx(50.0, 30.0));
        CHECK_THROWS_AS(optimal_load(TheveninEquivalent{1.0, cplx(0.0, 20.0)}), NonDissipativeOutput);
        CHECK_THROWS_AS(optimal_load(TheveninEquivalent{1.0, cplx(-1.0, 20.0)}), NonDissipativeOutput);
    }
    SECTION("p_max matches a direct solve and beats the neighbourhood") {
        StackGenerator gen(42);
        for (int s = 0; s < 15; ++s) {
            const Stack stack = gen.stack(gen.index(3, 7), {0.1, true});
            const DriveCondition d = gen.drive();
            const double w = gen.omega(stack);
            const LoadOptimum opt = optimal_load(stack, w, d);
            const double direct = load_power(stack, w, d, opt.z_opt);
            CHECK(rel_gap(direct, opt.p_max) < 1e-9);
            const double r = opt.z_opt.real();
            const double x = opt.z_opt.imag();
            const double span = 0.5 * std::abs(opt.z_opt);
            for (int i = 0; i < 21; ++i) {
                for (int k = 0; k < 21; ++k) {
                    const cplx z(std::max(r + span * (i - 10) / 10.0, 0.0), x + span * (k - 10) / 10.0);
                    CHECK(load_power(stack, w, d, z) <= direct * (1.0 + 1e-12));
                }
            }
        }
    }
    SECTION("grid search lands in the cell holding z_opt") {
        const Stack stack = aptsim::test::wall_stack(57.2e-3, 0.002);
        DriveCondition d;
        d.source_voltage = 10.0;
        d.source_impedance = 50.0;
        const double w = 2.0 * pi * 1.181e6;
        const LoadOptimum opt = optimal_load(stack, w, d);
        const double r_lo = 0.2 * opt.z_opt.real();
        const double r_hi = 3.0 * opt.z_opt.real();
        const double x_lo = opt.z_opt.imag() - 2.0 * std::abs(opt.z_opt);
        const double x_hi = opt.z_opt.imag() + 2.0 * std::abs(opt.z_opt);
        const double dr = (r_hi - r_lo) / 100.0;
        const double dx = (x_hi - x_lo) / 100.0;
        cplx best = 0.0;
        double best_p = -1.0;
        for (int i = 0; i <= 100; ++i) {
            for (int k = 0; k <= 100; ++k) {
                const cplx z(r_lo + dr * i, x_lo + dx * k);
                const double p = load_power(stack, w, d, z);
                if (p > best_p) {
                    best_p = p;
                    best = z;
                }
            }
        }
        CHECK(std::abs(best.real() - opt.z_opt.real()) <= dr);
        CHECK(std::abs(best.imag() - opt.z_opt.imag()) <= dx);
        CHECK(best_p <= opt.p_max * (1.0 + 1e-12));
    }
}

TEST_CASE("efficiency-optimal load", "[optimizer]") {
    const Stack stack = aptsim::test::wall_stack(57.2e-3, 0.002);
    DriveCondition d;
    d.source_voltage = 10.0;
    d.source_impedance = 50.0;
    const double w = 2.0 * pi * 1.181e6;
    const EfficiencyOptimum eff = efficiency_optimal_load(stack, w, d);
    CHECK(eff.efficiency > 0.0);
    CHECK(eff.efficiency <= 1.0);
    CHECK(eff.efficiency >= load_efficiency(stack, w, d, optimal_load(stack, w, d).z_opt) - 1e-12);
    for (int i = -5; i <= 5; ++i) {
        for (int k = -5; k <= 5; ++k) {
            const cplx z = eff.z_load * std::polar(std::exp(0.05 * i), 0.02 * k);
            CHECK(load_efficiency(stack, w, d, z) <= eff.efficiency + 1e-9);
        }
    }
}

TEST_CASE("golden section", "[optimizer]") {
    double best = 0.0;
    const double x = golden_section_max([](double t) { return -(t - 0.3) * (t - 0.3); }, -2.0, 2.0, 1e-10, &best);
    CHECK(std::abs(x - 0.3) < 1e-9);
    CHECK(best <= 0.0);
}

TEST_CASE("quarter-wave matching layer", "[optimizer]") {
    SECTION("impedance is the geometric mean") {
        const Layer m = design_matching_layer(1.0, 4.0, 1e6, 2000.0);
        CHECK(characteristic_impedance(m).real() == Catch::Approx(2.0).epsilon(1e-15));
        CHECK(m.thickness == Catch::Approx(2000.0 / 4e6).epsilon(1e-15));
        CHECK_NOTHROW(m.validate());
        const Layer same = design_matching_layer(3.0, 3.0, 1e6, 2000.0);
        CHECK(characteristic_impedance(same).real() == Catch::Approx(3.0).epsilon(1e-15));
    }
    SECTION("full transmission at the design frequency") {
        const Layer m = design_matching_layer(1.0, 4.0, 1e6, 2000.0);
        const std::array<Layer, 1> layers{m};
        CHECK(power_transmission(layers, 1.0, 4.0, 2.0 * pi * 1e6) >= 1.0 - 1e-9);
        CHECK(power_transmission({}, 1.0, 4.0, 2.0 * pi * 1e6) == Catch::Approx(16.0 / 25.0));
        CHECK(power_transmission(layers, 1.0, 4.0, 2.0 * pi * 0.7e6) < 1.0 - 1e-3);
    }
    SECTION("steel to PZT at 1 MHz peaks at the design frequency") {
        const double area = 5e-4;
        const cplx z_steel = area * 7850.0 * 5900.0;
        const cplx z_pzt = area * 7500.0 * 4600.0;
        const std::array<Layer, 1> layers{design_matching_layer(z_steel, z_pzt, 1e6, 2500.0, area)};
        const FrequencyGrid grid{0.5e6, 1.5e6, 1001, GridScale::linear};
        double best_f = 0.0;
        double best_t = -1.0;
        for (const double f : grid.frequencies()) {
            const double t = power_transmission(layers, z_steel, z_pzt, 2.0 * pi * f);
            if (t > best_t) {
                best_t = t;
                best_f = f;
            }
        }
        CHECK(std::abs(best_f - 1e6) <= 1e3);
        CHECK(best_t >= 1.0 - 1e-9);
    }
    SECTION("invalid media") {
        CHECK_THROWS_AS(design_matching_layer(0.0, 4.0, 1e6, 2000.0), DomainError);
        CHECK_THROWS_AS(design_matching_layer(1.0, cplx(4.0, 1.0), 1e6, 2000.0), DomainError);
        CHECK_THROWS_AS(design_matching_layer(1.0, 4.0, -1.0, 2000.0), DomainError);
    }
}

TEST_CASE("resonance finder", "[optimizer]") {
    auto rows_from = [](std::initializer_list<double> effs) {
        SweepResult rows;
        double f = 1.0;
        for (const double e : effs) {
            SweepRow r;
            r.frequency = f++;
            r.efficiency = e;
            rows.push_back(r);
        }
        return rows;
    };
    CHECK(find_resonances(rows_from({0.1, 0.2, 0.3, 0.4})).empty());
    CHECK(find_resonances(rows_from({0.5, 0.5, 0.5})).empty());
    const auto one = find_resonances(rows_from({0.1, 0.3, 0.2}));
    REQUIRE(one.size() == 1);
    CHECK(one[0].frequency == 2.0);
    CHECK(one[0].efficiency == 0.3);
    const auto two = find_resonances(rows_from({0.1, 0.3, 0.2, 0.6, 0.1}));
    REQUIRE(two.size() == 2);
    CHECK(two[0].frequency < two[1].frequency);

    const double f0 = 5900.0 / (2.0 * 57.2e-3);
    const FrequencyGrid grid{0.9 * f0, 1.1 * f0, 1001, GridScale::linear};
    const auto peaks = find_resonances(
        frequency_sweep(aptsim::test::half_wave_fixture(), grid, aptsim::test::half_wave_drive()));
    REQUIRE_FALSE(peaks.empty());
    double nearest = 1e300;
    for (const Resonance& p : peaks) nearest = std::min(nearest, std::abs(p.frequency - f0));
    CHECK(nearest <= (grid.f_max - grid.f_min) / 1000.0);

    SweepResult gap = rows_from({0.1, 0.3, 0.2});
    gap[2].error = "failed";
    CHECK(find_resonances(gap).empty());
}
