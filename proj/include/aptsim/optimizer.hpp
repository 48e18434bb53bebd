#pragma once

// Receiver load optimisation and quarter-wave matching layers.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "aptsim/acoustic.hpp"
#include "aptsim/errors.hpp"
#include "aptsim/solver.hpp"
#include "aptsim/stack.hpp"
#include "aptsim/sweep.hpp"

namespace aptsim {

/// Receiver output seen by the load: U2 = v_th + z_th * I2 (I2 into the receiver).
struct TheveninEquivalent {
    cplx v_th{0.0};
    cplx z_th{0.0};
};

/// Load used for the open-circuit probe.
inline constexpr double open_probe_impedance = 1e12;

/// Two probe solves:
///   1. the given drive with the load replaced by 1e12 ohm (near-open);
///   2. transmitter source zeroed, receiver shorted through a 1 V series source,
///      giving z_th = 1 V / I2.
/// v_th is then U2 - z_th * I2 of the first probe, which removes the finite-probe error.
[[nodiscard]] inline TheveninEquivalent thevenin_at_output(const Stack& stack, double omega,
                                                           const DriveCondition& drive) {
    DriveCondition open = drive;
    open.load_impedance = open_probe_impedance;
    open.load_source_voltage = 0.0;
    const OperatingPoint a = solve_operating_point(stack, omega, open);

    DriveCondition probe = drive;
    probe.source_voltage = 0.0;
    probe.load_impedance = 0.0;
    probe.load_source_voltage = 1.0;
    const OperatingPoint b = solve_operating_point(stack, omega, probe);

    TheveninEquivalent th;
    th.z_th = b.u2 / b.i2;
    th.v_th = a.u2 - th.z_th * a.i2;
    return th;
}

/// P_load = 1/2 |v_th|^2 Re(Z) / |z_th + Z|^2.
[[nodiscard]] inline double predicted_load_power(const TheveninEquivalent& th, cplx z_load) {
    return 0.5 * std::norm(th.v_th) * z_load.real() / std::norm(th.z_th + z_load);
}

struct LoadOptimum {
    cplx z_opt{0.0};
    double p_max = 0.0;
};

/// Conjugate match: z_opt = conj(z_th), p_max = |v_th|^2 / (8 Re z_th).
[[nodiscard]] inline LoadOptimum optimal_load(const TheveninEquivalent& th) {
    if (!(th.z_th.real() > 1e-12 * std::abs(th.z_th))) {
        throw NonDissipativeOutput("receiver output impedance has no resistive part; "
                                   "delivered power is unbounded or undefined");
    }
    return {std::conj(th.z_th), std::norm(th.v_th) / (8.0 * th.z_th.real())};
}

[[nodiscard]] inline LoadOptimum optimal_load(const Stack& stack, double omega, const DriveCondition& drive) {
    return optimal_load(thevenin_at_output(stack, omega, drive));
}

[[nodiscard]] inline double load_power(const Stack& stack, double omega, DriveCondition drive, cplx z_load) {
    drive.load_impedance = z_load;
    const OperatingPoint op = solve_operating_point(stack, omega, drive);
    return power_flow(op, stack, drive).p_load;
}

[[nodiscard]] inline double load_efficiency(const Stack& stack, double omega, DriveCondition drive, cplx z_load) {
    drive.load_impedance = z_load;
    const OperatingPoint op = solve_operating_point(stack, omega, drive);
    return efficiency(power_flow(op, stack, drive));
}

/// Golden-section maximisation of a unimodal function on [lo, hi].
inline double golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol,
                                 double* best_value = nullptr) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > tol) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    const double x = f1 > f2 ? x1 : x2;
    if (best_value != nullptr) {
        *best_value = std::max(f1, f2);
    }
    return x;
}

struct EfficiencyOptimum {
    cplx z_load{0.0};
    double efficiency = 0.0;
    double p_load = 0.0;
};

/// Load maximising P_load / P_in. Load phase is scanned in 1 degree steps over
/// (-89, 89) degrees; for each phase the magnitude is refined by golden section over
/// four decades either side of |z_th|. The best phase bracket is then refined the same way.
[[nodiscard]] inline EfficiencyOptimum efficiency_optimal_load(const Stack& stack, double omega,
                                                               const DriveCondition& drive) {
    const TheveninEquivalent th = thevenin_at_output(stack, omega, drive);
    const double centre = std::log(std::max(std::abs(th.z_th), 1e-12));
    const double span = std::log(1e4);

    auto eff_at = [&](double phase, double log_mag) {
        try {
            return load_efficiency(stack, omega, drive, std::polar(std::exp(log_mag), phase));
        } catch (const std::runtime_error&) {
            return 0.0;
        }
    };
    auto best_for_phase = [&](double phase, double* mag) {
        double value = 0.0;
        *mag = golden_section_max([&](double m) { return eff_at(phase, m); }, centre - span, centre + span, 1e-9,
                                  &value);
        return value;
    };

    const double deg = pi / 180.0;
    double best_phase = 0.0;
    double best_value = -1.0;
    for (int d = -89; d <= 89; ++d) {
        double mag = 0.0;
        const double v = best_for_phase(d * deg, &mag);
        if (v > best_value) {
            best_value = v;
            best_phase = d * deg;
        }
    }
    const double lo = std::max(best_phase - deg, -89.5 * deg);
    const double hi = std::min(best_phase + deg, 89.5 * deg);
    double mag = 0.0;
    const double phase = golden_section_max(
        [&](double ph) {
            double m = 0.0;
            return best_for_phase(ph, &m);
        },
        lo, hi, 1e-9);
    best_for_phase(phase, &mag);

    EfficiencyOptimum out;
    out.z_load = std::polar(std::exp(mag), phase);
    out.efficiency = load_efficiency(stack, omega, drive, out.z_load);
    out.p_load = load_power(stack, omega, drive, out.z_load);
    return out;
}

/// Quarter-wave layer between two lossless media: Z = sqrt(z_left * z_right),
/// thickness c / (4 f), density Z / (S c).
[[nodiscard]] inline Layer design_matching_layer(cplx z_left, cplx z_right, double f_design, double c_material,
                                                 double area = 1.0) {
    for (const cplx z : {z_left, z_right}) {
        if (!(z.real() > 0.0) || z.imag() != 0.0 || !std::isfinite(z.real())) {
            throw DomainError("matching layer needs real, positive media impedances");
        }
    }
    if (!(f_design > 0.0) || !(c_material > 0.0) || !(area > 0.0)) {
        throw DomainError("matching layer needs positive design frequency, sound speed and area");
    }
    const double z_match = std::sqrt(z_left.real() * z_right.real());
    Layer layer;
    layer.thickness = c_material / (4.0 * f_design);
    layer.density = z_match / (area * c_material);
    layer.sound_speed = c_material;
    layer.loss_tangent = 0.0;
    layer.area = area;
    return layer;
}

/// Fraction of the available power from a half-space of impedance z_left that is
/// delivered into z_right through the given passive layers (1 = perfect transmission).
[[nodiscard]] inline double power_transmission(std::span<const Layer> layers, cplx z_left, cplx z_right,
                                               double omega) {
    ChainMatrix total;
    for (const Layer& l : layers) {
        total = total * chain_matrix(l, omega);
    }
    const cplx den = total.a * z_right + total.b + z_left * (total.c * z_right + total.d);
    return 4.0 * z_left.real() * z_right.real() / std::norm(den);
}

struct Resonance {
    double frequency = 0.0;
    double efficiency = 0.0;
};

/// Interior rows whose efficiency is strictly greater than both (successfully solved)
/// neighbours, in frequency order.
[[nodiscard]] inline std::vector<Resonance> find_resonances(const SweepResult& sweep) {
    std::vector<Resonance> peaks;
    for (std::size_t i = 1; i + 1 < sweep.size(); ++i) {
        const SweepRow& prev = sweep[i - 1];
        const SweepRow& row = sweep[i];
        const SweepRow& next = sweep[i + 1];
        if (!prev.ok() || !row.ok() || !next.ok()) {
            continue;
        }
        if (row.efficiency > prev.efficiency && row.efficiency > next.efficiency) {
            peaks.push_back({row.frequency, row.efficiency});
        }
    }
    return peaks;
}

}  // namespace aptsim
