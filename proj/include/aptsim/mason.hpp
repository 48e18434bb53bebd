#pragma once

// Mason equivalent circuit of a stack and the cross-check against the stack solver.
//
// Force maps to voltage and velocity to current. Node names:
//   n_<k>_l / n_<k>_r   left / right face of layer k (1-based); shared faces use the
//                       left-face name of the layer to their right
//   n_<k>_m             midpoint of the T-network of layer k
//   n_<k>_p             return node between transformer secondary and shunt arm (piezo)
//   n_<k>_e, n_<k>_b    electrical terminal and the node behind the -C0 branch (piezo)
//   n_src               source node ahead of the source impedance
// Branch names: ZA_<k>, ZB_<k> (series arms), ZS_<k> (shunt arm), C0_<k>, CN_<k>,
// X_<k> (transformer), VSRC, ZSRC, ZLOAD, VLOAD, ZBTX, ZBRX.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "aptsim/acoustic.hpp"
#include "aptsim/errors.hpp"
#include "aptsim/network.hpp"
#include "aptsim/solver.hpp"
#include "aptsim/stack.hpp"

namespace aptsim {

struct MasonOptions {
    /// Fault injection for negative-control tests: flips the sign of the shunt arm of
    /// the first passive layer.
    bool corrupt_sign = false;
};

[[nodiscard]] inline std::string interface_node_name(std::size_t interface, std::size_t layers) {
    return interface < layers ? "n_" + std::to_string(interface + 1) + "_l" : "n_" + std::to_string(layers) + "_r";
}

/// T-network arms of a layer: series arm j*Z*tan(kx/2) (= x11 - x12, half-angle form)
/// and shunt arm x12 = Z / (j sin kx).
struct TeeArms {
    cplx series;
    cplx shunt;
};

[[nodiscard]] inline TeeArms tee_arms(const Layer& layer, double omega) {
    const cplx kx = electrical_length(layer, omega);
    const cplx s = std::sin(kx);
    if (std::abs(s) < resonance_tolerance) {
        throw LayerResonanceSingularity("T-network undefined: layer is within 1e-9 of k*x = n*pi");
    }
    const cplx z = characteristic_impedance(layer);
    return {j_unit * z * std::tan(0.5 * kx), z / (j_unit * s)};
}

/// Add layer `k` (1-based label) as a T-network between `left` and `right`, with the
/// shunt arm returning to `shunt_return`. Returns the midpoint node.
inline NodeId add_layer_tee(Network& net, std::size_t k, const Layer& layer, double omega, NodeId left, NodeId right,
                            NodeId shunt_return, bool corrupt = false) {
    const TeeArms arms = tee_arms(layer, omega);
    const std::string tag = std::to_string(k);
    const NodeId mid = net.node("n_" + tag + "_m");
    net.add_impedance("ZA_" + tag, left, mid, arms.series);
    net.add_impedance("ZB_" + tag, mid, right, arms.series);
    net.add_impedance("ZS_" + tag, mid, shunt_return, corrupt ? -arms.shunt : arms.shunt);
    return mid;
}

[[nodiscard]] inline Network build_equivalent_network(const Stack& stack, double omega, const DriveCondition& drive,
                                                      const MasonOptions& options = {}) {
    require_positive_omega(omega);
    drive.validate();

    Network net;
    const std::size_t n_layers = stack.size();
    std::vector<NodeId> faces;
    for (std::size_t i = 0; i <= n_layers; ++i) {
        faces.push_back(net.node(interface_node_name(i, n_layers)));
    }

    bool corrupted = false;
    for (std::size_t n = 0; n < n_layers; ++n) {
        const std::size_t k = n + 1;
        const std::string tag = std::to_string(k);
        if (const PiezoLayer* p = as_piezo(stack[n])) {
            const NodeId ret = net.node("n_" + tag + "_p");
            add_layer_tee(net, k, p->base, omega, faces[n], faces[n + 1], ret);
            const NodeId term = net.node("n_" + tag + "_e");
            const NodeId behind = net.node("n_" + tag + "_b");
            const double c0 = piezo_clamped_capacitance(*p);
            net.add_impedance("C0_" + tag, term, Network::ground(), 1.0 / (j_unit * omega * c0));
            net.add_negative_capacitance("CN_" + tag, term, behind, c0);
            net.add_transformer("X_" + tag, behind, Network::ground(), ret, Network::ground(), p->h_coupling * c0);
        } else {
            const bool corrupt = options.corrupt_sign && !corrupted;
            corrupted = corrupted || corrupt;
            add_layer_tee(net, k, base_layer(stack[n]), omega, faces[n], faces[n + 1], Network::ground(), corrupt);
        }
    }

    net.add_impedance("ZBTX", faces.front(), Network::ground(), stack.backing_tx());
    net.add_impedance("ZBRX", faces.back(), Network::ground(), stack.backing_rx());

    const NodeId src = net.node("n_src");
    net.add_voltage_source("VSRC", src, Network::ground(), drive.source_voltage);
    net.add_impedance("ZSRC", src, *net.find_node("n_1_e"), drive.source_impedance);

    const NodeId rx_term = *net.find_node("n_" + std::to_string(n_layers) + "_e");
    if (drive.load_source_voltage == cplx{0.0}) {
        net.add_impedance("ZLOAD", rx_term, Network::ground(), drive.load_impedance);
    } else {
        const NodeId ld = net.node("n_load");
        net.add_impedance("ZLOAD", rx_term, ld, drive.load_impedance);
        net.add_voltage_source("VLOAD", ld, Network::ground(), drive.load_source_voltage);
    }
    return net;
}

/// Terminal and interface quantities read back from a solved Mason network, in the
/// same layout as OperatingPoint (forces are the interface node voltages).
[[nodiscard]] inline OperatingPoint operating_point_from_network(const Stack& stack, const Network& net,
                                                                 const MnaSolution& sol, double omega) {
    const std::size_t n_layers = stack.size();
    auto current = [&](const std::string& name) { return sol.branch_currents.at(*net.find_branch(name)); };
    auto voltage = [&](const std::string& name) { return sol.voltage(*net.find_node(name)); };

    OperatingPoint op;
    op.omega = omega;
    for (std::size_t k = 1; k <= n_layers; ++k) {
        op.velocities.push_back(current("ZA_" + std::to_string(k)));
    }
    op.velocities.push_back(current("ZB_" + std::to_string(n_layers)));
    for (std::size_t i = 0; i <= n_layers; ++i) {
        op.forces.push_back(voltage(interface_node_name(i, n_layers)));
    }
    op.u1 = voltage("n_1_e");
    op.i1 = current("ZSRC");
    op.u2 = voltage("n_" + std::to_string(n_layers) + "_e");
    op.i2 = -current("ZLOAD");
    return op;
}

struct CrossCheckReport {
    std::vector<std::pair<std::string, double>> deviations;
    double max_deviation = 0.0;
};

namespace detail {

inline double relative_gap(cplx a, cplx b, double floor) {
    const double d = std::max({std::abs(a), std::abs(b), floor});
    return d > 0.0 ? std::abs(a - b) / d : 0.0;
}

}  // namespace detail

/// Compare two operating points over U1, I1, U2, I2 and every interface velocity.
/// Velocities are normalised by the largest velocity magnitude in the stack; terminal
/// quantities by their own magnitude, floored at 1e-9 of the larger of the pair
/// (U1/U2 or I1/I2) so a decoupled, near-zero port does not divide noise by noise.
[[nodiscard]] inline CrossCheckReport compare_operating_points(const OperatingPoint& a, const OperatingPoint& b) {
    CrossCheckReport rep;
    const double u_floor = 1e-9 * std::max({std::abs(a.u1), std::abs(a.u2), std::abs(b.u1), std::abs(b.u2)});
    const double i_floor = 1e-9 * std::max({std::abs(a.i1), std::abs(a.i2), std::abs(b.i1), std::abs(b.i2)});
    rep.deviations.emplace_back("U1", detail::relative_gap(a.u1, b.u1, u_floor));
    rep.deviations.emplace_back("I1", detail::relative_gap(a.i1, b.i1, i_floor));
    rep.deviations.emplace_back("U2", detail::relative_gap(a.u2, b.u2, u_floor));
    rep.deviations.emplace_back("I2", detail::relative_gap(a.i2, b.i2, i_floor));

    double v_scale = 0.0;
    for (std::size_t i = 0; i < a.velocities.size(); ++i) {
        v_scale = std::max({v_scale, std::abs(a.velocities[i]), std::abs(b.velocities.at(i))});
    }
    for (std::size_t i = 0; i < a.velocities.size(); ++i) {
        const double gap = v_scale > 0.0 ? std::abs(a.velocities[i] - b.velocities[i]) / v_scale : 0.0;
        rep.deviations.emplace_back("V" + std::to_string(i + 1), gap);
    }
    for (const auto& [name, gap] : rep.deviations) {
        rep.max_deviation = std::max(rep.max_deviation, gap);
    }
    return rep;
}

/// Solve the stack both ways (transfer-matrix system and Mason network by MNA) and
/// report the per-quantity relative deviations.
[[nodiscard]] inline CrossCheckReport cross_check(const Stack& stack, double omega, const DriveCondition& drive,
                                                  const MasonOptions& options = {}) {
    const OperatingPoint direct = solve_operating_point(stack, omega, drive);
    const Network net = build_equivalent_network(stack, omega, drive, options);
    const MnaSolution sol = mna_solve(net, omega);
    return compare_operating_points(direct, operating_point_from_network(stack, net, sol, omega));
}

}  // namespace aptsim
