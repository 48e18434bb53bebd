#pragma once

// Global linear system of the layered stack at one frequency, its solution and the
// power bookkeeping derived from it.

#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "aptsim/acoustic.hpp"
#include "aptsim/errors.hpp"
#include "aptsim/linalg.hpp"
#include "aptsim/stack.hpp"

namespace aptsim {

/// Column order of the unknown vector: V_1..V_{N+1}, I1, I2 (0-based here).
struct UnknownLayout {
    std::size_t layers = 0;

    [[nodiscard]] Eigen::Index velocity(std::size_t interface) const { return static_cast<Eigen::Index>(interface); }
    [[nodiscard]] Eigen::Index tx_current() const { return static_cast<Eigen::Index>(layers + 1); }
    [[nodiscard]] Eigen::Index rx_current() const { return static_cast<Eigen::Index>(layers + 2); }
    [[nodiscard]] Eigen::Index size() const { return static_cast<Eigen::Index>(layers + 3); }
};

struct LinearSystem {
    UnknownLayout layout;
    Eigen::MatrixXcd matrix;
    Eigen::VectorXcd rhs;
    /// Force at every interface as a linear form over the unknowns (size N+1).
    std::vector<Eigen::RowVectorXcd> force_forms;
};

struct OperatingPoint {
    double omega = 0.0;
    std::vector<cplx> velocities;  ///< V at interfaces 1..N+1, m/s, positive toward the receiver
    std::vector<cplx> forces;      ///< F at interfaces 1..N+1, N, acting on the material to the right
    cplx u1{0.0};
    cplx i1{0.0};
    cplx u2{0.0};
    cplx i2{0.0};  ///< into the receiver terminal; the load carries -i2
    double max_residual = 0.0;
};

namespace detail {

inline Eigen::RowVectorXcd unit_row(const UnknownLayout& layout, Eigen::Index k) {
    Eigen::RowVectorXcd r = Eigen::RowVectorXcd::Zero(layout.size());
    r(k) = 1.0;
    return r;
}

/// Electrical row of a piezo: U = x13 * (V_left - V_right) + x33 * I.
inline Eigen::RowVectorXcd piezo_voltage_row(const UnknownLayout& layout, const PiezoLayer& p, double omega,
                                             std::size_t left, Eigen::Index current) {
    const cplx x13 = piezo_coupling_impedance(p, omega);
    Eigen::RowVectorXcd r = Eigen::RowVectorXcd::Zero(layout.size());
    r(layout.velocity(left)) += x13;
    r(layout.velocity(left + 1)) -= x13;
    r(current) += piezo_electrical_impedance(p, omega);
    return r;
}

inline Eigen::Index layer_current(const UnknownLayout& layout, std::size_t layer) {
    return layer == 0 ? layout.tx_current() : layout.rx_current();
}

}  // namespace detail

/// Square system of dimension N+3 in (V_1..V_{N+1}, I1, I2).
///
/// Interface forces are carried as linear forms: starting from the transmitter
/// backing F_1 = -Z_tx V_1, each layer's unit-determinant chain matrix maps the state
/// (F - x13*I, V) across the layer. Every layer then contributes one velocity-transfer
/// row, followed by the receiver termination F_{N+1} = Z_rx V_{N+1}, the source row
/// U1 = Vs - Zs I1 and the load row U2 = E_load - Z_load I2. All coefficients are
/// entire functions of frequency, so the rows stay finite at layer resonances.
[[nodiscard]] inline LinearSystem assemble_system(const Stack& stack, double omega, const DriveCondition& drive) {
    require_positive_omega(omega);
    drive.validate();

    const std::size_t n_layers = stack.size();
    LinearSystem sys;
    sys.layout = UnknownLayout{n_layers};
    const UnknownLayout& lay = sys.layout;
    sys.matrix = Eigen::MatrixXcd::Zero(lay.size(), lay.size());
    sys.rhs = Eigen::VectorXcd::Zero(lay.size());

    Eigen::RowVectorXcd force = -stack.backing_tx() * detail::unit_row(lay, lay.velocity(0));
    sys.force_forms.push_back(force);

    Eigen::Index row = 0;
    for (std::size_t n = 0; n < n_layers; ++n) {
        const Layer& layer = base_layer(stack[n]);
        const ChainMatrix ch = chain_matrix(layer, omega);

        Eigen::RowVectorXcd electrical = Eigen::RowVectorXcd::Zero(lay.size());
        if (const PiezoLayer* p = as_piezo(stack[n])) {
            electrical(detail::layer_current(lay, n)) = piezo_coupling_impedance(*p, omega);
        }

        const Eigen::RowVectorXcd f_left = force - electrical;
        const Eigen::RowVectorXcd v_left = detail::unit_row(lay, lay.velocity(n));
        const Eigen::RowVectorXcd f_right = ch.d * f_left - ch.b * v_left;
        const Eigen::RowVectorXcd v_right = -ch.c * f_left + ch.a * v_left;

        sys.matrix.row(row++) = detail::unit_row(lay, lay.velocity(n + 1)) - v_right;
        force = f_right + electrical;
        sys.force_forms.push_back(force);
    }

    sys.matrix.row(row++) = force - stack.backing_rx() * detail::unit_row(lay, lay.velocity(n_layers));

    Eigen::RowVectorXcd source = detail::piezo_voltage_row(lay, stack.transmitter(), omega, 0, lay.tx_current());
    source(lay.tx_current()) += drive.source_impedance;
    sys.rhs(row) = drive.source_voltage;
    sys.matrix.row(row++) = source;

    Eigen::RowVectorXcd load =
        detail::piezo_voltage_row(lay, stack.receiver(), omega, n_layers - 1, lay.rx_current());
    load(lay.rx_current()) += drive.load_impedance;
    sys.rhs(row) = drive.load_source_voltage;
    sys.matrix.row(row++) = load;

    return sys;
}

/// The same N+3 system written directly from the impedance-form layer blocks: TX
/// backing row, one continuity row per internal interface pairing the -F row of the
/// left layer with the F row of the right layer, RX backing row, source and load rows.
/// Throws LayerResonanceSingularity wherever a layer sits on a half-wave multiple.
[[nodiscard]] inline LinearSystem assemble_impedance_system(const Stack& stack, double omega,
                                                            const DriveCondition& drive) {
    require_positive_omega(omega);
    drive.validate();

    const std::size_t n_layers = stack.size();
    LinearSystem sys;
    sys.layout = UnknownLayout{n_layers};
    const UnknownLayout& lay = sys.layout;
    sys.matrix = Eigen::MatrixXcd::Zero(lay.size(), lay.size());
    sys.rhs = Eigen::VectorXcd::Zero(lay.size());

    // rows[n] = {F_left row, -F_right row} of layer n over the full unknown vector
    std::vector<std::pair<Eigen::RowVectorXcd, Eigen::RowVectorXcd>> rows;
    for (std::size_t n = 0; n < n_layers; ++n) {
        Eigen::RowVectorXcd left = Eigen::RowVectorXcd::Zero(lay.size());
        Eigen::RowVectorXcd right = Eigen::RowVectorXcd::Zero(lay.size());
        const Eigen::Index vl = lay.velocity(n);
        const Eigen::Index vr = lay.velocity(n + 1);
        if (const PiezoLayer* p = as_piezo(stack[n])) {
            const Eigen::Matrix3cd blk = piezo_block_matrix(*p, omega).interface_form();
            const Eigen::Index ic = detail::layer_current(lay, n);
            left(vl) = blk(0, 0); left(vr) = blk(0, 1); left(ic) = blk(0, 2);
            right(vl) = blk(1, 0); right(vr) = blk(1, 1); right(ic) = blk(1, 2);
        } else {
            const Eigen::Matrix2cd blk = passive_layer_matrix(base_layer(stack[n]), omega).interface_form();
            left(vl) = blk(0, 0); left(vr) = blk(0, 1);
            right(vl) = blk(1, 0); right(vr) = blk(1, 1);
        }
        rows.emplace_back(std::move(left), std::move(right));
    }

    Eigen::Index row = 0;
    sys.matrix.row(row++) = rows.front().first + stack.backing_tx() * detail::unit_row(lay, lay.velocity(0));
    for (std::size_t n = 0; n + 1 < n_layers; ++n) {
        sys.matrix.row(row++) = rows[n].second + rows[n + 1].first;
    }
    sys.matrix.row(row++) = rows.back().second + stack.backing_rx() * detail::unit_row(lay, lay.velocity(n_layers));

    Eigen::RowVectorXcd source = detail::piezo_voltage_row(lay, stack.transmitter(), omega, 0, lay.tx_current());
    source(lay.tx_current()) += drive.source_impedance;
    sys.rhs(row) = drive.source_voltage;
    sys.matrix.row(row++) = source;

    Eigen::RowVectorXcd load =
        detail::piezo_voltage_row(lay, stack.receiver(), omega, n_layers - 1, lay.rx_current());
    load(lay.rx_current()) += drive.load_impedance;
    sys.rhs(row) = drive.load_source_voltage;
    sys.matrix.row(row++) = load;

    sys.force_forms.push_back(rows.front().first);
    for (std::size_t n = 0; n < n_layers; ++n) {
        sys.force_forms.push_back(-rows[n].second);
    }
    return sys;
}

/// Turn a solved unknown vector back into interface and terminal quantities.
[[nodiscard]] inline OperatingPoint operating_point_from(const Stack& stack, double omega, const LinearSystem& sys,
                                                         const Eigen::VectorXcd& x) {
    const UnknownLayout& lay = sys.layout;
    OperatingPoint op;
    op.omega = omega;
    for (std::size_t i = 0; i <= lay.layers; ++i) {
        op.velocities.push_back(x(lay.velocity(i)));
        op.forces.push_back((sys.force_forms[i] * x).value());
    }
    op.i1 = x(lay.tx_current());
    op.i2 = x(lay.rx_current());
    op.u1 = (detail::piezo_voltage_row(lay, stack.transmitter(), omega, 0, lay.tx_current()) * x).value();
    op.u2 = (detail::piezo_voltage_row(lay, stack.receiver(), omega, lay.layers - 1, lay.rx_current()) * x).value();
    op.max_residual = linalg::max_relative_residual(sys.matrix, x, sys.rhs);
    return op;
}

[[nodiscard]] inline OperatingPoint solve_operating_point(const Stack& stack, double omega,
                                                          const DriveCondition& drive) {
    const LinearSystem sys = assemble_system(stack, omega, drive);
    const auto sol = linalg::solve_dense<SolveError>(sys.matrix, sys.rhs, "stack system");
    return operating_point_from(stack, omega, sys, sol.x);
}

/// Z_in = U1 / I1.
[[nodiscard]] inline cplx input_impedance(const OperatingPoint& op) {
    if (std::abs(op.i1) < 1e-30) {
        throw ZeroCurrent("input current is zero; input impedance undefined");
    }
    return op.u1 / op.i1;
}

/// Time-averaged powers in W (peak phasors, hence the factor 1/2).
struct PowerFlow {
    double p_in = 0.0;
    double p_load = 0.0;
    double p_backing_tx = 0.0;
    double p_backing_rx = 0.0;
    double p_material_loss = 0.0;

    [[nodiscard]] double p_backing() const { return p_backing_tx + p_backing_rx; }
};

[[nodiscard]] inline PowerFlow power_flow(const OperatingPoint& op, const Stack& stack, const DriveCondition& drive) {
    PowerFlow p;
    p.p_in = 0.5 * (op.u1 * std::conj(op.i1)).real();
    p.p_load = 0.5 * std::norm(op.i2) * drive.load_impedance.real();
    p.p_backing_tx = 0.5 * std::norm(op.velocities.front()) * stack.backing_tx().real();
    p.p_backing_rx = 0.5 * std::norm(op.velocities.back()) * stack.backing_rx().real();
    p.p_material_loss = p.p_in - p.p_load - p.p_backing_tx - p.p_backing_rx;
    return p;
}

[[nodiscard]] inline double efficiency(const PowerFlow& power) {
    if (!(power.p_in > 0.0)) {
        throw ZeroInputPower("input power is not positive; efficiency undefined");
    }
    return power.p_load / power.p_in;
}

}  // namespace aptsim
