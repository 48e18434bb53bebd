#pragma once

// Per-layer thickness-mode physics: wavenumber, characteristic impedance and the
// two-port / three-port matrices of a layer.
//
// Conventions used throughout the library:
//   * time dependence exp(+j*omega*t), waves decay as exp(-j*k*x) with Im(k) <= 0;
//   * force F is the compressive force a slab exerts on the material to its right,
//     velocities are positive toward the receiver;
//   * "port form" matrices use velocities flowing INTO the layer at both faces, which
//     is the reciprocal two-port convention (z11 = A/C, z12 = 1/C of the chain form).

#include <array>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "aptsim/errors.hpp"
#include "aptsim/layer.hpp"

namespace aptsim {

inline void require_positive_omega(double omega) {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw DomainError("angular frequency must be finite and > 0");
    }
}

/// k = (omega / c) * (1 - j*eta/2).
[[nodiscard]] inline cplx wavenumber(double omega, const Layer& layer) {
    require_positive_omega(omega);
    return (omega / layer.sound_speed) * cplx(1.0, -0.5 * layer.loss_tangent);
}

/// Complex sound speed consistent with wavenumber(): c~ = c / (1 - j*eta/2).
[[nodiscard]] inline cplx complex_sound_speed(const Layer& layer) {
    return layer.sound_speed / cplx(1.0, -0.5 * layer.loss_tangent);
}

/// Mechanical characteristic impedance S * rho * c~, in N*s/m.
[[nodiscard]] inline cplx characteristic_impedance(const Layer& layer) {
    return layer.area * layer.density * complex_sound_speed(layer);
}

/// Electrical length k*x of the slab.
[[nodiscard]] inline cplx electrical_length(const Layer& layer, double omega) {
    return wavenumber(omega, layer) * layer.thickness;
}

/// Reciprocal, symmetric two-port in impedance form (port velocities into the layer).
struct TwoPortImpedanceMatrix {
    cplx x11;
    cplx x12;

    /// Matrix as seen with both velocities positive toward the receiver, acting on
    /// (V_left, V_right) and producing (F_left, -F_right).
    [[nodiscard]] Eigen::Matrix2cd interface_form() const {
        Eigen::Matrix2cd m;
        m << x11, -x12, -x12, x11;
        return m;
    }
};

/// Transfer (ABCD) matrix: [F_left; V_left] = [[a, b], [c, d]] * [F_right; V_right].
struct ChainMatrix {
    cplx a{1.0};
    cplx b{0.0};
    cplx c{0.0};
    cplx d{1.0};

    [[nodiscard]] cplx determinant() const { return a * d - b * c; }

    [[nodiscard]] ChainMatrix operator*(const ChainMatrix& rhs) const {
        return {a * rhs.a + b * rhs.c, a * rhs.b + b * rhs.d,
                c * rhs.a + d * rhs.c, c * rhs.b + d * rhs.d};
    }

    /// Unit-determinant inverse: maps the left face state onto the right face state.
    [[nodiscard]] ChainMatrix inverse_unimodular() const { return {d, -b, -c, a}; }
};

/// Threshold on |sin(kx)| below which impedance-form matrices are refused.
inline constexpr double resonance_tolerance = 1e-9;

[[nodiscard]] inline TwoPortImpedanceMatrix passive_layer_matrix(const Layer& layer, double omega) {
    const cplx kx = electrical_length(layer, omega);
    const cplx s = std::sin(kx);
    if (std::abs(s) < resonance_tolerance) {
        throw LayerResonanceSingularity("layer is within 1e-9 of a half-wave multiple (k*x = n*pi); "
                                        "use chain_matrix");
    }
    const cplx z = characteristic_impedance(layer);
    return {z * std::cos(kx) / (j_unit * s), z / (j_unit * s)};
}

[[nodiscard]] inline ChainMatrix chain_matrix(const Layer& layer, double omega) {
    const cplx kx = electrical_length(layer, omega);
    const cplx z = characteristic_impedance(layer);
    const cplx cs = std::cos(kx);
    const cplx sn = std::sin(kx);
    return {cs, j_unit * z * sn, j_unit * sn / z, cs};
}

/// C0 = eps^S * S / x.
[[nodiscard]] inline double piezo_clamped_capacitance(const PiezoLayer& piezo) {
    return piezo.permittivity_clamped * piezo.base.area / piezo.base.thickness;
}

/// Mason three-port of a thickness-mode piezo slab.
///
/// Port form, with (v_left_in, v_right_in, I) -> (F_left, F_right, U):
///   [[x11, x12, x13], [x12, x11, x13], [x13, x13, x33]]
/// The mechanical 2x2 block is exactly passive_layer_matrix() of the base layer.
struct PiezoBlockMatrix {
    cplx x11;
    cplx x12;
    cplx x13;
    cplx x33;

    [[nodiscard]] TwoPortImpedanceMatrix mechanical() const { return {x11, x12}; }

    [[nodiscard]] Eigen::Matrix3cd port_form() const {
        Eigen::Matrix3cd m;
        m << x11, x12, x13,
             x12, x11, x13,
             x13, x13, x33;
        return m;
    }

    /// Global-matrix block acting on (V_left, V_right, I) with velocities toward the
    /// receiver and producing (F_left, -F_right, U). The electrical coupling appears
    /// as [[., ., x13], [., ., -x13], [x13, -x13, x33]]; the transfer entry is -x12.
    [[nodiscard]] Eigen::Matrix3cd interface_form() const {
        Eigen::Matrix3cd m;
        m << x11, -x12, x13,
             -x12, x11, -x13,
             x13, -x13, x33;
        return m;
    }
};

/// x13 = h / (j*omega), x33 = 1 / (j*omega*C0).
[[nodiscard]] inline cplx piezo_coupling_impedance(const PiezoLayer& piezo, double omega) {
    require_positive_omega(omega);
    return piezo.h_coupling / (j_unit * omega);
}

[[nodiscard]] inline cplx piezo_electrical_impedance(const PiezoLayer& piezo, double omega) {
    require_positive_omega(omega);
    return 1.0 / (j_unit * omega * piezo_clamped_capacitance(piezo));
}

[[nodiscard]] inline PiezoBlockMatrix piezo_block_matrix(const PiezoLayer& piezo, double omega) {
    const TwoPortImpedanceMatrix mech = passive_layer_matrix(piezo.base, omega);
    return {mech.x11, mech.x12, piezo_coupling_impedance(piezo, omega),
            piezo_electrical_impedance(piezo, omega)};
}

}  // namespace aptsim
