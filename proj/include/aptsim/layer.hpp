#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <variant>

#include "aptsim/errors.hpp"

namespace aptsim {

using cplx = std::complex<double>;

inline constexpr cplx j_unit{0.0, 1.0};
inline constexpr double pi = 3.141592653589793238462643383279502884;

/// Passive acoustic slab, thickness-mode, all quantities SI.
struct Layer {
    double thickness = 0.0;     ///< m
    double density = 0.0;       ///< kg/m^3
    double sound_speed = 0.0;   ///< m/s, longitudinal
    double loss_tangent = 0.0;  ///< dimensionless
    double area = 0.0;          ///< m^2

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw DomainError(std::string("layer ") + name + " must be finite and > 0");
            }
        };
        positive(thickness, "thickness");
        positive(density, "density");
        positive(sound_speed, "sound_speed");
        positive(area, "area");
        if (!(loss_tangent >= 0.0) || !std::isfinite(loss_tangent)) {
            throw DomainError("layer loss_tangent must be finite and >= 0");
        }
    }

    [[nodiscard]] bool lossless() const noexcept { return loss_tangent == 0.0; }

    friend bool operator==(const Layer&, const Layer&) = default;
};

/// Thickness-mode piezoelectric slab: a Layer plus the constants behind its electrical port.
struct PiezoLayer {
    Layer base;
    double h_coupling = 0.0;            ///< piezoelectric constant h, V/m (0 decouples the port)
    double permittivity_clamped = 0.0;  ///< eps^S, F/m

    void validate() const {
        base.validate();
        // h = 0 is accepted so that decoupled limits can be studied.
        if (!(h_coupling >= 0.0) || !std::isfinite(h_coupling)) {
            throw DomainError("piezo h_coupling must be finite and >= 0");
        }
        if (!(permittivity_clamped > 0.0) || !std::isfinite(permittivity_clamped)) {
            throw DomainError("piezo permittivity_clamped must be finite and > 0");
        }
        const double c0 = permittivity_clamped * base.area / base.thickness;
        if (!(c0 > 0.0) || !std::isfinite(c0)) {
            throw DomainError("piezo clamped capacitance is not finite and positive");
        }
    }

    friend bool operator==(const PiezoLayer&, const PiezoLayer&) = default;
};

using AnyLayer = std::variant<Layer, PiezoLayer>;

[[nodiscard]] inline const Layer& base_layer(const AnyLayer& layer) {
    if (const auto* p = std::get_if<PiezoLayer>(&layer)) {
        return p->base;
    }
    return std::get<Layer>(layer);
}

[[nodiscard]] inline const PiezoLayer* as_piezo(const AnyLayer& layer) {
    return std::get_if<PiezoLayer>(&layer);
}

}  // namespace aptsim
