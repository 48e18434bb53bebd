#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "aptsim/errors.hpp"
#include "aptsim/layer.hpp"

namespace aptsim {

/// Transmitter piezo, passive interlayers, receiver piezo, with backing terminations on
/// the two outer faces. A zero backing impedance is a free (air-loaded) face.
class Stack {
public:
    Stack(std::vector<AnyLayer> layers, cplx backing_tx = 0.0, cplx backing_rx = 0.0)
        : layers_(std::move(layers)), backing_tx_(backing_tx), backing_rx_(backing_rx) {
        validate();
    }

    [[nodiscard]] const std::vector<AnyLayer>& layers() const noexcept { return layers_; }
    [[nodiscard]] std::size_t size() const noexcept { return layers_.size(); }
    [[nodiscard]] const AnyLayer& operator[](std::size_t i) const { return layers_[i]; }
    [[nodiscard]] cplx backing_tx() const noexcept { return backing_tx_; }
    [[nodiscard]] cplx backing_rx() const noexcept { return backing_rx_; }
    [[nodiscard]] double area() const { return base_layer(layers_.front()).area; }

    [[nodiscard]] const PiezoLayer& transmitter() const { return std::get<PiezoLayer>(layers_.front()); }
    [[nodiscard]] const PiezoLayer& receiver() const { return std::get<PiezoLayer>(layers_.back()); }

    /// Same stack seen from the receiver side (layer order and backings swapped).
    [[nodiscard]] Stack reversed() const {
        return Stack(std::vector<AnyLayer>(layers_.rbegin(), layers_.rend()), backing_rx_, backing_tx_);
    }

private:
    void validate() const {
        if (layers_.size() < 3) {
            throw DomainError("stack needs at least 3 layers (transmitter, interlayer, receiver)");
        }
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const bool ends = i == 0 || i + 1 == layers_.size();
            const bool piezo = as_piezo(layers_[i]) != nullptr;
            if (ends != piezo) {
                throw DomainError("layer " + std::to_string(i) +
                                  (ends ? " must be piezoelectric" : " must be passive (only the end layers are piezoelectric)"));
            }
            std::visit([](const auto& l) { l.validate(); }, layers_[i]);
            const double s = base_layer(layers_[i]).area;
            const double s0 = base_layer(layers_.front()).area;
            if (std::abs(s - s0) > 1e-12 * s0) {
                throw DomainError("layer " + std::to_string(i) + " area differs from the stack area");
            }
        }
        for (const cplx z : {backing_tx_, backing_rx_}) {
            if (!(z.real() >= 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
                throw DomainError("backing impedance must be finite with real part >= 0");
            }
        }
    }

    std::vector<AnyLayer> layers_;
    cplx backing_tx_;
    cplx backing_rx_;
};

/// Thevenin source on the transmitter and impedance load on the receiver.
struct DriveCondition {
    cplx source_voltage{1.0};
    cplx source_impedance{0.0};
    cplx load_impedance{50.0};
    /// Probe excitation in series with the load (U2 = load_source_voltage - Z_load * I2).
    /// Zero for ordinary runs; used by the output-impedance probe.
    cplx load_source_voltage{0.0};

    void validate() const {
        auto finite = [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
        if (!finite(source_voltage) || !finite(load_source_voltage)) {
            throw DomainError("source voltages must be finite");
        }
        if (!finite(source_impedance) || !(source_impedance.real() >= 0.0)) {
            throw DomainError("source impedance must be finite with real part >= 0");
        }
        if (!finite(load_impedance) || !(load_impedance.real() >= 0.0)) {
            throw DomainError("load impedance must be finite with real part >= 0");
        }
    }
};

}  // namespace aptsim
