#pragma once

// Stack configuration files and the material preset library.
//
//   title = "..."                       optional
//   [source]   voltage_v, phase_deg, resistance_ohm, reactance_ohm
//   [load]     resistance_ohm, reactance_ohm
//   [geometry] area_m2                  required
//   [backing]  tx_ohm_mech, rx_ohm_mech
//   [[layer]]  name, kind = "passive" | "piezo", material, thickness_m, density_kg_m3,
//              speed_m_s, loss_tangent, h_v_per_m, permittivity_f_per_m
//   [sweep]    f_min_hz, f_max_hz, points, scale = "linear" | "log"   required
//
// A layer naming a material takes its constants from the preset; explicit fields win.
// Errors are ConfigError with a field path, e.g. "layer[2].thickness_m: must be > 0 (got -1)".

#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "aptsim/errors.hpp"
#include "aptsim/layer.hpp"
#include "aptsim/stack.hpp"
#include "aptsim/sweep.hpp"
#include "aptsim/toml_lite.hpp"

namespace aptsim {

inline constexpr std::string_view material_provenance =
    "representative handbook values; not measured data from any specific device";

struct Material {
    std::string name;
    std::string description;
    bool piezo = false;
    double density = 0.0;       ///< kg/m^3
    double sound_speed = 0.0;   ///< m/s
    double loss_tangent = 0.0;
    double h_coupling = 0.0;    ///< V/m, piezo only
    double permittivity = 0.0;  ///< F/m, piezo only
};

[[nodiscard]] inline const std::vector<Material>& material_library() {
    static const std::vector<Material> presets{
        {"steel", "structural steel", false, 7850.0, 5900.0, 0.002, 0.0, 0.0},
        {"aluminum", "aluminium alloy", false, 2700.0, 6320.0, 0.001, 0.0, 0.0},
        {"glue", "epoxy bond line, water-like", false, 1100.0, 2500.0, 0.05, 0.0, 0.0},
        {"pzt", "PZT-class piezoceramic, thickness mode", true, 7500.0, 4600.0, 0.004, 2.68e9, 5.62e-9},
    };
    return presets;
}

[[nodiscard]] inline const Material* find_material(std::string_view name) {
    for (const Material& m : material_library()) {
        if (m.name == name) {
            return &m;
        }
    }
    return nullptr;
}

struct LayerConfig {
    std::string name;
    bool piezo = false;
    std::string material;
    double thickness = 0.0;
    double density = 0.0;
    double sound_speed = 0.0;
    double loss_tangent = 0.0;
    double h_coupling = 0.0;
    double permittivity = 0.0;

    friend bool operator==(const LayerConfig&, const LayerConfig&) = default;
};

struct StackConfig {
    std::string title;
    double source_voltage = 1.0;  ///< V amplitude
    double source_phase_deg = 0.0;
    double source_resistance = 0.0;
    double source_reactance = 0.0;
    double load_resistance = 50.0;
    double load_reactance = 0.0;
    double area = 0.0;
    double backing_tx = 0.0;
    double backing_rx = 0.0;
    std::vector<LayerConfig> layers;
    double f_min = 0.0;
    double f_max = 0.0;
    std::size_t points = 0;
    GridScale scale = GridScale::linear;

    [[nodiscard]] Stack stack() const {
        std::vector<AnyLayer> out;
        for (const LayerConfig& lc : layers) {
            const Layer base{lc.thickness, lc.density, lc.sound_speed, lc.loss_tangent, area};
            if (lc.piezo) {
                out.emplace_back(PiezoLayer{base, lc.h_coupling, lc.permittivity});
            } else {
                out.emplace_back(base);
            }
        }
        return Stack(std::move(out), backing_tx, backing_rx);
    }

    [[nodiscard]] DriveCondition drive() const {
        DriveCondition d;
        d.source_voltage = std::polar(source_voltage, source_phase_deg * pi / 180.0);
        d.source_impedance = {source_resistance, source_reactance};
        d.load_impedance = {load_resistance, load_reactance};
        return d;
    }

    [[nodiscard]] FrequencyGrid grid() const { return {f_min, f_max, points, scale}; }

    friend bool operator==(const StackConfig&, const StackConfig&) = default;
};

namespace detail {

[[noreturn]] inline void config_fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

inline std::string got(double v) { return fmt::format(" (got {:g})", v); }

class TableReader {
public:
    TableReader(const toml::Table* table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

    [[nodiscard]] std::string path(std::string_view key) const {
        return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
    }

    [[nodiscard]] bool has(const std::string& key) {
        used_.insert(key);
        return table_ != nullptr && table_->count(key) != 0;
    }

    [[nodiscard]] std::optional<double> number(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const toml::Entry& e = table_->at(key);
        if (const double* v = std::get_if<double>(&e.value)) return *v;
        config_fail(path(key), "expected a number (line " + std::to_string(e.line) + ")");
    }

    [[nodiscard]] std::optional<std::string> string(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const toml::Entry& e = table_->at(key);
        if (const std::string* v = std::get_if<std::string>(&e.value)) return *v;
        config_fail(path(key), "expected a string (line " + std::to_string(e.line) + ")");
    }

    [[nodiscard]] double required(const std::string& key) {
        const auto v = number(key);
        if (!v) config_fail(path(key), "required field is missing");
        return *v;
    }

    [[nodiscard]] bool is_integer(const std::string& key) const { return table_->at(key).integer; }

    void reject_unknown() const {
        if (table_ == nullptr) return;
        for (const auto& [key, entry] : *table_) {
            if (!used_.count(key)) {
                config_fail(path(key), "unknown key (line " + std::to_string(entry.line) + ")");
            }
        }
    }

private:
    const toml::Table* table_;
    std::string prefix_;
    std::set<std::string> used_;
};

inline const toml::Table* find_table(const toml::Document& doc, const std::string& name) {
    const auto it = doc.tables.find(name);
    return it == doc.tables.end() ? nullptr : &it->second;
}

inline void require_positive(const std::string& path, double v) {
    if (!(v > 0.0)) config_fail(path, "must be > 0" + got(v));
}

inline void require_non_negative(const std::string& path, double v) {
    if (!(v >= 0.0)) config_fail(path, "must be >= 0" + got(v));
}

inline LayerConfig read_layer(const toml::Table& table, std::size_t index) {
    TableReader r(&table, "layer[" + std::to_string(index) + "]");
    LayerConfig lc;
    lc.name = r.string("name").value_or("layer" + std::to_string(index));

    const std::string kind = r.string("kind").value_or("passive");
    if (kind != "passive" && kind != "piezo") {
        config_fail(r.path("kind"), "must be \"passive\" or \"piezo\" (got \"" + kind + "\")");
    }
    lc.piezo = kind == "piezo";

    const Material* preset = nullptr;
    if (auto m = r.string("material")) {
        preset = find_material(*m);
        if (preset == nullptr) config_fail(r.path("material"), "unknown material \"" + *m + "\"");
        if (preset->piezo != lc.piezo) {
            config_fail(r.path("material"), "\"" + *m + "\" is a " + (preset->piezo ? "piezo" : "passive") +
                                                " material but the layer kind is " + kind);
        }
        lc.material = *m;
    }

    auto field = [&](const std::string& key, double Material::*member) {
        if (auto v = r.number(key)) return *v;
        if (preset != nullptr) return preset->*member;
        config_fail(r.path(key), "required field is missing (no material preset given)");
    };

    lc.thickness = r.required("thickness_m");
    lc.density = field("density_kg_m3", &Material::density);
    lc.sound_speed = field("speed_m_s", &Material::sound_speed);
    lc.loss_tangent = r.number("loss_tangent").value_or(preset != nullptr ? preset->loss_tangent : 0.0);
    if (lc.piezo) {
        lc.h_coupling = field("h_v_per_m", &Material::h_coupling);
        lc.permittivity = field("permittivity_f_per_m", &Material::permittivity);
    } else {
        for (const char* key : {"h_v_per_m", "permittivity_f_per_m"}) {
            if (r.has(key)) config_fail(r.path(key), "only valid for kind = \"piezo\"");
        }
    }
    r.reject_unknown();

    require_positive(r.path("thickness_m"), lc.thickness);
    require_positive(r.path("density_kg_m3"), lc.density);
    require_positive(r.path("speed_m_s"), lc.sound_speed);
    require_non_negative(r.path("loss_tangent"), lc.loss_tangent);
    if (lc.piezo) {
        require_non_negative(r.path("h_v_per_m"), lc.h_coupling);
        require_positive(r.path("permittivity_f_per_m"), lc.permittivity);
    }
    return lc;
}

}  // namespace detail

[[nodiscard]] inline StackConfig parse_config(std::string_view text) {
    const toml::Document doc = toml::parse(text);
    StackConfig cfg;

    static const std::set<std::string> tables{"source", "load", "geometry", "backing", "sweep"};
    for (const auto& [name, table] : doc.tables) {
        if (!tables.count(name)) detail::config_fail("[" + name + "]", "unknown table");
    }
    for (const auto& [name, arr] : doc.arrays) {
        if (name != "layer") detail::config_fail("[[" + name + "]]", "unknown array of tables");
    }

    detail::TableReader root(&doc.root, "");
    cfg.title = root.string("title").value_or("");
    root.reject_unknown();

    detail::TableReader source(detail::find_table(doc, "source"), "source");
    cfg.source_voltage = source.number("voltage_v").value_or(1.0);
    cfg.source_phase_deg = source.number("phase_deg").value_or(0.0);
    cfg.source_resistance = source.number("resistance_ohm").value_or(0.0);
    cfg.source_reactance = source.number("reactance_ohm").value_or(0.0);
    source.reject_unknown();
    detail::require_non_negative("source.voltage_v", cfg.source_voltage);
    detail::require_non_negative("source.resistance_ohm", cfg.source_resistance);

    detail::TableReader load(detail::find_table(doc, "load"), "load");
    cfg.load_resistance = load.number("resistance_ohm").value_or(50.0);
    cfg.load_reactance = load.number("reactance_ohm").value_or(0.0);
    load.reject_unknown();
    detail::require_non_negative("load.resistance_ohm", cfg.load_resistance);

    const toml::Table* geometry_table = detail::find_table(doc, "geometry");
    if (geometry_table == nullptr) detail::config_fail("geometry", "required table is missing");
    detail::TableReader geometry(geometry_table, "geometry");
    cfg.area = geometry.required("area_m2");
    geometry.reject_unknown();
    detail::require_positive("geometry.area_m2", cfg.area);

    detail::TableReader backing(detail::find_table(doc, "backing"), "backing");
    cfg.backing_tx = backing.number("tx_ohm_mech").value_or(0.0);
    cfg.backing_rx = backing.number("rx_ohm_mech").value_or(0.0);
    backing.reject_unknown();
    detail::require_non_negative("backing.tx_ohm_mech", cfg.backing_tx);
    detail::require_non_negative("backing.rx_ohm_mech", cfg.backing_rx);

    const auto layers = doc.arrays.find("layer");
    const std::size_t n_layers = layers == doc.arrays.end() ? 0 : layers->second.size();
    if (n_layers < 3) {
        detail::config_fail("layer", "at least 3 layers are required (got " + std::to_string(n_layers) + ")");
    }
    for (std::size_t i = 0; i < n_layers; ++i) {
        cfg.layers.push_back(detail::read_layer(layers->second[i], i));
        const bool end = i == 0 || i + 1 == n_layers;
        if (end != cfg.layers.back().piezo) {
            detail::config_fail("layer[" + std::to_string(i) + "].kind",
                                end ? "the first and last layers must be \"piezo\""
                                    : "only the first and last layers may be \"piezo\"");
        }
    }

    const toml::Table* sweep_table = detail::find_table(doc, "sweep");
    if (sweep_table == nullptr) detail::config_fail("sweep", "required table is missing");
    detail::TableReader sweep(sweep_table, "sweep");
    cfg.f_min = sweep.required("f_min_hz");
    cfg.f_max = sweep.required("f_max_hz");
    const double points = sweep.required("points");
    if (!sweep.is_integer("points") || points < 2.0 || points > 1e8) {
        detail::config_fail("sweep.points", "must be an integer >= 2" + detail::got(points));
    }
    cfg.points = static_cast<std::size_t>(points);
    const std::string scale = sweep.string("scale").value_or("linear");
    if (scale != "linear" && scale != "log") {
        detail::config_fail("sweep.scale", "must be \"linear\" or \"log\" (got \"" + scale + "\")");
    }
    cfg.scale = scale == "log" ? GridScale::log : GridScale::linear;
    sweep.reject_unknown();
    detail::require_positive("sweep.f_min_hz", cfg.f_min);
    if (!(cfg.f_max > cfg.f_min)) detail::config_fail("sweep.f_max_hz", "must be > f_min_hz" + detail::got(cfg.f_max));

    try {
        (void)cfg.stack();
        cfg.drive().validate();
    } catch (const DomainError& e) {
        detail::config_fail("stack", e.what());
    }
    return cfg;
}

[[nodiscard]] inline StackConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(path + ": cannot open file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace detail {

inline std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out + "\"";
}

inline std::string exact(double v) { return fmt::format("{:.17g}", v); }

}  // namespace detail

/// Canonical text form. Material presets are written out as explicit values, so the
/// output parses back to an equal StackConfig.
[[nodiscard]] inline std::string serialize_config(const StackConfig& cfg) {
    using detail::exact;
    std::string out;
    if (!cfg.title.empty()) {
        out += "title = " + detail::quoted(cfg.title) + "\n\n";
    }
    out += "[source]\n";
    out += "voltage_v = " + exact(cfg.source_voltage) + "\n";
    out += "phase_deg = " + exact(cfg.source_phase_deg) + "\n";
    out += "resistance_ohm = " + exact(cfg.source_resistance) + "\n";
    out += "reactance_ohm = " + exact(cfg.source_reactance) + "\n\n";
    out += "[load]\n";
    out += "resistance_ohm = " + exact(cfg.load_resistance) + "\n";
    out += "reactance_ohm = " + exact(cfg.load_reactance) + "\n\n";
    out += "[geometry]\n";
    out += "area_m2 = " + exact(cfg.area) + "\n\n";
    out += "[backing]\n";
    out += "tx_ohm_mech = " + exact(cfg.backing_tx) + "\n";
    out += "rx_ohm_mech = " + exact(cfg.backing_rx) + "\n\n";
    for (const LayerConfig& lc : cfg.layers) {
        out += "[[layer]]\n";
        out += "name = " + detail::quoted(lc.name) + "\n";
        out += std::string("kind = ") + (lc.piezo ? "\"piezo\"" : "\"passive\"") + "\n";
        if (!lc.material.empty()) {
            out += "material = " + detail::quoted(lc.material) + "\n";
        }
        out += "thickness_m = " + exact(lc.thickness) + "\n";
        out += "density_kg_m3 = " + exact(lc.density) + "\n";
        out += "speed_m_s = " + exact(lc.sound_speed) + "\n";
        out += "loss_tangent = " + exact(lc.loss_tangent) + "\n";
        if (lc.piezo) {
            out += "h_v_per_m = " + exact(lc.h_coupling) + "\n";
            out += "permittivity_f_per_m = " + exact(lc.permittivity) + "\n";
        }
        out += "\n";
    }
    out += "[sweep]\n";
    out += "f_min_hz = " + exact(cfg.f_min) + "\n";
    out += "f_max_hz = " + exact(cfg.f_max) + "\n";
    out += "points = " + std::to_string(cfg.points) + "\n";
    out += std::string("scale = ") + (cfg.scale == GridScale::log ? "\"log\"" : "\"linear\"") + "\n";
    return out;
}

}  // namespace aptsim
