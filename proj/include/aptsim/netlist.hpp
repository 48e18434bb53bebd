#pragma once

// SPICE netlist export of the Mason equivalent circuit and import of the same dialect.
//
// Mapping (force -> voltage, velocity -> current, mechanical ohm -> ohm):
//   passive layer k   T<k> n_a 0 n_b 0 Z0=<S*rho*c> TD=<x/c>
//   piezo layer k     T<k> n_a n_k_p n_b n_k_p ...  full-length line whose reference
//                     terminals return through the transformer secondary
//                     C<k>  n_k_e 0 <C0>             clamped capacitance
//                     CN<k> n_k_e n_k_b <-C0>        negative capacitance
//                     EX<k> n_k_x 0 n_k_b 0 <h*C0>   secondary voltage = h*C0 * primary
//                     VX<k> n_k_p n_k_x DC 0         senses the secondary current
//                     FX<k> 0 n_k_b VX<k> <h*C0>     primary current = -h*C0 * secondary
//   terminations      R/L/C cards (BTX, BRX, SRC, LOAD), VSRC for the source.
// Zero-valued terminations are realised by merging nodes (a free face is node 0).

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "aptsim/acoustic.hpp"
#include "aptsim/errors.hpp"
#include "aptsim/mason.hpp"
#include "aptsim/network.hpp"
#include "aptsim/stack.hpp"

namespace aptsim {

struct NetlistOptions {
    std::string title = "apt-sim Mason equivalent circuit";
    /// Emit lossy layers as LTRA lines with RLGC fitted exactly at f_center.
    bool lossy_lines = false;
    /// Drop the -C0 branch (KLM-style). Nonstandard for the Mason circuit.
    bool omit_negative_capacitance = false;
};

namespace detail {

inline std::string num(double v) {
    if (v == 0.0) {
        return "0";
    }
    return fmt::format("{:.15g}", v);
}

class CardWriter {
public:
    void line(const std::string& s) { out_ << s << '\n'; }
    void comment(const std::string& s) { out_ << "* " << s << '\n'; }

    /// R, then L or C, for a complex impedance at omega; intermediate node n_<tag>_z.
    void impedance(const std::string& tag, const std::string& a, const std::string& b, cplx z, double omega) {
        const bool has_r = z.real() != 0.0;
        const bool has_x = z.imag() != 0.0;
        const std::string mid = has_r && has_x ? "n_" + lower(tag) + "_z" : b;
        if (has_r) {
            line("R" + tag + " " + a + " " + mid + " " + num(z.real()));
        }
        if (has_x) {
            const std::string from = has_r ? mid : a;
            if (z.imag() > 0.0) {
                line("L" + tag + " " + from + " " + b + " " + num(z.imag() / omega));
            } else {
                line("C" + tag + " " + from + " " + b + " " + num(-1.0 / (omega * z.imag())));
            }
        }
    }

    [[nodiscard]] std::string str() const { return out_.str(); }

private:
    static std::string lower(std::string s) {
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    }

    std::ostringstream out_;
};

}  // namespace detail

[[nodiscard]] inline std::string export_netlist(const Stack& stack, const DriveCondition& drive, double f_center,
                                                const NetlistOptions& options = {}) {
    if (!(f_center > 0.0) || !std::isfinite(f_center)) {
        throw DomainError("netlist centre frequency must be > 0");
    }
    drive.validate();
    if (drive.load_source_voltage != cplx{0.0}) {
        throw DomainError("probe excitation in series with the load cannot be exported");
    }
    const double omega = 2.0 * pi * f_center;
    const std::size_t n_layers = stack.size();

    for (std::size_t n = 0; n < n_layers; ++n) {
        if (!base_layer(stack[n]).lossless() && !options.lossy_lines) {
            throw UnsupportedLossyLayer("layer " + std::to_string(n + 1) +
                                        " has loss_tangent > 0; lossless transmission-line cards cannot carry loss "
                                        "(enable lossy lines)");
        }
    }

    std::map<std::string, std::string> alias;
    auto node = [&](const std::string& name) {
        const auto it = alias.find(name);
        return it == alias.end() ? name : it->second;
    };
    const std::string tx_face = interface_node_name(0, n_layers);
    const std::string rx_face = interface_node_name(n_layers, n_layers);
    const std::string tx_term = "n_1_e";
    const std::string rx_term = "n_" + std::to_string(n_layers) + "_e";
    if (stack.backing_tx() == cplx{0.0}) alias[tx_face] = "0";
    if (stack.backing_rx() == cplx{0.0}) alias[rx_face] = "0";
    if (drive.load_impedance == cplx{0.0}) alias[rx_term] = "0";

    detail::CardWriter w;
    w.line(options.title);
    w.comment("Mason equivalent circuit: force -> voltage, velocity -> current, N*s/m -> ohm");
    w.comment("layers " + std::to_string(n_layers) + ", area " + detail::num(stack.area()) + " m^2, f_center " +
              detail::num(f_center) + " Hz");

    std::vector<std::string> models;
    for (std::size_t n = 0; n < n_layers; ++n) {
        const std::string k = std::to_string(n + 1);
        const Layer& layer = base_layer(stack[n]);
        const PiezoLayer* piezo = as_piezo(stack[n]);
        const bool coupled = piezo != nullptr && piezo->h_coupling != 0.0;
        const std::string ref = coupled ? "n_" + k + "_p" : "0";
        const std::string a = node(interface_node_name(n, n_layers));
        const std::string b = node(interface_node_name(n + 1, n_layers));

        w.comment("layer " + k + ": " + (piezo ? "piezo" : "passive") + ", thickness " + detail::num(layer.thickness) +
                  " m, density " + detail::num(layer.density) + " kg/m^3, speed " + detail::num(layer.sound_speed) +
                  " m/s, loss " + detail::num(layer.loss_tangent));
        if (layer.lossless()) {
            w.line("T" + k + " " + a + " " + ref + " " + b + " " + ref +
                   " Z0=" + detail::num(characteristic_impedance(layer).real()) +
                   " TD=" + detail::num(layer.thickness / layer.sound_speed));
        } else {
            w.comment("lossy line: RLGC matched at f_center only");
            const cplx kk = wavenumber(omega, layer);
            const cplx z = characteristic_impedance(layer);
            const cplx series = j_unit * kk * z;
            const cplx shunt = j_unit * kk / z;
            w.line("O" + k + " " + a + " " + ref + " " + b + " " + ref + " LTRA" + k);
            models.push_back(".MODEL LTRA" + k + " LTRA R=" + detail::num(series.real()) +
                             " L=" + detail::num(series.imag() / omega) + " G=" + detail::num(shunt.real()) +
                             " C=" + detail::num(shunt.imag() / omega) + " LEN=" + detail::num(layer.thickness));
        }

        if (piezo == nullptr) {
            continue;
        }
        const double c0 = piezo_clamped_capacitance(*piezo);
        const std::string term = node("n_" + k + "_e");
        w.line("C" + k + " " + term + " 0 " + detail::num(c0));
        if (!coupled) {
            w.comment("h = 0: electrical port decoupled, no transformer or negative capacitance");
            continue;
        }
        std::string primary = "n_" + k + "_b";
        if (options.omit_negative_capacitance) {
            w.comment("nonstandard: negative capacitance omitted (KLM-style simplification)");
            primary = term;
        } else {
            w.comment("negative capacitance; some simulators reject negative values");
            w.line("CN" + k + " " + term + " " + primary + " " + detail::num(-c0));
        }
        const std::string ratio = detail::num(piezo->h_coupling * c0);
        w.comment("ideal transformer, ratio h*C0");
        w.line("EX" + k + " n_" + k + "_x 0 " + primary + " 0 " + ratio);
        w.line("VX" + k + " n_" + k + "_p n_" + k + "_x DC 0");
        w.line("FX" + k + " 0 " + primary + " VX" + k + " " + ratio);
    }

    w.comment("terminations");
    if (stack.backing_tx() != cplx{0.0}) w.impedance("BTX", tx_face, "0", stack.backing_tx(), omega);
    if (stack.backing_rx() != cplx{0.0}) w.impedance("BRX", rx_face, "0", stack.backing_rx(), omega);
    const std::string src = drive.source_impedance == cplx{0.0} ? tx_term : "n_src";
    w.line("VSRC " + src + " 0 AC " + detail::num(std::abs(drive.source_voltage)) + " " +
           detail::num(std::arg(drive.source_voltage) * 180.0 / pi));
    if (drive.source_impedance != cplx{0.0}) w.impedance("SRC", src, tx_term, drive.source_impedance, omega);
    if (drive.load_impedance != cplx{0.0}) w.impedance("LOAD", rx_term, "0", drive.load_impedance, omega);

    for (const std::string& m : models) {
        w.line(m);
    }
    w.line(".AC LIN 1 " + detail::num(f_center) + " " + detail::num(f_center));
    w.line(".END");
    return w.str();
}

struct ImportedNetlist {
    std::string title;
    double frequency = 0.0;  ///< Hz, from the .AC card
    Network network;
};

namespace detail {

struct Card {
    std::size_t line = 0;
    std::vector<std::string> tokens;
};

inline std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

inline double parse_number(const std::string& token, std::size_t line) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (!token.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
        throw ParseError(line, "invalid number '" + token + "'");
    }
    return v;
}

/// Value of a KEY=value token, keys compared case-insensitively.
inline double keyed(const std::string& token, std::string_view key, std::size_t line) {
    const auto eq = token.find('=');
    if (eq == std::string::npos || upper(token.substr(0, eq)) != key) {
        throw ParseError(line, "expected " + std::string(key) + "=<value>, got '" + token + "'");
    }
    return parse_number(token.substr(eq + 1), line);
}

inline void expect_tokens(const Card& c, std::size_t n) {
    if (c.tokens.size() != n) {
        throw ParseError(c.line, "card '" + c.tokens.front() + "' expects " + std::to_string(n) + " fields, got " +
                                     std::to_string(c.tokens.size()));
    }
}

/// Line section as a T-network: series arms j*Z*tan(kx/2), shunt Z/(j sin kx).
inline void add_line_tee(Network& net, const Card& c, cplx z, cplx kx) {
    const std::string& name = c.tokens[0];
    if (c.tokens[2] != c.tokens[4]) {
        throw ParseError(c.line, "line '" + name + "': reference terminals must share a node");
    }
    const cplx s = std::sin(kx);
    if (std::abs(s) < resonance_tolerance) {
        throw LayerResonanceSingularity("line '" + name + "' is a half-wave multiple at the analysis frequency");
    }
    const NodeId mid = net.node(name + ":m");
    const cplx series = j_unit * z * std::tan(0.5 * kx);
    net.add_impedance(name + ":A", net.node(c.tokens[1]), mid, series);
    net.add_impedance(name + ":B", mid, net.node(c.tokens[3]), series);
    net.add_impedance(name + ":S", mid, net.node(c.tokens[2]), z / (j_unit * s));
}

}  // namespace detail

/// Read a netlist written by export_netlist into a Network evaluated at its .AC frequency.
[[nodiscard]] inline ImportedNetlist import_netlist(std::string_view text) {
    std::vector<detail::Card> cards;
    ImportedNetlist out;
    bool have_title = false;
    bool ended = false;
    std::optional<double> freq;
    std::map<std::string, std::map<std::string, double>> models;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size() && !ended) {
        const std::size_t nl = text.find('\n', pos);
        std::string line(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!have_title) {
            if (line.find_first_not_of(" \t") == std::string::npos) {
                continue;
            }
            out.title = line;
            have_title = true;
            continue;
        }
        std::istringstream ss(line);
        detail::Card card{line_no, {}};
        for (std::string tok; ss >> tok;) {
            card.tokens.push_back(tok);
        }
        if (card.tokens.empty() || card.tokens.front().front() == '*') {
            continue;
        }
        const std::string head = detail::upper(card.tokens.front());
        if (head == ".END") {
            ended = true;
        } else if (head == ".AC") {
            detail::expect_tokens(card, 5);
            if (detail::upper(card.tokens[1]) != "LIN" || card.tokens[2] != "1") {
                throw ParseError(line_no, ".AC must be a single-point LIN analysis");
            }
            const double f1 = detail::parse_number(card.tokens[3], line_no);
            const double f2 = detail::parse_number(card.tokens[4], line_no);
            if (!(f1 > 0.0) || f1 != f2) {
                throw ParseError(line_no, ".AC start and stop must be equal and positive");
            }
            freq = f1;
        } else if (head == ".MODEL") {
            if (card.tokens.size() != 8 || detail::upper(card.tokens[2]) != "LTRA") {
                throw UnknownCard(line_no, "only LTRA models with R, L, G, C, LEN are supported");
            }
            auto& m = models[detail::upper(card.tokens[1])];
            const char* keys[] = {"R", "L", "G", "C", "LEN"};
            for (std::size_t i = 0; i < 5; ++i) {
                m[keys[i]] = detail::keyed(card.tokens[3 + i], keys[i], line_no);
            }
        } else if (std::string_view("RLCTOVEF").find(head.front()) != std::string_view::npos) {
            cards.push_back(std::move(card));
        } else {
            throw UnknownCard(line_no, "unsupported card '" + card.tokens.front() + "'");
        }
    }
    if (!have_title) {
        throw ParseError(0, "empty document");
    }
    if (!ended) {
        throw ParseError(line_no, "missing .END");
    }
    if (!freq) {
        throw ParseError(0, "missing .AC analysis card");
    }
    out.frequency = *freq;
    const double omega = 2.0 * pi * out.frequency;
    Network& net = out.network;

    std::map<std::string, const detail::Card*> by_name;
    for (const auto& c : cards) {
        if (!by_name.emplace(detail::upper(c.tokens[0]), &c).second) {
            throw ParseError(c.line, "duplicate element name '" + c.tokens[0] + "'");
        }
    }

    for (const auto& c : cards) {
        const std::string name = c.tokens[0];
        switch (std::toupper(static_cast<unsigned char>(name.front()))) {
            case 'R':
            case 'L':
            case 'C': {
                detail::expect_tokens(c, 4);
                const double v = detail::parse_number(c.tokens[3], c.line);
                const NodeId a = net.node(c.tokens[1]);
                const NodeId b = net.node(c.tokens[2]);
                const char kind = static_cast<char>(std::toupper(static_cast<unsigned char>(name.front())));
                if (kind == 'R') {
                    net.add_impedance(name, a, b, v);
                } else if (kind == 'L') {
                    net.add_impedance(name, a, b, j_unit * omega * v);
                } else if (v > 0.0) {
                    net.add_impedance(name, a, b, 1.0 / (j_unit * omega * v));
                } else if (v < 0.0) {
                    net.add_negative_capacitance(name, a, b, -v);
                } else {
                    throw ParseError(c.line, "capacitor '" + name + "' has zero value");
                }
                break;
            }
            case 'T': {
                detail::expect_tokens(c, 7);
                const double z0 = detail::keyed(c.tokens[5], "Z0", c.line);
                const double td = detail::keyed(c.tokens[6], "TD", c.line);
                if (!(z0 > 0.0) || !(td > 0.0)) {
                    throw ParseError(c.line, "line '" + name + "' needs Z0 > 0 and TD > 0");
                }
                detail::add_line_tee(net, c, z0, omega * td);
                break;
            }
            case 'O': {
                detail::expect_tokens(c, 6);
                const auto it = models.find(detail::upper(c.tokens[5]));
                if (it == models.end()) {
                    throw ParseError(c.line, "line '" + name + "' references unknown model '" + c.tokens[5] + "'");
                }
                auto& m = it->second;
                const cplx series(m["R"], omega * m["L"]);
                const cplx shunt(m["G"], omega * m["C"]);
                cplx z = std::sqrt(series / shunt);
                if (z.real() < 0.0) z = -z;
                cplx gamma = std::sqrt(series * shunt);
                if (gamma.real() < 0.0) gamma = -gamma;
                detail::add_line_tee(net, c, z, -j_unit * gamma * m["LEN"]);
                break;
            }
            case 'V': {
                if (c.tokens.size() == 5 && detail::upper(c.tokens[3]) == "DC") {
                    const double v = detail::parse_number(c.tokens[4], c.line);
                    net.add_voltage_source(name, net.node(c.tokens[1]), net.node(c.tokens[2]), v);
                } else if (c.tokens.size() == 6 && detail::upper(c.tokens[3]) == "AC") {
                    const double mag = detail::parse_number(c.tokens[4], c.line);
                    const double phase = detail::parse_number(c.tokens[5], c.line);
                    net.add_voltage_source(name, net.node(c.tokens[1]), net.node(c.tokens[2]),
                                           std::polar(mag, phase * pi / 180.0));
                } else {
                    throw ParseError(c.line, "voltage source '" + name + "' must be 'AC mag phase' or 'DC value'");
                }
                break;
            }
            case 'E': {
                detail::expect_tokens(c, 6);
                const double gain = detail::parse_number(c.tokens[5], c.line);
                // paired F card: FX<k> <ctl-> <ctl+> VX<k> <gain>
                const detail::Card* f = nullptr;
                for (const auto& other : cards) {
                    if (std::toupper(static_cast<unsigned char>(other.tokens[0].front())) == 'F' &&
                        other.tokens.size() == 5 && other.tokens[1] == c.tokens[4] && other.tokens[2] == c.tokens[3]) {
                        f = &other;
                    }
                }
                if (f == nullptr) {
                    throw ParseError(c.line, "controlled source '" + name + "' has no paired current-controlled source");
                }
                const auto sense = by_name.find(detail::upper(f->tokens[3]));
                if (sense == by_name.end() || sense->second->tokens.size() != 5 ||
                    sense->second->tokens[2] != c.tokens[1]) {
                    throw ParseError(f->line, "'" + f->tokens[0] + "' must sense a source in series with '" + name + "'");
                }
                if (detail::parse_number(f->tokens[4], f->line) != gain) {
                    throw ParseError(f->line, "'" + f->tokens[0] + "' gain differs from '" + name + "'");
                }
                net.add_transformer("X" + name, net.node(c.tokens[3]), net.node(c.tokens[4]), net.node(c.tokens[1]),
                                    net.node(c.tokens[2]), gain);
                break;
            }
            case 'F': {
                detail::expect_tokens(c, 5);
                bool paired = false;
                for (const auto& other : cards) {
                    paired = paired || (std::toupper(static_cast<unsigned char>(other.tokens[0].front())) == 'E' &&
                                        other.tokens.size() == 6 && other.tokens[4] == c.tokens[1] &&
                                        other.tokens[3] == c.tokens[2]);
                }
                if (!paired) {
                    throw ParseError(c.line, "controlled source '" + name + "' has no paired voltage-controlled source");
                }
                break;  // folded into the transformer built from its E card
            }
        }
    }

    net.validate();
    return out;
}

}  // namespace aptsim
