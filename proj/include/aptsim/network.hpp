#pragma once

// Small AC circuit model and its modified nodal analysis solver. Only the element
// kinds needed by the Mason equivalent circuit are supported.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "aptsim/errors.hpp"
#include "aptsim/layer.hpp"
#include "aptsim/linalg.hpp"

namespace aptsim {

using NodeId = std::size_t;

enum class BranchKind { impedance, voltage_source, current_source, ideal_transformer, negative_capacitance };

/// One circuit element. Terminal a is the reference "+" end: impedance, negative
/// capacitance and sources carry their current from a to b through the element.
/// Transformers use (a, b) for the primary and (c, d) for the secondary.
struct Branch {
    BranchKind kind = BranchKind::impedance;
    std::string name;
    NodeId a = 0;
    NodeId b = 0;
    NodeId c = 0;
    NodeId d = 0;
    /// Impedance (ohm), source value (V or A), turns ratio (real) or capacitance C0 (F)
    /// for a negative capacitance of impedance -1 / (j*omega*C0).
    cplx value{0.0};
};

class Network {
public:
    Network() {
        names_.push_back("0");
        index_.emplace("0", 0);
    }

    [[nodiscard]] static constexpr NodeId ground() noexcept { return 0; }

    /// Node by name, created on first use. "0" and "gnd" are the ground node.
    NodeId node(const std::string& name) {
        if (name == "0" || name == "gnd" || name == "GND") {
            return ground();
        }
        if (auto it = index_.find(name); it != index_.end()) {
            return it->second;
        }
        names_.push_back(name);
        index_.emplace(name, names_.size() - 1);
        return names_.size() - 1;
    }

    [[nodiscard]] std::optional<NodeId> find_node(const std::string& name) const {
        if (name == "gnd" || name == "GND") {
            return ground();
        }
        if (auto it = index_.find(name); it != index_.end()) {
            return it->second;
        }
        return std::nullopt;
    }

    [[nodiscard]] const std::string& node_name(NodeId id) const { return names_.at(id); }
    [[nodiscard]] std::size_t node_count() const noexcept { return names_.size(); }
    [[nodiscard]] const std::vector<Branch>& branches() const noexcept { return branches_; }

    std::size_t add_impedance(std::string name, NodeId a, NodeId b, cplx z) {
        return add({BranchKind::impedance, std::move(name), a, b, 0, 0, z});
    }
    std::size_t add_voltage_source(std::string name, NodeId plus, NodeId minus, cplx volts) {
        return add({BranchKind::voltage_source, std::move(name), plus, minus, 0, 0, volts});
    }
    std::size_t add_current_source(std::string name, NodeId from, NodeId to, cplx amps) {
        return add({BranchKind::current_source, std::move(name), from, to, 0, 0, amps});
    }
    /// V(s+) - V(s-) = ratio * (V(p+) - V(p-)), I_primary + ratio * I_secondary = 0.
    std::size_t add_transformer(std::string name, NodeId p_plus, NodeId p_minus, NodeId s_plus, NodeId s_minus,
                                double ratio) {
        return add({BranchKind::ideal_transformer, std::move(name), p_plus, p_minus, s_plus, s_minus, ratio});
    }
    std::size_t add_negative_capacitance(std::string name, NodeId a, NodeId b, double c0) {
        return add({BranchKind::negative_capacitance, std::move(name), a, b, 0, 0, c0});
    }

    [[nodiscard]] std::optional<std::size_t> find_branch(const std::string& name) const {
        for (std::size_t i = 0; i < branches_.size(); ++i) {
            if (branches_[i].name == name) {
                return i;
            }
        }
        return std::nullopt;
    }

    void set_value(std::size_t branch, cplx value) { branches_.at(branch).value = value; }

    /// Structural invariants: every non-ground node touched by at least two terminals,
    /// one connected graph containing ground, unique branch names, real turns ratios.
    void validate() const {
        if (branches_.empty()) {
            throw NetworkInvariantError("network has no branches");
        }
        std::vector<std::size_t> touches(names_.size(), 0);
        std::vector<std::size_t> parent(names_.size());
        std::iota(parent.begin(), parent.end(), std::size_t{0});
        auto find = [&](std::size_t x) {
            while (parent[x] != x) {
                x = parent[x] = parent[parent[x]];
            }
            return x;
        };
        auto join = [&](std::size_t x, std::size_t y) { parent[find(x)] = find(y); };

        std::unordered_map<std::string, std::size_t> seen;
        for (const Branch& br : branches_) {
            if (!seen.emplace(br.name, 0).second) {
                throw NetworkInvariantError("duplicate branch name '" + br.name + "'");
            }
            for (NodeId n : terminals(br)) {
                if (n >= names_.size()) {
                    throw NetworkInvariantError("branch '" + br.name + "' references an unknown node");
                }
                ++touches[n];
            }
            const auto t = terminals(br);
            for (std::size_t k = 1; k < t.size(); ++k) {
                join(t[0], t[k]);
            }
            if (br.kind == BranchKind::ideal_transformer &&
                (br.value.imag() != 0.0 || !std::isfinite(br.value.real()))) {
                throw NetworkInvariantError("transformer '" + br.name + "' needs a finite real turns ratio");
            }
            if (br.kind == BranchKind::negative_capacitance && !(br.value.real() > 0.0 && br.value.imag() == 0.0)) {
                throw NetworkInvariantError("negative capacitance '" + br.name + "' needs a positive real C0");
            }
        }
        for (NodeId n = 1; n < names_.size(); ++n) {
            if (touches[n] < 2) {
                throw NetworkInvariantError("node '" + names_[n] + "' is dangling (connected to fewer than two terminals)");
            }
            if (find(n) != find(ground())) {
                throw NetworkInvariantError("node '" + names_[n] + "' is not connected to ground");
            }
        }
    }

    [[nodiscard]] static std::vector<NodeId> terminals(const Branch& br) {
        if (br.kind == BranchKind::ideal_transformer) {
            return {br.a, br.b, br.c, br.d};
        }
        return {br.a, br.b};
    }

private:
    std::size_t add(Branch br) {
        branches_.push_back(std::move(br));
        return branches_.size() - 1;
    }

    std::vector<std::string> names_;
    std::unordered_map<std::string, NodeId> index_;
    std::vector<Branch> branches_;
};

struct MnaSolution {
    std::vector<cplx> node_voltages;       ///< indexed by NodeId, ground = 0
    std::vector<cplx> branch_currents;     ///< a -> b through the element (primary for transformers)
    std::vector<cplx> secondary_currents;  ///< c -> d through transformer secondaries, 0 otherwise

    [[nodiscard]] cplx voltage(NodeId n) const { return node_voltages.at(n); }
};

/// Impedance of an impedance-like branch at omega.
[[nodiscard]] inline cplx branch_impedance(const Branch& br, double omega) {
    if (br.kind == BranchKind::negative_capacitance) {
        return -1.0 / (j_unit * omega * br.value.real());
    }
    return br.value;
}

/// AC modified nodal analysis. Every impedance, negative capacitance and voltage
/// source gets a branch-current unknown (so zero impedances are legal); transformers
/// get two current unknowns and two constraint rows.
[[nodiscard]] inline MnaSolution mna_solve(const Network& net, double omega) {
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw DomainError("angular frequency must be finite and > 0");
    }
    net.validate();

    const auto& brs = net.branches();
    const Eigen::Index n_nodes = static_cast<Eigen::Index>(net.node_count()) - 1;
    std::vector<Eigen::Index> current_index(brs.size(), -1);
    Eigen::Index next = n_nodes;
    for (std::size_t i = 0; i < brs.size(); ++i) {
        if (brs[i].kind == BranchKind::current_source) {
            continue;
        }
        current_index[i] = next;
        next += brs[i].kind == BranchKind::ideal_transformer ? 2 : 1;
    }
    const Eigen::Index dim = next;

    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dim);
    auto vcol = [](NodeId n) { return static_cast<Eigen::Index>(n) - 1; };
    // KCL rows: sum of currents leaving the node through branches = 0
    auto leave = [&](NodeId n, Eigen::Index col, cplx coeff) {
        if (n != Network::ground()) {
            a(vcol(n), col) += coeff;
        }
    };
    auto volt = [&](Eigen::Index row, NodeId n, cplx coeff) {
        if (n != Network::ground()) {
            a(row, vcol(n)) += coeff;
        }
    };

    for (std::size_t i = 0; i < brs.size(); ++i) {
        const Branch& br = brs[i];
        const Eigen::Index k = current_index[i];
        switch (br.kind) {
            case BranchKind::impedance:
            case BranchKind::negative_capacitance:
                leave(br.a, k, 1.0);
                leave(br.b, k, -1.0);
                volt(k, br.a, 1.0);
                volt(k, br.b, -1.0);
                a(k, k) -= branch_impedance(br, omega);
                break;
            case BranchKind::voltage_source:
                leave(br.a, k, 1.0);
                leave(br.b, k, -1.0);
                volt(k, br.a, 1.0);
                volt(k, br.b, -1.0);
                rhs(k) = br.value;
                break;
            case BranchKind::current_source:
                if (br.a != Network::ground()) rhs(vcol(br.a)) -= br.value;
                if (br.b != Network::ground()) rhs(vcol(br.b)) += br.value;
                break;
            case BranchKind::ideal_transformer: {
                const double n = br.value.real();
                leave(br.a, k, 1.0);
                leave(br.b, k, -1.0);
                leave(br.c, k + 1, 1.0);
                leave(br.d, k + 1, -1.0);
                volt(k, br.c, 1.0);
                volt(k, br.d, -1.0);
                volt(k, br.a, -n);
                volt(k, br.b, n);
                a(k + 1, k) = 1.0;
                a(k + 1, k + 1) = n;
                break;
            }
        }
    }

    const auto sol = linalg::solve_dense<SingularNetwork>(a, rhs, "MNA system");

    MnaSolution out;
    out.node_voltages.assign(net.node_count(), cplx{0.0});
    for (Eigen::Index n = 0; n < n_nodes; ++n) {
        out.node_voltages[static_cast<std::size_t>(n + 1)] = sol.x(n);
    }
    out.branch_currents.assign(brs.size(), cplx{0.0});
    out.secondary_currents.assign(brs.size(), cplx{0.0});
    for (std::size_t i = 0; i < brs.size(); ++i) {
        if (brs[i].kind == BranchKind::current_source) {
            out.branch_currents[i] = brs[i].value;
        } else {
            out.branch_currents[i] = sol.x(current_index[i]);
            if (brs[i].kind == BranchKind::ideal_transformer) {
                out.secondary_currents[i] = sol.x(current_index[i] + 1);
            }
        }
    }
    return out;
}

/// Complex power absorbed by a branch, 1/2 * V * conj(I) with current entering at a
/// (and at c for transformer secondaries).
[[nodiscard]] inline cplx branch_complex_power(const Network& net, const MnaSolution& sol, std::size_t i) {
    const Branch& br = net.branches().at(i);
    cplx s = 0.5 * (sol.voltage(br.a) - sol.voltage(br.b)) * std::conj(sol.branch_currents[i]);
    if (br.kind == BranchKind::ideal_transformer) {
        s += 0.5 * (sol.voltage(br.c) - sol.voltage(br.d)) * std::conj(sol.secondary_currents[i]);
    }
    return s;
}

/// Largest KCL imbalance over all non-ground nodes, relative to the sum of current
/// magnitudes at that node.
[[nodiscard]] inline double kcl_residual(const Network& net, const MnaSolution& sol) {
    std::vector<cplx> sum(net.node_count(), cplx{0.0});
    std::vector<double> scale(net.node_count(), 0.0);
    auto add = [&](NodeId n, cplx i) {
        sum[n] += i;
        scale[n] += std::abs(i);
    };
    for (std::size_t i = 0; i < net.branches().size(); ++i) {
        const Branch& br = net.branches()[i];
        add(br.a, sol.branch_currents[i]);
        add(br.b, -sol.branch_currents[i]);
        if (br.kind == BranchKind::ideal_transformer) {
            add(br.c, sol.secondary_currents[i]);
            add(br.d, -sol.secondary_currents[i]);
        }
    }
    double worst = 0.0;
    for (NodeId n = 1; n < net.node_count(); ++n) {
        if (scale[n] > 0.0) {
            worst = std::max(worst, std::abs(sum[n]) / scale[n]);
        }
    }
    return worst;
}

}  // namespace aptsim
