#pragma once

// apt-sim command line: sweep | optimize | check | netlist | materials.
// Exit codes: 0 success, 1 input error, 2 computation error.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "aptsim/config.hpp"
#include "aptsim/errors.hpp"
#include "aptsim/mason.hpp"
#include "aptsim/netlist.hpp"
#include "aptsim/optimizer.hpp"
#include "aptsim/sweep.hpp"

namespace aptsim::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_input = 1;
inline constexpr int exit_compute = 2;

/// Deviation above which `check` fails.
inline constexpr double check_threshold = 1e-6;

inline constexpr std::string_view csv_header =
    "frequency_hz,re_zin_ohm,im_zin_ohm,p_in_w,p_load_w,p_backing_w,efficiency";

namespace detail {

inline std::string g12(double v) { return fmt::format("{:.12g}", v); }

inline std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

/// Worker count from APT_SIM_THREADS (unset or 0 = hardware concurrency).
inline unsigned sweep_threads() {
    const char* env = std::getenv("APT_SIM_THREADS");
    if (env == nullptr || *env == '\0') return 0;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0 || v > 4096) {
        throw ConfigError(std::string("APT_SIM_THREADS: expected a non-negative integer (got \"") + env + "\")");
    }
    return static_cast<unsigned>(v);
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text) || !f.flush()) {
        throw ConfigError(path + ": cannot write file");
    }
}

}  // namespace detail

/// CSV text for a sweep. An `error` column is appended only when some row failed.
[[nodiscard]] inline std::string sweep_csv(const SweepResult& rows) {
    const bool any_failed = std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok(); });
    std::string out(csv_header);
    if (any_failed) out += ",error";
    out += '\n';
    for (const SweepRow& r : rows) {
        using detail::g12;
        if (r.ok()) {
            out += fmt::format("{},{},{},{},{},{},{}", g12(r.frequency), g12(r.z_in.real()), g12(r.z_in.imag()),
                               g12(r.p_in), g12(r.p_load), g12(r.p_backing), g12(r.efficiency));
            if (any_failed) out += ',';
        } else {
            out += g12(r.frequency) + ",nan,nan,nan,nan,nan,nan," + detail::csv_quote(*r.error);
        }
        out += '\n';
    }
    return out;
}

inline int cmd_sweep(const StackConfig& cfg, const std::string& out_path, std::ostream& out, std::ostream& err) {
    const SweepResult rows = frequency_sweep(cfg.stack(), cfg.grid(), cfg.drive(), detail::sweep_threads());
    const std::string csv = sweep_csv(rows);
    std::ostream& report = out_path.empty() ? err : out;
    if (out_path.empty()) {
        out << csv;
    } else {
        detail::write_file(out_path, csv);
    }
    const auto failed = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.ok(); });
    report << "rows=" << rows.size() << "\nfailed=" << failed << '\n';
    for (const Resonance& peak : find_resonances(rows)) {
        report << "resonance_hz=" << detail::g12(peak.frequency) << " efficiency=" << detail::g12(peak.efficiency)
               << '\n';
    }
    return failed == 0 ? exit_ok : exit_compute;
}

inline int cmd_optimize(const StackConfig& cfg, std::optional<double> freq, std::ostream& out) {
    const Stack stack = cfg.stack();
    const DriveCondition drive = cfg.drive();
    double f = 0.0;
    if (freq) {
        if (!(*freq > 0.0)) throw ConfigError("--freq: must be > 0" + aptsim::detail::got(*freq));
        f = *freq;
    } else {
        const SweepResult rows = frequency_sweep(stack, cfg.grid(), drive, detail::sweep_threads());
        const SweepRow* best = nullptr;
        for (const SweepRow& r : rows) {
            if (r.ok() && (best == nullptr || r.efficiency > best->efficiency)) best = &r;
        }
        if (best == nullptr) throw SolveError("no sweep point could be solved");
        f = best->frequency;
    }
    const double omega = 2.0 * pi * f;
    const TheveninEquivalent th = thevenin_at_output(stack, omega, drive);
    const LoadOptimum opt = optimal_load(th);
    const EfficiencyOptimum eff = efficiency_optimal_load(stack, omega, drive);
    using detail::g12;
    out << "frequency_hz=" << g12(f) << '\n'
        << "z_th_re_ohm=" << g12(th.z_th.real()) << '\n'
        << "z_th_im_ohm=" << g12(th.z_th.imag()) << '\n'
        << "z_opt_re_ohm=" << g12(opt.z_opt.real()) << '\n'
        << "z_opt_im_ohm=" << g12(opt.z_opt.imag()) << '\n'
        << "p_max_w=" << g12(opt.p_max) << '\n'
        << "efficiency_at_z_opt=" << g12(load_efficiency(stack, omega, drive, opt.z_opt)) << '\n'
        << "z_eff_re_ohm=" << g12(eff.z_load.real()) << '\n'
        << "z_eff_im_ohm=" << g12(eff.z_load.imag()) << '\n'
        << "efficiency_max=" << g12(eff.efficiency) << '\n'
        << "p_load_at_z_eff_w=" << g12(eff.p_load) << '\n';
    return exit_ok;
}

inline int cmd_check(const StackConfig& cfg, bool corrupt_sign, std::ostream& out) {
    const Stack stack = cfg.stack();
    const DriveCondition drive = cfg.drive();
    MasonOptions options;
    options.corrupt_sign = corrupt_sign;
    double worst = 0.0;
    double worst_f = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    for (const double f : cfg.grid().frequencies()) {
        try {
            const CrossCheckReport rep = cross_check(stack, 2.0 * pi * f, drive, options);
            ++checked;
            if (rep.max_deviation > worst || !(rep.max_deviation == rep.max_deviation)) {
                worst = rep.max_deviation;
                worst_f = f;
            }
        } catch (const LayerResonanceSingularity&) {
            ++skipped;
        } catch (const SolveError&) {
            ++skipped;
        } catch (const SingularNetwork&) {
            ++skipped;
        }
    }
    out << "points=" << checked << '\n'
        << "skipped=" << skipped << '\n'
        << "max_deviation=" << fmt::format("{:.3e}", worst) << '\n'
        << "worst_frequency_hz=" << detail::g12(worst_f) << '\n';
    const bool pass = checked > 0 && worst < check_threshold;
    out << "result=" << (pass ? "pass" : "fail") << '\n';
    return pass ? exit_ok : exit_compute;
}

inline int cmd_netlist(const StackConfig& cfg, const std::string& out_path, std::optional<double> f_center,
                       const NetlistOptions& options, std::ostream& out) {
    const double fc = f_center.value_or(0.5 * (cfg.f_min + cfg.f_max));
    if (!(fc > 0.0)) throw ConfigError("--f-center: must be > 0" + aptsim::detail::got(fc));
    NetlistOptions opts = options;
    if (!cfg.title.empty()) opts.title = cfg.title;
    const std::string text = export_netlist(cfg.stack(), cfg.drive(), fc, opts);
    if (out_path.empty()) {
        out << text;
    } else {
        detail::write_file(out_path, text);
    }
    return exit_ok;
}

inline int cmd_materials(std::ostream& out) {
    out << "# " << material_provenance << '\n';
    out << "name,kind,density_kg_m3,speed_m_s,loss_tangent,h_v_per_m,permittivity_f_per_m,description\n";
    for (const Material& m : material_library()) {
        out << m.name << ',' << (m.piezo ? "piezo" : "passive") << ',' << detail::g12(m.density) << ','
            << detail::g12(m.sound_speed) << ',' << detail::g12(m.loss_tangent) << ','
            << (m.piezo ? detail::g12(m.h_coupling) : "") << ',' << (m.piezo ? detail::g12(m.permittivity) : "")
            << ',' << detail::csv_quote(m.description) << '\n';
    }
    return exit_ok;
}

/// Entry point; `args` excludes the program name.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Acoustic power transfer stack simulator", "apt-sim"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::optional<double> freq;
    std::optional<double> f_center;
    bool corrupt_sign = false;
    NetlistOptions net_opts;

    auto* sweep = app.add_subcommand("sweep", "Frequency sweep to CSV");
    sweep->add_option("config", config_path, "Stack configuration file")->required();
    sweep->add_option("--out", out_path, "CSV output path (default: stdout)");

    auto* optimize = app.add_subcommand("optimize", "Optimal receiver load at one frequency");
    optimize->add_option("config", config_path, "Stack configuration file")->required();
    optimize->add_option("--freq", freq, "Frequency in Hz (default: best-efficiency sweep point)");

    auto* check = app.add_subcommand("check", "Cross-check the solver against the equivalent circuit");
    check->add_option("config", config_path, "Stack configuration file")->required();
    check->add_flag("--corrupt-sign", corrupt_sign)->group("");

    auto* netlist = app.add_subcommand("netlist", "Export the equivalent circuit as a SPICE netlist");
    netlist->add_option("config", config_path, "Stack configuration file")->required();
    netlist->add_option("--out", out_path, "Netlist output path (default: stdout)");
    netlist->add_option("--f-center", f_center, "Frequency for .AC and lossy-line fits (default: sweep midpoint)");
    netlist->add_flag("--lossy-lines", net_opts.lossy_lines, "Write lossy layers as LTRA lines");
    netlist->add_flag("--omit-negative-capacitance", net_opts.omit_negative_capacitance,
                      "Drop the -C0 branch of each piezo");

    auto* materials = app.add_subcommand("materials", "List material presets");

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_input;
    }

    try {
        if (materials->parsed()) return cmd_materials(out);
        const StackConfig cfg = load_config(config_path);
        if (sweep->parsed()) return cmd_sweep(cfg, out_path, out, err);
        if (optimize->parsed()) return cmd_optimize(cfg, freq, out);
        if (check->parsed()) return cmd_check(cfg, corrupt_sign, out);
        if (netlist->parsed()) return cmd_netlist(cfg, out_path, f_center, net_opts, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_compute;
    }
    return exit_input;
}

}  // namespace aptsim::cli
