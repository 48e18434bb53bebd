#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "aptsim/errors.hpp"
#include "aptsim/solver.hpp"
#include "aptsim/stack.hpp"

namespace aptsim {

enum class GridScale { linear, log };

struct FrequencyGrid {
    double f_min = 0.0;  ///< Hz
    double f_max = 0.0;  ///< Hz
    std::size_t points = 2;
    GridScale scale = GridScale::linear;

    void validate() const {
        if (!(f_min > 0.0) || !(f_max > f_min) || !std::isfinite(f_max)) {
            throw DomainError("frequency grid needs 0 < f_min < f_max");
        }
        if (points < 2) {
            throw DomainError("frequency grid needs at least 2 points");
        }
    }

    /// Grid frequencies; the end points are exactly f_min and f_max.
    [[nodiscard]] std::vector<double> frequencies() const {
        validate();
        std::vector<double> f(points);
        const double last = static_cast<double>(points - 1);
        for (std::size_t i = 0; i < points; ++i) {
            const double t = static_cast<double>(i) / last;
            f[i] = scale == GridScale::linear ? f_min + t * (f_max - f_min)
                                              : std::exp(std::log(f_min) + t * (std::log(f_max) - std::log(f_min)));
        }
        f.front() = f_min;
        f.back() = f_max;
        return f;
    }
};

struct SweepRow {
    double frequency = 0.0;  ///< Hz
    cplx z_in{0.0};
    double p_in = 0.0;
    double p_load = 0.0;
    double p_backing = 0.0;
    double efficiency = 0.0;
    std::optional<std::string> error;  ///< set when the row could not be solved

    [[nodiscard]] bool ok() const { return !error.has_value(); }
};

using SweepResult = std::vector<SweepRow>;

[[nodiscard]] inline SweepRow evaluate_frequency(const Stack& stack, double frequency, const DriveCondition& drive) {
    SweepRow row;
    row.frequency = frequency;
    try {
        const OperatingPoint op = solve_operating_point(stack, 2.0 * pi * frequency, drive);
        const PowerFlow p = power_flow(op, stack, drive);
        row.z_in = input_impedance(op);
        row.p_in = p.p_in;
        row.p_load = p.p_load;
        row.p_backing = p.p_backing();
        row.efficiency = efficiency(p);
    } catch (const std::runtime_error& e) {
        row.error = e.what();
    }
    return row;
}

/// Evaluate every grid frequency. Rows are written by index, so the result does not
/// depend on the number of worker threads (0 = hardware concurrency).
[[nodiscard]] inline SweepResult frequency_sweep(const Stack& stack, const FrequencyGrid& grid,
                                                 const DriveCondition& drive, unsigned threads = 1) {
    drive.validate();
    const std::vector<double> freqs = grid.frequencies();
    SweepResult rows(freqs.size());

    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, freqs.size()));

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            rows[i] = evaluate_frequency(stack, freqs[i], drive);
        }
    };
    if (threads <= 1) {
        work(0, freqs.size());
        return rows;
    }
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (freqs.size() + threads - 1) / threads;
        for (std::size_t begin = 0; begin < freqs.size(); begin += chunk) {
            pool.emplace_back(work, begin, std::min(freqs.size(), begin + chunk));
        }
    }
    return rows;
}

}  // namespace aptsim
