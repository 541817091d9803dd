#pragma once

// Comparison of the model (and the simulator, for information) against the
// measured values of the reference test bench.

#include <mwtfault/config_io.hpp>
#include <mwtfault/core.hpp>
#include <mwtfault/fault_model.hpp>
#include <mwtfault/fusewire.hpp>
#include <mwtfault/rectifier_sim.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mwtfault {

/// Measured values of the reference test bench. Read-only reference data.
struct BenchMeasurement {
    std::string_view name;
    std::string_view unit;
    double value;
};

inline constexpr std::array<BenchMeasurement, 6> bench_measurements{{
    {"ji_parallel_104ms", "A2s", 135.70},
    {"peak_parallel", "A", 158.40},
    {"ji_series_102ms", "A2s", 404.60},
    {"peak_series", "A", 315.10},
    {"fuse_ji_melt", "A2s", 15.70},
    {"fuse_energy_melt", "J", 9.96},
}};

inline constexpr double parallel_eval_time = 0.104;
inline constexpr double series_eval_time = 0.102;
inline constexpr double validation_band_percent = 5.0;

struct ValidationRow {
    std::string name;
    std::string unit;
    double model_value = 0.0;
    double reference_value = 0.0;
    double error_percent = 0.0;              // (reference - model) / reference * 100
    std::optional<double> simulated_value;   // informational
    std::optional<std::string> failure;

    [[nodiscard]] bool pass() const {
        return !failure && std::abs(error_percent) <= validation_band_percent;
    }
};

struct ValidationReport {
    std::vector<ValidationRow> rows;

    [[nodiscard]] bool pass() const {
        for (const auto& r : rows)
            if (!r.pass()) return false;
        return !rows.empty();
    }
};

[[nodiscard]] inline double reference_error_percent(double reference, double model) {
    if (reference == 0.0) throw InvalidParameter("reference value is zero");
    return (reference - model) / reference * 100.0;
}

/// Parallel and series benches built from one configuration. The series
/// bench stacks the two bridges, so it is charged to twice the parallel
/// capacitor voltage; the other parameters are shared.
struct ValidationSetup {
    SystemConfig parallel;
    SystemConfig series;
    FuseSetup fuse;
    SimSettings sim;
};

[[nodiscard]] inline ValidationSetup validation_setup(const Configuration& c) {
    ValidationSetup v;
    v.parallel = c.system;
    v.series = c.system;
    if (c.system.topology == Topology::Parallel) {
        v.series.dc_link.v_c = 2.0 * c.system.dc_link.v_c;
    } else {
        v.parallel.dc_link.v_c = 0.5 * c.system.dc_link.v_c;
    }
    v.parallel.topology = Topology::Parallel;
    v.series.topology = Topology::Series;
    v.fuse = c.fuse;
    v.sim = c.sim;
    return v;
}

struct ValidationOptions {
    bool run_simulator = true;
    /// Compare the model against itself; every error is then zero.
    bool self_reference = false;
};

namespace detail {

inline void fill_row(ValidationRow& row, const std::function<double()>& model,
                     const std::function<std::optional<double>()>& sim, bool self_reference) {
    try {
        row.model_value = model();
        if (self_reference) row.reference_value = row.model_value;
        row.error_percent = reference_error_percent(row.reference_value, row.model_value);
    } catch (const std::exception& e) {
        row.failure = e.what();
        return;
    }
    try {
        row.simulated_value = sim();
    } catch (const std::exception&) {
        // Informational column; the row is judged on the model alone.
    }
}

}  // namespace detail

[[nodiscard]] inline ValidationReport validate_bench(const ValidationSetup& setup, const ValidationOptions& opt = {}) {
    ValidationReport rep;
    for (const auto& m : bench_measurements)
        rep.rows.push_back({std::string(m.name), std::string(m.unit), 0.0, m.value, 0.0, std::nullopt, std::nullopt});

    std::optional<SimTrace> sim_p;
    std::optional<SimTrace> sim_s;
    if (opt.run_simulator) {
        auto cp = setup.sim.apply(setup.parallel);
        cp.duration = parallel_eval_time;
        auto cs = setup.sim.apply(setup.series);
        cs.duration = series_eval_time;
        try {
            sim_p = run(cp);
        } catch (const std::exception&) {
        }
        try {
            sim_s = run(cs);
        } catch (const std::exception&) {
        }
    }
    auto sim_ji = [](const std::optional<SimTrace>& tr, double t) -> std::optional<double> {
        if (!tr) return std::nullopt;
        return joules_integral_sim(*tr, t);
    };
    auto sim_peak = [](const std::optional<SimTrace>& tr) -> std::optional<double> {
        if (!tr) return std::nullopt;
        return peak_current(*tr).amps;
    };
    auto none = []() -> std::optional<double> { return std::nullopt; };

    const bool self = opt.self_reference;
    detail::fill_row(
        rep.rows[0], [&] { return joules_integral(build_model(setup.parallel), parallel_eval_time); },
        [&] { return sim_ji(sim_p, parallel_eval_time); }, self);
    detail::fill_row(
        rep.rows[1], [&] { return peak_current(build_model(setup.parallel)).amps; }, [&] { return sim_peak(sim_p); },
        self);
    detail::fill_row(
        rep.rows[2], [&] { return joules_integral(build_model(setup.series), series_eval_time); },
        [&] { return sim_ji(sim_s, series_eval_time); }, self);
    detail::fill_row(
        rep.rows[3], [&] { return peak_current(build_model(setup.series)).amps; }, [&] { return sim_peak(sim_s); },
        self);
    detail::fill_row(
        rep.rows[4], [&] { return melting_joules_integral(setup.fuse.geometry().area, setup.fuse.material); }, none,
        self);
    detail::fill_row(
        rep.rows[5], [&] { return melting_energy(setup.fuse.geometry(), setup.fuse.material); }, none, self);
    return rep;
}

inline void write_csv(std::ostream& os, const ValidationReport& rep) {
    os << "name,unit,model,reference,error_percent,simulated,pass,error\n" << std::setprecision(10);
    for (const auto& r : rep.rows) {
        os << r.name << ',' << r.unit << ',';
        if (!r.failure) os << r.model_value;
        os << ',' << r.reference_value << ',';
        if (!r.failure) os << r.error_percent;
        os << ',';
        if (r.simulated_value) os << *r.simulated_value;
        os << ',' << (r.pass() ? "true" : "false") << ',';
        if (r.failure) os << '"' << *r.failure << '"';
        os << '\n';
    }
}

[[nodiscard]] inline nlohmann::json to_json(const ValidationReport& rep) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rep.rows) {
        nlohmann::json j = {{"name", r.name},
                            {"unit", r.unit},
                            {"reference", r.reference_value},
                            {"pass", r.pass()}};
        if (r.failure) {
            j["error"] = *r.failure;
        } else {
            j["model"] = r.model_value;
            j["error_percent"] = r.error_percent;
        }
        if (r.simulated_value) j["simulated"] = *r.simulated_value;
        rows.push_back(j);
    }
    return {{"rows", rows}, {"pass", rep.pass()}};
}

}  // namespace mwtfault
