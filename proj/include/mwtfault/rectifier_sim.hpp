#pragma once

// Fixed-step transient simulator of a dual-secondary 12-pulse diode
// rectifier under a dc-side fault. The delta and star secondaries (the star
// leads by 30 degrees) each feed a 6-pulse bridge; the bridges are
// paralleled or stacked on the dc side and drive either the load resistance
// directly or r3 into c_dc with the fault resistance r1 + r2 across it.

#include <mwtfault/core.hpp>
#include <mwtfault/fault_model.hpp>
#include <mwtfault/switched_network.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace mwtfault {

/// How the transformer enters the simulation. SharedPrimary keeps the
/// primary and source impedance common to both secondaries;
/// IndependentSecondaries gives each secondary its own Thevenin equivalent
/// carrying twice the referred impedance.
enum class TransformerModel { IndependentSecondaries, SharedPrimary };

[[nodiscard]] inline std::string_view to_string(TransformerModel m) {
    return m == TransformerModel::SharedPrimary ? "shared-primary" : "independent";
}

[[nodiscard]] inline TransformerModel parse_transformer_model(std::string_view s) {
    if (s == "shared-primary") return TransformerModel::SharedPrimary;
    if (s == "independent") return TransformerModel::IndependentSecondaries;
    throw InvalidParameter("unknown transformer model '" + std::string(s) + "' (expected shared-primary|independent)");
}

struct SimConfig {
    SystemConfig system;
    std::optional<double> fault_angle;  // rad; worst case when unset
    double duration = 0.1;              // s
    double dt = 1e-5;                   // s
    bool include_dc_cap = true;
    double diode_r_on = 1e-3;           // ohm
    double diode_r_off = 1e6;           // ohm
    int angle_resolution = 24;          // points of the worst-case sweep
    TransformerModel transformer_model = TransformerModel::IndependentSecondaries;

    void validate() const {
        system.validate();
        if (!(dt > 0) || !std::isfinite(dt)) throw InvalidParameter("sim: dt must be > 0");
        if (!(duration >= 100.0 * dt)) throw InvalidParameter("sim: duration must cover at least 100 steps");
        if (!(diode_r_on > 0 && diode_r_off / diode_r_on >= 1e6))
            throw InvalidParameter("sim: need diode_r_on > 0 and r_off / r_on >= 1e6");
        if (angle_resolution < 1) throw InvalidParameter("sim: angle_resolution must be >= 1");
        if (fault_angle && !std::isfinite(*fault_angle)) throw InvalidParameter("sim: fault angle must be finite");
        if (include_dc_cap) system.dc_link.validate_discharge_path();
    }
};

struct SimSample {
    double t = 0.0;
    double i_dc = 0.0;                   // fault-path current, A
    std::array<double, 2> i_bridge{};    // dc output of the delta / star bridge, A
    double v_dc = 0.0;                   // dc positive rail to ground, V
    double ji = 0.0;                     // running joules integral of i_dc, A^2 s
};

struct SimTrace {
    std::vector<SimSample> samples;
    double fault_angle_used = 0.0;
    double energy_balance_residual = 0.0;  // relative to the dissipated energy
    double source_energy = 0.0;            // J
    double dissipated_energy = 0.0;        // J

    [[nodiscard]] double duration() const { return samples.empty() ? 0.0 : samples.back().t; }
};

/// Per-phase parameters of one secondary's Thevenin equivalent.
struct SecondaryEquivalent {
    double v_peak = 0.0;  // phase-to-neutral peak at the operating voltage, V
    double r = 0.0;       // ohm
    double l = 0.0;       // H
};

/// Each secondary carries half of the referred current, so it gets twice the
/// referred impedance; delta-primary quantities map to a star-equivalent
/// secondary through (v_sec / (sqrt(3) v_prim))^2.
[[nodiscard]] inline SecondaryEquivalent secondary_equivalent(const SystemConfig& cfg) {
    const auto eq = referred_equivalents(cfg.transformer, cfg.source);
    const auto& trx = cfg.transformer;
    const double ratio = trx.v_sec_ll / trx.v_prim_ll;
    const double scale = ratio * ratio / 3.0;
    SecondaryEquivalent s;
    s.v_peak = std::sqrt(2.0 / 3.0) * cfg.source.e_ll * ratio;
    s.r = 2.0 * eq.r_p_eq * scale;
    s.l = 2.0 * eq.x_lp_eq * scale / cfg.source.omega;
    return s;
}

namespace detail {

/// Rectifier netlist on a SwitchedNetwork. Ground is the dc negative rail;
/// the ac side floats except for the source neutral of the shared-primary
/// form, which is a separate galvanic system.
class RectifierCircuit {
public:
    static constexpr int ground = SwitchedNetwork::ground;
    static constexpr int n_diodes = 12;

    RectifierCircuit(const SimConfig& cfg, double fault_angle) : cfg_(cfg), angle_(fault_angle) {
        const auto& sys = cfg.system;
        const auto& dc = sys.dc_link;
        const bool series = sys.topology == Topology::Series;

        std::array<int, 6> terminal{};
        if (cfg.transformer_model == TransformerModel::SharedPrimary) {
            build_shared(terminal);
        } else {
            build_independent(terminal);
        }

        int pos_rail = ground;
        if (cfg.include_dc_cap) {
            pos_rail = net_.add_node();
            const int cap_node = dc.r3 > 0 ? net_.add_node() : pos_rail;
            if (cap_node != pos_rail) net_.add_resistor(pos_rail, cap_node, dc.r3);
            net_.add_capacitor(cap_node, ground, dc.c_dc, dc.v_c);
            fault_resistor_ = net_.add_resistor(cap_node, ground, dc.fault_resistance());
            preset_.push_back({pos_rail, dc.v_c});
        } else if (dc.follow_on_resistance() > 0) {
            pos_rail = net_.add_node();
            net_.add_resistor(pos_rail, ground, dc.follow_on_resistance());
        }
        pos_rail_ = pos_rail;
        const int mid = series ? net_.add_node() : ground;

        for (int s = 0; s < 2; ++s) {
            const int bp = series ? (s == 0 ? mid : pos_rail) : pos_rail;
            const int bn = series ? (s == 0 ? ground : mid) : ground;
            for (int p = 0; p < 3; ++p) {
                const int k = s * 3 + p;
                upper_[k] = net_.add_diode(terminal[k], bp, cfg.diode_r_on, cfg.diode_r_off);
                net_.add_diode(bn, terminal[k], cfg.diode_r_on, cfg.diode_r_off);
            }
        }
        top_bridges_ = series ? std::vector<int>{1} : std::vector<int>{0, 1};
        net_.finalize(cfg.dt);
    }

    SimTrace run() {
        const double h = cfg_.dt;
        const auto steps = static_cast<long>(std::llround(cfg_.duration / h));
        SimTrace trace;
        trace.fault_angle_used = angle_;
        trace.samples.reserve(static_cast<std::size_t>(steps) + 1);

        for (const auto& [node, v] : preset_) net_.preset(node, v);
        trace.samples.push_back(sample(0.0));
        double p_src_prev = net_.source_power(0.0);
        double p_diss_prev = net_.dissipated_power();
        const double stored0 = net_.stored_energy();
        double e_src = 0.0;
        double e_diss = 0.0;

        for (long n = 1; n <= steps; ++n) {
            const double t = static_cast<double>(n) * h;
            net_.step(t, n, n == 1);
            const double p_src = net_.source_power(t);
            const double p_diss = net_.dissipated_power();
            e_src += 0.5 * h * (p_src_prev + p_src);
            e_diss += 0.5 * h * (p_diss_prev + p_diss);
            p_src_prev = p_src;
            p_diss_prev = p_diss;
            trace.samples.push_back(sample(t));
            if (!std::isfinite(trace.samples.back().i_dc)) throw SimulationError("sim: non-finite current", n);
        }

        const double residual = e_src - e_diss - (net_.stored_energy() - stored0);
        const double scale = std::max({std::abs(e_diss), std::abs(e_src), 1e-300});
        trace.source_energy = e_src;
        trace.dissipated_energy = e_diss;
        trace.energy_balance_residual = (e_diss == 0.0 && e_src == 0.0) ? 0.0 : std::abs(residual) / scale;
        if (trace.energy_balance_residual > 0.02)
            throw SimulationError("sim: energy balance residual " +
                                      std::to_string(100.0 * trace.energy_balance_residual) + "% exceeds 2%",
                                  steps);
        accumulate_ji(trace.samples);
        return trace;
    }

    /// Adds the trapezoidal joules-integral increments.
    static void accumulate_ji(std::vector<SimSample>& samples) {
        for (std::size_t k = 1; k < samples.size(); ++k) {
            const double h = samples[k].t - samples[k - 1].t;
            const double a = samples[k - 1].i_dc;
            const double b = samples[k].i_dc;
            samples[k].ji = samples[k - 1].ji + 0.5 * h * (a * a + b * b);
        }
    }

    [[nodiscard]] int unknowns() const { return net_.unknowns(); }

private:
    using Sinusoid = SwitchedNetwork::Sinusoid;

    [[nodiscard]] double phase_angle(int p) const { return angle_ - 2.0 * std::numbers::pi / 3.0 * p; }

    void build_independent(std::array<int, 6>& terminal) {
        const auto sec = secondary_equivalent(cfg_.system);
        const double w = cfg_.system.source.omega;
        for (int s = 0; s < 2; ++s) {
            const int neutral = net_.add_node();
            const double shift = s == 1 ? std::numbers::pi / 6.0 : 0.0;
            for (int p = 0; p < 3; ++p) {
                const int k = s * 3 + p;
                terminal[k] = net_.add_node();
                net_.add_branch(neutral, terminal[k], sec.r, sec.l, Sinusoid{sec.v_peak, w, phase_angle(p) + shift});
            }
        }
    }

    // Star source behind x_s feeding three delta primary windings; each limb
    // couples to a delta and a star secondary winding.
    void build_shared(std::array<int, 6>& terminal) {
        const auto& trx = cfg_.system.transformer;
        const auto& src = cfg_.system.source;
        const double w = src.omega;
        const double n_d = trx.v_sec_ll / trx.v_prim_ll;
        const double n_y = n_d / std::sqrt(3.0);
        const double e_peak = std::sqrt(2.0 / 3.0) * src.e_ll;

        std::array<int, 3> line{};
        for (int p = 0; p < 3; ++p) {
            line[p] = net_.add_node();
            net_.add_branch(ground, line[p], 0.0, src.x_s / w, Sinusoid{e_peak, w, phase_angle(p)});
        }
        for (int p = 0; p < 3; ++p) terminal[p] = net_.add_node();
        const int neutral = net_.add_node();
        for (int p = 0; p < 3; ++p) terminal[3 + p] = net_.add_node();

        for (int p = 0; p < 3; ++p) {
            const int q = (p + 1) % 3;
            const int prim = net_.add_node();
            net_.add_branch(line[p], prim, trx.r_p_delta, trx.x_lp_delta / w);
            const int dw = net_.add_node();
            net_.add_branch(terminal[p], dw, trx.r_sp * n_d * n_d, trx.x_l_sp * n_d * n_d / w);
            const int yw = net_.add_node();
            net_.add_branch(yw, terminal[3 + p], trx.r_sp * n_y * n_y, trx.x_l_sp * n_y * n_y / w);
            net_.add_transformer_limb({prim, line[q], 1.0}, {{dw, terminal[q], n_d}, {yw, neutral, n_y}});
        }
    }

    [[nodiscard]] double bridge_current(int s) const {
        double i = 0.0;
        for (int p = 0; p < 3; ++p) i += net_.diode_current(upper_[s * 3 + p]);
        return i;
    }

    [[nodiscard]] SimSample sample(double t) const {
        SimSample s;
        s.t = t;
        s.i_bridge = {bridge_current(0), bridge_current(1)};
        if (fault_resistor_ >= 0) {
            s.i_dc = net_.resistor_current(fault_resistor_);
        } else {
            for (int b : top_bridges_) s.i_dc += s.i_bridge[static_cast<std::size_t>(b)];
        }
        s.v_dc = net_.v(pos_rail_);
        return s;
    }

    SimConfig cfg_;
    double angle_ = 0.0;
    SwitchedNetwork net_;
    std::array<int, 6> upper_{};
    std::vector<int> top_bridges_;
    std::vector<std::pair<int, double>> preset_;
    int pos_rail_ = ground;
    int fault_resistor_ = -1;
};
/// Runs `fn(k)` for k in [0, n) on the available hardware threads and
/// returns the results in index order.
template <class F>
auto parallel_map(std::size_t n, F&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                slots[k].emplace(fn(k));
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    std::vector<R> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (errors[k]) std::rethrow_exception(errors[k]);
        out.push_back(std::move(*slots[k]));
    }
    return out;
}

}  // namespace detail

/// Simulates at a fixed fault angle, ignoring `cfg.fault_angle`.
[[nodiscard]] inline SimTrace run_at_angle(const SimConfig& cfg, double angle) {
    cfg.validate();
    detail::RectifierCircuit circuit(cfg, angle);
    return circuit.run();
}

/// Sweep horizon for the worst-case angle search: long enough to contain
/// the first follow-on peak.
[[nodiscard]] inline double angle_search_horizon(const SimConfig& cfg) {
    return std::min(cfg.duration, 3.0 * 2.0 * std::numbers::pi / cfg.system.source.omega);
}

struct AngleSweepPoint {
    double angle = 0.0;
    double peak = 0.0;
};

/// Peak follow-on current (no dc capacitor) over `resolution` fault angles
/// evenly spaced on [0, pi/6), one period of the 12-pulse symmetry.
[[nodiscard]] inline std::vector<AngleSweepPoint> fault_angle_sweep(const SimConfig& cfg) {
    cfg.validate();
    SimConfig probe = cfg;
    probe.include_dc_cap = false;
    probe.duration = std::max(angle_search_horizon(cfg), 100.0 * cfg.dt);
    const auto n = static_cast<std::size_t>(cfg.angle_resolution);
    return detail::parallel_map(n, [&](std::size_t k) {
        const double angle = std::numbers::pi / 6.0 * static_cast<double>(k) / static_cast<double>(n);
        const auto tr = run_at_angle(probe, angle);
        double peak = 0.0;
        for (const auto& s : tr.samples) peak = std::max(peak, s.i_dc);
        return AngleSweepPoint{angle, peak};
    });
}

[[nodiscard]] inline double worst_case_fault_angle(const SimConfig& cfg) {
    const auto sweep = fault_angle_sweep(cfg);
    AngleSweepPoint best = sweep.front();
    for (const auto& p : sweep)
        if (p.peak > best.peak) best = p;
    return best.angle;
}

[[nodiscard]] inline SimTrace run(const SimConfig& cfg) {
    cfg.validate();
    const double angle = cfg.fault_angle ? *cfg.fault_angle : worst_case_fault_angle(cfg);
    return run_at_angle(cfg, angle);
}

/// Joules integral of the recorded fault-path current over [0, t], linearly
/// interpolating inside the last step.
[[nodiscard]] inline double joules_integral_sim(const SimTrace& trace, double t) {
    if (trace.samples.empty()) return 0.0;
    if (!(t >= 0)) throw InvalidParameter("joules_integral_sim: t must be >= 0");
    if (t > trace.duration() * (1.0 + 1e-12)) throw InvalidParameter("joules_integral_sim: t beyond trace");
    const auto& s = trace.samples;
    auto hi = std::lower_bound(s.begin(), s.end(), t, [](const SimSample& a, double v) { return a.t < v; });
    if (hi == s.end()) return s.back().ji;
    if (hi == s.begin() || hi->t == t) return hi->ji;
    const auto& a = *(hi - 1);
    const auto& b = *hi;
    const double w = (t - a.t) / (b.t - a.t);
    const double ib = a.i_dc + w * (b.i_dc - a.i_dc);
    return a.ji + 0.5 * (t - a.t) * (a.i_dc * a.i_dc + ib * ib);
}

/// Mean fault-path current over [t0, t1] (trapezoidal).
[[nodiscard]] inline double mean_current(const SimTrace& trace, double t0, double t1) {
    double acc = 0.0;
    double span = 0.0;
    for (std::size_t k = 1; k < trace.samples.size(); ++k) {
        const auto& a = trace.samples[k - 1];
        const auto& b = trace.samples[k];
        if (a.t < t0 || b.t > t1) continue;
        acc += 0.5 * (b.t - a.t) * (a.i_dc + b.i_dc);
        span += b.t - a.t;
    }
    if (!(span > 0)) throw InvalidParameter("mean_current: empty window");
    return acc / span;
}

[[nodiscard]] inline Peak peak_current(const SimTrace& trace) {
    Peak p;
    for (const auto& s : trace.samples)
        if (s.i_dc > p.amps) p = {s.i_dc, s.t};
    return p;
}

/// Joules-integral error of the model against the simulation at time t, in
/// percent of the simulated value. Positive when the model underestimates.
[[nodiscard]] inline double delta_ji_percent(double ji_sim, double ji_model) {
    if (ji_sim == 0.0) throw InvalidParameter("delta_ji_percent: simulated joules integral is zero");
    return (ji_sim - ji_model) / ji_sim * 100.0;
}

[[nodiscard]] inline double delta_ji_percent(const SimTrace& sim, const FaultModel& model, double t) {
    return delta_ji_percent(joules_integral_sim(sim, t), joules_integral(model, t));
}

inline void write_csv(std::ostream& os, const SimTrace& trace) {
    os << "t_s,i_dc_A,v_dc_V,ji_A2s\n";
    os << std::setprecision(10);
    for (const auto& s : trace.samples) os << s.t << ',' << s.i_dc << ',' << s.v_dc << ',' << s.ji << '\n';
}

}  // namespace mwtfault
