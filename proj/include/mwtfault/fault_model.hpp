#pragma once

// Closed-form dc fault current: the precharged dc capacitor discharging
// through the fault resistance, superimposed on a second-order step response
// for the follow-on current fed by the grid through the rectifier.

#include <mwtfault/core.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>

namespace mwtfault {

/// Time to the first follow-on peak at 50 Hz.
inline constexpr double default_time_to_peak = 9.4e-3;

/// Time to peak for an arbitrary grid frequency, scaled with the period.
/// Only the 50 Hz value has been tuned against simulation.
[[nodiscard]] inline double time_to_peak_for(const SourceParams& src) {
    return default_time_to_peak * reference_grid_hz / src.frequency_hz();
}

struct ModelShape {
    double t_p = default_time_to_peak;  // s
    double omega_d = 0.0;               // rad/s, pi / t_p
    double delta = 0.0;                 // 1/s
    double m_p = 0.0;                   // first-peak overshoot

    [[nodiscard]] static ModelShape make(double delta, double t_p = default_time_to_peak) {
        if (!(t_p > 0)) throw InvalidParameter("model shape: t_p must be > 0");
        if (!(delta > 0)) throw InvalidParameter("model shape: delta must be > 0");
        ModelShape s;
        s.t_p = t_p;
        s.omega_d = std::numbers::pi / t_p;
        s.delta = delta;
        s.m_p = std::exp(-std::numbers::pi * delta / s.omega_d);
        return s;
    }
};

struct FaultModel {
    Topology topology = Topology::Parallel;
    double i_f_base = 0.0;   // A
    ModelShape shape;
    double cap_peak = 0.0;   // A, v_c / (r1 + r2); zero when no capacitor term
    double cap_tau = 0.0;    // s, (r1 + r2) c_dc
    double k_c = 1.0;
    double x_r_system = 0.0;
    double r_lp = 0.0;       // uncorrected referred dc resistance, ohm
    bool kc_in_domain = true;
};

// ---------------------------------------------------------------------------
// Correction factor polynomial

/// Degree-4 polynomial in X/R_system, coefficients highest power first.
struct KcPolynomial {
    std::array<double, 5> coeffs{};

    [[nodiscard]] double operator()(double x) const {
        double acc = 0.0;
        for (double c : coeffs) acc = acc * x + c;
        return acc;
    }
};

/// Published fit of the correction factor.
inline constexpr KcPolynomial reference_kc{{-0.011, 0.112, -0.348, 0.564, 0.884}};

/// X/R_system range the correction factor was fitted over.
inline constexpr double kc_domain_min = 0.01;
inline constexpr double kc_domain_max = 3.6;

[[nodiscard]] inline bool kc_domain_contains(double x_r_system) {
    return x_r_system >= kc_domain_min && x_r_system <= kc_domain_max;
}

[[nodiscard]] inline double kc_polynomial(double x_r_system, const KcPolynomial& poly = reference_kc) {
    return poly(x_r_system);
}

// ---------------------------------------------------------------------------
// Waveforms

/// Unit step response of the follow-on current.
[[nodiscard]] inline double normalized_follow_on(const ModelShape& s, double t) {
    const double wt = s.omega_d * t;
    return 1.0 - std::exp(-s.delta * t) * (std::cos(wt) + s.delta / s.omega_d * std::sin(wt));
}

/// Time derivative of normalized_follow_on.
[[nodiscard]] inline double normalized_follow_on_slope(const ModelShape& s, double t) {
    return std::exp(-s.delta * t) * std::sin(s.omega_d * t) *
           (s.delta * s.delta + s.omega_d * s.omega_d) / s.omega_d;
}

[[nodiscard]] inline double capacitor_discharge(const FaultModel& m, double t) {
    if (m.cap_peak == 0.0) return 0.0;
    return m.cap_peak * std::exp(-t / m.cap_tau);
}

[[nodiscard]] inline double follow_on(const FaultModel& m, double t) {
    return m.i_f_base * normalized_follow_on(m.shape, t);
}

[[nodiscard]] inline double evaluate(const FaultModel& m, double t) {
    return follow_on(m, t) + capacitor_discharge(m, t);
}

// ---------------------------------------------------------------------------
// Construction

/// Follow-on-only model for a dc path resistance `r_load` with an explicit
/// correction factor. Used directly by calibration.
[[nodiscard]] inline FaultModel follow_on_model(Topology topology, const SourceParams& src,
                                                const EquivalentImpedance& eq, double r_load, double k_c,
                                                double t_p = default_time_to_peak) {
    if (!(k_c > 0)) throw InvalidParameter("follow_on_model: k_c must be > 0");
    FaultModel m;
    m.topology = topology;
    m.r_lp = r_lp(topology, r_load, eq);
    m.x_r_system = x_r_system(eq, m.r_lp);
    m.k_c = k_c;
    m.kc_in_domain = kc_domain_contains(m.x_r_system);
    const double r_corr = k_c * m.r_lp;
    m.i_f_base = i_f_base(topology, src, eq, r_corr);
    m.shape = ModelShape::make(delta_coeff(src, eq, r_corr), t_p);
    return m;
}

struct ModelOptions {
    KcPolynomial kc = reference_kc;
    std::optional<double> kc_override;  // bypasses the polynomial
    std::optional<double> t_p;          // default: time_to_peak_for(source)
};

/// Composes the full model: X/R_system from the follow-on resistance
/// r1 + r2 + r3, k_c from the polynomial, then base current and decay rate;
/// the capacitor branch discharges through r1 + r2 only.
[[nodiscard]] inline FaultModel build_model(const SystemConfig& cfg, Topology topology, double v_c,
                                            const ModelOptions& opt = {}) {
    cfg.validate();
    const auto eq = referred_equivalents(cfg.transformer, cfg.source);
    const double r_follow = cfg.dc_link.follow_on_resistance();
    const double rlp = r_lp(topology, r_follow, eq);
    const double xr = x_r_system(eq, rlp);
    const double k_c = opt.kc_override ? *opt.kc_override : opt.kc(xr);
    auto m = follow_on_model(topology, cfg.source, eq, r_follow, k_c,
                             opt.t_p ? *opt.t_p : time_to_peak_for(cfg.source));
    const double r_fault = cfg.dc_link.fault_resistance();
    if (v_c != 0.0) {
        if (!(r_fault > 0))
            throw InvalidParameter("build_model: r1 + r2 must be > 0 when the capacitor is precharged");
        m.cap_peak = v_c / r_fault;
    }
    m.cap_tau = r_fault * cfg.dc_link.c_dc;
    return m;
}

[[nodiscard]] inline FaultModel build_model(const SystemConfig& cfg, const ModelOptions& opt = {}) {
    return build_model(cfg, cfg.topology, cfg.dc_link.v_c, opt);
}

// ---------------------------------------------------------------------------
// Joules integral

/// Integration step for the model joules integral, s.
inline constexpr double model_integration_step = 10e-6;

/// Composite Simpson rule of f over [a, b] with panels no wider than `h`.
template <class F>
[[nodiscard]] double integrate_simpson(F&& f, double a, double b, double h = model_integration_step) {
    if (!(b > a)) return 0.0;
    auto n = static_cast<long>(std::ceil((b - a) / h));
    n = std::max(2L, n + (n % 2));
    const double step = (b - a) / static_cast<double>(n);
    double acc = f(a) + f(b);
    for (long k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * f(a + step * static_cast<double>(k));
    return acc * step / 3.0;
}

/// Integral of the composed current squared over [t0, t1], A^2 s.
[[nodiscard]] inline double joules_integral(const FaultModel& m, double t0, double t1) {
    if (!(t0 >= 0 && t1 >= t0)) throw InvalidParameter("joules_integral: need 0 <= t0 <= t1");
    return integrate_simpson([&](double t) { const double i = evaluate(m, t); return i * i; }, t0, t1);
}

[[nodiscard]] inline double joules_integral(const FaultModel& m, double t) { return joules_integral(m, 0.0, t); }

/// Closed form of the capacitor-only contribution, v_c^2 c_dc / (2 R) (1 - e^{-2t/tau}).
[[nodiscard]] inline double capacitor_joules_integral(const FaultModel& m, double t) {
    if (m.cap_peak == 0.0) return 0.0;
    return m.cap_peak * m.cap_peak * m.cap_tau / 2.0 * -std::expm1(-2.0 * t / m.cap_tau);
}

// ---------------------------------------------------------------------------
// Peak

struct Peak {
    double amps = 0.0;
    double time = 0.0;  // s
};

inline constexpr double peak_search_horizon = 120e-3;

/// Global maximum of the composed current on [0, 120 ms]: 10 us scan, then
/// 1 us refinement around the best sample. Ties go to the earlier time.
[[nodiscard]] inline Peak peak_current(const FaultModel& m) {
    constexpr double coarse = 10e-6;
    constexpr double fine = 1e-6;
    const auto n = static_cast<long>(std::llround(peak_search_horizon / coarse));
    Peak best{evaluate(m, 0.0), 0.0};
    for (long k = 1; k <= n; ++k) {
        const double t = coarse * static_cast<double>(k);
        const double i = evaluate(m, t);
        if (i > best.amps) best = {i, t};
    }
    const double lo = std::max(0.0, best.time - coarse);
    const double hi = std::min(peak_search_horizon, best.time + coarse);
    for (double t = lo; t <= hi + 0.5 * fine; t += fine) {
        const double i = evaluate(m, t);
        if (i > best.amps || (i == best.amps && t < best.time)) best = {i, t};
    }
    return best;
}

/// Emits `t_s,i_A,ji_A2s` every `period` seconds up to `until`.
inline void write_csv(std::ostream& os, const FaultModel& m, double until, double period = 50e-6) {
    if (!(period > 0)) throw InvalidParameter("model csv: sample period must be > 0");
    os << "t_s,i_A,ji_A2s\n";
    if (!(until > 0)) return;
    os << std::setprecision(10);
    const auto n = static_cast<long>(std::floor(until / period + 1e-9));
    double ji = 0.0;
    double prev = 0.0;
    for (long k = 0; k <= n; ++k) {
        const double t = std::min(until, period * static_cast<double>(k));
        ji += joules_integral(m, prev, t);
        prev = t;
        os << t << ',' << evaluate(m, t) << ',' << ji << '\n';
    }
}

}  // namespace mwtfault
