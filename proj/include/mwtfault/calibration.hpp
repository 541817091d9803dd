#pragma once

// Correction-factor calibration: simulate a grid of (X/R_trx, R_L) points
// without the dc capacitor, solve k_c per point so the model's joules
// integral matches the simulation, fit the quartic, and re-validate.

#include <mwtfault/core.hpp>
#include <mwtfault/fault_model.hpp>
#include <mwtfault/rectifier_sim.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace mwtfault {

/// Evenly spaced values on a log scale, endpoints included.
[[nodiscard]] inline std::vector<double> log_space(double lo, double hi, int n) {
    if (!(lo > 0 && hi >= lo) || n < 1) throw InvalidParameter("log_space: need 0 < lo <= hi and n >= 1");
    std::vector<double> v;
    for (int k = 0; k < n; ++k)
        v.push_back(n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(k) / (n - 1)));
    return v;
}

[[nodiscard]] inline std::vector<double> lin_space(double lo, double hi, int n) {
    if (!(hi >= lo) || n < 1) throw InvalidParameter("lin_space: need lo <= hi and n >= 1");
    std::vector<double> v;
    for (int k = 0; k < n; ++k) v.push_back(n == 1 ? lo : lo + (hi - lo) * k / (n - 1));
    return v;
}

struct SweepGrid {
    std::vector<double> x_r_trx{2.5, 5.0, 7.5, 10.0, 12.5, 15.0};
    std::vector<double> r_load = log_space(5.0, 300.0, 8);  // ohm
    double t_eval = 0.1;                                    // s
    std::vector<double> t_p = lin_space(1.5e-3, 10e-3, 18); // s
    /// Referred resistance of the sweep transformer. 0.44 ohm puts the
    /// parallel sweep on X/R_system in about [0.013, 3.6].
    double r_p_eq = 0.44;
    /// Topology the correction factor is solved for.
    Topology topology = Topology::Parallel;
    double dt = 1e-5;
    int angle_resolution = 24;
    TransformerModel transformer_model = TransformerModel::IndependentSecondaries;

    void validate() const {
        auto positive = [](const std::vector<double>& v) {
            return !v.empty() && std::all_of(v.begin(), v.end(), [](double x) { return x > 0 && std::isfinite(x); });
        };
        if (!positive(x_r_trx)) throw InvalidParameter("grid: x_r_trx values must be > 0");
        if (r_load.empty() || !std::all_of(r_load.begin(), r_load.end(), [](double r) { return r >= 0 && std::isfinite(r); }))
            throw InvalidParameter("grid: r_load values must be >= 0");
        if (!(t_eval > 0)) throw InvalidParameter("grid: t_eval must be > 0");
        if (!t_p.empty() && !positive(t_p)) throw InvalidParameter("grid: t_p values must be > 0");
        if (!(r_p_eq > 0)) throw InvalidParameter("grid: r_p_eq must be > 0");
        if (!(dt > 0)) throw InvalidParameter("grid: dt must be > 0");
        if (angle_resolution < 1) throw InvalidParameter("grid: angle_resolution must be >= 1");
    }
};

struct GridPoint {
    Topology topology = Topology::Parallel;
    double x_r_trx = 0.0;
    double r_load = 0.0;
};

/// Grid points in x_r_trx-major order.
[[nodiscard]] inline std::vector<GridPoint> grid_points(const SweepGrid& g, Topology topology) {
    std::vector<GridPoint> pts;
    for (double x : g.x_r_trx)
        for (double r : g.r_load) pts.push_back({topology, x, r});
    return pts;
}

/// System used for a sweep point: the referred impedance split evenly
/// between primary and secondary windings, no source reactance, reference
/// operating voltage, dc path = r_load alone.
[[nodiscard]] inline SystemConfig sweep_system(const SweepGrid& g, const GridPoint& p) {
    SystemConfig c = reference_setup(p.topology);
    const double r = g.r_p_eq;
    const double x = p.x_r_trx * r;
    c.transformer.r_p_delta = r / 2.0;
    c.transformer.r_sp = r;
    c.transformer.x_lp_delta = x / 2.0;
    c.transformer.x_l_sp = x;
    c.source.x_s = 0.0;
    c.dc_link = {.r1 = p.r_load, .r2 = 0.0, .r3 = 0.0, .c_dc = c.dc_link.c_dc, .v_c = 0.0};
    return c;
}

[[nodiscard]] inline SimConfig sweep_sim_config(const SweepGrid& g, const GridPoint& p) {
    SimConfig s;
    s.system = sweep_system(g, p);
    s.include_dc_cap = false;
    s.duration = g.t_eval;
    s.dt = g.dt;
    s.angle_resolution = g.angle_resolution;
    s.transformer_model = g.transformer_model;
    return s;
}

/// Model joules integral at t for an explicit correction factor.
[[nodiscard]] inline double model_ji(const SystemConfig& sys, double k_c, double t,
                                     double t_p = default_time_to_peak) {
    const auto eq = referred_equivalents(sys.transformer, sys.source);
    return joules_integral(
        follow_on_model(sys.topology, sys.source, eq, sys.dc_link.follow_on_resistance(), k_c, t_p), t);
}

[[nodiscard]] inline double point_x_r_system(const SystemConfig& sys) {
    const auto eq = referred_equivalents(sys.transformer, sys.source);
    return x_r_system(eq, r_lp(sys.topology, sys.dc_link.follow_on_resistance(), eq));
}

/// Simulated joules integral at a grid point, worst-case fault angle.
struct SimPoint {
    GridPoint point;
    double x_r_system = 0.0;
    double ji_sim = 0.0;
    double fault_angle = 0.0;
    std::optional<std::string> failure;
};

[[nodiscard]] inline std::vector<SimPoint> simulate_grid(const SweepGrid& g, const std::vector<GridPoint>& pts) {
    g.validate();
    return detail::parallel_map(pts.size(), [&](std::size_t k) {
        SimPoint sp;
        sp.point = pts[k];
        try {
            const auto cfg = sweep_sim_config(g, pts[k]);
            sp.x_r_system = point_x_r_system(cfg.system);
            const auto tr = run(cfg);
            sp.ji_sim = joules_integral_sim(tr, g.t_eval);
            sp.fault_angle = tr.fault_angle_used;
        } catch (const std::exception& e) {
            sp.failure = e.what();
        }
        return sp;
    });
}

struct KcSample {
    double x_r_trx = 0.0;
    double r_load = 0.0;
    double x_r_system = 0.0;
    double k_c_solved = std::numeric_limits<double>::quiet_NaN();
    double residual_delta_ji_percent = std::numeric_limits<double>::quiet_NaN();
    std::optional<std::string> failure;

    [[nodiscard]] bool ok() const { return !failure.has_value(); }
};

inline constexpr double kc_bracket_lo = 0.3;
inline constexpr double kc_bracket_hi = 3.6;
inline constexpr double default_kc_tolerance = 0.25;  // percent

/// Bisection on k_c for delta_ji_percent(ji_sim, model(k_c)) = 0. A larger
/// k_c damps the model more and lowers its joules integral, so the error
/// rises with k_c. Without a sign change over the bracket the sample
/// carries a failure and the endpoint residuals.
[[nodiscard]] inline KcSample solve_kc(const SystemConfig& sys, double ji_sim, double t_eval,
                                       double tol = default_kc_tolerance, double x_r_trx = 0.0) {
    if (!(tol > 0)) throw InvalidParameter("solve_kc: tolerance must be > 0");
    KcSample s;
    s.x_r_trx = x_r_trx;
    s.r_load = sys.dc_link.follow_on_resistance();
    s.x_r_system = point_x_r_system(sys);
    auto err = [&](double k) { return delta_ji_percent(ji_sim, model_ji(sys, k, t_eval)); };
    double lo = kc_bracket_lo;
    double hi = kc_bracket_hi;
    double f_lo = err(lo);
    const double f_hi = err(hi);
    if (std::abs(f_lo) < tol) {
        s.k_c_solved = lo;
        s.residual_delta_ji_percent = f_lo;
        return s;
    }
    if (std::abs(f_hi) < tol) {
        s.k_c_solved = hi;
        s.residual_delta_ji_percent = f_hi;
        return s;
    }
    if ((f_lo < 0) == (f_hi < 0)) {
        s.residual_delta_ji_percent = std::abs(f_lo) < std::abs(f_hi) ? f_lo : f_hi;
        std::ostringstream msg;
        msg << "no sign change of the joules-integral error on k_c in [" << lo << ", " << hi << "] (" << f_lo
            << "%, " << f_hi << "%)";
        s.failure = msg.str();
        return s;
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double f = err(mid);
        if (std::abs(f) < tol || hi - lo < 1e-12) {
            s.k_c_solved = mid;
            s.residual_delta_ji_percent = f;
            return s;
        }
        if ((f < 0) == (f_lo < 0)) {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
    s.k_c_solved = 0.5 * (lo + hi);
    s.residual_delta_ji_percent = err(s.k_c_solved);
    return s;
}

[[nodiscard]] inline std::vector<KcSample> solve_grid(const SweepGrid& g, const std::vector<SimPoint>& sims,
                                                      double tol = default_kc_tolerance) {
    std::vector<KcSample> out;
    out.reserve(sims.size());
    for (const auto& sp : sims) {
        const auto sys = sweep_system(g, sp.point);
        if (sp.failure) {
            KcSample s;
            s.x_r_trx = sp.point.x_r_trx;
            s.r_load = sp.point.r_load;
            s.x_r_system = sp.x_r_system;
            s.failure = "simulation failed: " + *sp.failure;
            out.push_back(s);
            continue;
        }
        try {
            out.push_back(solve_kc(sys, sp.ji_sim, g.t_eval, tol, sp.point.x_r_trx));
        } catch (const std::exception& e) {
            KcSample s;
            s.x_r_trx = sp.point.x_r_trx;
            s.r_load = sp.point.r_load;
            s.x_r_system = sp.x_r_system;
            s.failure = e.what();
            out.push_back(s);
        }
    }
    return out;
}

/// One sample per (x_r_trx, r_load) pair of the grid's calibration topology.
[[nodiscard]] inline std::vector<KcSample> sweep_kc(const SweepGrid& g, double tol = default_kc_tolerance) {
    return solve_grid(g, simulate_grid(g, grid_points(g, g.topology)), tol);
}

// ---------------------------------------------------------------------------
// Fit

struct PolyFit {
    KcPolynomial poly;
    double r2 = 0.0;
    std::size_t n_samples = 0;
};

inline constexpr int kc_degree = 4;

/// Ordinary least squares of the quartic through (x_i, y_i).
[[nodiscard]] inline PolyFit fit_polynomial(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw InvalidParameter("fit_polynomial: x and y sizes differ");
    const auto n = x.size();
    if (n < static_cast<std::size_t>(kc_degree + 2))
        throw InvalidParameter("fit_polynomial: need at least " + std::to_string(kc_degree + 2) + " samples, got " +
                               std::to_string(n));
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), kc_degree + 1);
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw InvalidParameter("fit_polynomial: non-finite sample");
        const auto r = static_cast<Eigen::Index>(i);
        for (int j = 0; j <= kc_degree; ++j) a(r, j) = std::pow(x[i], kc_degree - j);
        b[r] = y[i];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < kc_degree + 1) throw InvalidParameter("fit_polynomial: rank-deficient design matrix");
    const Eigen::VectorXd c = qr.solve(b);
    PolyFit f;
    for (int j = 0; j <= kc_degree; ++j) f.poly.coeffs[static_cast<std::size_t>(j)] = c[j];
    const double mean = b.mean();
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - f.poly(x[i]);
        ss_res += e * e;
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    f.n_samples = n;
    return f;
}

/// Fits the solved samples, skipping failed ones.
[[nodiscard]] inline PolyFit fit_polynomial(const std::vector<KcSample>& samples) {
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& s : samples) {
        if (!s.ok()) continue;
        x.push_back(s.x_r_system);
        y.push_back(s.k_c_solved);
    }
    return fit_polynomial(x, y);
}

// ---------------------------------------------------------------------------
// Sweeps of the error

struct TpRow {
    double x_r_trx = 0.0;
    double t_p = 0.0;
    double delta_ji_percent = 0.0;
};

/// Uncorrected model error against the simulation at a fixed dc resistance
/// across (x_r_trx, t_p).
[[nodiscard]] inline std::vector<TpRow> sweep_tp(const SweepGrid& g, double r_load = 0.0) {
    g.validate();
    if (g.t_p.empty()) throw InvalidParameter("sweep_tp: grid has no t_p values");
    std::vector<GridPoint> pts;
    for (double x : g.x_r_trx) pts.push_back({g.topology, x, r_load});
    const auto sims = simulate_grid(g, pts);
    std::vector<TpRow> rows;
    for (const auto& sp : sims) {
        if (sp.failure) throw SimulationError("sweep_tp: " + *sp.failure, -1);
        const auto sys = sweep_system(g, sp.point);
        for (double tp : g.t_p)
            rows.push_back({sp.point.x_r_trx, tp, delta_ji_percent(sp.ji_sim, model_ji(sys, 1.0, g.t_eval, tp))});
    }
    return rows;
}

struct ValidationPoint {
    Topology topology = Topology::Parallel;
    double x_r_trx = 0.0;
    double r_load = 0.0;
    double x_r_system = 0.0;
    double k_c = std::numeric_limits<double>::quiet_NaN();
    double delta_ji_percent = std::numeric_limits<double>::quiet_NaN();
    bool in_domain = true;
    std::optional<std::string> failure;
};

using KcFunction = std::function<double(double)>;

/// Error of the model with k_c = kc_fn(X/R_system) at already simulated points.
[[nodiscard]] inline std::vector<ValidationPoint> validate_points(const SweepGrid& g, const std::vector<SimPoint>& sims,
                                                                  const KcFunction& kc_fn) {
    std::vector<ValidationPoint> out;
    out.reserve(sims.size());
    for (const auto& sp : sims) {
        ValidationPoint v;
        v.topology = sp.point.topology;
        v.x_r_trx = sp.point.x_r_trx;
        v.r_load = sp.point.r_load;
        v.x_r_system = sp.x_r_system;
        v.in_domain = kc_domain_contains(sp.x_r_system);
        if (sp.failure) {
            v.failure = "simulation failed: " + *sp.failure;
        } else {
            v.k_c = kc_fn(sp.x_r_system);
            if (!(v.k_c > 0)) {
                v.failure = "correction factor is not positive at this X/R_system";
            } else {
                v.delta_ji_percent =
                    delta_ji_percent(sp.ji_sim, model_ji(sweep_system(g, sp.point), v.k_c, g.t_eval));
            }
        }
        out.push_back(v);
    }
    return out;
}

/// Re-simulates the grid for both topologies and evaluates the model with
/// the given correction factor.
[[nodiscard]] inline std::vector<ValidationPoint> validate_sweep(const KcFunction& kc_fn, const SweepGrid& g) {
    auto pts = grid_points(g, Topology::Parallel);
    const auto series = grid_points(g, Topology::Series);
    pts.insert(pts.end(), series.begin(), series.end());
    return validate_points(g, simulate_grid(g, pts), kc_fn);
}

[[nodiscard]] inline std::vector<ValidationPoint> validate_sweep(const KcPolynomial& poly, const SweepGrid& g) {
    return validate_sweep(KcFunction([poly](double x) { return poly(x); }), g);
}

/// Largest |error| over the points; +inf when any point failed.
[[nodiscard]] inline double max_abs_error(const std::vector<ValidationPoint>& pts) {
    double m = 0.0;
    for (const auto& p : pts) {
        if (p.failure) return std::numeric_limits<double>::infinity();
        m = std::max(m, std::abs(p.delta_ji_percent));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Output

inline void write_csv(std::ostream& os, const std::vector<KcSample>& samples) {
    os << "x_r_trx,r_load_ohm,x_r_system,k_c_solved,residual_delta_ji_percent,error\n" << std::setprecision(10);
    for (const auto& s : samples) {
        os << s.x_r_trx << ',' << s.r_load << ',' << s.x_r_system << ',';
        if (s.ok()) os << s.k_c_solved;
        os << ',' << s.residual_delta_ji_percent << ',';
        if (s.failure) os << '"' << *s.failure << '"';
        os << '\n';
    }
}

inline void write_csv(std::ostream& os, const std::vector<TpRow>& rows) {
    os << "x_r_trx,t_p_s,delta_ji_percent\n" << std::setprecision(10);
    for (const auto& r : rows) os << r.x_r_trx << ',' << r.t_p << ',' << r.delta_ji_percent << '\n';
}

inline void write_csv(std::ostream& os, const std::vector<ValidationPoint>& pts) {
    os << "topology,x_r_trx,r_load_ohm,x_r_system,k_c,delta_ji_percent,in_domain,error\n" << std::setprecision(10);
    for (const auto& p : pts) {
        os << to_string(p.topology) << ',' << p.x_r_trx << ',' << p.r_load << ',' << p.x_r_system << ',';
        if (std::isfinite(p.k_c)) os << p.k_c;
        os << ',';
        if (!p.failure) os << p.delta_ji_percent;
        os << ',' << (p.in_domain ? "true" : "false") << ',';
        if (p.failure) os << '"' << *p.failure << '"';
        os << '\n';
    }
}

}  // namespace mwtfault
