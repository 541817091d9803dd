#pragma once

// Pre-arc thermal model of the fuse wire that stands in for the microwave
// tube during wire survivability tests. Conduction, convection and
// radiation are neglected; conductivity falls linearly with temperature.

#include <mwtfault/core.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mwtfault {

class InfeasibleDesign : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Defaults are the copper constants used for the 10 J survivability wire.
struct FuseWireMaterial {
    double sigma_o = 5.13e7;   // S/m at t_o
    double alpha_o = 3.8e-3;   // 1/degC
    double rho = 8950.0;       // kg/m^3
    double c_p = 395.0;        // J/(kg degC)
    double t_o = 30.0;         // degC
    double t_m = 1083.0;       // degC

    void validate() const {
        if (!(sigma_o > 0)) throw InvalidParameter("fuse material: sigma_o must be > 0");
        if (!(alpha_o > 0)) throw InvalidParameter("fuse material: alpha_o must be > 0");
        if (!(rho > 0 && c_p > 0)) throw InvalidParameter("fuse material: rho and c_p must be > 0");
        if (!(t_m > t_o)) throw InvalidParameter("fuse material: t_m must exceed t_o");
    }
};

struct FuseWireGeometry {
    double area = 0.0;    // m^2
    double length = 0.0;  // m

    void validate() const {
        if (!(area > 0)) throw InvalidParameter("fuse geometry: area must be > 0");
        if (!(length > 0)) throw InvalidParameter("fuse geometry: length must be > 0");
    }
};

[[nodiscard]] inline double area_from_diameter(double d) { return std::numbers::pi / 4.0 * d * d; }
[[nodiscard]] inline double diameter_from_area(double a) { return std::sqrt(4.0 * a / std::numbers::pi); }

/// K_JI, m^4/(A^2 s): A^2 = K_JI * J_Im.
[[nodiscard]] inline double k_ji(const FuseWireMaterial& mat) {
    mat.validate();
    return mat.alpha_o /
           (mat.rho * mat.c_p * mat.sigma_o * std::log1p(mat.alpha_o * (mat.t_m - mat.t_o)));
}

/// Joules integral at which a wire of cross-section `area` reaches t_m.
/// Independent of the wire length.
[[nodiscard]] inline double melting_joules_integral(double area, const FuseWireMaterial& mat) {
    if (!(area > 0)) throw InvalidParameter("melting_joules_integral: area must be > 0");
    return area * area / k_ji(mat);
}

[[nodiscard]] inline double area_for_joules_integral(double j_im, const FuseWireMaterial& mat) {
    if (!(j_im > 0)) throw InvalidParameter("area_for_joules_integral: j_im must be > 0");
    return std::sqrt(k_ji(mat) * j_im);
}

/// Multiple of the melting joules integral above which the closed forms are
/// refused (the exponential would be meaningless long before it overflows).
inline constexpr double default_ji_guard_multiple = 100.0;

namespace detail {

inline double thermal_exponent(double j_i, double area, const FuseWireMaterial& mat,
                               double guard_multiple) {
    if (!(j_i >= 0) || !std::isfinite(j_i))
        throw InvalidParameter("fuse: joules integral must be finite and >= 0");
    if (!(area > 0)) throw InvalidParameter("fuse: area must be > 0");
    mat.validate();
    if (j_i > guard_multiple * melting_joules_integral(area, mat))
        throw InvalidParameter("fuse: joules integral beyond the guarded multiple of J_Im");
    return mat.alpha_o * j_i / (area * area * mat.rho * mat.c_p * mat.sigma_o);
}

}  // namespace detail

/// Uniform wire temperature after absorbing joules integral `j_i`, degC.
[[nodiscard]] inline double temperature_at(double j_i, double area, const FuseWireMaterial& mat,
                                           double guard_multiple = default_ji_guard_multiple) {
    const double x = detail::thermal_exponent(j_i, area, mat, guard_multiple);
    return std::expm1(x) / mat.alpha_o + mat.t_o;
}

[[nodiscard]] inline double cold_resistance(const FuseWireGeometry& geom, const FuseWireMaterial& mat) {
    geom.validate();
    return geom.length / (mat.sigma_o * geom.area);
}

/// Resistance at temperature `t_f` from the linear conductivity law.
[[nodiscard]] inline double resistance_at_temperature(double t_f, const FuseWireGeometry& geom,
                                                      const FuseWireMaterial& mat) {
    return cold_resistance(geom, mat) * (1.0 + mat.alpha_o * (t_f - mat.t_o));
}

[[nodiscard]] inline double resistance_at(double j_i, const FuseWireGeometry& geom,
                                          const FuseWireMaterial& mat,
                                          double guard_multiple = default_ji_guard_multiple) {
    geom.validate();
    const double x = detail::thermal_exponent(j_i, geom.area, mat, guard_multiple);
    return cold_resistance(geom, mat) * std::exp(x);
}

/// Energy absorbed up to melting: (A l) rho c_p (t_m - t_o).
[[nodiscard]] inline double melting_energy(const FuseWireGeometry& geom, const FuseWireMaterial& mat) {
    if (!(geom.area > 0 && geom.length >= 0))
        throw InvalidParameter("melting_energy: area must be > 0 and length >= 0");
    mat.validate();
    return geom.area * geom.length * mat.rho * mat.c_p * (mat.t_m - mat.t_o);
}

/// The same energy written through K_JI before simplification; kept as an
/// independent route for cross-checking melting_energy.
[[nodiscard]] inline double melting_energy_via_kji(const FuseWireGeometry& geom,
                                                   const FuseWireMaterial& mat) {
    const double k = k_ji(mat);
    const double coeff = mat.rho * mat.c_p / mat.alpha_o;
    return geom.area * geom.length * coeff *
           std::expm1(mat.alpha_o / (mat.rho * mat.c_p * mat.sigma_o * k));
}

// ---------------------------------------------------------------------------
// Time stepping

/// Piecewise-linear current waveform, A over s.
struct CurrentProfile {
    std::vector<double> t;
    std::vector<double> i;

    [[nodiscard]] static CurrentProfile constant(double amps, double duration) {
        return {{0.0, duration}, {amps, amps}};
    }

    [[nodiscard]] double duration() const { return t.empty() ? 0.0 : t.back(); }

    void validate() const {
        if (t.size() != i.size() || t.empty())
            throw InvalidParameter("current profile: need matching, non-empty t and i columns");
        for (std::size_t k = 0; k < t.size(); ++k) {
            if (!std::isfinite(t[k]) || !std::isfinite(i[k]))
                throw InvalidParameter("current profile: non-finite sample at row " + std::to_string(k));
            if (k > 0 && !(t[k] > t[k - 1]))
                throw InvalidParameter("current profile: times must be strictly increasing");
        }
    }

    /// Linear interpolation; held constant outside the sampled span.
    [[nodiscard]] double at(double time) const {
        if (time <= t.front()) return i.front();
        if (time >= t.back()) return i.back();
        auto hi = std::upper_bound(t.begin(), t.end(), time);
        const auto k = static_cast<std::size_t>(hi - t.begin());
        const double w = (time - t[k - 1]) / (t[k] - t[k - 1]);
        return i[k - 1] + w * (i[k] - i[k - 1]);
    }
};

struct FuseSample {
    double t = 0.0;
    double temperature = 0.0;
    double resistance = 0.0;
    double joules_integral = 0.0;
    double energy = 0.0;
};

struct FuseTrace {
    std::vector<FuseSample> samples;
    std::optional<double> melted_at;

    [[nodiscard]] const FuseSample& last() const { return samples.back(); }
};

inline constexpr double default_fuse_dt = 10e-6;

/// Steps the heat balance i^2 R(T) dt = (A l) rho c_p dT forward from t_o.
/// Stops at the first sample with T >= t_m; nothing after melting is modeled.
[[nodiscard]] inline FuseTrace simulate_fuse(const CurrentProfile& profile, const FuseWireGeometry& geom,
                                             const FuseWireMaterial& mat, double dt = default_fuse_dt) {
    if (!(dt > 0) || !std::isfinite(dt)) throw InvalidParameter("simulate_fuse: dt must be > 0");
    profile.validate();
    geom.validate();
    mat.validate();

    const double heat_capacity = geom.area * geom.length * mat.rho * mat.c_p;
    const double r_cold = cold_resistance(geom, mat);
    const double t0 = profile.t.front();
    const double horizon = profile.duration();
    const auto steps = static_cast<std::size_t>(std::ceil((horizon - t0) / dt - 1e-9));

    FuseTrace trace;
    trace.samples.reserve(steps + 1);
    FuseSample s{t0, mat.t_o, r_cold, 0.0, 0.0};
    trace.samples.push_back(s);

    for (std::size_t n = 0; n < steps; ++n) {
        const double t_next = std::min(t0 + static_cast<double>(n + 1) * dt, horizon);
        const double h = t_next - s.t;
        const double i = profile.at(s.t);
        const double power = i * i * s.resistance;
        s.temperature += power * h / heat_capacity;
        s.joules_integral += i * i * h;
        s.energy += power * h;
        s.t = t_next;
        s.resistance = r_cold * (1.0 + mat.alpha_o * (s.temperature - mat.t_o));
        trace.samples.push_back(s);
        if (s.temperature >= mat.t_m) {
            trace.melted_at = s.t;
            break;
        }
    }
    return trace;
}

inline void write_csv(std::ostream& os, const FuseTrace& trace) {
    os << "t_s,temp_C,res_ohm,ji_A2s,energy_J\n";
    os << std::setprecision(10);
    for (const auto& s : trace.samples)
        os << s.t << ',' << s.temperature << ',' << s.resistance << ',' << s.joules_integral << ','
           << s.energy << '\n';
}

// ---------------------------------------------------------------------------
// Sizing

/// Standard wire gauge diameters, m.
inline constexpr std::array<std::pair<int, double>, 31> swg_table{{
    {20, 0.9144e-3}, {21, 0.8128e-3}, {22, 0.7112e-3}, {23, 0.6096e-3}, {24, 0.5588e-3},
    {25, 0.5080e-3}, {26, 0.4572e-3}, {27, 0.4166e-3}, {28, 0.3759e-3}, {29, 0.3454e-3},
    {30, 0.3150e-3}, {31, 0.2946e-3}, {32, 0.2743e-3}, {33, 0.2540e-3}, {34, 0.2337e-3},
    {35, 0.2134e-3}, {36, 0.1930e-3}, {37, 0.1727e-3}, {38, 0.1524e-3}, {39, 0.1321e-3},
    {40, 0.1219e-3}, {41, 0.1118e-3}, {42, 0.1016e-3}, {43, 0.0914e-3}, {44, 0.0813e-3},
    {45, 0.0711e-3}, {46, 0.0610e-3}, {47, 0.0508e-3}, {48, 0.0406e-3}, {49, 0.0305e-3},
    {50, 0.0254e-3},
}};

[[nodiscard]] inline int nearest_swg(double diameter) {
    int best = swg_table.front().first;
    double best_err = std::numeric_limits<double>::infinity();
    for (const auto& [gauge, d] : swg_table) {
        const double err = std::abs(d - diameter);
        if (err < best_err) {
            best_err = err;
            best = gauge;
        }
    }
    return best;
}

/// Air clearance rule for the wire length, m per kV.
inline constexpr double clearance_m_per_kv = 10e-3;

struct FuseDesign {
    FuseWireGeometry geometry;
    double diameter = 0.0;     // m
    double j_im = 0.0;         // A^2 s
    double e_fm = 0.0;         // J
    double min_length_ji = 0.0;        // shortest length keeping J_Im <= limit, m
    double min_length_clearance = 0.0; // m
    int swg = 0;               // informational
};

/// Sizes a wire that melts at `energy_target` while keeping J_Im within
/// `ji_limit`. Without `forced_length` the shortest admissible length is used.
[[nodiscard]] inline FuseDesign design_fuse(double energy_target, double ji_limit, double operating_kv,
                                            const FuseWireMaterial& mat,
                                            std::optional<double> forced_length = std::nullopt) {
    mat.validate();
    if (!(energy_target > 0) || !std::isfinite(energy_target))
        throw InfeasibleDesign("design_fuse: energy target must be > 0");
    if (!(ji_limit > 0)) throw InvalidParameter("design_fuse: ji_limit must be > 0");
    if (!(operating_kv >= 0)) throw InvalidParameter("design_fuse: operating voltage must be >= 0");

    const double volume = energy_target / (mat.rho * mat.c_p * (mat.t_m - mat.t_o));
    FuseDesign d;
    d.min_length_ji = volume / area_for_joules_integral(ji_limit, mat);
    d.min_length_clearance = clearance_m_per_kv * operating_kv;

    double length = std::max(d.min_length_ji, d.min_length_clearance);
    if (forced_length) {
        if (!(*forced_length > 0)) throw InvalidParameter("design_fuse: length must be > 0");
        if (*forced_length < d.min_length_clearance)
            throw InfeasibleDesign("design_fuse: length is below the voltage clearance");
        length = *forced_length;
    }
    d.geometry = {volume / length, length};
    d.diameter = diameter_from_area(d.geometry.area);
    d.j_im = melting_joules_integral(d.geometry.area, mat);
    d.e_fm = melting_energy(d.geometry, mat);
    d.swg = nearest_swg(d.diameter);
    if (d.j_im > ji_limit * (1.0 + 1e-12))
        throw InfeasibleDesign("design_fuse: melting joules integral exceeds the limit at this length");
    return d;
}

}  // namespace mwtfault
