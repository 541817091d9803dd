#pragma once

// Electrical parameter types of a 12-pulse HV supply and the referred
// impedance / base current arithmetic shared by the analytic fault model,
// the switched-circuit simulator and the calibration engine.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mwtfault {

/// Rejected parameter or precondition.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ratio of average to peak value of an ideal 12-pulse waveform.
inline constexpr double k12_pulse = 0.9886;

/// Grid frequency the time-to-peak constant was tuned for.
inline constexpr double reference_grid_hz = 50.0;

struct TransformerParams {
    double r_p_delta = 0.0;    // primary winding resistance, ohm
    double x_lp_delta = 0.0;   // primary leakage reactance, ohm
    double r_sp = 0.0;         // secondary resistance referred to primary, ohm
    double x_l_sp = 0.0;       // secondary leakage referred to primary, ohm
    double v_prim_ll = 415.0;  // nominal primary line-line rms, V
    double v_sec_ll = 1100.0;  // nominal secondary line-line rms, V
    double rating_va = 0.0;    // informational

    void validate() const {
        if (!(r_p_delta >= 0 && x_lp_delta >= 0 && r_sp >= 0 && x_l_sp >= 0))
            throw InvalidParameter("transformer: resistances and reactances must be >= 0");
        if (!(v_prim_ll > 0 && v_sec_ll > 0))
            throw InvalidParameter("transformer: nominal voltages must be > 0");
    }
};

struct SourceParams {
    double e_ll = 465.0;                          // operating line-line rms, V
    double omega = 2.0 * std::numbers::pi * 50.0; // rad/s
    double x_s = 0.0;                             // per-phase source reactance, ohm

    [[nodiscard]] double frequency_hz() const { return omega / (2.0 * std::numbers::pi); }

    void validate() const {
        if (!(e_ll > 0)) throw InvalidParameter("source: e_ll must be > 0");
        if (!(omega > 0)) throw InvalidParameter("source: omega must be > 0");
        if (!(x_s >= 0)) throw InvalidParameter("source: x_s must be >= 0");
    }
};

/// dc side of the supply. r3 sits between the bridges and c_dc, the fault
/// closes r1 + r2 across c_dc.
struct DcLinkParams {
    double r1 = 0.0;
    double r2 = 0.0;
    double r3 = 0.0;
    double c_dc = 0.0;  // F
    double v_c = 0.0;   // capacitor precharge, V

    /// Resistance of the capacitor discharge path.
    [[nodiscard]] double fault_resistance() const { return r1 + r2; }
    /// Resistance seen by the follow-on current.
    [[nodiscard]] double follow_on_resistance() const { return r1 + r2 + r3; }

    /// Checks the fields that every use needs. The discharge path itself
    /// (r1 + r2 > 0) is checked where a capacitor discharge is modeled.
    void validate() const {
        if (!(r1 >= 0 && r2 >= 0 && r3 >= 0))
            throw InvalidParameter("dc_link: resistances must be >= 0");
        if (!(c_dc > 0)) throw InvalidParameter("dc_link: c_dc must be > 0");
        if (!std::isfinite(v_c)) throw InvalidParameter("dc_link: v_c must be finite");
    }

    void validate_discharge_path() const {
        validate();
        if (!(fault_resistance() > 0))
            throw InvalidParameter("dc_link: r1 + r2 must be > 0 for a capacitor discharge");
    }
};

/// dc-side interconnection of the two 6-pulse bridges.
enum class Topology { Parallel, Series };

[[nodiscard]] inline std::string_view to_string(Topology t) {
    return t == Topology::Parallel ? "parallel" : "series";
}

[[nodiscard]] inline Topology parse_topology(std::string_view s) {
    if (s == "parallel") return Topology::Parallel;
    if (s == "series") return Topology::Series;
    throw InvalidParameter("unknown topology '" + std::string(s) + "' (expected parallel|series)");
}

/// Transformer plus source impedance referred to the delta primary.
struct EquivalentImpedance {
    double r_p_eq = 0.0;        // ohm
    double x_lp_eq = 0.0;       // ohm
    double turns_factor = 0.0;  // sqrt(3) * N1/N2 * k12
    double x_r_trx = 0.0;       // x_lp_eq / r_p_eq
};

/// Full description of a supply under test.
struct SystemConfig {
    TransformerParams transformer;
    SourceParams source;
    DcLinkParams dc_link;
    Topology topology = Topology::Parallel;

    void validate() const {
        transformer.validate();
        source.validate();
        dc_link.validate();
    }
};

/// Table I test setup. v_c is the parallel-connection precharge; the series
/// setup was run at twice that.
[[nodiscard]] inline SystemConfig reference_setup(Topology topology = Topology::Parallel) {
    SystemConfig c;
    c.transformer = {.r_p_delta = 0.059,
                     .x_lp_delta = 0.121,
                     .r_sp = 0.134,
                     .x_l_sp = 0.209,
                     .v_prim_ll = 415.0,
                     .v_sec_ll = 1100.0,
                     .rating_va = 50e3};
    c.source = {.e_ll = 465.0, .omega = 2.0 * std::numbers::pi * 50.0, .x_s = 0.166};
    c.dc_link = {.r1 = 3.0,
                 .r2 = 8.0,
                 .r3 = 38.0,
                 .c_dc = 92e-6,
                 .v_c = topology == Topology::Parallel ? 1700.0 : 3400.0};
    c.topology = topology;
    return c;
}

[[nodiscard]] inline double turns_factor(const TransformerParams& trx) {
    return std::sqrt(3.0) * (trx.v_prim_ll / trx.v_sec_ll) * k12_pulse;
}

[[nodiscard]] inline EquivalentImpedance referred_equivalents(const TransformerParams& trx,
                                                              const SourceParams& src) {
    trx.validate();
    src.validate();
    EquivalentImpedance eq;
    eq.r_p_eq = trx.r_p_delta + trx.r_sp / 2.0;
    eq.x_lp_eq = trx.x_lp_delta + trx.x_l_sp / 2.0 + 3.0 * src.x_s;
    if (!(eq.r_p_eq > 0))
        throw InvalidParameter("referred resistance is zero; X/R of the transformer is undefined");
    eq.turns_factor = turns_factor(trx);
    eq.x_r_trx = eq.x_lp_eq / eq.r_p_eq;
    return eq;
}

/// dc-side resistance referred to the ac primary by active-power equality.
[[nodiscard]] inline double r_lp(Topology topology, double r_load, const EquivalentImpedance& eq) {
    if (!(r_load >= 0)) throw InvalidParameter("r_lp: r_load must be >= 0");
    const double share = topology == Topology::Parallel ? 2.0 / 3.0 : 1.0 / 6.0;
    return share * eq.turns_factor * eq.turns_factor * r_load;
}

/// Uncorrected system X/R; the correction factor is a function of this value.
[[nodiscard]] inline double x_r_system(const EquivalentImpedance& eq, double r_lp_val) {
    const double r = eq.r_p_eq + r_lp_val;
    if (!(r > 0)) throw InvalidParameter("x_r_system: total resistance must be > 0");
    return eq.x_lp_eq / r;
}

/// Steady dc fault current. `r_lp_corrected` is k_c * R_Lp (0 for a dead short).
[[nodiscard]] inline double i_f_base(Topology topology, const SourceParams& src,
                                     const EquivalentImpedance& eq, double r_lp_corrected) {
    const double z = std::hypot(eq.r_p_eq + r_lp_corrected, eq.x_lp_eq);
    if (!(z > 0)) throw InvalidParameter("i_f_base: impedance magnitude must be > 0");
    const double parallel = std::sqrt(2.0) * src.e_ll / z * eq.turns_factor;
    return topology == Topology::Parallel ? parallel : 0.5 * parallel;
}

/// Decay rate of the follow-on transient, 1/s.
[[nodiscard]] inline double delta_coeff(const SourceParams& src, const EquivalentImpedance& eq,
                                        double r_lp_corrected) {
    if (!(eq.x_lp_eq > 0)) throw InvalidParameter("delta_coeff: x_lp_eq must be > 0");
    return src.omega * (eq.r_p_eq + r_lp_corrected) / eq.x_lp_eq;
}

}  // namespace mwtfault
