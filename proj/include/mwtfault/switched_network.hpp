#pragma once

// Fixed-step modified nodal analysis for small switched networks: resistors,
// capacitors, R-L branches with sinusoidal emf, ideal diodes modeled as
// two-valued resistors, and ideal multi-winding transformer limbs.
//
// Inductive branches and transformer windings carry their currents as
// extra unknowns, so zero-impedance branches are legal. Reactive elements
// use trapezoidal companions; a step in which any diode changes state is
// recomputed with backward Euler to suppress trapezoidal ringing.

#include <mwtfault/core.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mwtfault {

class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
    /// Step index at which the failure was detected, -1 if not step related.
    [[nodiscard]] long step() const { return step_; }

private:
    long step_;
};

enum class Integrator : std::uint32_t { Trapezoidal = 0, BackwardEuler = 1 };

class SwitchedNetwork {
public:
    static constexpr int ground = -1;
    static constexpr int max_diodes = 24;
    static constexpr int max_iterations = 20;

    struct Sinusoid {
        double amplitude = 0.0;
        double omega = 0.0;
        double phase = 0.0;
        [[nodiscard]] double operator()(double t) const { return amplitude * std::sin(omega * t + phase); }
    };

    int add_node() { return n_nodes_++; }

    int add_resistor(int a, int b, double r) {
        if (!(r > 0)) throw InvalidParameter("network: resistor must be > 0");
        resistors_.push_back({a, b, r});
        return static_cast<int>(resistors_.size()) - 1;
    }

    int add_capacitor(int a, int b, double c, double v0 = 0.0) {
        if (!(c > 0)) throw InvalidParameter("network: capacitor must be > 0");
        capacitors_.push_back({a, b, c, v0, 0.0});
        return static_cast<int>(capacitors_.size()) - 1;
    }

    /// R-L branch from a to b; the emf drives current from a towards b.
    int add_branch(int a, int b, double r, double l) { return add_branch(a, b, r, l, Sinusoid{0.0, 0.0, 0.0}); }

    int add_branch(int a, int b, double r, double l, Sinusoid emf) {
        if (!(r >= 0 && l >= 0)) throw InvalidParameter("network: branch R and L must be >= 0");
        branches_.push_back({a, b, r, l, emf, 0.0, 0.0});
        return static_cast<int>(branches_.size()) - 1;
    }

    int add_diode(int anode, int cathode, double r_on, double r_off) {
        if (static_cast<int>(diodes_.size()) >= max_diodes) throw InvalidParameter("network: too many diodes");
        diodes_.push_back({anode, cathode, 1.0 / r_on, 1.0 / r_off});
        return static_cast<int>(diodes_.size()) - 1;
    }

    /// Ideal transformer limb. Winding j (j >= 1) has (plus, minus, turns
    /// ratio to the first winding); magnetizing current is zero.
    struct Winding {
        int plus = ground;
        int minus = ground;
        double ratio = 1.0;
    };
    void add_transformer_limb(Winding primary, const std::vector<Winding>& secondaries) {
        for (const auto& w : secondaries) limbs_.push_back({primary, w});
    }

    /// Prepares the solver; call after all elements are added.
    void finalize(double h) {
        if (!(h > 0)) throw InvalidParameter("network: step must be > 0");
        h_ = h;
        n_unknowns_ = n_nodes_ + static_cast<int>(branches_.size()) + static_cast<int>(limbs_.size());
        x_.setZero(n_unknowns_);
        cache_.clear();
        // Node voltages consistent with precharged capacitors to ground.
        for (const auto& c : capacitors_) {
            if (c.a >= 0 && c.b == ground) x_[c.a] = c.v;
        }
    }

    /// Overrides the initial voltage of a node before the first step.
    void preset(int node, double value) {
        if (node >= 0) x_[node] = value;
    }

    /// Advances to time t. `first` selects backward Euler (no valid history).
    void step(double t, long n, bool first = false) {
        Integrator m = first ? Integrator::BackwardEuler : Integrator::Trapezoidal;
        std::uint32_t mask = solve_states(t, n, m, mask_);
        if (m == Integrator::Trapezoidal && mask != mask_) {
            m = Integrator::BackwardEuler;
            mask = solve_states(t, n, m, mask);
        }
        for (std::size_t k = 0; k < branches_.size(); ++k) {
            auto& b = branches_[k];
            b.i = x_[n_nodes_ + static_cast<int>(k)];
            b.u = v(b.a) - v(b.b) + b.emf(t);
        }
        for (auto& c : capacitors_) {
            const double vc = v(c.a) - v(c.b);
            c.i = cap_g(c, m) * vc + cap_hist(c, m);
            c.v = vc;
        }
        mask_ = mask;
        method_ = m;
    }

    [[nodiscard]] double v(int node) const { return node == ground ? 0.0 : x_[node]; }
    [[nodiscard]] double branch_current(int k) const { return branches_[static_cast<std::size_t>(k)].i; }
    [[nodiscard]] double resistor_current(int k) const {
        const auto& r = resistors_[static_cast<std::size_t>(k)];
        return (v(r.a) - v(r.b)) / r.r;
    }
    [[nodiscard]] double diode_current(int d) const {
        const auto& dd = diodes_[static_cast<std::size_t>(d)];
        return diode_g(d, mask_) * (v(dd.anode) - v(dd.cathode));
    }
    [[nodiscard]] bool diode_on(int d) const { return (mask_ >> d) & 1u; }
    [[nodiscard]] Integrator last_method() const { return method_; }

    [[nodiscard]] double source_power(double t) const {
        double p = 0.0;
        for (const auto& b : branches_) p += b.emf(t) * b.i;
        return p;
    }

    [[nodiscard]] double dissipated_power() const {
        double p = 0.0;
        for (const auto& b : branches_) p += b.r * b.i * b.i;
        for (const auto& r : resistors_) {
            const double vr = v(r.a) - v(r.b);
            p += vr * vr / r.r;
        }
        for (int d = 0; d < static_cast<int>(diodes_.size()); ++d) {
            const auto& dd = diodes_[static_cast<std::size_t>(d)];
            const double vd = v(dd.anode) - v(dd.cathode);
            p += diode_g(d, mask_) * vd * vd;
        }
        return p;
    }

    [[nodiscard]] double stored_energy() const {
        double e = 0.0;
        for (const auto& b : branches_) e += 0.5 * b.l * b.i * b.i;
        for (const auto& c : capacitors_) e += 0.5 * c.c * c.v * c.v;
        return e;
    }

    [[nodiscard]] int unknowns() const { return n_unknowns_; }

private:
    struct Resistor {
        int a, b;
        double r;
    };
    struct Capacitor {
        int a, b;
        double c;
        double v, i;
    };
    struct Branch {
        int a, b;
        double r, l;
        Sinusoid emf;
        double i, u;
    };
    struct Diode {
        int anode, cathode;
        double g_on, g_off;
    };
    struct Limb {
        Winding primary, secondary;
    };

    using Lu = Eigen::PartialPivLU<Eigen::MatrixXd>;

    [[nodiscard]] double diode_g(int d, std::uint32_t mask) const {
        const auto& dd = diodes_[static_cast<std::size_t>(d)];
        return (mask >> d) & 1u ? dd.g_on : dd.g_off;
    }
    [[nodiscard]] double branch_z(const Branch& b, Integrator m) const {
        return b.r + (m == Integrator::Trapezoidal ? 2.0 : 1.0) * b.l / h_;
    }
    [[nodiscard]] double branch_hist(const Branch& b, Integrator m) const {
        if (m == Integrator::Trapezoidal) return (b.r - 2.0 * b.l / h_) * b.i - b.u;
        return -(b.l / h_) * b.i;
    }
    [[nodiscard]] double cap_g(const Capacitor& c, Integrator m) const {
        return (m == Integrator::Trapezoidal ? 2.0 : 1.0) * c.c / h_;
    }
    [[nodiscard]] double cap_hist(const Capacitor& c, Integrator m) const {
        const double g = cap_g(c, m);
        return m == Integrator::Trapezoidal ? -g * c.v - c.i : -g * c.v;
    }

    static void stamp_g(Eigen::MatrixXd& g, int a, int b, double y) {
        if (a >= 0) g(a, a) += y;
        if (b >= 0) g(b, b) += y;
        if (a >= 0 && b >= 0) {
            g(a, b) -= y;
            g(b, a) -= y;
        }
    }

    const Lu& factor(std::uint32_t mask, Integrator m) {
        const std::uint64_t key = mask | (static_cast<std::uint64_t>(m) << max_diodes);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_unknowns_, n_unknowns_);
        for (const auto& r : resistors_) stamp_g(a, r.a, r.b, 1.0 / r.r);
        for (const auto& c : capacitors_) stamp_g(a, c.a, c.b, cap_g(c, m));
        for (int d = 0; d < static_cast<int>(diodes_.size()); ++d) {
            const auto& dd = diodes_[static_cast<std::size_t>(d)];
            stamp_g(a, dd.anode, dd.cathode, diode_g(d, mask));
        }
        int row = n_nodes_;
        for (const auto& b : branches_) {
            if (b.a >= 0) {
                a(b.a, row) += 1.0;
                a(row, b.a) += 1.0;
            }
            if (b.b >= 0) {
                a(b.b, row) -= 1.0;
                a(row, b.b) -= 1.0;
            }
            a(row, row) = -branch_z(b, m);
            ++row;
        }
        for (const auto& limb : limbs_) {
            const auto& p = limb.primary;
            const auto& s = limb.secondary;
            const double n = s.ratio / p.ratio;
            // Secondary winding current enters at s.plus; the primary carries -n times it.
            if (s.plus >= 0) a(s.plus, row) += 1.0;
            if (s.minus >= 0) a(s.minus, row) -= 1.0;
            if (p.plus >= 0) a(p.plus, row) -= n;
            if (p.minus >= 0) a(p.minus, row) += n;
            // v_s = n v_p
            if (s.plus >= 0) a(row, s.plus) += 1.0;
            if (s.minus >= 0) a(row, s.minus) -= 1.0;
            if (p.plus >= 0) a(row, p.plus) -= n;
            if (p.minus >= 0) a(row, p.minus) += n;
            ++row;
        }
        return cache_.emplace(key, Lu(a)).first->second;
    }

    std::uint32_t solve_states(double t, long n, Integrator m, std::uint32_t mask) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknowns_);
        for (const auto& c : capacitors_) {
            const double j = cap_hist(c, m);
            if (c.a >= 0) rhs[c.a] -= j;
            if (c.b >= 0) rhs[c.b] += j;
        }
        int row = n_nodes_;
        for (const auto& b : branches_) rhs[row++] = -b.emf(t) + branch_hist(b, m);

        for (int iter = 0; iter < max_iterations; ++iter) {
            x_ = factor(mask, m).solve(rhs);
            std::uint32_t next = mask;
            for (int d = 0; d < static_cast<int>(diodes_.size()); ++d) {
                const auto& dd = diodes_[static_cast<std::size_t>(d)];
                const double vd = v(dd.anode) - v(dd.cathode);
                const bool on = (mask >> d) & 1u;
                if (on && vd < 0.0) next &= ~(1u << d);
                if (!on && vd > 0.0) next |= 1u << d;
            }
            if (next == mask) return mask;
            mask = next;
        }
        throw SimulationError("network: diode states did not settle within " + std::to_string(max_iterations) +
                                  " iterations at step " + std::to_string(n),
                              n);
    }

    int n_nodes_ = 0;
    int n_unknowns_ = 0;
    double h_ = 0.0;
    std::vector<Resistor> resistors_;
    std::vector<Capacitor> capacitors_;
    std::vector<Branch> branches_;
    std::vector<Diode> diodes_;
    std::vector<Limb> limbs_;

    Eigen::VectorXd x_;
    std::uint32_t mask_ = 0;
    Integrator method_ = Integrator::BackwardEuler;
    std::unordered_map<std::uint64_t, Lu> cache_;
};

}  // namespace mwtfault
