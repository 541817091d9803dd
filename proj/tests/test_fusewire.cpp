#include <mwtfault/fusewire.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace mwtfault;

namespace {

const FuseWireMaterial cu{};
const double a136 = std::numbers::pi / 4.0 * 0.136e-3 * 0.136e-3;

// Forward Euler on dT/dJ = (1 + alpha (T - t_o)) / (sigma_o A^2 rho c_p),
// the heat balance per unit joules integral. Independent of the closed form.
double euler_temperature(double j_target, double area, const FuseWireMaterial& m) {
    const int n = 200000;
    const double dj = j_target / n;
    double t = m.t_o;
    for (int k = 0; k < n; ++k) t += dj * (1.0 + m.alpha_o * (t - m.t_o)) / (m.sigma_o * area * area * m.rho * m.c_p);
    return t;
}

}  // namespace

TEST(Fusewire, MeltingJoulesIntegralOfReferenceWire) {
    EXPECT_NEAR(melting_joules_integral(a136, cu), 16.19, 0.02 * 16.19);
}

TEST(Fusewire, KjiClosedForm) {
    const double want = cu.alpha_o / (cu.rho * cu.c_p * cu.sigma_o * std::log1p(cu.alpha_o * (cu.t_m - cu.t_o)));
    EXPECT_NEAR(k_ji(cu), want, 1e-12 * want);
}

TEST(Fusewire, JoulesIntegralScalesWithAreaSquared) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1e-9, 1e-6);
    for (int k = 0; k < 1000; ++k) {
        const double a = u(rng);
        EXPECT_NEAR(melting_joules_integral(2.0 * a, cu) / melting_joules_integral(a, cu), 4.0, 1e-12);
    }
}

TEST(Fusewire, AreaRoundTrip) {
    EXPECT_NEAR(area_for_joules_integral(melting_joules_integral(a136, cu), cu), a136, 1e-12 * a136);
    EXPECT_NEAR(diameter_from_area(area_from_diameter(0.2e-3)), 0.2e-3, 1e-18);
    EXPECT_NEAR(area_for_joules_integral(1.0 / k_ji(cu), cu), 1.0, 1e-12);
}

TEST(Fusewire, TemperatureMatchesEulerOracle) {
    for (double frac : {0.1, 0.5, 0.9}) {
        const double j = frac * melting_joules_integral(a136, cu);
        const double want = euler_temperature(j, a136, cu);
        EXPECT_NEAR(temperature_at(j, a136, cu), want, 1e-3 * (want - cu.t_o));
    }
}

TEST(Fusewire, TemperatureAtMeltingIntegralIsMeltingPoint) {
    EXPECT_NEAR(temperature_at(melting_joules_integral(a136, cu), a136, cu), cu.t_m, 1e-9 * cu.t_m);
    EXPECT_EQ(temperature_at(0.0, a136, cu), cu.t_o);
}

TEST(Fusewire, TemperatureGuardRejectsRunaway) {
    EXPECT_THROW((void)temperature_at(1000.0 * melting_joules_integral(a136, cu), a136, cu), InvalidParameter);
    EXPECT_THROW((void)temperature_at(-1.0, a136, cu), InvalidParameter);
}

TEST(Fusewire, ResistanceIsLinearInTemperature) {
    const FuseWireGeometry g{a136, 0.165};
    const double r0 = cold_resistance(g, cu);
    EXPECT_NEAR(r0, 0.165 / (cu.sigma_o * a136), 1e-12);
    EXPECT_NEAR(resistance_at_temperature(cu.t_m, g, cu), r0 * (1.0 + cu.alpha_o * (cu.t_m - cu.t_o)), 1e-12);
}

TEST(Fusewire, MeltingEnergyRoutesAgree) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 10000; ++k) {
        FuseWireMaterial m;
        m.sigma_o = 1e6 + 1e8 * u(rng);
        m.alpha_o = 1e-3 + 5e-3 * u(rng);
        m.t_m = m.t_o + 100.0 + 2000.0 * u(rng);
        const FuseWireGeometry g{1e-9 + 1e-7 * u(rng), 0.01 + u(rng)};
        const double a = melting_energy(g, m);
        EXPECT_NEAR(melting_energy_via_kji(g, m), a, 1e-9 * a);
    }
}

TEST(Fusewire, MeltingEnergyOfReferenceWire) {
    // Direct arithmetic; the published 9.51 J is not reproduced by these constants.
    const double want = a136 * 0.165 * 8950.0 * 395.0 * (1083.0 - 30.0);
    EXPECT_NEAR(melting_energy({a136, 0.165}, cu), want, 1e-12);
    EXPECT_NEAR(want, 8.92, 0.01);
}

TEST(Fusewire, SimulationMeltsNearClosedForm) {
    const FuseWireGeometry g{a136, 0.165};
    const auto tr = simulate_fuse(CurrentProfile::constant(40.0, 0.05), g, cu, 1e-6);
    ASSERT_TRUE(tr.melted_at.has_value());
    const double j_im = melting_joules_integral(a136, cu);
    EXPECT_NEAR(tr.last().joules_integral, j_im, 0.005 * j_im);
    EXPECT_NEAR(tr.last().energy, melting_energy(g, cu), 0.005 * melting_energy(g, cu));
}

TEST(Fusewire, SimulationWithoutMeltingStopsAtProfileEnd) {
    const auto tr = simulate_fuse(CurrentProfile::constant(5.0, 0.01), {a136, 0.165}, cu);
    EXPECT_FALSE(tr.melted_at.has_value());
    EXPECT_NEAR(tr.last().t, 0.01, 1e-12);
    EXPECT_NEAR(tr.last().joules_integral, 25.0 * 0.01, 1e-9);
    EXPECT_LT(tr.last().temperature, cu.t_m);
}

TEST(Fusewire, ProfileInterpolation) {
    CurrentProfile p{{0.0, 1.0, 2.0}, {0.0, 10.0, 0.0}};
    EXPECT_EQ(p.at(0.5), 5.0);
    EXPECT_EQ(p.at(1.5), 5.0);
    EXPECT_EQ(p.at(-1.0), 0.0);
    EXPECT_EQ(p.at(3.0), 0.0);
    CurrentProfile bad{{0.0, 0.0}, {1.0, 1.0}};
    EXPECT_THROW(bad.validate(), InvalidParameter);
}

TEST(Fusewire, FuseCsvHeader) {
    std::ostringstream os;
    write_csv(os, simulate_fuse(CurrentProfile::constant(5.0, 0.001), {a136, 0.165}, cu));
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t_s,temp_C,res_ohm,ji_A2s,energy_J");
}

TEST(Fusewire, DesignForTenJoules) {
    const auto d = design_fuse(10.0, 40.0, 11.0, cu);
    EXPECT_NEAR(d.j_im, 40.0, 1e-9);
    EXPECT_NEAR(d.e_fm, 10.0, 1e-9);
    EXPECT_NEAR(d.diameter, 0.1705e-3, 0.001e-3);
    EXPECT_NEAR(d.geometry.length, 0.118, 0.001);
    EXPECT_NEAR(d.geometry.area * d.geometry.length, 2.686e-9, 0.005e-9);
}

TEST(Fusewire, DesignWithForcedLength) {
    const auto d = design_fuse(10.0, 40.0, 12.0, cu, 0.165);
    EXPECT_EQ(d.geometry.length, 0.165);
    EXPECT_NEAR(d.diameter, 0.144e-3, 0.001e-3);
    EXPECT_LE(d.j_im, 40.0);
}

TEST(Fusewire, ClearanceSetsLengthAtHighVoltage) {
    const auto d = design_fuse(10.0, 40.0, 50.0, cu);
    EXPECT_NEAR(d.geometry.length, 0.5, 1e-12);
}

TEST(Fusewire, InfeasibleDesigns) {
    EXPECT_THROW((void)design_fuse(0.0, 40.0, 12.0, cu), InfeasibleDesign);
    // Shorter than the voltage clearance.
    EXPECT_THROW((void)design_fuse(10.0, 40.0, 12.0, cu, 0.05), InfeasibleDesign);
    // Too short for the limit: the wire would be thicker than J_Im allows.
    EXPECT_THROW((void)design_fuse(10.0, 40.0, 0.0, cu, 0.05), InfeasibleDesign);
}

TEST(Fusewire, NearestGauge) {
    EXPECT_EQ(nearest_swg(0.1524e-3), 38);
    EXPECT_EQ(nearest_swg(0.136e-3), 39);
}
