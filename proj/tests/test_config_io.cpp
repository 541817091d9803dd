#include <mwtfault/config_io.hpp>

#include <gtest/gtest.h>

#include <string>

using namespace mwtfault;

namespace {

template <class F>
ConfigError config_error(F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e;
    }
    ADD_FAILURE() << "no ConfigError thrown";
    return ConfigError("", "", "");
}

}  // namespace

TEST(ConfigIo, EmptyObjectIsReferenceSetup) {
    const auto c = parse_configuration("{}");
    const auto ref = reference_setup();
    EXPECT_EQ(c.system.transformer.r_sp, ref.transformer.r_sp);
    EXPECT_EQ(c.system.dc_link.v_c, 1700.0);
    EXPECT_EQ(c.fuse.diameter, 0.136e-3);
    EXPECT_EQ(c.sim.dt, 1e-5);
}

TEST(ConfigIo, SeriesTopologyTakesSeriesDefaults) {
    const auto c = parse_configuration(R"({"topology": "series"})");
    EXPECT_EQ(c.system.topology, Topology::Series);
    EXPECT_EQ(c.system.dc_link.v_c, 3400.0);
}

TEST(ConfigIo, FieldsOverrideDefaults) {
    const auto c = parse_configuration(R"({
        "transformer": {"r_p_delta": 0.1},
        "source": {"frequency_hz": 60, "x_s": 0},
        "dc_link": {"r3": 10, "v_c": 0},
        "fuse": {"length_m": 0.2, "material": {"t_m": 1000}},
        "simulation": {"dt": 5e-6, "angle_resolution": 12, "transformer_model": "shared-primary"}
    })");
    EXPECT_EQ(c.system.transformer.r_p_delta, 0.1);
    EXPECT_EQ(c.system.transformer.x_lp_delta, 0.121);
    EXPECT_NEAR(c.system.source.omega, 2.0 * std::numbers::pi * 60.0, 1e-12);
    EXPECT_EQ(c.system.source.x_s, 0.0);
    EXPECT_EQ(c.system.dc_link.r3, 10.0);
    EXPECT_EQ(c.system.dc_link.r1, 3.0);
    EXPECT_EQ(c.fuse.length, 0.2);
    EXPECT_EQ(c.fuse.material.t_m, 1000.0);
    EXPECT_EQ(c.sim.dt, 5e-6);
    EXPECT_EQ(c.sim.angle_resolution, 12);
    EXPECT_EQ(c.sim.transformer_model, TransformerModel::SharedPrimary);
}

TEST(ConfigIo, RoundTripThroughJson) {
    auto sys = reference_setup(Topology::Series);
    sys.transformer.x_l_sp = 0.5;
    sys.dc_link.c_dc = 47e-6;
    const auto c = parse_configuration(to_json(sys).dump());
    EXPECT_EQ(to_json(c.system), to_json(sys));
}

TEST(ConfigIo, SyntaxErrorReportsLine) {
    const auto e = config_error([] { (void)parse_configuration("{\n  \"topology\": \"parallel\",\n}\n", "cfg.json"); });
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("cfg.json:3:"), std::string::npos);
}

TEST(ConfigIo, UnknownFieldNamesThePath) {
    const auto e = config_error([] { (void)parse_configuration(R"({"dc_link": {"r4": 1}})"); });
    EXPECT_EQ(e.field(), "dc_link.r4");
}

TEST(ConfigIo, TypeErrorsNameTheField) {
    EXPECT_EQ(config_error([] { (void)parse_configuration(R"({"source": {"e_ll": "465"}})"); }).field(), "source.e_ll");
    EXPECT_EQ(config_error([] { (void)parse_configuration(R"({"simulation": {"angle_resolution": 2.5}})"); }).field(),
              "simulation.angle_resolution");
    EXPECT_EQ(config_error([] { (void)parse_configuration(R"({"topology": "delta"})"); }).field(), "topology");
    EXPECT_EQ(config_error([] { (void)parse_configuration("[]"); }).field(), "<root>");
}

TEST(ConfigIo, RangeErrorsNameTheSection) {
    EXPECT_EQ(config_error([] { (void)parse_configuration(R"({"dc_link": {"c_dc": 0}})"); }).field(), "dc_link");
    EXPECT_EQ(config_error([] { (void)parse_configuration(R"({"source": {"omega": 1, "frequency_hz": 50}})"); }).field(),
              "source");
    EXPECT_EQ(config_error([] { (void)parse_configuration(R"({"fuse": {"diameter_m": -1}})"); }).field(),
              "fuse.diameter_m");
}

TEST(ConfigIo, GridParsing) {
    const auto g = parse_grid(R"({"x_r_trx": [5], "r_load": [10, 20], "topology": "series", "dt": 2e-5})");
    EXPECT_EQ(g.x_r_trx, std::vector<double>{5.0});
    EXPECT_EQ(g.r_load.size(), 2u);
    EXPECT_EQ(g.topology, Topology::Series);
    EXPECT_EQ(g.dt, 2e-5);
    EXPECT_EQ(g.t_eval, 0.1);
    EXPECT_THROW((void)parse_grid(R"({"x_r_trx": []})"), ConfigError);
    EXPECT_THROW((void)parse_grid(R"({"r_load": [-1]})"), ConfigError);
    EXPECT_THROW((void)parse_grid(R"({"r_load": [1, "a"]})"), ConfigError);
}

TEST(ConfigIo, MissingFileIsAnError) {
    EXPECT_THROW((void)load_configuration("/nonexistent/config.json"), InvalidParameter);
}

TEST(ConfigIo, SummaryDocuments) {
    const auto m = build_model(reference_setup());
    const auto j = model_summary(m);
    EXPECT_EQ(j.at("i_f_base").get<double>(), m.i_f_base);
    EXPECT_TRUE(j.at("kc_in_domain").get<bool>());
    PolyFit f;
    f.poly = reference_kc;
    f.r2 = 0.5;
    const auto pj = to_json(f);
    EXPECT_EQ(pj.at("coeffs").size(), 5u);
    EXPECT_EQ(pj.at("coeffs")[0].get<double>(), -0.011);
}
