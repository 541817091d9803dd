#pragma once

// JSON documents: system configuration (transformer / source / dc_link /
// topology plus optional fuse and simulation sections), calibration grids,
// and the summaries written by the command-line tool.
//
// Missing fields take the reference-setup values; unknown fields are
// rejected so that a misspelt key cannot silently fall back to a default.

#include <mwtfault/calibration.hpp>
#include <mwtfault/core.hpp>
#include <mwtfault/fault_model.hpp>
#include <mwtfault/fusewire.hpp>
#include <mwtfault/rectifier_sim.hpp>

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mwtfault {

/// Malformed or invalid configuration document.
class ConfigError : public InvalidParameter {
public:
    ConfigError(const std::string& source, std::size_t line, std::size_t column, const std::string& what)
        : InvalidParameter(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          line_(line) {}
    ConfigError(const std::string& source, const std::string& field, const std::string& what)
        : InvalidParameter(source + ": " + field + ": " + what), field_(field) {}

    /// 1-based line of a syntax error, 0 for field errors.
    [[nodiscard]] std::size_t line() const { return line_; }
    [[nodiscard]] const std::string& field() const { return field_; }

private:
    std::size_t line_ = 0;
    std::string field_;
};

/// Wire used by the fuse rows of the validation report.
struct FuseSetup {
    FuseWireMaterial material;
    double length = 0.165;        // m
    double diameter = 0.136e-3;   // m

    [[nodiscard]] FuseWireGeometry geometry() const { return {area_from_diameter(diameter), length}; }
};

struct SimSettings {
    double dt = 1e-5;
    double duration = 0.1;
    int angle_resolution = 24;
    double diode_r_on = 1e-3;
    double diode_r_off = 1e6;
    TransformerModel transformer_model = TransformerModel::IndependentSecondaries;

    [[nodiscard]] SimConfig apply(const SystemConfig& sys) const {
        SimConfig c;
        c.system = sys;
        c.dt = dt;
        c.duration = duration;
        c.angle_resolution = angle_resolution;
        c.diode_r_on = diode_r_on;
        c.diode_r_off = diode_r_off;
        c.transformer_model = transformer_model;
        return c;
    }
};

struct Configuration {
    SystemConfig system = reference_setup(Topology::Parallel);
    FuseSetup fuse;
    SimSettings sim;
};

namespace detail {

using nlohmann::json;

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    json parse(std::string_view text) const {
        try {
            return json::parse(text.begin(), text.end());
        } catch (const json::parse_error& e) {
            std::size_t line = 1;
            std::size_t col = 1;
            const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
            for (std::size_t k = 0; k < end; ++k) {
                if (text[k] == '\n') {
                    ++line;
                    col = 1;
                } else {
                    ++col;
                }
            }
            std::string msg = e.what();
            if (const auto p = msg.find("parse error"); p != std::string::npos) msg = msg.substr(p);
            throw ConfigError(source_, line, col, msg);
        }
    }

    const json& object(const json& j, const std::string& path) const {
        if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
        return j;
    }

    void only_keys(const json& j, const std::string& path, std::initializer_list<std::string_view> keys) const {
        for (const auto& [k, v] : j.items()) {
            bool known = false;
            for (auto key : keys) known = known || key == k;
            if (!known) fail(join(path, k), "unknown field");
        }
    }

    void number(const json& j, const std::string& path, std::string_view key, double& out) const {
        if (!j.contains(key)) return;
        const auto& v = j.at(std::string(key));
        if (!v.is_number()) fail(join(path, key), "expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) fail(join(path, key), "expected a finite number");
    }

    void integer(const json& j, const std::string& path, std::string_view key, int& out) const {
        if (!j.contains(key)) return;
        const auto& v = j.at(std::string(key));
        if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
        out = v.get<int>();
    }

    void numbers(const json& j, const std::string& path, std::string_view key, std::vector<double>& out) const {
        if (!j.contains(key)) return;
        const auto& v = j.at(std::string(key));
        if (!v.is_array() || v.empty()) fail(join(path, key), "expected a non-empty array of numbers");
        out.clear();
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (!v[k].is_number()) fail(join(path, key) + "[" + std::to_string(k) + "]", "expected a number");
            out.push_back(v[k].get<double>());
        }
    }

    std::string text(const json& j, const std::string& path, std::string_view key) const {
        const auto& v = j.at(std::string(key));
        if (!v.is_string()) fail(join(path, key), "expected a string");
        return v.get<std::string>();
    }

    template <class F>
    void guarded(const std::string& field, F&& f) const {
        try {
            f();
        } catch (const ConfigError&) {
            throw;
        } catch (const InvalidParameter& e) {
            fail(field, e.what());
        }
    }

    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        throw ConfigError(source_, field, what);
    }

    static std::string join(const std::string& path, std::string_view key) {
        return path.empty() ? std::string(key) : path + "." + std::string(key);
    }

private:
    std::string source_;
};

inline void read_material(const Reader& r, const json& j, const std::string& path, FuseWireMaterial& m) {
    r.object(j, path);
    r.only_keys(j, path, {"sigma_o", "alpha_o", "rho", "c_p", "t_o", "t_m"});
    r.number(j, path, "sigma_o", m.sigma_o);
    r.number(j, path, "alpha_o", m.alpha_o);
    r.number(j, path, "rho", m.rho);
    r.number(j, path, "c_p", m.c_p);
    r.number(j, path, "t_o", m.t_o);
    r.number(j, path, "t_m", m.t_m);
    r.guarded(path, [&] { m.validate(); });
}

}  // namespace detail

/// Parses a configuration document. `source` names it in diagnostics.
[[nodiscard]] inline Configuration parse_configuration(std::string_view text, const std::string& source = "<config>") {
    using detail::json;
    const detail::Reader r(source);
    const json root = r.parse(text);
    r.object(root, "");
    r.only_keys(root, "", {"topology", "transformer", "source", "dc_link", "fuse", "simulation"});

    Configuration c;
    if (root.contains("topology")) {
        const auto t = r.text(root, "", "topology");
        r.guarded("topology", [&] { c.system.topology = parse_topology(t); });
    }
    c.system = reference_setup(c.system.topology);

    if (root.contains("transformer")) {
        const auto& j = r.object(root["transformer"], "transformer");
        r.only_keys(j, "transformer", {"r_p_delta", "x_lp_delta", "r_sp", "x_l_sp", "v_prim_ll", "v_sec_ll", "rating_va"});
        auto& t = c.system.transformer;
        r.number(j, "transformer", "r_p_delta", t.r_p_delta);
        r.number(j, "transformer", "x_lp_delta", t.x_lp_delta);
        r.number(j, "transformer", "r_sp", t.r_sp);
        r.number(j, "transformer", "x_l_sp", t.x_l_sp);
        r.number(j, "transformer", "v_prim_ll", t.v_prim_ll);
        r.number(j, "transformer", "v_sec_ll", t.v_sec_ll);
        r.number(j, "transformer", "rating_va", t.rating_va);
        r.guarded("transformer", [&] { t.validate(); });
    }
    if (root.contains("source")) {
        const auto& j = r.object(root["source"], "source");
        r.only_keys(j, "source", {"e_ll", "omega", "frequency_hz", "x_s"});
        auto& s = c.system.source;
        r.number(j, "source", "e_ll", s.e_ll);
        if (j.contains("omega") && j.contains("frequency_hz")) r.fail("source", "give either omega or frequency_hz");
        r.number(j, "source", "omega", s.omega);
        if (j.contains("frequency_hz")) {
            double f = 0.0;
            r.number(j, "source", "frequency_hz", f);
            s.omega = 2.0 * std::numbers::pi * f;
        }
        r.number(j, "source", "x_s", s.x_s);
        r.guarded("source", [&] { s.validate(); });
    }
    if (root.contains("dc_link")) {
        const auto& j = r.object(root["dc_link"], "dc_link");
        r.only_keys(j, "dc_link", {"r1", "r2", "r3", "c_dc", "v_c"});
        auto& d = c.system.dc_link;
        r.number(j, "dc_link", "r1", d.r1);
        r.number(j, "dc_link", "r2", d.r2);
        r.number(j, "dc_link", "r3", d.r3);
        r.number(j, "dc_link", "c_dc", d.c_dc);
        r.number(j, "dc_link", "v_c", d.v_c);
        r.guarded("dc_link", [&] { d.validate(); });
    }
    if (root.contains("fuse")) {
        const auto& j = r.object(root["fuse"], "fuse");
        r.only_keys(j, "fuse", {"length_m", "diameter_m", "material"});
        r.number(j, "fuse", "length_m", c.fuse.length);
        r.number(j, "fuse", "diameter_m", c.fuse.diameter);
        if (!(c.fuse.length > 0)) r.fail("fuse.length_m", "must be > 0");
        if (!(c.fuse.diameter > 0)) r.fail("fuse.diameter_m", "must be > 0");
        if (j.contains("material")) detail::read_material(r, j["material"], "fuse.material", c.fuse.material);
    }
    if (root.contains("simulation")) {
        const auto& j = r.object(root["simulation"], "simulation");
        r.only_keys(j, "simulation",
                    {"dt", "duration", "angle_resolution", "diode_r_on", "diode_r_off", "transformer_model"});
        auto& s = c.sim;
        r.number(j, "simulation", "dt", s.dt);
        r.number(j, "simulation", "duration", s.duration);
        r.integer(j, "simulation", "angle_resolution", s.angle_resolution);
        r.number(j, "simulation", "diode_r_on", s.diode_r_on);
        r.number(j, "simulation", "diode_r_off", s.diode_r_off);
        if (j.contains("transformer_model")) {
            const auto m = r.text(j, "simulation", "transformer_model");
            r.guarded("simulation.transformer_model", [&] { s.transformer_model = parse_transformer_model(m); });
        }
    }
    return c;
}

[[nodiscard]] inline SweepGrid parse_grid(std::string_view text, const std::string& source = "<grid>") {
    using detail::json;
    const detail::Reader r(source);
    const json root = r.parse(text);
    r.object(root, "");
    r.only_keys(root, "", {"x_r_trx", "r_load", "t_eval", "t_p", "r_p_eq", "topology", "dt", "angle_resolution",
                           "transformer_model"});
    SweepGrid g;
    r.numbers(root, "", "x_r_trx", g.x_r_trx);
    r.numbers(root, "", "r_load", g.r_load);
    r.number(root, "", "t_eval", g.t_eval);
    r.numbers(root, "", "t_p", g.t_p);
    r.number(root, "", "r_p_eq", g.r_p_eq);
    r.number(root, "", "dt", g.dt);
    r.integer(root, "", "angle_resolution", g.angle_resolution);
    if (root.contains("topology")) {
        const auto t = r.text(root, "", "topology");
        r.guarded("topology", [&] { g.topology = parse_topology(t); });
    }
    if (root.contains("transformer_model")) {
        const auto m = r.text(root, "", "transformer_model");
        r.guarded("transformer_model", [&] { g.transformer_model = parse_transformer_model(m); });
    }
    r.guarded("grid", [&] { g.validate(); });
    return g;
}

[[nodiscard]] inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidParameter("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[nodiscard]] inline Configuration load_configuration(const std::string& path) {
    return parse_configuration(read_text_file(path), path);
}

[[nodiscard]] inline SweepGrid load_grid(const std::string& path) { return parse_grid(read_text_file(path), path); }

// ---------------------------------------------------------------------------
// Output documents

[[nodiscard]] inline nlohmann::json to_json(const SystemConfig& c) {
    const auto& t = c.transformer;
    const auto& s = c.source;
    const auto& d = c.dc_link;
    return {{"topology", std::string(to_string(c.topology))},
            {"transformer",
             {{"r_p_delta", t.r_p_delta},
              {"x_lp_delta", t.x_lp_delta},
              {"r_sp", t.r_sp},
              {"x_l_sp", t.x_l_sp},
              {"v_prim_ll", t.v_prim_ll},
              {"v_sec_ll", t.v_sec_ll},
              {"rating_va", t.rating_va}}},
            {"source", {{"e_ll", s.e_ll}, {"omega", s.omega}, {"x_s", s.x_s}}},
            {"dc_link", {{"r1", d.r1}, {"r2", d.r2}, {"r3", d.r3}, {"c_dc", d.c_dc}, {"v_c", d.v_c}}}};
}

[[nodiscard]] inline nlohmann::json model_summary(const FaultModel& m) {
    return {{"i_f_base", m.i_f_base},         {"delta", m.shape.delta},   {"omega_d", m.shape.omega_d},
            {"k_c", m.k_c},                   {"x_r_system", m.x_r_system}, {"cap_peak", m.cap_peak},
            {"cap_tau", m.cap_tau},           {"kc_in_domain", m.kc_in_domain}};
}

[[nodiscard]] inline nlohmann::json run_report(const SimTrace& tr) {
    const auto p = peak_current(tr);
    return {{"fault_angle", tr.fault_angle_used},
            {"peak_A", p.amps},
            {"ji_at_end", tr.samples.empty() ? 0.0 : tr.samples.back().ji},
            {"energy_residual", tr.energy_balance_residual}};
}

[[nodiscard]] inline nlohmann::json to_json(const PolyFit& f) {
    return {{"coeffs", std::vector<double>(f.poly.coeffs.begin(), f.poly.coeffs.end())}, {"r2", f.r2}};
}

[[nodiscard]] inline nlohmann::json to_json(const FuseDesign& d) {
    return {{"length_m", d.geometry.length},
            {"diameter_m", d.diameter},
            {"area_m2", d.geometry.area},
            {"j_im_A2s", d.j_im},
            {"e_fm_J", d.e_fm},
            {"min_length_ji_m", d.min_length_ji},
            {"min_length_clearance_m", d.min_length_clearance},
            {"nearest_swg", d.swg}};
}

}  // namespace mwtfault
