// mwtfault: dc fault current model, rectifier simulation, correction-factor
// calibration, fuse-wire sizing and bench validation.
//
// Exit status: 0 success, 1 computation failed or validation outside the
// band, 2 usage or configuration error.

#include <mwtfault/mwtfault.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace mwtfault;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failed = 1;
constexpr int exit_usage = 2;

/// Output files are collected in memory and written only once a command
/// has finished, each through a temporary file and a rename.
class Outputs {
public:
    void add(const std::string& name, std::string content) { files_[name] = std::move(content); }

    void commit(const std::optional<std::string>& dir) const {
        if (!dir) return;
        fs::create_directories(*dir);
        for (const auto& [name, content] : files_) {
            const fs::path target = fs::path(*dir) / name;
            const fs::path tmp = fs::path(*dir) / (name + ".tmp");
            {
                std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
                out << content;
                if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
            }
            fs::rename(tmp, target);
        }
    }

private:
    std::map<std::string, std::string> files_;
};

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

template <class T>
std::string csv_of(const T& value) {
    std::ostringstream os;
    write_csv(os, value);
    return os.str();
}

struct Globals {
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::optional<std::string> topology;
};

Configuration load(const Globals& g) {
    Configuration c;
    if (g.config) {
        c = load_configuration(*g.config);
        if (g.topology) c.system.topology = parse_topology(*g.topology);
    } else if (g.topology) {
        c.system = reference_setup(parse_topology(*g.topology));
    }
    return c;
}

// ---------------------------------------------------------------------------

struct ModelArgs {
    double until = 0.1;
    double period = 50e-6;
    std::optional<double> kc;
};

int cmd_model(const Globals& g, const ModelArgs& a) {
    const auto cfg = load(g);
    if (!(a.until >= 0)) throw InvalidParameter("--until must be >= 0");
    ModelOptions opt;
    opt.kc_override = a.kc;
    const auto m = build_model(cfg.system, opt);
    const double ji = a.until > 0 ? joules_integral(m, a.until) : 0.0;

    auto summary = model_summary(m);
    summary["topology"] = std::string(to_string(m.topology));
    summary["until"] = a.until;
    summary["ji_until"] = ji;
    Outputs out;
    out.add("model.csv", [&] {
        std::ostringstream os;
        write_csv(os, m, a.until, a.period);
        return os.str();
    }());
    out.add("model.json", dump(summary));
    out.commit(g.out);

    std::cout << std::setprecision(6) << "topology     " << to_string(m.topology) << "\n"
              << "I_f,base     " << m.i_f_base << " A\n"
              << "delta        " << m.shape.delta << " 1/s\n"
              << "k_c          " << m.k_c << "\n"
              << "X/R_system   " << m.x_r_system << "\n"
              << "J_I(" << a.until << " s) " << ji << " A^2 s\n";
    if (!m.kc_in_domain)
        std::cerr << "warning: X/R_system " << m.x_r_system << " lies outside the fitted range [" << kc_domain_min
                  << ", " << kc_domain_max << "]; the correction factor is extrapolated\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct SimArgs {
    std::optional<double> fault_angle;
    bool worst_case = false;
    bool no_cap = false;
    std::optional<double> duration;
    std::optional<double> dt;
};

int cmd_sim(const Globals& g, const SimArgs& a) {
    const auto cfg = load(g);
    auto sc = cfg.sim.apply(cfg.system);
    if (a.duration) sc.duration = *a.duration;
    if (a.dt) sc.dt = *a.dt;
    sc.include_dc_cap = !a.no_cap;
    sc.fault_angle = a.fault_angle;
    const auto tr = run(sc);

    Outputs out;
    out.add("sim.csv", csv_of(tr));
    out.add("sim.json", dump(run_report(tr)));
    out.commit(g.out);

    const auto p = peak_current(tr);
    std::cout << std::setprecision(6) << "topology         " << to_string(sc.system.topology) << "\n"
              << "fault angle      " << tr.fault_angle_used << " rad\n"
              << "peak             " << p.amps << " A at " << p.time << " s\n"
              << "J_I(" << tr.duration() << " s)    " << tr.samples.back().ji << " A^2 s\n"
              << "energy residual  " << tr.energy_balance_residual << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
    bool self = false;
    bool no_sim = false;
};

int cmd_validate(const Globals& g, const ValidateArgs& a) {
    const auto setup = validation_setup(load(g));
    const auto rep = validate_bench(setup, {.run_simulator = !a.no_sim, .self_reference = a.self});

    Outputs out;
    out.add("validation.csv", csv_of(rep));
    out.add("validation.json", dump(to_json(rep)));
    out.commit(g.out);

    std::cout << std::left << std::setw(20) << "quantity" << std::right << std::setw(12) << "model" << std::setw(12)
              << "reference" << std::setw(10) << "error %" << std::setw(12) << "simulated" << "\n";
    std::cout << std::fixed << std::setprecision(2);
    for (const auto& r : rep.rows) {
        std::cout << std::left << std::setw(20) << r.name << std::right;
        if (r.failure) {
            std::cout << "  failed: " << *r.failure << "\n";
            continue;
        }
        std::cout << std::setw(12) << r.model_value << std::setw(12) << r.reference_value << std::setw(10)
                  << r.error_percent << std::setw(12);
        if (r.simulated_value)
            std::cout << *r.simulated_value;
        else
            std::cout << "-";
        std::cout << (r.pass() ? "" : "  outside band") << "\n";
    }
    std::cout << (rep.pass() ? "PASS" : "FAIL") << "\n";
    return rep.pass() ? exit_ok : exit_failed;
}

// ---------------------------------------------------------------------------

struct FuseDesignArgs {
    double energy = 0.0;
    double ji_max = 40.0;
    double kv = 0.0;
    std::optional<double> length_mm;
};

int cmd_fuse_design(const Globals& g, const FuseDesignArgs& a) {
    const auto cfg = load(g);
    std::optional<double> length;
    if (a.length_mm) length = *a.length_mm * 1e-3;
    const auto d = design_fuse(a.energy, a.ji_max, a.kv, cfg.fuse.material, length);

    Outputs out;
    out.add("fuse_design.json", dump(to_json(d)));
    out.commit(g.out);

    std::cout << std::setprecision(6) << "length       " << d.geometry.length * 1e3 << " mm\n"
              << "diameter     " << d.diameter * 1e3 << " mm (nearest SWG " << d.swg << ")\n"
              << "J_Im         " << d.j_im << " A^2 s\n"
              << "E_fm         " << d.e_fm << " J\n";
    return exit_ok;
}

struct FuseSimArgs {
    std::optional<std::string> current_csv;
    std::optional<double> constant;
    double duration = 0.2;
    std::optional<double> length_mm;
    std::optional<double> diameter_mm;
    double dt = default_fuse_dt;
};

/// Reads a two-column current profile (time s, current A) with a header row.
CurrentProfile read_profile(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    CurrentProfile p;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (n == 1 || line.empty()) continue;
        std::istringstream row(line);
        std::string ts;
        std::string is;
        if (!std::getline(row, ts, ',') || !std::getline(row, is, ','))
            throw InvalidParameter(path + ":" + std::to_string(n) + ": expected 't,i'");
        try {
            const double t = std::stod(ts);
            const double i = std::stod(is);
            p.t.push_back(t);
            p.i.push_back(i);
        } catch (const std::exception&) {
            throw InvalidParameter(path + ":" + std::to_string(n) + ": not a number");
        }
    }
    try {
        p.validate();
    } catch (const InvalidParameter& e) {
        throw InvalidParameter(path + ": " + e.what());
    }
    return p;
}

int cmd_fuse_simulate(const Globals& g, const FuseSimArgs& a) {
    const auto cfg = load(g);
    FuseSetup fuse = cfg.fuse;
    if (a.length_mm) fuse.length = *a.length_mm * 1e-3;
    if (a.diameter_mm) fuse.diameter = *a.diameter_mm * 1e-3;
    if (a.current_csv.has_value() == a.constant.has_value())
        throw InvalidParameter("give exactly one of --current or --constant");
    const auto profile = a.current_csv ? read_profile(*a.current_csv) : CurrentProfile::constant(*a.constant, a.duration);
    const auto tr = simulate_fuse(profile, fuse.geometry(), fuse.material, a.dt);

    nlohmann::json report = {{"j_im_A2s", melting_joules_integral(fuse.geometry().area, fuse.material)},
                             {"ji_end_A2s", tr.last().joules_integral},
                             {"energy_end_J", tr.last().energy},
                             {"melted", tr.melted_at.has_value()}};
    if (tr.melted_at) report["melted_at_s"] = *tr.melted_at;
    Outputs out;
    out.add("fuse.csv", csv_of(tr));
    out.add("fuse.json", dump(report));
    out.commit(g.out);

    std::cout << std::setprecision(6) << "J_Im (closed form)  " << report["j_im_A2s"].get<double>() << " A^2 s\n";
    if (tr.melted_at)
        std::cout << "melted at           " << *tr.melted_at << " s\n";
    else
        std::cout << "not melted within   " << tr.last().t << " s\n";
    std::cout << "J_I                 " << tr.last().joules_integral << " A^2 s\n"
              << "energy              " << tr.last().energy << " J\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
    std::optional<std::string> grid;
    double tol = default_kc_tolerance;
    bool check_paper_poly = false;
};

int cmd_calibrate(const Globals& g, const CalibrateArgs& a) {
    const SweepGrid grid = a.grid ? load_grid(*a.grid) : SweepGrid{};
    Outputs out;
    bool failures = false;

    const auto samples = sweep_kc(grid, a.tol);
    out.add("kc_table.csv", csv_of(samples));
    std::size_t ok = 0;
    for (const auto& s : samples) {
        if (s.ok()) {
            ++ok;
        } else {
            failures = true;
            std::cerr << "point x_r_trx=" << s.x_r_trx << " r_load=" << s.r_load << ": " << *s.failure << "\n";
        }
    }
    std::cout << "solved " << ok << " of " << samples.size() << " points\n";

    if (!grid.t_p.empty()) {
        try {
            out.add("tp_sweep.csv", csv_of(sweep_tp(grid)));
        } catch (const std::exception& e) {
            failures = true;
            std::cerr << "t_p sweep: " << e.what() << "\n";
        }
    }

    if (ok >= static_cast<std::size_t>(kc_degree + 2)) {
        const auto fit = fit_polynomial(samples);
        out.add("kc_poly.json", dump(to_json(fit)));
        std::cout << std::setprecision(6) << "fit R^2 " << fit.r2 << "\ncoeffs (x^4 .. x^0)";
        for (double c : fit.poly.coeffs) std::cout << ' ' << c;
        std::cout << "\n";
        if (a.check_paper_poly) {
            std::cout << "published           ";
            for (double c : reference_kc.coeffs) std::cout << ' ' << c;
            std::cout << "\n";
        }

        auto pts = grid_points(grid, Topology::Parallel);
        const auto series = grid_points(grid, Topology::Series);
        pts.insert(pts.end(), series.begin(), series.end());
        const auto sims = simulate_grid(grid, pts);
        const auto fitted = validate_points(grid, sims, [&](double x) { return fit.poly(x); });
        const auto uncorrected = validate_points(grid, sims, [](double) { return 1.0; });
        out.add("validate_sweep.csv", csv_of(fitted));
        out.add("uncorrected_sweep.csv", csv_of(uncorrected));
        auto report = [&](const std::vector<ValidationPoint>& pts, const char* label) {
            for (auto topo : {Topology::Parallel, Topology::Series}) {
                double worst = 0.0;
                std::size_t failed = 0;
                for (const auto& p : pts) {
                    if (p.topology != topo) continue;
                    if (p.failure)
                        ++failed;
                    else
                        worst = std::max(worst, std::abs(p.delta_ji_percent));
                }
                std::cout << to_string(topo) << ": max |dJ| with " << label << " k_c " << worst << " %";
                if (failed) std::cout << ", " << failed << " points without a usable k_c";
                std::cout << "\n";
            }
        };
        report(fitted, "fitted");
        for (const auto& p : fitted) {
            if (!p.failure) continue;
            failures = true;
            std::cerr << to_string(p.topology) << " point x_r_trx=" << p.x_r_trx << " r_load=" << p.r_load << ": "
                      << *p.failure << "\n";
        }
        if (a.check_paper_poly)
            report(validate_points(grid, sims, [](double x) { return kc_polynomial(x); }), "published");
    } else {
        std::cout << "fewer than " << kc_degree + 2 << " solved points, no fit\n";
    }

    out.commit(g.out);
    return failures ? exit_failed : exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dc fault current model, rectifier simulation and fuse-wire sizing for 12-pulse HV supplies"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--config", g.config, "System configuration JSON")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "Directory for output files");
    app.add_option("--topology", g.topology, "parallel|series (overrides the configuration)")
        ->check(CLI::IsMember({"parallel", "series"}));

    ModelArgs model_args;
    auto* model = app.add_subcommand("model", "Evaluate the analytic fault-current model");
    model->add_option("--until", model_args.until, "End time of the trace and joules integral, s");
    model->add_option("--period", model_args.period, "CSV sample period, s");
    model->add_option("--kc", model_args.kc, "Use this correction factor instead of the polynomial");

    SimArgs sim_args;
    auto* sim = app.add_subcommand("sim", "Run the switched-circuit simulation");
    auto* angle = sim->add_option("--fault-angle", sim_args.fault_angle, "Fault angle, rad");
    sim->add_flag("--worst-case", sim_args.worst_case, "Search the worst-case fault angle (default)")->excludes(angle);
    sim->add_flag("--no-cap", sim_args.no_cap, "Omit the dc capacitor; the dc path is r1 + r2 + r3");
    sim->add_option("--duration", sim_args.duration, "Simulated time, s");
    sim->add_option("--dt", sim_args.dt, "Time step, s");

    ValidateArgs val_args;
    auto* val = app.add_subcommand("validate", "Compare model values with the bench measurements");
    val->add_flag("--self", val_args.self, "Use the model values as references (all errors zero)");
    val->add_flag("--no-sim", val_args.no_sim, "Skip the informational simulator column");

    auto* fuse = app.add_subcommand("fuse", "Fuse-wire sizing and heating");
    fuse->require_subcommand(1);
    FuseDesignArgs fd;
    auto* design = fuse->add_subcommand("design", "Size a wire for a melting energy");
    design->add_option("--energy", fd.energy, "Melting energy, J")->required();
    design->add_option("--ji-max", fd.ji_max, "Upper limit of the melting joules integral, A^2 s");
    design->add_option("--kv", fd.kv, "Operating voltage for the clearance rule, kV");
    design->add_option("--length-mm", fd.length_mm, "Force the wire length, mm");
    FuseSimArgs fs_args;
    auto* fsim = fuse->add_subcommand("simulate", "Heat a wire with a current profile");
    fsim->add_option("--current", fs_args.current_csv, "CSV with header and columns t_s,i_A")->check(CLI::ExistingFile);
    fsim->add_option("--constant", fs_args.constant, "Constant current, A");
    fsim->add_option("--duration", fs_args.duration, "Duration of the constant current, s");
    fsim->add_option("--length-mm", fs_args.length_mm, "Wire length, mm");
    fsim->add_option("--diameter-mm", fs_args.diameter_mm, "Wire diameter, mm");
    fsim->add_option("--dt", fs_args.dt, "Time step, s");

    CalibrateArgs cal_args;
    auto* cal = app.add_subcommand("calibrate", "Solve and fit the correction factor against the simulator");
    cal->add_option("--grid", cal_args.grid, "Sweep grid JSON")->check(CLI::ExistingFile);
    cal->add_option("--tol", cal_args.tol, "Bisection tolerance on the joules-integral error, %");
    cal->add_flag("--check-paper-poly", cal_args.check_paper_poly, "Print the published coefficients beside the fit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*model) return cmd_model(g, model_args);
        if (*sim) return cmd_sim(g, sim_args);
        if (*val) return cmd_validate(g, val_args);
        if (*design) return cmd_fuse_design(g, fd);
        if (*fsim) return cmd_fuse_simulate(g, fs_args);
        if (*cal) return cmd_calibrate(g, cal_args);
    } catch (const InvalidParameter& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_failed;
    }
    return exit_usage;
}
