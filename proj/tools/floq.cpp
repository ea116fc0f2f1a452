// floq — Floquet normal forms and moving frames for periodic linear systems
// and periodic orbits.
//
// Subcommands:
//   analyze      multipliers, Jordan inventory, A-index, existence verdict
//   normal-form  real Floquet normal form report + Q samples CSV
//   orbit-frame  moving-frame report for a periodic orbit of a field
//   verify       run the fixture verification suite
//
// Exit codes: 0 ok, 1 verification failure, 2 input error, 3 numerical
// failure, 4 no convergence. FLOQ_TOL overrides the default integration
// tolerance.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "floq/acceptance.hpp"
#include "floq/errors.hpp"
#include "floq/fields.hpp"
#include "floq/floquet.hpp"
#include "floq/integrate.hpp"
#include "floq/io.hpp"
#include "floq/orbit.hpp"
#include "floq/spectral.hpp"
#include "floq/systems.hpp"
#include "floq/version.hpp"

namespace {

using floq::io::ordered_json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double now_ms(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

double default_tol() {
    if (const char* env = std::getenv("FLOQ_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end == env || !(v >= 1e-14 && v <= 1e-4))
            throw floq::InputError("FLOQ_TOL must be a number in [1e-14, 1e-4]");
        return v;
    }
    return 1e-10;
}

ordered_json multipliers_json(const std::vector<std::complex<double>>& mult) {
    ordered_json arr = ordered_json::array();
    for (const auto& m : mult) {
        ordered_json e;
        e["re"] = m.real();
        e["im"] = m.imag();
        e["modulus"] = std::abs(m);
        arr.push_back(std::move(e));
    }
    return arr;
}

ordered_json inventory_json(const floq::spectral::JordanInventory& inv) {
    ordered_json out;
    out["tol_cluster"] = inv.tol_cluster;
    ordered_json entries = ordered_json::array();
    for (const auto& e : inv.entries) {
        ordered_json j;
        j["eigenvalue_re"] = e.cls.re;
        j["eigenvalue_im"] = e.cls.im;
        j["conjugate_pair"] = e.cls.pair;
        j["size"] = e.size;
        j["count"] = e.count;
        entries.push_back(std::move(j));
    }
    out["entries"] = std::move(entries);
    return out;
}

ordered_json input_json(const floq::io::SystemFile& sf, const std::string& path) {
    ordered_json in;
    in["file"] = path;
    in["fnv1a64"] = sf.digest;
    in["n"] = sf.system.n;
    in["T"] = sf.system.T;
    in["kind"] = sf.kind;
    return in;
}

double semigroup_residual(const floq::ode::MatrixSolution& sol) {
    const MatrixXd M = sol.monodromy();
    double worst = 0.0;
    for (int i = 0; i < 64; ++i) {
        const double t = sol.T * i / 64.0;
        const MatrixXd a = sol.eval(t + sol.T);
        const MatrixXd b = sol.eval(t);
        worst = std::max(worst, (a - b * M).norm() / std::max(1e-12, b.norm()));
    }
    return worst;
}

double liouville_residual(const floq::sys::PeriodicLinearSystem& system,
                          const floq::ode::MatrixSolution& sol) {
    double quad;
    if (const auto* pw = std::get_if<floq::sys::PiecewiseBody>(&system.body)) {
        quad = 0.0;
        for (std::size_t i = 0; i < pw->pieces.size(); ++i)
            quad += pw->pieces[i].trace() * (pw->breakpoints[i + 1] - pw->breakpoints[i]);
    } else {
        quad = floq::ode::integrate_scalar(
            [&system](double s) { return floq::sys::evaluate(system, s).trace(); }, 0.0, system.T);
    }
    return std::abs(std::log(sol.monodromy().determinant()) - quad);
}

int cmd_analyze(const std::string& path, double tol, int probes, bool pretty) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto sf = floq::io::load_system(path);
    const auto period = floq::sys::validate_period(sf.system, probes);
    const auto sol = floq::ode::fundamental_solution(sf.system, tol);
    const MatrixXd M = sol.monodromy();
    const auto inv = floq::spectral::jordan_inventory(M);
    const int a = floq::spectral::a_index(inv);

    Eigen::EigenSolver<MatrixXd> es(M);
    std::vector<std::complex<double>> mult(es.eigenvalues().data(),
                                           es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(mult.begin(), mult.end(), [](auto x, auto y) {
        if (std::abs(x) != std::abs(y)) return std::abs(x) > std::abs(y);
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() > y.imag();
    });

    ordered_json rep;
    rep["schema_version"] = floq::kReportSchemaVersion;
    rep["tool_version"] = floq::kVersion;
    rep["report"] = "analyze";
    rep["input"] = input_json(sf, path);
    {
        ordered_json p;
        p["max_deviation"] = period.max_deviation;
        p["threshold"] = period.threshold;
        p["probes"] = period.probes;
        p["pass"] = period.pass;
        rep["period_validation"] = std::move(p);
    }
    rep["multipliers"] = multipliers_json(mult);
    rep["jordan_inventory"] = inventory_json(inv);
    rep["a_index"] = a;
    rep["a_index_even"] = (a % 2 == 0);
    {
        ordered_json ex;
        ex["exists"] = (a == 0);
        ex["corollary_sufficient"] = floq::floquet::corollary_check(mult);
        rep["real_T_periodic_form"] = std::move(ex);
    }
    {
        ordered_json res;
        res["liouville_logdet_vs_trace"] = liouville_residual(sf.system, sol);
        res["semigroup_64"] = semigroup_residual(sol);
        rep["residuals"] = std::move(res);
    }
    {
        ordered_json stats;
        stats["tol"] = sol.stats.tol;
        stats["steps"] = sol.stats.steps;
        stats["rejected_steps"] = sol.stats.rejected;
        rep["integration"] = std::move(stats);
    }
    rep["timings_ms"] = ordered_json{{"total", now_ms(t0)}};

    std::cout << floq::io::dump_report(rep);
    if (pretty) {
        std::cerr << "n = " << sf.system.n << ", T = " << sf.system.T << ", kind = " << sf.kind << "\n"
                  << "A-index = " << a << ", real T-periodic form "
                  << ((a == 0) ? "exists" : "does not exist") << "\n"
                  << "multipliers:";
        for (const auto& m : mult) std::cerr << "  (" << m.real() << ", " << m.imag() << ")";
        std::cerr << "\n";
    }
    return 0;
}

int cmd_normal_form(const std::string& path, const std::string& out, const std::string& csv,
                    int grid, double tol) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto sf = floq::io::load_system(path);
    const auto form = floq::floquet::real_floquet_form(sf.system, tol);
    const auto anti = floq::floquet::verify_antiperiodicity(form, std::max(2, grid));
    const auto cons = floq::floquet::form_consistency(form);
    const auto& system = sf.system;
    const double residual = floq::floquet::fundamental_residual(
        form, [&system](double t) { return floq::sys::evaluate(system, t); }, 128);

    const auto mult = form.multipliers();
    std::vector<double> moduli, exp_tre;
    for (const auto& m : mult) moduli.push_back(std::abs(m));
    Eigen::EigenSolver<MatrixXd> esr(form.R);
    for (Eigen::Index i = 0; i < esr.eigenvalues().size(); ++i)
        exp_tre.push_back(std::exp(form.T * esr.eigenvalues()(i).real()));
    const double moduli_dev = floq::la::multiset_distance(moduli, exp_tre);

    ordered_json rep;
    rep["schema_version"] = floq::kReportSchemaVersion;
    rep["tool_version"] = floq::kVersion;
    rep["report"] = "normal_form";
    rep["input"] = input_json(sf, path);
    rep["d"] = form.d;
    rep["R"] = floq::io::matrix_json(form.R);
    rep["S"] = floq::io::matrix_json(form.S);
    rep["branch_policy"] =
        "principal branches; paired negative real blocks take +i pi / -i pi in pair order";
    rep["multipliers"] = multipliers_json(mult);
    {
        ordered_json v;
        ordered_json a;
        a["max_deviation"] = anti.max_deviation;
        a["threshold"] = anti.threshold;
        a["grid_points"] = anti.grid_points;
        a["pass"] = anti.pass;
        v["antiperiodicity"] = std::move(a);
        v["fundamental_residual_128"] = residual;
        v["exp_TR_tilde_vs_monodromy"] = cons.periodic_deviation;
        v["exp_2TR_vs_monodromy_squared"] = cons.squared_deviation;
        v["multiplier_moduli_vs_exp_T_Re_eig_R"] = moduli_dev;
        rep["verification"] = std::move(v);
    }
    rep["diagnostics"] = form.diagnostics;
    {
        ordered_json stats;
        stats["tol"] = form.psi->stats.tol;
        stats["steps"] = form.psi->stats.steps;
        stats["rejected_steps"] = form.psi->stats.rejected;
        rep["integration"] = std::move(stats);
    }
    rep["timings_ms"] = ordered_json{{"total", now_ms(t0)}};

    const std::string text = floq::io::dump_report(rep);
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream of(out, std::ios::binary);
        if (!of) throw floq::InputError("cannot write report to '" + out + "'");
        of << text;
    }

    if (!csv.empty()) {
        std::vector<std::string> header{"t"};
        for (int i = 0; i < form.n; ++i)
            for (int j = 0; j < form.n; ++j)
                header.push_back("Q" + std::to_string(i + 1) + std::to_string(j + 1));
        std::vector<std::vector<double>> rows;
        for (int g = 0; g <= grid; ++g) {
            const double t = form.T * g / grid;
            const MatrixXd Q = form.Q(t);
            std::vector<double> row{t};
            for (int i = 0; i < form.n; ++i)
                for (int j = 0; j < form.n; ++j) row.push_back(Q(i, j));
            rows.push_back(std::move(row));
        }
        std::ofstream of(csv, std::ios::binary);
        if (!of) throw floq::InputError("cannot write CSV to '" + csv + "'");
        floq::io::write_csv(of, header, rows);
    }
    return 0;
}

int cmd_orbit_frame(const std::string& path, std::vector<double> z0_flag, double T0_flag,
                    const std::string& out, const std::string& traj_csv, bool with_perturbation,
                    double h0, double tol) {
    const auto t0 = std::chrono::steady_clock::now();
    auto ff = floq::io::load_field(path);
    if (with_perturbation && !ff.has_perturbation)
        throw floq::InputError("--with-perturbation given but the field file has no perturbation");
    if (!with_perturbation) ff.field.perturbation = nullptr;

    auto seed = ff.seed;
    if (!z0_flag.empty()) {
        if (static_cast<int>(z0_flag.size()) != ff.field.n)
            throw floq::InputError("--z0 needs " + std::to_string(ff.field.n) + " components");
        seed.z_guess = Eigen::Map<const VectorXd>(z0_flag.data(), z0_flag.size());
    }
    if (T0_flag > 0.0) seed.T_guess = T0_flag;
    if (seed.z_guess.size() == 0 || !(seed.T_guess > 0.0))
        throw floq::InputError("no initial guess: provide --z0 and --T0 or use a builtin field");

    const auto orb = floq::orbit::refine_orbit(ff.field, seed.z_guess, seed.T_guess);
    const auto frame = floq::orbit::build_frame(ff.field, orb, std::min(tol, 1e-11));
    const auto props = floq::orbit::verify_properties(frame);

    ordered_json rep;
    rep["schema_version"] = floq::kReportSchemaVersion;
    rep["tool_version"] = floq::kVersion;
    rep["report"] = "orbit_frame";
    {
        ordered_json in;
        in["file"] = path;
        in["fnv1a64"] = ff.digest;
        in["field"] = ff.name;
        in["n"] = ff.field.n;
        in["perturbation"] = with_perturbation;
        rep["input"] = std::move(in);
    }
    rep["period"] = orb.T;
    rep["z0"] = floq::io::vector_json(orb.z0);
    rep["closure_residual"] = orb.closure_residual;
    rep["d"] = frame.d;
    rep["q0"] = frame.q0;
    rep["n0"] = frame.n0;
    rep["H1"] = floq::io::matrix_json(frame.H1);
    rep["H2"] = floq::io::matrix_json(frame.H2);
    rep["L"] = floq::io::vector_json(frame.L);
    {
        ordered_json table = ordered_json::array();
        for (const auto& c : props.checks) {
            ordered_json row;
            row["property"] = c.name;
            row["deviation"] = c.deviation;
            row["tolerance"] = c.tolerance;
            row["pass"] = c.pass;
            table.push_back(std::move(row));
        }
        rep["properties"] = std::move(table);
        rep["all_properties_pass"] = props.all_pass;
        ordered_json cest;
        cest["value"] = props.C_estimate;
        cest["note"] = "sampled estimate over a compact grid, not a proven bound";
        rep["C_estimate"] = std::move(cest);
    }
    {
        ordered_json dg;
        dg["first_column_vs_phidot"] = frame.diagnostics.first_column_deviation;
        dg["u_antiperiodicity"] = frame.diagnostics.u_antiperiodicity;
        dg["eta_xi_relations"] = frame.diagnostics.eta_xi_relations;
        dg["identity11_residual"] = frame.diagnostics.identity11_residual;
        dg["eta_periodicity"] = frame.diagnostics.eta_periodicity;
        dg["xi_periodicity"] = frame.diagnostics.xi_periodicity;
        rep["frame_diagnostics"] = std::move(dg);
    }
    rep["timings_ms"] = ordered_json{{"total", now_ms(t0)}};

    const std::string text = floq::io::dump_report(rep);
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream of(out, std::ios::binary);
        if (!of) throw floq::InputError("cannot write report to '" + out + "'");
        of << text;
    }

    if (!traj_csv.empty()) {
        const int nv = frame.n - frame.d - 1;
        const VectorXd v0 = VectorXd::Constant(nv, h0);
        const VectorXd w0 = VectorXd::Constant(frame.d, h0);
        const floq::ode::Rhs rhs = [&frame, nv](double t, const VectorXd& y) -> VectorXd {
            const auto r = floq::orbit::transformed_rhs(frame, t, y(0), y.segment(1, nv),
                                                        y.tail(frame.d));
            VectorXd dy(frame.n);
            dy(0) = r.sdot;
            dy.segment(1, nv) = r.vdot;
            dy.tail(frame.d) = r.wdot;
            return dy;
        };
        VectorXd y0(frame.n);
        y0(0) = 0.0;
        y0.segment(1, nv) = v0;
        y0.tail(frame.d) = w0;
        const auto sol = floq::ode::integrate_ode(rhs, y0, 0.0, orb.T, 1e-10, {}, orb.T);

        std::vector<std::string> header{"t", "s"};
        for (int i = 0; i < nv; ++i) header.push_back("v" + std::to_string(i + 1));
        for (int i = 0; i < frame.d; ++i) header.push_back("w" + std::to_string(i + 1));
        for (int i = 0; i < frame.n; ++i) header.push_back("z" + std::to_string(i + 1));
        std::vector<std::vector<double>> rows;
        for (int g = 0; g <= 256; ++g) {
            const double t = orb.T * g / 256.0;
            const VectorXd y = sol.eval(t);
            VectorXd h(frame.n - 1);
            h << y.segment(1, nv), y.tail(frame.d);
            const VectorXd z = orb.sample(y(0)) + frame.U(y(0)) * h;
            std::vector<double> row{t};
            for (Eigen::Index i = 0; i < y.size(); ++i) row.push_back(y(i));
            for (Eigen::Index i = 0; i < z.size(); ++i) row.push_back(z(i));
            rows.push_back(std::move(row));
        }
        std::ofstream of(traj_csv, std::ios::binary);
        if (!of) throw floq::InputError("cannot write CSV to '" + traj_csv + "'");
        floq::io::write_csv(of, header, rows);
    }
    return props.all_pass ? 0 : 1;
}

int cmd_verify(const std::string& dir, double tol) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto suite = floq::acceptance::run_suite(dir, tol);
    floq::acceptance::print_suite(suite, std::cerr);

    ordered_json rep;
    rep["schema_version"] = floq::kReportSchemaVersion;
    rep["tool_version"] = floq::kVersion;
    rep["report"] = "verify";
    rep["fixtures_dir"] = dir;
    ordered_json arr = ordered_json::array();
    for (const auto& c : suite.criteria) {
        ordered_json e;
        e["id"] = c.id;
        e["name"] = c.name;
        e["pass"] = c.pass;
        e["detail"] = c.detail;
        arr.push_back(std::move(e));
    }
    rep["criteria"] = std::move(arr);
    rep["fixture_failures"] = suite.fixture_failures;
    rep["all_pass"] = suite.all_pass();
    rep["timings_ms"] = ordered_json{{"total", now_ms(t0)}};
    std::cout << floq::io::dump_report(rep);
    return suite.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Floquet normal forms and moving frames for periodic systems"};
    app.require_subcommand(1);

    std::string sys_file, field_file, fixture_dir;
    std::string out, csv, traj_csv;
    double tol_flag = 0.0, T0 = 0.0, h0 = 0.01;
    int probes = 16, grid = 128;
    bool pretty = false, with_perturbation = false;
    std::vector<double> z0;

    auto* analyze = app.add_subcommand("analyze", "multipliers, Jordan inventory, A-index, existence");
    analyze->add_option("system", sys_file, "system description JSON")->required();
    analyze->add_option("--tol", tol_flag, "integration tolerance");
    analyze->add_option("--probes", probes, "periodicity probe count");
    analyze->add_flag("--pretty", pretty, "human-readable table on stderr");

    auto* normal = app.add_subcommand("normal-form", "real Floquet normal form report + Q samples");
    normal->add_option("system", sys_file, "system description JSON")->required();
    normal->add_option("--out", out, "report path (stdout when omitted)");
    normal->add_option("--csv", csv, "Q samples CSV path");
    normal->add_option("--grid", grid, "sample grid over [0, T]");
    normal->add_option("--tol", tol_flag, "integration tolerance");

    auto* frame = app.add_subcommand("orbit-frame", "moving frame around a periodic orbit");
    frame->add_option("field", field_file, "field description JSON")->required();
    frame->add_option("--z0", z0, "initial guess (comma separated)")->delimiter(',');
    frame->add_option("--T0", T0, "period guess");
    frame->add_option("--out", out, "report path (stdout when omitted)");
    frame->add_option("--traj-csv", traj_csv, "transformed-trajectory CSV path");
    frame->add_option("--h0", h0, "initial transversal offset for the trajectory CSV");
    frame->add_flag("--with-perturbation", with_perturbation, "include the file's perturbation g(t,z)");
    frame->add_option("--tol", tol_flag, "integration tolerance");

    auto* verify = app.add_subcommand("verify", "run the fixture verification suite");
    verify->add_option("fixtures", fixture_dir, "fixture directory")->required();
    verify->add_option("--tol", tol_flag, "integration tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        const double tol = (tol_flag > 0.0) ? tol_flag : default_tol();
        if (!(tol >= 1e-14 && tol <= 1e-4))
            throw floq::InputError("tolerance must lie in [1e-14, 1e-4]");
        if (analyze->parsed()) return cmd_analyze(sys_file, tol, probes, pretty);
        if (normal->parsed()) return cmd_normal_form(sys_file, out, csv, grid, tol);
        if (frame->parsed())
            return cmd_orbit_frame(field_file, z0, T0, out, traj_csv, with_perturbation, h0, tol);
        if (verify->parsed()) return cmd_verify(fixture_dir, tol);
    } catch (const floq::NoConvergence& e) {
        std::cerr << "error (no convergence): " << e.what() << "\n";
        return 4;
    } catch (const floq::InputError& e) {
        std::cerr << "error (input): " << e.what() << "\n";
        return 2;
    } catch (const floq::Error& e) {
        std::cerr << "error (numerical): " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
