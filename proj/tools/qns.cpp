// Batch front-end: scenario configs in, CSV/JSON artifacts out.
//
// Subcommands: trace, nmeas, thermometry, reconstruct, oracle, coeffs.
// Exit codes: 0 success, 2 config error, 3 numeric failure,
//             4 estimation-window failure.

#include <qns/asymptotics.hpp>
#include <qns/config.hpp>
#include <qns/dynamics.hpp>
#include <qns/estimation.hpp>
#include <qns/exactbath.hpp>
#include <qns/trace.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

using namespace qns;

namespace {

json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return j;
}

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    int jobs = 1;
    double tol = 0.0;

    DynamicsOptions dyn() const {
        DynamicsOptions o;
        if (tol > 0.0) o.quad.rel_tol = tol;
        return o;
    }
};

void add_common(CLI::App* cmd, CommonArgs& a, bool config_required = true) {
    auto* c = cmd->add_option("--config", a.config_path, "scenario config (JSON)");
    if (config_required) c->required();
    cmd->add_option("--out", a.out_path, "output path (CSV)");
    cmd->add_option("--jobs", a.jobs, "worker threads for grid points")->default_val(1);
    cmd->add_option("--tol", a.tol, "relative quadrature tolerance override");
}

CoherenceTrace compute_trace(const ScenarioConfig& c, const CommonArgs& args) {
    const DynamicsOptions opt = args.dyn();
    const auto times = c.grid.times();
    CoherenceTrace tr;
    tr.records.resize(times.size());

    std::optional<RetardedGreen<SpectralSum>> green;
    if (c.nv_plan && c.has_bath) green.emplace(c.bath, opt.quad);

    parallel_for(times.size(), args.jobs, [&](std::size_t i) {
        const double tf = times[i];
        double zeta = 0.0, phi_q = 0.0, phi_ext = 0.0;
        if (c.nv_plan) {
            const double T = c.nv_plan->T > 0.0 ? c.nv_plan->T : tf / (2.0 * c.nv_plan->M);
            auto plan = build_nv_plan(c.nv_plan->M, T);
            auto seq = plan.as_sequence();
            if (c.noise) zeta = dephasing(seq, *c.noise, opt);
            if (c.has_bath) phi_q = qps_general(plan, plan, *green, c.bath, 0.5, opt);
            if (c.b_ext_dc != 0.0) phi_ext = external_phase_dc(seq, c.b_ext_dc);
        } else {
            auto seq = c.sequence(tf);
            if (c.noise) zeta = dephasing(seq, *c.noise, opt);
            if (c.has_bath) phi_q = qps_static(seq, c.bath, c.quench_beta(), opt);
            if (c.b_ext_dc != 0.0) phi_ext = external_phase_dc(seq, c.b_ext_dc);
        }
        tr.records[i] = CoherenceTrace::make_record(tf, zeta, phi_q, phi_ext);
    });
    return tr;
}

json law_sidecar(const ScenarioConfig& c) {
    json laws;
    laws["qps_law"] = nullptr;
    laws["dephasing_law"] = nullptr;
    if (c.nv_plan) return laws;
    try {
        auto seq = c.sequence(1.0);
        if (c.has_bath && c.bath.parts.size() == 1) {
            const double s = c.bath.parts[0].s;
            if (seq.balanced() && s > -2.0 && s < 2.0) {
                const double C = coeff_phi(s, seq);
                laws["qps_law"] = {{"s", s},
                                   {"C_phi", C},
                                   {"amplitude", C * c.bath.a0() * 2.0 * c.quench_beta()},
                                   {"exponent_of_tf", 1.0 - s}};
            }
        }
        if (c.noise) {
            const double p = c.noise->exponent();
            if (seq.balanced() && p > -3.0 && p < 1.0) {
                const double C = coeff_zeta(p, seq);
                double S0 = 0.0;
                if (c.noise->kind() == NoiseModel::Kind::thermal && c.bath.parts.size() == 1 &&
                    std::abs(c.bath.parts[0].s - 1.0) < 1e-12)
                    S0 = 2.0 * c.bath.a0() * c.noise->kT();
                laws["dephasing_law"] = {{"p", p},
                                         {"C_zeta", C},
                                         {"amplitude", S0 > 0.0 ? C * S0 : 0.0},
                                         {"exponent_of_tf", 1.0 - p}};
            }
        }
    } catch (const std::exception&) {
        // law overlays are best-effort decoration
    }
    return laws;
}

int cmd_trace(const CommonArgs& args) {
    auto c = ScenarioConfig::parse(load_json(args.config_path));
    auto tr = compute_trace(c, args);
    const std::string out = args.out_path.empty() ? "trace.csv" : args.out_path;
    write_trace_csv_file(out, tr);
    std::ofstream sidecar(out + ".laws.json");
    sidecar << law_sidecar(c).dump(2) << '\n';
    std::cout << json{{"records", tr.records.size()}, {"out", out}}.dump() << '\n';
    return 0;
}

int cmd_nmeas(const CommonArgs& args) {
    auto c = ScenarioConfig::parse(load_json(args.config_path));
    auto tr = compute_trace(c, args);
    const std::string out = args.out_path.empty() ? "nmeas.csv" : args.out_path;
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot open " + out);
    f << "t_f,zeta,phi,n_meas\n";
    for (const auto& r : tr.records) {
        f << format_sig12(r.t_f) << ',' << format_sig12(r.zeta) << ','
          << format_sig12(r.phi_q + r.phi_ext) << ',';
        if (std::isfinite(r.n_meas)) f << format_sig12(r.n_meas);
        f << '\n';
    }
    std::cout << json{{"records", tr.records.size()}, {"out", out}}.dump() << '\n';
    return 0;
}

int cmd_thermometry(const CommonArgs& args, const std::string& trace_path) {
    CoherenceTrace tr;
    if (!trace_path.empty()) {
        tr = read_trace_csv_file(trace_path);
    } else if (!args.config_path.empty()) {
        tr = compute_trace(ScenarioConfig::parse(load_json(args.config_path)), args);
    } else {
        throw ConfigError("thermometry: provide --trace or --config");
    }
    auto r = thermometry_from_trace(tr);
    json out = {
        {"kT", r.kT},
        {"T2", r.T2},
        {"phi_inf", r.phi_inf},
        {"diagnostics",
         {{"zeta_window",
           {{"t_lo", tr.records[r.zeta_window.lo].t_f}, {"t_hi", tr.records[r.zeta_window.hi].t_f}}},
          {"phi_window",
           {{"t_lo", tr.records[r.phi_window.lo].t_f}, {"t_hi", tr.records[r.phi_window.hi].t_f}}},
          {"zeta_fit_rms", r.zeta_rms},
          {"phi_fit_rms", r.phi_rms}}},
    };
    const std::string s = out.dump(2);
    if (!args.out_path.empty()) {
        std::ofstream f(args.out_path);
        f << s << '\n';
    }
    std::cout << s << '\n';
    return 0;
}

int cmd_reconstruct(const CommonArgs& args) {
    const json j = load_json(args.config_path);
    require_keys(j, "reconstruct manifest",
                 {"plans", "harmonics", "phases", "model", "support_cap", "lambda"});
    if (!j.contains("plans")) throw ConfigError("reconstruct: missing plans");
    std::vector<int> harmonics{1, 3, 5};
    if (j.contains("harmonics")) harmonics = j["harmonics"].get<std::vector<int>>();

    std::vector<ReconstructionPlan> plans;
    for (const auto& p : j["plans"]) {
        require_keys(p, "plan", {"M", "T"});
        plans.push_back(ReconstructionPlan::make(
            build_nv_plan((int)get_num(p, "plan", "M"), get_num(p, "plan", "T")), harmonics));
    }

    std::optional<SpectralSum> model;
    if (j.contains("model")) model = SpectralSum::from_json(j["model"]);

    std::vector<double> phases;
    if (j.contains("phases")) {
        phases = j["phases"].get<std::vector<double>>();
        if (phases.size() != plans.size())
            throw ConfigError("reconstruct: phases/plans length mismatch");
    } else {
        if (!model) throw ConfigError("reconstruct: need either phases or a model to simulate");
        const DynamicsOptions opt = args.dyn();
        RetardedGreen<SpectralSum> G(*model, opt.quad);
        phases.resize(plans.size());
        parallel_for(plans.size(), args.jobs, [&](std::size_t i) {
            phases[i] = qps_general(plans[i].plan, plans[i].plan, G, *model, 0.5, opt);
        });
    }

    std::vector<std::pair<ReconstructionPlan, double>> meas;
    for (std::size_t i = 0; i < plans.size(); ++i) meas.emplace_back(plans[i], phases[i]);
    ReconstructionOptions opt;
    if (j.contains("support_cap")) opt.support_cap = j["support_cap"].get<double>();
    if (j.contains("lambda")) opt.ridge_lambda = j["lambda"].get<double>();
    auto res = reconstruct_spectral_function(meas, opt);

    const std::string out = args.out_path.empty() ? "reconstruction.csv" : args.out_path;
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot open " + out);
    f << "omega,J_hat,J_true,residual\n";
    for (std::size_t i = 0; i < res.omega.size(); ++i) {
        f << format_sig12(res.omega[i]) << ',' << format_sig12(res.j_hat[i]) << ',';
        if (model) f << format_sig12((*model)(res.omega[i]));
        f << ',';
        if (i < res.residual.size()) f << format_sig12(res.residual[i]);
        f << '\n';
    }
    json status = {{"out", out}, {"rank", res.rank}, {"unknowns", res.omega.size()}};
    if (model) {
        double worst = 0.0;
        for (std::size_t i = 0; i < res.omega.size(); ++i) {
            const double jt = (*model)(res.omega[i]);
            if (jt > 0.0) worst = std::max(worst, std::abs(res.j_hat[i] - jt) / jt);
        }
        status["max_rel_err"] = worst;
    }
    std::cout << status.dump() << '\n';
    return 0;
}

int cmd_oracle(const CommonArgs& args) {
    const json j = load_json(args.config_path);
    require_keys(j, "oracle config",
                 {"bath", "sequence", "grid", "subspace", "beta_V", "b_ext_dc"});
    if (!j.contains("bath")) throw ConfigError("oracle: missing bath");

    FiniteBath bath = [&] {
        const json& b = j["bath"];
        require_keys(b, "oracle bath", {"finite", "squeezed_thermal"});
        if (b.contains("finite")) return FiniteBath::from_json(b["finite"]);
        if (b.contains("squeezed_thermal")) {
            const json& q = b["squeezed_thermal"];
            require_keys(q, "squeezed_thermal", {"Omega", "g", "r", "kT", "n_max"});
            return build_squeezed_thermal(get_num(q, "squeezed_thermal", "Omega"),
                                          get_num(q, "squeezed_thermal", "g"),
                                          get_num(q, "squeezed_thermal", "r"),
                                          get_num(q, "squeezed_thermal", "kT"),
                                          (int)get_num(q, "squeezed_thermal", "n_max"))
                .bath;
        }
        throw ConfigError("oracle: bath needs 'finite' or 'squeezed_thermal'");
    }();

    int up = FiniteBath::up, down = FiniteBath::down;
    if (j.contains("subspace")) {
        const auto v = j["subspace"].get<std::vector<int>>();
        if (v.size() != 2) throw ConfigError("oracle: subspace must be [up, down]");
        up = v[0];
        down = v[1];
    }
    double beta = 0.5;
    if (j.contains("beta_V")) beta = j["beta_V"].get<double>();
    const double b0 = j.contains("b_ext_dc") ? j["b_ext_dc"].get<double>() : 0.0;

    const GridSpec grid = GridSpec::from_json(j.at("grid"));
    const json seq_spec = j.contains("sequence") ? j["sequence"] : json("hahn");
    const auto times = grid.times();

    const MatC xi = bath.level(up) - bath.level(down);
    const MatC& Hi = bath.level(down);

    struct Row {
        double tf, ze, pe, zg, pg;
    };
    std::vector<Row> rows(times.size());
    parallel_for(times.size(), args.jobs, [&](std::size_t i) {
        auto seq = PulseSequence::from_config(seq_spec, times[i]);
        std::vector<SwitchEvent> sw;
        if (up != FiniteBath::up || down != FiniteBath::down) sw.push_back({0.0, up, down});
        auto ex = exact_coherence(bath, seq, sw, b0);
        auto gp = gaussian_discrete_prediction(Hi, bath.rho, xi, beta, seq);
        rows[i] = {times[i], ex.zeta, ex.phi, gp.zeta, gp.phi + b0 * seq.f0()};
    });

    const std::string out = args.out_path.empty() ? "oracle.csv" : args.out_path;
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot open " + out);
    f << "t_f,zeta_exact,phi_exact,zeta_gauss,phi_gauss,d_zeta,d_phi\n";
    double mz = 0.0, mp = 0.0;
    for (const auto& r : rows) {
        f << format_sig12(r.tf) << ',' << format_sig12(r.ze) << ',' << format_sig12(r.pe) << ','
          << format_sig12(r.zg) << ',' << format_sig12(r.pg) << ','
          << format_sig12(r.ze - r.zg) << ',' << format_sig12(r.pe - r.pg) << '\n';
        mz = std::max(mz, std::abs(r.ze - r.zg));
        mp = std::max(mp, std::abs(r.pe - r.pg));
    }
    std::cout << json{{"out", out}, {"max_d_zeta", mz}, {"max_d_phi", mp}}.dump() << '\n';
    return 0;
}

int cmd_coeffs(const CommonArgs& args) {
    const json j = load_json(args.config_path);
    require_keys(j, "coeffs config", {"sequence", "p_grid", "s_grid"});
    auto seq = PulseSequence::from_config(j.contains("sequence") ? j["sequence"] : json("hahn"), 1.0);
    auto grid_of = [&](const char* key, double lo, double hi) {
        std::vector<double> g;
        if (!j.contains(key)) return g;
        if (j[key].is_array()) {
            g = j[key].get<std::vector<double>>();
        } else {
            const json& spec = j[key];
            require_keys(spec, key, {"min", "max", "points"});
            const int n = (int)get_num(spec, key, "points");
            for (int i = 0; i < n; ++i)
                g.push_back(get_num(spec, key, "min") +
                            (get_num(spec, key, "max") - get_num(spec, key, "min")) *
                                (n == 1 ? 0.0 : (double)i / (double)(n - 1)));
        }
        for (double v : g)
            if (!(v > lo && v < hi))
                throw ConfigError(std::string(key) + ": exponent outside validity window");
        return g;
    };
    const auto ps = grid_of("p_grid", -3.0, 1.0);
    const auto ss = grid_of("s_grid", -2.0, 2.0);

    const std::string out = args.out_path.empty() ? "coeffs.csv" : args.out_path;
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot open " + out);
    f << "p,C_zeta,s,C_phi\n";
    for (std::size_t i = 0; i < std::max(ps.size(), ss.size()); ++i) {
        if (i < ps.size()) f << format_sig12(ps[i]) << ',' << format_sig12(coeff_zeta(ps[i], seq));
        else f << ',';
        f << ',';
        if (i < ss.size()) f << format_sig12(ss[i]) << ',' << format_sig12(coeff_phi(ss[i], seq));
        else f << ',';
        f << '\n';
    }
    std::cout << json{{"out", out}}.dump() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quench-enhanced T2 noise spectroscopy toolkit"};
    app.require_subcommand(1);

    CommonArgs a_trace, a_nmeas, a_thermo, a_recon, a_oracle, a_coeffs;
    std::string thermo_trace_path;

    add_common(app.add_subcommand("trace", "coherence trace over a t_f grid"), a_trace);
    add_common(app.add_subcommand("nmeas", "measurement-cost figure of merit"), a_nmeas);
    auto* th = app.add_subcommand("thermometry", "Ohmic bath temperature from a trace");
    add_common(th, a_thermo, false);
    th->add_option("--trace", thermo_trace_path, "trace CSV (dynamics format)");
    add_common(app.add_subcommand("reconstruct", "comb-filter spectral reconstruction"), a_recon);
    add_common(app.add_subcommand("oracle", "exact finite-bath vs Gaussian formulas"), a_oracle);
    add_common(app.add_subcommand("coeffs", "asymptotic coefficient tables"), a_coeffs);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("trace")) return cmd_trace(a_trace);
        if (app.got_subcommand("nmeas")) return cmd_nmeas(a_nmeas);
        if (app.got_subcommand("thermometry")) return cmd_thermometry(a_thermo, thermo_trace_path);
        if (app.got_subcommand("reconstruct")) return cmd_reconstruct(a_recon);
        if (app.got_subcommand("oracle")) return cmd_oracle(a_oracle);
        if (app.got_subcommand("coeffs")) return cmd_coeffs(a_coeffs);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const WindowError& e) {
        std::cerr << "estimation-window failure: " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
