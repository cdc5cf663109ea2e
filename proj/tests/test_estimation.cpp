#include <qns/estimation.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

using namespace qns;

namespace {

CoherenceTrace trace_from(const PulseSequence& protoseq, const NoiseModel& noise,
                          const SpectralSum& model, double beta_V, double t_lo, double t_hi,
                          int n) {
    CoherenceTrace tr;
    for (int i = 0; i < n; ++i) {
        const double tf = t_lo * std::pow(t_hi / t_lo, (double)i / (double)(n - 1));
        PulseSequence seq(protoseq.fractions, tf);
        const double z = dephasing(seq, noise);
        const double p = qps_static(seq, model, beta_V);
        tr.records.push_back(CoherenceTrace::make_record(tf, z, p, 0.0));
    }
    return tr;
}

} // namespace

TEST_CASE("extract t2 from a flat-spectrum trace") {
    const double S0 = 0.01;
    auto flat = NoiseModel::freeform(0.0, S0, 1.0, Cutoff::gaussian);
    CoherenceTrace tr;
    for (int i = 0; i < 16; ++i) {
        const double tf = 50.0 * std::pow(20.0, i / 15.0);
        tr.records.push_back(
            CoherenceTrace::make_record(tf, dephasing(PulseSequence::hahn(tf), flat), 0.1, 0.0));
    }
    CHECK(extract_t2(tr) == Catch::Approx(2.0 / S0).epsilon(5e-3));
}

TEST_CASE("quasistatic spike does not bias the hahn T2") {
    const double S0 = 0.01;
    auto flat = NoiseModel::freeform(0.0, S0, 1.0, Cutoff::gaussian);
    // quasistatic noise: a huge narrow spectral spike at w ~ 1e-5 w_c,
    // suppressed by the balanced filter in the fit window
    auto spike = NoiseModel::freeform(0.0, 2e4 * S0, 1e-5, Cutoff::gaussian);
    CoherenceTrace tr;
    for (int i = 0; i < 16; ++i) {
        const double tf = 50.0 * std::pow(20.0, i / 15.0);
        auto seq = PulseSequence::hahn(tf);
        const double z = dephasing(seq, flat) + dephasing(seq, spike);
        tr.records.push_back(CoherenceTrace::make_record(tf, z, 0.1, 0.0));
    }
    CHECK(extract_t2(tr) == Catch::Approx(2.0 / S0).epsilon(5e-3));
    // the same spike swamps an unbalanced (Ramsey) run at the window start:
    // the Hahn filter is what keeps the estimate clean
    const double z_ramsey_spike = dephasing(PulseSequence::ramsey(50.0), spike);
    const double z_ramsey_flat = dephasing(PulseSequence::ramsey(50.0), flat);
    CHECK(z_ramsey_spike > 2.0 * z_ramsey_flat);
}

TEST_CASE("plateau extraction") {
    CoherenceTrace tr;
    for (int i = 0; i < 12; ++i) {
        const double tf = 10.0 * std::pow(40.0, i / 11.0);
        tr.records.push_back(CoherenceTrace::make_record(tf, 0.01 * tf, 0.321, 0.0));
    }
    CHECK(extract_plateau(tr) == Catch::Approx(0.321).epsilon(1e-12));

    // growing phase: no flat window anywhere
    CoherenceTrace bad;
    for (int i = 0; i < 12; ++i) {
        const double tf = 10.0 * std::pow(40.0, i / 11.0);
        bad.records.push_back(CoherenceTrace::make_record(tf, 0.01 * tf, 0.05 * std::sqrt(tf), 0.0));
    }
    CHECK_THROWS_WITH(extract_plateau(bad), Catch::Matchers::ContainsSubstring("asymptotic regime"));
}

TEST_CASE("ohmic thermometry algebra") {
    CHECK(ohmic_thermometry(1000.0, 0.05) == Catch::Approx(0.01).epsilon(1e-14));
    CHECK_THROWS_AS(ohmic_thermometry(-1.0, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(ohmic_thermometry(10.0, 0.0), std::invalid_argument);
    // invariant: kT * (2 T2 phi_inf) = 1 by construction
    const double kT = ohmic_thermometry(123.4, 0.077);
    CHECK(kT * 2.0 * 123.4 * 0.077 == Catch::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("thermometry end-to-end at kT = 0.1 w_c") {
    const double alpha = 0.1, kT = 0.1;
    SpectralSum J(SpectralModel(1.0, alpha, 1.0, Cutoff::gaussian));
    auto noise = NoiseModel::thermal(J, kT);
    auto tr = trace_from(PulseSequence::hahn(1.0), noise, J, 0.5, 40.0, 4000.0, 16);
    auto res = thermometry_from_trace(tr);
    CHECK(res.kT == Catch::Approx(kT).epsilon(0.02));
    CHECK(res.T2 == Catch::Approx(1.0 / (alpha * kT)).epsilon(0.02));
    // doubling alpha must leave the recovered temperature unchanged
    SpectralSum J2(SpectralModel(1.0, 2.0 * alpha, 1.0, Cutoff::gaussian));
    auto tr2 = trace_from(PulseSequence::hahn(1.0), NoiseModel::thermal(J2, kT), J2, 0.5, 40.0,
                          4000.0, 16);
    CHECK(thermometry_from_trace(tr2).kT == Catch::Approx(res.kT).epsilon(5e-3));
}

TEST_CASE("t1 relaxometry") {
    SpectralModel m(1.0, 0.1, 1.0, Cutoff::gaussian);
    auto cold = t1_relaxometry(m, 1e-4, 1.0);
    CHECK(cold.sigma_z_ss == Catch::Approx(-1.0).epsilon(1e-10));
    auto hot = t1_relaxometry(m, 1e4, 1.0);
    CHECK(std::abs(hot.sigma_z_ss) < 1e-3);
    const double kT = 0.5, Omega = 1.0;  // Omega = 2 kT
    auto mid = t1_relaxometry(m, kT, Omega);
    CHECK(mid.sigma_z_ss == Catch::Approx(-std::tanh(1.0)).epsilon(1e-12));
    CHECK(mid.gamma_tot ==
          Catch::Approx(2.0 * M_PI * m(Omega) / std::tanh(1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(t1_relaxometry(m, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("comb weights reproduce the closed form") {
    auto plan = build_nv_plan(4, 1.3);
    auto A = comb_weights(plan, {1, 2, 3, 5, 7});
    CHECK(A[0] == Catch::Approx(4.0).epsilon(1e-12));
    CHECK(std::abs(A[1]) < 1e-12);
    CHECK(A[2] == Catch::Approx(-4.0 / 9.0).epsilon(1e-12));
    CHECK(A[3] == Catch::Approx(4.0 / 25.0).epsilon(1e-12));
    CHECK(A[4] == Catch::Approx(-4.0 / 49.0).epsilon(1e-12));

    PeriodicNvPlan bad = plan;
    bad.base_quench = {{0.0, 0.5 * plan.T, -1.0}, {0.5 * plan.T, 2.0 * plan.T, +1.0}};
    CHECK_THROWS(comb_weights(bad, {1}));
}

TEST_CASE("comb weights match finite-M tooth integrals for a generic template") {
    // mirror-even filter, mirror-odd quench, neither of the standard form
    PeriodicNvPlan p;
    p.T = 1.0;
    p.M = 256;
    p.base_filter = {{0.0, 0.3, +1.0}, {0.3, 1.7, -1.0}, {1.7, 2.0, +1.0}};
    p.base_quench = {{0.0, 0.4, -1.0}, {0.4, 1.0, +1.0}, {1.0, 1.6, -1.0}, {1.6, 2.0, +1.0}};
    auto sym = validate_symmetry(p);
    CHECK(sym.s_filter * sym.s_quench == -1);

    const double w0 = p.omega0();
    auto A = comb_weights(p, {1, 3});
    for (int i = 0; i < 2; ++i) {
        const int l = (i == 0) ? 1 : 3;
        // integral of F_J over one tooth equals -(M/w0) A_l
        auto fj = [&](double w) {
            const double r = detail::dirichlet_ratio(w * p.T, p.M);
            return r * r *
                   (std::conj(p.base_filter_freq(w)) * p.base_quench_freq(w)).imag() / 4.0;
        };
        QuadOptions q;
        q.abs_tol = 1e-9;
        q.panel_cap = M_PI / (8.0 * p.tf());
        auto tooth = integrate(fj, (l - 0.5) * w0, (l + 0.5) * w0, q);
        CHECK(tooth.value == Catch::Approx(-(p.M / w0) * A[i]).epsilon(0.02));
    }
}

TEST_CASE("reconstruction trivial systems") {
    auto rp = ReconstructionPlan::make(build_nv_plan(16, M_PI), {1});
    // single plan, single harmonic: one-point estimate phi/weight
    const double phi = -0.02;
    auto res = reconstruct_spectral_function({{rp, phi}});
    REQUIRE(res.omega.size() == 1);
    const double w0 = rp.plan.omega0();
    CHECK(res.j_hat[0] == Catch::Approx(phi / (-(2.0 * rp.plan.M / w0) * 4.0)).epsilon(1e-12));

    // all-zero phases -> all-zero estimates
    auto rz = reconstruct_spectral_function({{rp, 0.0}});
    CHECK(std::abs(rz.j_hat[0]) < 1e-15);

    // two unknowns from one measurement: rank-deficient
    auto rp2 = ReconstructionPlan::make(build_nv_plan(16, M_PI), {1, 3});
    CHECK_THROWS_WITH(reconstruct_spectral_function({{rp2, 0.01}}),
                      Catch::Matchers::ContainsSubstring("insufficient comb coverage"));
}

TEST_CASE("reconstruction recovers a smooth spectral function") {
    SpectralModel m(1.0, 0.1, 1.0, Cutoff::gaussian);
    RetardedGreen<SpectralModel> G(m);
    DynamicsOptions fwd;
    fwd.quad.abs_tol = 1e-9;

    // pin the forward model against an independent dense-grid evaluation
    {
        auto rp = ReconstructionPlan::make(build_nv_plan(16, M_PI / 0.4), {1, 3, 5});
        const double phi = qps_general(rp.plan, rp.plan, G, m, 0.5, fwd);
        CHECK(phi == Catch::Approx(-3.11541512).epsilon(1e-5));
    }

    auto simulate = [&](int M) {
        std::vector<std::pair<ReconstructionPlan, double>> meas;
        for (double w0 : {0.4, 1.2, 2.0}) {
            auto rp = ReconstructionPlan::make(build_nv_plan(M, M_PI / w0), {1, 3, 5});
            const double phi = qps_general(rp.plan, rp.plan, G, m, 0.5, fwd);
            meas.emplace_back(std::move(rp), phi);
        }
        return meas;
    };
    ReconstructionOptions opt;
    opt.support_cap = 2.0 * (1.0 + 1e-9);

    auto m16 = simulate(16);
    auto r16 = reconstruct_spectral_function(m16, opt);
    REQUIRE(r16.omega.size() == 3);
    double e16 = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        e16 = std::max(e16, std::abs(r16.j_hat[i] - m(r16.omega[i])) / m(r16.omega[i]));
    CHECK(e16 < 0.12);

    auto m64 = simulate(64);
    auto r64 = reconstruct_spectral_function(m64, opt);
    double e64 = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
        e64 = std::max(e64, std::abs(r64.j_hat[i] - m(r64.omega[i])) / m(r64.omega[i]));
    CHECK(e64 < 0.03);
    CHECK(e64 < e16);

    // ridge path keeps the answer close on this well-posed system
    ReconstructionOptions ridge = opt;
    ridge.ridge_lambda = 1e-10;
    auto rr = reconstruct_spectral_function(m64, ridge);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(rr.j_hat[i] == Catch::Approx(r64.j_hat[i]).margin(1e-6));
}

TEST_CASE("equilibrium diagnosis") {
    const double kT = 0.05;
    SpectralModel J(1.0, 0.1, 1.0, Cutoff::gaussian);
    auto S_th = [&](double w) { return M_PI * J(w) * coth_guarded(w / (2.0 * kT)); };
    auto d = diagnose_equilibrium(S_th, J, 1e-3, 1e-2);
    CHECK(d.equilibrium);
    CHECK(d.variation < 1.05);

    // p = 0 against s = 1/2: T_eff ~ w^{1/2}, > 2x variation over a decade
    SpectralModel Jh(0.5, 0.1, 1.0, Cutoff::gaussian);
    auto S_flat = [&](double) { return 0.01; };
    auto d2 = diagnose_equilibrium(S_flat, Jh, 1e-3, 1e-2);
    CHECK_FALSE(d2.equilibrium);
    CHECK(d2.variation > 2.0);
}

TEST_CASE("trace csv round trip") {
    CoherenceTrace tr;
    tr.records.push_back(CoherenceTrace::make_record(1.5, 0.25, 0.125, 0.0625));
    tr.records.push_back(CoherenceTrace::make_record(3.0, 0.5, 0.0, 0.0));  // unresolvable phase
    std::stringstream ss;
    write_trace_csv(ss, tr);
    const std::string txt = ss.str();
    CHECK(txt.find("t_f,zeta,phi_q,phi_ext,re_coh,im_coh,n_meas") == 0);
    CHECK(txt.find("1.50000000000e+00") != std::string::npos);
    auto back = read_trace_csv(ss);
    REQUIRE(back.records.size() == 2);
    CHECK(back.records[0].zeta == Catch::Approx(0.25).epsilon(1e-11));
    CHECK(back.records[0].n_meas == Catch::Approx(tr.records[0].n_meas).epsilon(1e-10));
    CHECK(!std::isfinite(back.records[1].n_meas));
}
