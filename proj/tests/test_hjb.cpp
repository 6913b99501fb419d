#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "parapde/enhancement.hpp"
#include "parapde/hjb.hpp"
#include "parapde/rng.hpp"

using namespace parapde;

namespace {

std::vector<double> uniform_times(double T, int M) {
    std::vector<double> t(std::size_t(M) + 1, 0.0);
    for (int m = 0; m <= M; ++m) t[std::size_t(m)] = T * m / M;
    return t;
}

RenormalizedPair kpz_pair(int n, std::uint64_t seed, int N, double T, int M, double kappa,
                          const std::vector<double>& lams) {
    Grid g(1, N, double(n));
    auto times = uniform_times(T, M);
    SpaceTimeField xi = sample_noise(n, seed, g, times);
    KPZEnhancement enh = build_trees(xi, Y0Spec{}, n, seed);
    return assemble_kpz_pair(enh, kappa, 0.55, lams);
}

}  // namespace

TEST_CASE("classical HJB with identity coefficients is the heat flow") {
    Grid g(1, 256, kPi);
    auto times = uniform_times(0.2, 200);
    Field v0 = random_smooth_field(g, 61, 8.0, 30.0);
    HJBProblem prob = HJBProblem::identity_heat(g, times, v0);
    SpaceTimeField v = solve_hjb_classical(prob);
    double err = 0.0;
    for (int m : {50, 100, 200})
        err = std::max(err, (v[m] - heat(v0, times[std::size_t(m)])).max_abs());
    CHECK(err <= 1e-9 * std::max(1.0, v0.max_abs()));
}

TEST_CASE("maximum principle in the clean case, no overshoot") {
    Grid g(1, 256, kPi);
    auto times = uniform_times(0.25, 100);
    Field v0 = random_smooth_field(g, 62, 8.0, 30.0);
    HJBProblem prob = HJBProblem::identity_heat(g, times, v0);
    SpaceTimeField v = solve_hjb_classical(prob);
    double sup0 = v0.max_abs();
    for (const auto& s : v.slices) CHECK(s.max_abs() <= sup0 * (1.0 + 1e-9));
}

TEST_CASE("quadratic H against the deterministic Cole-Hopf transform") {
    Grid g(1, 512, kPi);
    auto times = uniform_times(0.25, 1000);
    Field v0(g);
    for (int i = 0; i < g.N; ++i)
        v0.values[std::size_t(i)] = 0.4 * std::sin(g.x(i)) + 0.2 * std::cos(2.0 * g.x(i));
    HJBProblem prob = HJBProblem::identity_heat(g, times, v0);
    prob.H = HDescriptor::quadratic(1.0);
    SpaceTimeField v = solve_hjb_classical(prob);
    Field ev(g);
    for (std::size_t i = 0; i < g.size(); ++i) ev.values[i] = std::exp(v0.values[i]);
    double err = 0.0, scale = 1.0;
    for (int m : {500, 1000}) {
        Field pt = heat(ev, times[std::size_t(m)]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double exact = std::log(pt.values[i]);
            err = std::max(err, std::abs(v[m].values[i] - exact));
            scale = std::max(scale, std::abs(exact));
        }
    }
    CHECK(err / scale <= 1e-4);
}

TEST_CASE("maximum-principle conformance across a coefficient ensemble") {
    // || v ||_{Linf(rho_delta)} <= C (c2 + || v0 ||_{Linf(rho_delta)}) with a
    // stable measured C over random coefficient draws
    Grid g(1, 128, 4.0);
    auto times = uniform_times(0.1, 100);
    double delta = 0.5;
    Weight wd(g, delta);
    std::vector<double> Cs;
    for (int s = 0; s < 20; ++s) {
        Field v0 = random_smooth_field(g, 800 + std::uint64_t(s), g.k_nyquist() / 12.0,
                                       g.k_nyquist() / 5.0);
        HJBProblem prob = HJBProblem::identity_heat(g, times, v0);
        Field ap = random_smooth_field(g, 830 + std::uint64_t(s), g.k_nyquist() / 12.0,
                                       g.k_nyquist() / 6.0);
        double apm = std::max(ap.max_abs(), 1e-12);
        for (int m = 0; m < prob.a[0].num_slices(); ++m)
            for (std::size_t i = 0; i < g.size(); ++i)
                prob.a[0][m].values[i] = 1.0 + 0.25 * ap.values[i] / apm;
        Field Bp = random_smooth_field(g, 860 + std::uint64_t(s), g.k_nyquist() / 12.0,
                                       g.k_nyquist() / 6.0);
        for (int m = 0; m < prob.B[0].num_slices(); ++m) prob.B[0][m] = Bp;
        double c2 = 0.3;
        prob.H = HDescriptor::table([c2, delta](double, double x, double, const double* Q, int) {
            return c2 * std::pow(1.0 + x * x, delta / 2.0) + 0.5 * Q[0] * Q[0];
        });
        SpaceTimeField v = solve_hjb_classical(prob);
        double lhs = sup_linf(v, wd);
        Cs.push_back(lhs / (c2 + lp_weighted(v0, wd, kInf)));
    }
    double lo = *std::min_element(Cs.begin(), Cs.end());
    double hi = *std::max_element(Cs.begin(), Cs.end());
    CHECK(hi < 5.0);
    CHECK(hi / std::max(lo, 1e-12) < 10.0);
}

TEST_CASE("CFL guard and blow-up guard") {
    Grid g(1, 128, kPi);
    auto times = uniform_times(0.1, 10);  // coarse dt
    Field v0 = random_smooth_field(g, 71, 8.0, 30.0);
    HJBProblem prob = HJBProblem::identity_heat(g, times, v0);
    for (int m = 0; m < prob.a[0].num_slices(); ++m)
        for (auto& v : prob.a[0][m].values) v = 3.0;  // far from identity
    CHECK_THROWS_AS(solve_hjb_classical(prob), std::invalid_argument);

    // super-critical quadratic growth blows up and is reported with a time
    auto times2 = uniform_times(2.0, 800);
    HJBProblem pb = HJBProblem::identity_heat(g, times2, Field(g, 1.0));
    pb.H = HDescriptor::table([](double, double, double v, const double*, int) {
        return v * v * (1.0 + std::abs(v));
    });
    HJBSolveConfig cfg;
    cfg.cap = 1e4;
    CHECK_THROWS_AS(solve_hjb_classical(pb, cfg), BlowUpError);
}

TEST_CASE("mollified H approximates H and regularizes the cusp") {
    HDescriptor base = HDescriptor::power(1.5, 1.0);
    HDescriptor hn = mollify_H(base, 16, 1);
    double Q1 = 1.0;
    double a = base.eval(0, 0, 0, &Q1, 1);
    double b = hn.eval(0, 0, 0, &Q1, 1);
    CHECK(std::abs(a - b) <= 0.05 * std::abs(a) + 0.05);
    // at the cusp the mollified value is finite and small
    double Q0 = 0.0;
    CHECK(hn.eval(0, 0, 0, &Q0, 1) >= 0.0);
    CHECK(hn.eval(0, 0, 0, &Q0, 1) <= 0.2);
    // spatial cutoff kills far field
    CHECK(hn.eval(0, 40.0, 0, &Q1, 1) == 0.0);
}

TEST_CASE("weighted interpolation verifiers hold with stable ratio bands") {
    Grid g(1, 256, 8.0);
    double hi_es = 0.0, hi_kj = 0.0;
    for (int s = 0; s < 20; ++s) {
        Field v = random_smooth_field(g, 900 + std::uint64_t(s), g.k_nyquist() / 10.0,
                                      g.k_nyquist() / 4.0);
        WeightedInterpReport es = es10_check(v, 4.0, 4.0, 4.0, 0.5, 0.6, 0.4);
        CHECK(es.ratio < 3.0);
        hi_es = std::max(hi_es, es.ratio);
        WeightedInterpReport kj = kj3_check(v, 6.4, 6.0, 8.0, 0.5, 0.6, 0.2);
        CHECK(kj.ratio < 3.0);
        hi_kj = std::max(hi_kj, kj.ratio);
    }
    CHECK(hi_es > 0.0);
    CHECK(hi_kj > 0.0);
    Field v(g, 1.0);
    CHECK_THROWS_AS(es10_check(v, 4.0, 4.0, 4.0, 0.5, 0.7, 0.4), std::invalid_argument);
    CHECK_THROWS_AS(kj3_check(v, 4.0, 6.0, 8.0, 0.5, 0.9, 0.35), std::invalid_argument);
}

TEST_CASE("derivative-Lp energy monitor stays bounded along a run") {
    Grid g(1, 128, 4.0);
    auto times = uniform_times(0.1, 100);
    Field v0 = random_smooth_field(g, 75, g.k_nyquist() / 12.0, g.k_nyquist() / 5.0);
    HJBProblem prob = HJBProblem::identity_heat(g, times, v0);
    prob.H = HDescriptor::quadratic(0.5);
    prob.eta = 1.0;
    HJBRunDiagnostics diag;
    SpaceTimeField v = solve_hjb_classical(prob, {}, &diag);
    REQUIRE(!diag.energy_monitor.empty());
    double first_max = 0.0, last_max = 0.0;
    std::size_t half = diag.energy_monitor.size() / 2;
    for (std::size_t i = 0; i < diag.energy_monitor.size(); ++i) {
        CHECK(std::isfinite(diag.energy_monitor[i]));
        if (i < half)
            first_max = std::max(first_max, std::abs(diag.energy_monitor[i]));
        else
            last_max = std::max(last_max, std::abs(diag.energy_monitor[i]));
    }
    CHECK(last_max <= 10.0 * first_max + 1e-9);
}

TEST_CASE("zvonkin map vanishes for zero drift") {
    int n = 8;
    Grid g(1, 128, double(n));
    auto times = uniform_times(0.05, 50);
    RenormalizedPair pair;
    pair.alpha = 0.55;
    pair.weight = Weight(g, 0.2);
    pair.weight_sq = Weight(g, 0.4);
    SpaceTimeField Z = SpaceTimeField::constant_in_time(Field(g), times);
    pair.b.push_back(Z);
    pair.f = Z;
    LocalizationPlan plan = make_localization_plan(g, times, 2.0);
    ZvonkinMap map = build_zvonkin(pair, plan, 16.0);
    CHECK(map.u_vec[0].max_abs() == 0.0);
    CHECK(map.grad_sup == 0.0);
    CHECK(map.bilip_min == Catch::Approx(1.0));
    CHECK(map.bilip_max == Catch::Approx(1.0));
}

TEST_CASE("zvonkin lambda scan: gradient bound non-increasing, bands hold") {
    RenormalizedPair pair = kpz_pair(8, 99, 128, 0.1, 100, 0.2, {0.0});
    Grid g = pair.grid();
    LocalizationPlan plan = make_localization_plan(g, pair.f.times, 2.0);
    SolverConfig scfg;
    scfg.tol = 1e-8;
    scfg.max_iter = 150;
    std::vector<double> lams{16.0, 64.0, 256.0, 1024.0};
    std::vector<double> gsups;
    ZvonkinMap last;
    for (double lam : lams) {
        ZvonkinMap map = build_zvonkin(pair, plan, lam, scfg);
        gsups.push_back(map.grad_sup);
        last = std::move(map);
    }
    for (std::size_t i = 1; i < gsups.size(); ++i) CHECK(gsups[i] <= gsups[i - 1] * (1.0 + 1e-6));
    CHECK(gsups.back() <= 0.5);
    CHECK(last.bilip_min >= 0.5);
    CHECK(last.bilip_max <= 1.5);
}

TEST_CASE("coefficient transform: identity map passes through, bands hold") {
    RenormalizedPair pair = kpz_pair(8, 100, 128, 0.1, 100, 0.2, {0.0});
    Grid g = pair.grid();
    const int M = pair.f.num_slices();
    // identity map
    ZvonkinMap id;
    id.lambda = 0.0;
    id.u_vec.push_back(SpaceTimeField::constant_in_time(Field(g), pair.f.times));
    id.b_leq.push_back(SpaceTimeField::constant_in_time(Field(g), pair.f.times));
    id.bbar_leq.push_back(SpaceTimeField::constant_in_time(Field(g), pair.f.times));
    SpaceTimeField u1 = SpaceTimeField::constant_in_time(Field(g), pair.f.times);
    TransformedProblem tp = transform_coefficients(id, pair, u1, HDescriptor::quadratic(1.0));
    EllipticityReport ell = tp.problem.check_ellipticity();
    CHECK(ell.c0_lower == Catch::Approx(1.0).margin(1e-9));
    CHECK(ell.c0_upper == Catch::Approx(1.0).margin(1e-9));
    CHECK(tp.roundtrip_error <= 1e-9);
    CHECK(tp.problem.B[0].max_abs() <= 1e-12);

    // real map built at large lambda
    LocalizationPlan plan = make_localization_plan(g, pair.f.times, 2.0);
    SolverConfig scfg;
    scfg.tol = 1e-8;
    scfg.max_iter = 150;
    ZvonkinMap map = build_zvonkin(pair, plan, 256.0, scfg);
    REQUIRE(map.grad_sup <= 0.5);
    TransformedProblem tp2 = transform_coefficients(map, pair, u1, HDescriptor::quadratic(1.0));
    EllipticityReport ell2 = tp2.problem.check_ellipticity();
    CHECK(ell2.c0_lower >= 0.4);
    CHECK(ell2.c0_upper <= 2.2);
    CHECK(tp2.roundtrip_error <= 2.0 * g.h());
    (void)M;
}

TEST_CASE("singular HJB with b = 0, H = 0 is Duhamel plus heat flow") {
    Grid g(1, 128, kPi);
    auto times = uniform_times(0.1, 50);
    RenormalizedPair pair;
    pair.alpha = 0.55;
    pair.weight = Weight(g, 0.0);
    pair.weight_sq = Weight(g, 0.0);
    SpaceTimeField Z = SpaceTimeField::constant_in_time(Field(g), times);
    pair.b.push_back(Z);
    Field fs = random_smooth_field(g, 110, 8.0, 30.0);
    pair.f = SpaceTimeField::constant_in_time(fs, times);
    Field phi = random_smooth_field(g, 111, 6.0, 20.0);
    SingularHJBConfig cfg;
    SingularHJBResult res = solve_singular_hjb(pair, HDescriptor::none(), phi, cfg);
    DuhamelConfig dc;
    SpaceTimeField If = duhamel(pair.f, dc);
    double err = 0.0;
    for (int m = 0; m < res.u.num_slices(); ++m) {
        Field expect = If[m] + heat(phi, times[std::size_t(m)]);
        err = std::max(err, (res.u[m] - expect).max_abs());
    }
    CHECK(err <= 1e-7 * std::max(1.0, res.u.max_abs()));
}

TEST_CASE("singular HJB matches a direct classical solve on a smooth pair") {
    Grid g(1, 256, kPi);
    auto times = uniform_times(0.25, 100);
    RenormalizedPair pair;
    pair.alpha = 0.55;
    pair.weight = Weight(g, 0.0);
    pair.weight_sq = Weight(g, 0.0);
    Field b0 = random_smooth_field(g, 120, g.k_nyquist() / 12.0, g.k_nyquist() / 4.0);
    b0 *= 1.5;
    pair.b.push_back(SpaceTimeField::constant_in_time(b0, times));
    Field fs = random_smooth_field(g, 121, g.k_nyquist() / 12.0, g.k_nyquist() / 4.0);
    pair.f = SpaceTimeField::constant_in_time(fs, times);
    Field phi = random_smooth_field(g, 122, 4.0, 16.0);
    HDescriptor H = HDescriptor::quadratic(0.25);  // H(Q) = Q^2 / 4
    SingularHJBConfig cfg;
    cfg.tol = 1e-10;
    cfg.linear.tol = 1e-10;
    SingularHJBResult res = solve_singular_hjb(pair, H, phi, cfg);

    // independent reference: single marching pass with plain products
    DuhamelStepper st(g, 0.0, times[1] - times[0]);
    SpaceTimeField ref;
    ref.times = times;
    ref.slices.assign(times.size(), Field(g));
    ref[0] = phi;
    SpectralField state = phi.to_spectral();
    for (std::size_t m = 0; m + 1 < times.size(); ++m) {
        Field dv = derivative(ref[int(m)], 0);
        Field rhs = pair.f[int(m)];
        rhs += multiply(b0, dv);
        Field q2 = multiply(dv, dv);
        q2 *= 0.25;
        rhs += q2;
        SpectralField gm = rhs.to_spectral();
        st.step(state, gm);
        ref[int(m) + 1] = state.to_field();
    }
    CHECK(oracles::rel_diff(res.u, ref) <= 1e-3);
}

TEST_CASE("singular HJB solutions stay uniformly bounded across n-levels") {
    std::vector<double> norms, ratios;
    for (int n : {8, 16, 32}) {
        Grid g(1, 16 * n, double(n));
        auto times = uniform_times(0.1, 100);
        SpaceTimeField xi = sample_noise(n, 444, g, times);
        KPZEnhancement enh = build_trees(xi, Y0Spec{}, n, 444);
        RenormalizedPair pair = assemble_kpz_pair(enh, 0.02, 0.55, {0.0});
        PairDiagnostics diag = pair_diagnostics(pair, {0.0});
        Field phi(g);
        for (int i = 0; i < g.N; ++i)
            phi.values[std::size_t(i)] = 0.3 * std::sin(kPi * g.x(i) / g.L);
        SingularHJBConfig cfg;
        SingularHJBResult res = solve_singular_hjb(pair, HDescriptor::quadratic(1.0), phi, cfg);
        Weight weta(g, 0.5);
        norms.push_back(s_norm_strided(res.u, 1.45, weta, 16));
        ratios.push_back(norms.back() / diag.amp);
    }
    // the solution norms themselves sit in a factor-4 band
    for (std::size_t i = 1; i < norms.size(); ++i) {
        CHECK(norms[i] / norms[0] <= 4.0);
        CHECK(norms[0] / norms[i] <= 4.0);
    }
    // and the a-priori-estimate constant ||u|| / A never grows with n
    for (std::size_t i = 1; i < ratios.size(); ++i) CHECK(ratios[i] <= 4.0 * ratios[0]);
}

TEST_CASE("singular HJB audit mode reports the Zvonkin diagnostics") {
    RenormalizedPair pair = kpz_pair(8, 222, 128, 0.1, 100, 0.2, {0.0});
    Grid g = pair.grid();
    Field phi(g);
    SingularHJBConfig cfg;
    cfg.run_zvonkin_audit = true;
    cfg.audit_lambda = 256.0;
    SingularHJBResult res = solve_singular_hjb(pair, HDescriptor::quadratic(1.0), phi, cfg);
    CHECK(res.audit_ran);
    CHECK(res.audit_grad_sup <= 0.5);
    CHECK(res.audit_bilip_min >= 0.5);
    CHECK(res.audit_bilip_max <= 1.5);
    CHECK(res.audit_ellipticity_min >= 0.4);
    CHECK(res.audit_ellipticity_max <= 2.2);
    CHECK(res.audit_roundtrip <= 2.0 * g.h());
    CHECK(std::isfinite(res.audit_B_sup_weighted));
}
