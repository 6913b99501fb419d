#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "parapde/heat.hpp"
#include "parapde/paracalc.hpp"
#include "parapde/rng.hpp"

using namespace parapde;

namespace {

std::vector<double> uniform_times(double T, int M) {
    std::vector<double> t(std::size_t(M) + 1, 0.0);
    for (int m = 0; m <= M; ++m) t[std::size_t(m)] = T * m / M;
    return t;
}

}  // namespace

TEST_CASE("heat semigroup: identity at zero, eigenmodes, semigroup law") {
    Grid g(1, 256, kPi);
    Field f = random_smooth_field(g, 41, 10.0, 60.0);
    CHECK((heat(f, 0.0) - f).max_abs() == 0.0);
    CHECK_THROWS_AS(heat(f, -0.1), std::out_of_range);

    double k = 9.0, t = 0.05;
    Field s(g);
    for (int i = 0; i < g.N; ++i) s.values[std::size_t(i)] = std::sin(k * g.x(i));
    Field hs = heat(s, t);
    Field expect = s;
    expect *= std::exp(-k * k * t);
    CHECK((hs - expect).max_abs() <= 1e-13);

    Field ab = heat(heat(f, 0.013), 0.027);
    Field once = heat(f, 0.04);
    CHECK((ab - once).max_abs() <= 1e-11 * f.max_abs());
}

TEST_CASE("heat block decay rate") {
    Grid g(1, 512, kPi);
    const DyadicPartition& part = partition_for(g);
    Field f = random_rough_field(g, 42, 0.6, g.k_nyquist());
    for (int j = 2; j <= part.j_max; ++j) {
        for (double t : {1e-4, 1e-3, 1e-2}) {
            double before = block(f, j).max_abs();
            double after = block(heat(f, t), j).max_abs();
            if (before < 1e-12 || after < 1e-300) continue;
            double measured_c = -std::log(after / before) / (std::pow(4.0, j) * t);
            CHECK(measured_c >= 0.2);
        }
    }
}

TEST_CASE("heat smoothing and strong continuity scalings") {
    Grid g(1, 512, kPi);
    Weight unit(g, 0.0);
    double theta = 1.0, alpha = 0.4;
    Field f = random_rough_field(g, 43, alpha + 0.5, g.k_nyquist() / 2.0);
    // smoothing: t^{theta/2} || P_t f ||_{C^{theta+alpha}} bounded, no growth trend
    std::vector<double> vals;
    for (double t : {1e-4, 1e-3, 1e-2, 1e-1, 1.0})
        vals.push_back(std::pow(t, theta / 2.0) * besov_norm(heat(f, t), theta + alpha, unit));
    double first = *std::max_element(vals.begin(), vals.begin() + 2);
    double last = *std::max_element(vals.end() - 2, vals.end());
    CHECK(last <= 4.0 * first + 1e-12);

    // continuity: || P_t f - f ||_inf / t^{theta'/2} bounded for f in C^{theta'}
    double theta_c = 0.9;
    Field fc = random_rough_field(g, 44, theta_c + 0.5, g.k_nyquist() / 2.0);
    std::vector<double> cvals;
    for (double t : {1e-4, 1e-3, 1e-2, 1e-1})
        cvals.push_back((heat(fc, t) - fc).max_abs() / std::pow(t, theta_c / 2.0));
    double cmax = *std::max_element(cvals.begin(), cvals.end());
    double cmin = *std::min_element(cvals.begin(), cvals.end());
    CHECK(cmax <= 30.0 * cmin);
}

TEST_CASE("duhamel: eigenmode formula, zero forcing, residual order") {
    Grid g(1, 256, kPi);
    double k = 7.0, lambda = 3.0;
    Field s(g);
    for (int i = 0; i < g.N; ++i) s.values[std::size_t(i)] = std::sin(k * g.x(i));
    auto times = uniform_times(0.2, 100);
    SpaceTimeField F = SpaceTimeField::constant_in_time(s, times);
    DuhamelConfig cfg;
    cfg.lambda = lambda;
    SpaceTimeField u = duhamel(F, cfg);
    double a = lambda + k * k;
    for (int m : {20, 50, 100}) {
        double t = times[std::size_t(m)];
        Field expect = s;
        expect *= (1.0 - std::exp(-a * t)) / a;
        CHECK((u[m] - expect).max_abs() <= 1e-10);
    }
    SpaceTimeField Z = SpaceTimeField::constant_in_time(Field(g), times);
    CHECK(duhamel(Z, cfg).max_abs() == 0.0);

    // first-order finite-difference residual: order >= 1 in dt
    Field fs = random_smooth_field(g, 45, 4.0, 16.0);
    std::vector<double> dts{1e-2, 5e-3, 2.5e-3}, res;
    for (double dt : dts) {
        int M = int(std::lround(0.2 / dt));
        auto tt = uniform_times(0.2, M);
        SpaceTimeField FF = SpaceTimeField::constant_in_time(fs, tt);
        DuhamelConfig c2;
        c2.lambda = 1.0;
        SpaceTimeField uu = duhamel(FF, c2);
        res.push_back(duhamel_residual(uu, FF, 1.0));
    }
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        lx.push_back(std::log(dts[i]));
        ly.push_back(std::log(res[i]));
    }
    double order = oracles::fit_slope(lx, ly);
    CHECK(order >= 1.0);
}

TEST_CASE("duhamel window: endpoints and equivalence to the damped form") {
    Grid g(1, 128, kPi);
    auto times = uniform_times(0.2, 50);
    SpaceTimeField F;
    F.times = times;
    F.slices.assign(times.size(), Field(g));
    for (std::size_t m = 0; m < times.size(); ++m)
        F[int(m)] = random_smooth_field(g, 800 + int(m), 6.0, 24.0);

    CHECK(duhamel_window(F, times[10], times[10]).max_abs() == 0.0);
    CHECK_THROWS_AS(duhamel_window(F, times[11], times[10]), std::out_of_range);

    DuhamelConfig cfg;  // lambda = 0
    SpaceTimeField u = duhamel(F, cfg);
    for (int m : {10, 30, 50}) {
        Field win = duhamel_window(F, 0.0, times[std::size_t(m)]);
        CHECK((win - u[m]).max_abs() <= 1e-10 * std::max(1.0, u.max_abs()));
    }
}

TEST_CASE("lambda sup bounded by twice the windowed sup") {
    // sup over a lambda grid of || b o grad I_lambda f (T) || against the
    // windowed bound 2 sup_s || b(T) o grad I^T_s f ||
    Grid g(1, 256, kPi);
    auto times = uniform_times(0.2, 40);
    SpaceTimeField F;
    F.times = times;
    F.slices.assign(times.size(), Field(g));
    for (std::size_t m = 0; m < times.size(); ++m)
        F[int(m)] = random_smooth_field(g, 860 + int(m), 8.0, 30.0);
    Field b = random_smooth_field(g, 859, 8.0, 30.0);
    Weight unit(g, 0.0);
    const double T = times.back();
    double alpha_norm = -0.1;

    double lam_sup = 0.0;
    for (double lam : {0.0, 1.0, 10.0, 100.0, 1000.0}) {
        DuhamelConfig cfg;
        cfg.lambda = lam;
        SpaceTimeField u = duhamel(F, cfg);
        Field r = resonant(b, derivative(u[u.num_slices() - 1]));
        lam_sup = std::max(lam_sup, besov_norm(r, alpha_norm, unit));
    }
    double win_sup = 0.0;
    for (int m = 0; m < int(times.size()); m += 4) {
        Field w = duhamel_window(F, times[std::size_t(m)], T);
        Field r = resonant(b, derivative(w));
        win_sup = std::max(win_sup, besov_norm(r, alpha_norm, unit));
    }
    CHECK(lam_sup <= 2.0 * win_sup * (1.0 + 1e-9));
}

TEST_CASE("schauder probe: flat at theta = 2, slope -1/2 at theta = 1") {
    // dt must resolve the 1/lambda boundary layer of the largest lambda
    Grid g(1, 256, kPi);
    auto times = uniform_times(0.25, 1000);
    Field f = random_rough_field(g, 870, 0.9, g.k_nyquist() / 2.0);  // mollified noise
    SpaceTimeField F = SpaceTimeField::constant_in_time(f, times);

    CHECK_THROWS_AS(schauder_probe(F, 1.5, 0.4, 2.0, {1.0, 4.0}), std::invalid_argument);

    std::vector<double> lams{1.0, 4.0, 16.0, 64.0, 256.0};
    SchauderReport half = schauder_probe(F, 1.0, 0.4, kInf, lams);
    CHECK(half.expected == Catch::Approx(-0.5));
    CHECK(std::abs(half.slope - half.expected) <= 0.15);

    // no-decay case: forcing saturating the top block, so both norm parts sit
    // on the lambda-flat branch for lambda << 4^{j_max}
    Grid g2(1, 1024, kPi);
    const DyadicPartition& part2 = partition_for(g2);
    Field ftop = oracles::single_block_field(g2, 871, part2.j_max);
    auto times2 = uniform_times(0.25, 500);
    SpaceTimeField F2 = SpaceTimeField::constant_in_time(ftop, times2);
    SchauderReport flat = schauder_probe(F2, 2.0, 0.4, kInf, lams);
    CHECK(flat.expected == 0.0);
    CHECK(std::abs(flat.slope) <= 0.1);
}
