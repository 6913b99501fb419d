#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "parapde/rng.hpp"
#include "parapde/weights.hpp"

using namespace parapde;

TEST_CASE("weight algebra and admissibility") {
    Grid g(1, 256, 8.0);
    Weight w1(g, 0.7), w2(g, 1.1), w3(g, 1.8);
    double dev = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        dev = std::max(dev, std::abs(w1.values.values[i] * w2.values.values[i] - w3.values.values[i]));
    CHECK(dev <= 1e-14);
    // rho^gamma = rho_{gamma delta}
    Weight half(g, 0.35);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(std::pow(w1.values.values[i], 0.5) - half.values.values[i]) <= 1e-13);
    // |grad rho| <= C rho with a modest measured constant
    CHECK(w1.admissibility_constant() <= w1.delta + 0.1);
    CHECK(w1.values.max_abs() <= 1.0);
    for (double v : w1.values.values) CHECK(v > 0.0);
}

TEST_CASE("besov norm: zero, homogeneity, triangle") {
    Grid g(1, 256, kPi);
    Weight w(g, 0.5);
    Field z(g);
    CHECK(besov_norm(z, 0.5, w) == 0.0);
    Field f = random_smooth_field(g, 23, 10.0, 50.0);
    Field f2 = f;
    f2 *= 2.0;
    double n1 = besov_norm(f, 0.7, w);
    double n2 = besov_norm(f2, 0.7, w);
    CHECK(std::abs(n2 - 2.0 * n1) <= 1e-12 * n1);
    Field h = random_smooth_field(g, 24, 10.0, 50.0);
    CHECK(besov_norm(f + h, 0.7, w) <= (besov_norm(f, 0.7, w) + besov_norm(h, 0.7, w)) * (1 + 1e-9));
}

TEST_CASE("besov norm of a single exclusive mode") {
    Grid g(1, 256, kPi);
    Weight unit(g, 0.0);
    int j = 3;
    double k = oracles::exclusive_block_mode(g, j);
    REQUIRE(k > 0.0);
    Field s(g);
    for (int i = 0; i < g.N; ++i) s.values[std::size_t(i)] = std::sin(k * g.x(i));
    double alpha = 0.8;
    double expect = std::pow(2.0, alpha * j) * block(s, j).max_abs();
    CHECK(std::abs(besov_norm(s, alpha, unit) - expect) <= 1e-10 * expect);
}

TEST_CASE("besov embedding monotone in alpha") {
    Grid g(1, 256, kPi);
    Weight w(g, 0.3);
    Field f = random_rough_field(g, 31, 1.0, g.k_nyquist() / 2.0);
    CHECK(besov_norm(f, 0.2, w) <= besov_norm(f, 0.9, w) * (1 + 1e-12));
    CHECK(besov_norm(f, -0.5, w) <= besov_norm(f, 0.2, w) * (1 + 1e-12));
}

TEST_CASE("holder norm basics") {
    Grid g(1, 256, kPi);
    Weight unit(g, 0.0);
    Field c(g, -2.5);
    CHECK(std::abs(holder_norm(c, 0, 0.0, unit) - 2.5) <= 1e-13);
    CHECK_THROWS_AS(holder_norm(c, 0, 1.0, unit), std::out_of_range);
    CHECK_THROWS_AS(holder_norm(c, 0, -0.1, unit), std::out_of_range);

    // smooth periodic surrogate of x: quotient bounded by the max slope
    Field s(g);
    for (int i = 0; i < g.N; ++i) s.values[std::size_t(i)] = (g.L / kPi) * std::sin(kPi * g.x(i) / g.L);
    double alpha = 0.95;
    double n = holder_norm(s, 0, alpha, unit);
    double max_slope = derivative(s).max_abs();
    CHECK(n <= s.max_abs() + max_slope * 1.05);
}

TEST_CASE("holder and besov norms are equivalent on a smooth ensemble") {
    // measured ratio band must be stable across resolutions
    double lo_all = kInf, hi_all = 0.0;
    std::vector<double> his;
    for (int N : {256, 512, 1024}) {
        Grid g(1, N, kPi);
        Weight w(g, 0.4);
        double lo = kInf, hi = 0.0;
        for (int s = 0; s < 12; ++s) {
            Field f = random_rough_field(g, 100 + s, 1.4, 40.0);
            double hb = holder_norm(f, 0, 0.6, w);
            double bb = besov_norm(f, 0.6, w);
            double r = hb / bb;
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        his.push_back(hi / lo);
        lo_all = std::min(lo_all, lo);
        hi_all = std::max(hi_all, hi);
    }
    // ratio band stays within a fixed factor and does not widen with N
    CHECK(hi_all / lo_all < 10.0);
    CHECK(his.back() < 4.0 * his.front() + 1.0);
}

TEST_CASE("localized norm: zero field and unweighted agreement band") {
    Grid g(1, 256, 8.0);
    Weight unit(g, 0.0);
    Field z(g);
    CHECK(localized_norm(z, 0.5, unit, 0.5) == 0.0);
    CHECK_THROWS_AS(localized_norm(z, 0.5, unit, 0.0), std::out_of_range);
    CHECK_THROWS_AS(localized_norm(z, 0.5, unit, 1.5), std::out_of_range);

    // delta = 0: localized and global norms agree within a fixed ratio band
    double lo = kInf, hi = 0.0;
    for (int s = 0; s < 8; ++s) {
        Field f = random_rough_field(g, 400 + s, 1.3, 20.0);
        double loc = localized_norm(f, 0.5, unit, 0.5);
        double glob = holder_norm(f, 0, 0.5, unit);
        double r = loc / glob;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(lo > 0.2);
    CHECK(hi < 5.0);
}

TEST_CASE("localized norm picks up a far-field bump against the weight") {
    Grid g(1, 512, 16.0);
    double delta = 1.0;
    Weight w(g, delta);
    double z0 = 10.0;
    Field f(g);
    for (int i = 0; i < g.N; ++i) {
        double d = g.x(i) - z0;
        f.values[std::size_t(i)] = std::exp(-8.0 * d * d) / std::pow(1.0 + z0 * z0, -delta / 2.0);
    }
    LocalizedNormReport rep = localized_norm_report(f, 0.5, w, 0.5);
    // the argmax center sits near the bump
    CHECK(std::abs(rep.argmax_z - z0) < 2.0);
    // and reproduces the unweighted norm of the bump within the ratio band
    Field bump(g);
    for (int i = 0; i < g.N; ++i) {
        double d = g.x(i) - z0;
        bump.values[std::size_t(i)] = std::exp(-8.0 * d * d);
    }
    Weight unit(g, 0.0);
    double ref = holder_norm(bump, 0, 0.5, unit);
    CHECK(rep.value > 0.1 * ref);
    CHECK(rep.value < 10.0 * ref);
}

TEST_CASE("interpolation inequality: exactness cases and random sweep") {
    Grid g(1, 256, 8.0);
    auto mk = [&](double alpha, double p, double q, double delta) {
        NormSpec s;
        s.alpha = alpha;
        s.p = p;
        s.q = q;
        s.weight = Weight(g, delta);
        return s;
    };
    Field z(g);
    {
        NormSpec specs[3] = {mk(0.5, kInf, kInf, 0.5), mk(0.5, kInf, kInf, 0.5),
                             mk(0.5, kInf, kInf, 0.5)};
        auto rep = interpolation_check(z, 0.5, specs);
        CHECK(rep.holds);
    }
    {
        // theta = 1 gives equality with the first norm
        Field f = random_smooth_field(g, 51, 4.0, 20.0);
        NormSpec specs[3] = {mk(0.8, 4.0, kInf, 0.6), mk(0.8, 4.0, kInf, 0.6),
                             mk(0.1, 2.0, 2.0, 0.2)};
        auto rep = interpolation_check(f, 1.0, specs);
        CHECK(rep.holds);
        CHECK(std::abs(rep.lhs - rep.rhs) <= 1e-12 * rep.rhs);
    }
    {
        // exponent relation violations are contract errors
        Field f(g, 1.0);
        NormSpec specs[3] = {mk(0.9, kInf, kInf, 0.5), mk(0.8, kInf, kInf, 0.6),
                             mk(0.1, kInf, kInf, 0.2)};
        CHECK_THROWS_AS(interpolation_check(f, 0.5, specs), std::invalid_argument);
    }
    // theta = 1/2 sweep: the discrete inequality is exact up to round-off
    for (int s = 0; s < 20; ++s) {
        Field f = random_rough_field(g, 700 + s, 1.0, 30.0);
        NormSpec specs[3] = {mk(0.5, 4.0, 4.0, 0.4), mk(0.8, 4.0, 2.0, 0.6),
                             mk(0.2, 4.0, kInf, 0.2)};
        auto rep = interpolation_check(f, 0.5, specs, 1e-9);
        CHECK(rep.holds);
    }
}

TEST_CASE("norm report grid mismatch is a shape error") {
    Grid g1(1, 128, kPi), g2(1, 256, kPi);
    Field f(g1, 1.0);
    Weight w(g2, 0.5);
    CHECK_THROWS_AS(besov_norm(f, 0.5, w), std::invalid_argument);
}
