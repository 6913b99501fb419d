#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "parapde/dyadic.hpp"
#include "parapde/rng.hpp"

using namespace parapde;

TEST_CASE("grid invariants reject bad parameters") {
    CHECK_THROWS_AS(Grid(3, 64, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Grid(1, 100, 1.0), std::invalid_argument);  // not a power of two
    CHECK_THROWS_AS(Grid(1, 8, 1.0), std::invalid_argument);    // below 16
    CHECK_THROWS_AS(Grid(1, 64, -1.0), std::invalid_argument);
}

TEST_CASE("parseval holds at several sizes") {
    for (int N : {64, 256, 1024}) {
        Grid g(1, N, kPi);
        Field f = random_smooth_field(g, 7 + N, g.k_nyquist() / 8.0, g.k_nyquist() / 2.5);
        double l2 = l2_norm(f);
        double cs = 0.0;
        for (auto c : f.to_spectral().coeffs) cs += std::norm(c);
        CHECK(std::abs(l2 * l2 - cs * 2.0 * g.L) <= 1e-12 * l2 * l2);
    }
}

TEST_CASE("block on constants: block(-1) passes, others vanish") {
    Grid g(1, 128, kPi);
    Field c(g, 3.7);
    Field b0 = block(c, -1);
    CHECK((b0 - c).max_abs() <= 1e-12);
    const DyadicPartition& part = partition_for(g);
    for (int j = 0; j <= part.j_max; ++j) CHECK(block(c, j).max_abs() <= 1e-12);
}

TEST_CASE("block partition reconstructs band-limited fields") {
    Grid g(1, 256, kPi);
    const DyadicPartition& part = partition_for(g);
    Field f = random_smooth_field(g, 3, g.k_nyquist() / 6.0, g.k_nyquist() / 2.0);
    Field rec(g);
    for (int j = -1; j <= part.j_max; ++j) rec += block(f, j);
    CHECK((rec - f).max_abs() <= 1e-10 * f.max_abs());
}

TEST_CASE("single mode lands in exactly one block") {
    Grid g(1, 256, kPi);
    const DyadicPartition& part = partition_for(g);
    // enumerate the lattice and verify the oracle finds exclusive modes
    for (int j = 1; j <= std::min(4, part.j_max); ++j) {
        double k = oracles::exclusive_block_mode(g, j);
        REQUIRE(k > 0.0);
        Field f(g);
        for (int i = 0; i < g.N; ++i) f.values[std::size_t(i)] = std::sin(k * g.x(i));
        Field bj = block(f, j);
        CHECK((bj - f).max_abs() <= 1e-11);
        for (int i = -1; i <= part.j_max; ++i) {
            if (i == j) continue;
            CHECK(block(f, i).max_abs() <= 1e-11);
        }
    }
}

TEST_CASE("block disjointness for |i-j| >= 2") {
    Grid g(1, 256, kPi);
    const DyadicPartition& part = partition_for(g);
    Field f = random_rough_field(g, 5, 0.8, g.k_nyquist());
    for (int j = -1; j + 2 <= part.j_max; ++j)
        CHECK(block(block(f, j), j + 2).max_abs() <= 1e-12 * f.max_abs());
}

TEST_CASE("block range errors") {
    Grid g(1, 128, kPi);
    const DyadicPartition& part = partition_for(g);
    Field f(g, 1.0);
    CHECK_THROWS_AS(block(f, -2), std::out_of_range);
    CHECK_THROWS_AS(block(f, part.j_max + 1), std::out_of_range);
    CHECK_THROWS_AS(low_freq_sum(f, -2), std::out_of_range);
}

TEST_CASE("low_freq_sum: empty sum, full partition, single-mode thresholds") {
    Grid g(1, 256, kPi);
    const DyadicPartition& part = partition_for(g);
    Field f = random_smooth_field(g, 11, g.k_nyquist() / 8.0, g.k_nyquist() / 2.5);
    CHECK(low_freq_sum(f, -1).max_abs() == 0.0);
    CHECK((low_freq_sum(f, part.j_max + 2) - f).max_abs() <= 1e-11 * f.max_abs());

    int j0 = 3;
    double k = oracles::exclusive_block_mode(g, j0);
    REQUIRE(k > 0.0);
    Field s(g);
    for (int i = 0; i < g.N; ++i) s.values[std::size_t(i)] = std::sin(k * g.x(i));
    CHECK(low_freq_sum(s, j0).max_abs() <= 1e-11);
    CHECK((low_freq_sum(s, j0 + 2) - s).max_abs() <= 1e-11);
}

TEST_CASE("apply_multiplier: identity, derivative, heat on eigenmodes") {
    Grid g(1, 128, kPi);
    Field f = random_smooth_field(g, 13, 8.0, 30.0);
    Field id = apply_multiplier(f, Multiplier1([](double) { return cplx(1.0, 0.0); }));
    CHECK((id - f).max_abs() <= 1e-13 * std::max(1.0, f.max_abs()));

    double k = 5.0;
    Field s(g), c(g);
    for (int i = 0; i < g.N; ++i) {
        s.values[std::size_t(i)] = std::sin(k * g.x(i));
        c.values[std::size_t(i)] = k * std::cos(k * g.x(i));
    }
    Field ds = derivative(s);
    CHECK((ds - c).max_abs() <= 1e-12 * k);

    double t = 0.3;
    Field hs = apply_multiplier(s, Multiplier1([t](double kk) { return cplx(std::exp(-kk * kk * t), 0.0); }));
    Field expect = s;
    expect *= std::exp(-k * k * t);
    CHECK((hs - expect).max_abs() <= 1e-13);
}

TEST_CASE("non-Hermitian multiplier with real output is rejected") {
    Grid g(1, 128, kPi);
    Field f(g, 1.0);
    CHECK_THROWS_AS(apply_multiplier(f, Multiplier1([](double k) { return cplx(0.0, k * k); })),
                    std::invalid_argument);
    // same multiplier is fine when real output is not demanded
    CHECK_NOTHROW(apply_multiplier(f, Multiplier1([](double k) { return cplx(0.0, k * k); }), false));
}

TEST_CASE("multiplier operations are linear and translation equivariant") {
    Grid g(1, 128, kPi);
    Field a = random_smooth_field(g, 17, 6.0, 30.0);
    Field b = random_smooth_field(g, 18, 6.0, 30.0);
    Field lhs = block(a + b, 2);
    Field rhs = block(a, 2) + block(b, 2);
    CHECK((lhs - rhs).max_abs() <= 1e-12);

    Field shifted(g);
    for (int i = 0; i < g.N; ++i) shifted.values[std::size_t(i)] = a.values[std::size_t((i + 1) % g.N)];
    Field b1 = block(shifted, 2);
    Field b2 = block(a, 2);
    Field b2s(g);
    for (int i = 0; i < g.N; ++i) b2s.values[std::size_t(i)] = b2.values[std::size_t((i + 1) % g.N)];
    CHECK((b1 - b2s).max_abs() <= 1e-11 * std::max(1.0, a.max_abs()));
}

TEST_CASE("2d grid supports blocks and derivatives") {
    Grid g(2, 32, kPi);
    GaussianSampler rng(5);
    Field f = random_smooth_field(g, 5, 4.0, 10.0);
    const DyadicPartition& part = partition_for(g);
    Field rec(g);
    for (int j = -1; j <= part.j_max; ++j) rec += block(f, j);
    CHECK((rec - f).max_abs() <= 1e-10 * std::max(1.0, f.max_abs()));
    // d/dx sin(2x)cos(y) = 2cos(2x)cos(y)
    Field s(g), expect(g);
    for (int i = 0; i < g.N; ++i)
        for (int j = 0; j < g.N; ++j) {
            s.values[std::size_t(i) * g.N + j] = std::sin(2.0 * g.x(i)) * std::cos(g.x(j));
            expect.values[std::size_t(i) * g.N + j] = 2.0 * std::cos(2.0 * g.x(i)) * std::cos(g.x(j));
        }
    CHECK((derivative(s, 0) - expect).max_abs() <= 1e-11);
}
