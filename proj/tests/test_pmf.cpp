#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mgw/pmf.hpp"

using namespace mgw;

namespace {

// Brute-force convolution oracle, written as differently as possible from
// the library kernels.
std::vector<double> conv_oracle(const std::vector<double>& a,
                                const std::vector<double>& b,
                                std::size_t cap) {
    std::vector<double> out(cap, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            if (i + j < cap) out[i + j] += a[i] * b[j];
    return out;
}

std::vector<double> random_vec(std::mt19937_64& gen, std::size_t n,
                               double zero_frac) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = uni(gen) < zero_frac ? 0.0 : uni(gen);
    return v;
}

}  // namespace

TEST_CASE("conv kernels match the brute-force oracle") {
    std::mt19937_64 gen(42);
    for (std::size_t n : {1u, 2u, 7u, 64u, 300u}) {
        const auto a = random_vec(gen, n, 0.3);
        const auto b = random_vec(gen, n + 3, 0.5);
        for (std::size_t cap : {std::size_t(1), n, 2 * n + 5}) {
            const auto want = conv_oracle(a, b, cap);
            const auto s = conv_serial(a, b, cap);
            const auto p = conv_parallel(a, b, cap);
            REQUIRE(s.size() == cap);
            REQUIRE(p.size() == cap);
            for (std::size_t i = 0; i < cap; ++i) {
                CHECK(s[i] == doctest::Approx(want[i]).epsilon(1e-13));
                CHECK(p[i] == s[i]);  // identical summation order
            }
        }
    }
    // Leading zeros (shifted series) are handled.
    std::vector<double> sh{0.0, 0.0, 1.0};
    const auto r = conv(sh, sh, 6);
    CHECK(r[4] == doctest::Approx(1.0));
    CHECK(r[3] == 0.0);
}

TEST_CASE("Pmf convolve propagates tail bounds") {
    Pmf a{{0.5, 0.3}, 0.2};
    Pmf b{{0.9, 0.1}, 0.0};
    const Pmf c = convolve(a, b, 4);
    CHECK(c.mass() + c.tail >= 1.0 - 1e-12);
    CHECK(c.tail <= 0.2 + 1e-12);
    // Exact pmfs convolved at full cap keep tail (near) zero.
    Pmf d{{0.25, 0.75}, 0.0};
    const Pmf e = convolve(d, d, 3);
    CHECK(e.mass() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.tail <= 1e-12);
}

TEST_CASE("convolve_power equals repeated convolution") {
    Pmf a{{0.2, 0.5, 0.3}, 0.0};
    Pmf manual = Pmf::delta(0);
    for (int i = 0; i < 9; ++i) manual = convolve(manual, a, 25);
    const Pmf fast = convolve_power(a, 9, 25);
    REQUIRE(fast.size() == 25);
    for (std::size_t i = 0; i < 25; ++i)
        CHECK(fast[i] == doctest::Approx(manual[i]).epsilon(1e-12));
    CHECK(convolve_power(a, 0, 4)[0] == doctest::Approx(1.0));
}

TEST_CASE("poly_of_series against direct Horner") {
    std::mt19937_64 gen(7);
    const auto fv = random_vec(gen, 40, 0.2);
    std::vector<double> f(fv);
    f[0] = 0.0;  // composition argument with no constant term
    auto coeff = [](long k) { return 1.0 / double(1 + k * k); };
    const long K = 23;
    // Direct Horner in the truncated series ring.
    std::vector<double> want(40, 0.0);
    want[0] = coeff(K);
    for (long k = K - 1; k >= 0; --k) {
        want = conv_oracle(want, f, 40);
        want[0] += coeff(k);
    }
    const auto got = poly_of_series(coeff, K, f, 40);
    for (std::size_t i = 0; i < 40; ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-11));
}

TEST_CASE("gw_leaf_pmf solves the leaf-count equation") {
    // Offspring a(0) = 0.8, a(2) = 0.2: leaves of a subcritical GW tree.
    std::vector<double> a{0.8, 0.0, 0.2};
    auto ac = [&a](long k) {
        return k < long(a.size()) ? a[std::size_t(k)] : 0.0;
    };
    const std::size_t cap = 64;
    const auto f = gw_leaf_pmf(ac, 2, cap);

    // Oracle: iterate the monotone fixed point F <- s0 x + sum a_k F^k
    // until stationary (this enumerates trees by increasing height).
    std::vector<double> F(cap, 0.0);
    for (int it = 0; it < 400; ++it) {
        auto F2 = conv_oracle(F, F, cap);
        for (std::size_t n = 0; n < cap; ++n) F[n] = 0.2 * F2[n];
        F[1] += 0.8;
    }
    REQUIRE(f.size() == cap);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == doctest::Approx(0.8).epsilon(1e-14));
    // P(L=2) = a2 s0^2; P(L=3) = a2 * 2 s0 f_2.
    CHECK(f[2] == doctest::Approx(0.2 * 0.64).epsilon(1e-13));
    CHECK(f[3] == doctest::Approx(0.2 * 2 * 0.8 * 0.128).epsilon(1e-13));
    for (std::size_t n = 0; n < cap; ++n)
        CHECK(f[n] == doctest::Approx(F[n]).epsilon(1e-11));

    // Critical case still sums to (at most) 1 over a long horizon.
    std::vector<double> c{0.5, 0.0, 0.5};
    auto cc = [&c](long k) {
        return k < long(c.size()) ? c[std::size_t(k)] : 0.0;
    };
    const auto g = gw_leaf_pmf(cc, 2, 4096);
    double mass = 0.0;
    for (double x : g) {
        CHECK(x >= 0.0);
        mass += x;
    }
    CHECK(mass <= 1.0 + 1e-12);
    CHECK(mass > 0.97);  // critical: slow 1/sqrt(n) tail
}

TEST_CASE("gw_leaf_pmf with geometric offspring (unbounded support)") {
    // a(k) = 0.6 * 0.4^k: mean 2/3 < 1 counting a(0) as the leaf weight.
    auto ac = [](long k) { return 0.6 * std::pow(0.4, double(k)); };
    const auto f = gw_leaf_pmf(ac, 4000, 512);
    std::vector<double> F(512, 0.0);
    for (int it = 0; it < 2000; ++it) {
        std::vector<double> next(512, 0.0);
        std::vector<double> pw(512, 0.0);
        pw[0] = 1.0;
        for (long k = 0; k <= 60; ++k) {
            for (std::size_t n = 0; n < 512; ++n)
                next[n] += 0.6 * std::pow(0.4, double(k)) * pw[n];
            pw = conv_oracle(pw, F, 512);
        }
        next[1] += 0.6;
        next[0] = 0.0;
        F.swap(next);
    }
    for (std::size_t n = 0; n < 512; ++n)
        CHECK(f[n] == doctest::Approx(F[n]).epsilon(1e-10));
}

TEST_CASE("parallel kernel toggle") {
    const bool was = parallel_kernels_enabled();
    set_parallel_kernels(false);
    CHECK(!parallel_kernels_enabled());
    std::vector<double> a{0.5, 0.5};
    CHECK(conv(a, a, 3)[1] == doctest::Approx(0.5));
    set_parallel_kernels(was);
}
