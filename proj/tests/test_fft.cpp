#include <doctest.h>

#include <cmath>

#include "metaiot/fft.hpp"
#include "metaiot/rng.hpp"
#include "oracles.hpp"

using namespace metaiot;

TEST_CASE("fft matches the naive DFT") {
    Rng rng(101);
    for (std::size_t n : {8u, 64u, 201u, 256u, 337u}) {
        std::vector<double> x(n);
        for (double& v : x) v = rng.normal();
        const auto fast = fft::dft_real(x);
        const auto naive = oracles::naive_dft(x);
        REQUIRE(fast.size() == naive.size());
        for (std::size_t k = 0; k < n; ++k) {
            CHECK(std::abs(fast[k] - naive[k]) < 1e-9);
        }
    }
}

TEST_CASE("single sinusoid concentrates in one bin") {
    const std::size_t n = 201;
    const std::size_t bin = 7;
    std::vector<double> x(n);
    for (std::size_t m = 0; m < n; ++m) {
        x[m] = std::cos(2 * kPi * static_cast<double>(bin) * static_cast<double>(m) /
                        static_cast<double>(n));
    }
    const auto s = fft::dft_real(x);
    CHECK(std::abs(s[bin]) == doctest::Approx(static_cast<double>(n) / 2).epsilon(1e-9));
    for (std::size_t k = 1; k < n / 2; ++k) {
        if (k == bin) continue;
        CHECK(std::abs(s[k]) < 1e-8);
    }
}

TEST_CASE("round trip through the inverse power-of-two transform") {
    Rng rng(5);
    std::vector<cplx> x(128);
    for (cplx& v : x) v = {rng.normal(), rng.normal()};
    auto y = x;
    fft::fft_pow2(y, false);
    fft::fft_pow2(y, true);
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(std::abs(y[k] - x[k]) < 1e-12);
}

TEST_CASE("constant input has energy only in the DC bin") {
    std::vector<double> x(100, 3.25);
    const auto s = fft::dft_real(x);
    CHECK(std::abs(s[0]) == doctest::Approx(325.0).epsilon(1e-12));
    for (std::size_t k = 1; k < x.size(); ++k) CHECK(std::abs(s[k]) < 1e-9);
}
