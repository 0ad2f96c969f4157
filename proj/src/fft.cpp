#include "metaiot/fft.hpp"

#include <cmath>

namespace metaiot::fft {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

void fft_pow2(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!is_pow2(n)) throw std::invalid_argument("fft_pow2: length must be a power of two");
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const cplx wlen = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx t = a[i + k + len / 2] * w;
                a[i + k] = u + t;
                a[i + k + len / 2] = u - t;
                w *= wlen;
            }
        }
    }
    if (inverse) {
        for (cplx& x : a) x /= static_cast<double>(n);
    }
}

std::vector<cplx> dft(const std::vector<cplx>& input) {
    const std::size_t n = input.size();
    if (n == 0) throw std::invalid_argument("dft: empty input");
    if (is_pow2(n)) {
        std::vector<cplx> a = input;
        fft_pow2(a, false);
        return a;
    }
    // Bluestein: X_k = b*_k sum_m (a_m b*_m) b_{k-m}, b_m = exp(i pi m^2 / n)
    const std::size_t m = next_pow2(2 * n - 1);
    std::vector<cplx> b(n);
    for (std::size_t k = 0; k < n; ++k) {
        // m^2 mod 2n keeps the chirp argument small
        const std::size_t q = (k * k) % (2 * n);
        b[k] = std::polar(1.0, kPi * static_cast<double>(q) / static_cast<double>(n));
    }
    std::vector<cplx> x(m, cplx(0.0, 0.0)), y(m, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) x[k] = input[k] * std::conj(b[k]);
    y[0] = b[0];
    for (std::size_t k = 1; k < n; ++k) {
        y[k] = b[k];
        y[m - k] = b[k];
    }
    fft_pow2(x, false);
    fft_pow2(y, false);
    for (std::size_t k = 0; k < m; ++k) x[k] *= y[k];
    fft_pow2(x, true);
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = std::conj(b[k]) * x[k];
    return out;
}

std::vector<cplx> dft_real(const std::vector<double>& input) {
    std::vector<cplx> a(input.size());
    for (std::size_t k = 0; k < input.size(); ++k) a[k] = cplx(input[k], 0.0);
    return dft(a);
}

}  // namespace metaiot::fft
