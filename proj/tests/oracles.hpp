// Test-side oracles, independent of the library implementation paths they
// check: adaptive quadrature for the exponential integral, a windowed
// dense-summation evaluation of the reflection surface integral, and a naive
// DFT.
#ifndef METAIOT_TEST_ORACLES_HPP
#define METAIOT_TEST_ORACLES_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "metaiot/channel.hpp"
#include "metaiot/common.hpp"

namespace oracles {

using metaiot::cplx;
using metaiot::Vec3;

// E1(z) = e^-z Int_0^inf e^-t / (z + t) dt by adaptive Simpson quadrature.
inline cplx e1_quadrature(cplx z, double tol = 1e-12) {
    const auto f = [z](double t) { return std::exp(-t) / (z + t); };
    std::function<cplx(double, double, cplx, cplx, cplx, double, int)> simpson =
        [&](double a, double b, cplx fa, cplx fb, cplx fm, double eps, int depth) -> cplx {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const cplx flm = f(lm), frm = f(rm);
        const cplx whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        const cplx left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const cplx right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps) {
            return left + right + (left + right - whole) / 15.0;
        }
        return simpson(a, m, fa, fm, flm, eps / 2.0, depth - 1) +
               simpson(m, b, fm, fb, frm, eps / 2.0, depth - 1);
    };
    // e^-t decays to ~1e-35 by t = 80
    const double a = 0.0, b = 80.0;
    const cplx fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return std::exp(-z) * simpson(a, b, fa, fb, fm, tol, 40);
}

// Uniform anisotropic sensor grid centered on the specular point, with a
// dual-span Hann taper over the Fresnel-zone number of the two-leg path.
// This is the standard way to evaluate the improper oscillatory surface
// integral that the large-array model approximates in closed form.
struct WindowedGrid {
    std::vector<Vec3> sensors;
    std::vector<double> weights;  // average of the two window spans
    double cell_area = 0.0;
};

inline WindowedGrid windowed_oracle_grid(double f, double D, double h_tx, double h_rx,
                                         const metaiot::channel::WallModel& wall, int n_side) {
    const double lam = metaiot::kSpeedOfLight / f;
    const double zc = 0.5 * (h_tx + h_rx);
    const double r_stat = std::sqrt(4.0 * D * D + (h_tx - h_rx) * (h_tx - h_rx));
    const double keff = 1.0 + wall.thickness / D * (wall.refraction_index - 1.0);
    const double cos_a = 2.0 * D / r_stat;
    const double curv_y = 4.0 / r_stat;

    const double n0 = 1.0;
    const double n1_a = 5.5, n1_b = 6.5;
    const double a_y = std::sqrt(n1_b * lam / (keff * curv_y)) * 1.02;
    const double a_z = a_y / cos_a;

    WindowedGrid grid;
    grid.cell_area = (2.0 * a_y / n_side) * (2.0 * a_z / n_side);
    const auto hann = [n0](double n, double n1) {
        if (n <= n0) return 1.0;
        if (n >= n1) return 0.0;
        const double t = (n - n0) / (n1 - n0);
        return 0.5 * (1.0 + std::cos(metaiot::kPi * t));
    };
    for (int r = 0; r < n_side; ++r) {
        for (int c = 0; c < n_side; ++c) {
            const double y = (c + 0.5) / n_side * 2.0 * a_y - a_y;
            const double z = zc + (r + 0.5) / n_side * 2.0 * a_z - a_z;
            const double rt = std::sqrt(D * D + y * y + (z - h_tx) * (z - h_tx));
            const double rr = std::sqrt(D * D + y * y + (z - h_rx) * (z - h_rx));
            const double zones = (rt + rr - r_stat) * keff / (lam / 2.0);
            grid.sensors.push_back({D, y, z});
            grid.weights.push_back(0.5 * (hann(zones, n1_a) + hann(zones, n1_b)));
        }
    }
    return grid;
}

// naive O(N^2) DFT
inline std::vector<cplx> naive_dft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<cplx> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cplx acc(0.0, 0.0);
        for (std::size_t m = 0; m < n; ++m) {
            const double ang = -2.0 * metaiot::kPi * static_cast<double>(k) *
                               static_cast<double>(m) / static_cast<double>(n);
            acc += x[m] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

}  // namespace oracles

#endif
