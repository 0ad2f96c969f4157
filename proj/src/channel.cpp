#include "metaiot/channel.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace metaiot::channel {

void WallModel::validate() const {
    if (attenuation < 0) throw std::invalid_argument("WallModel: attenuation must be >= 0");
    if (refraction_index < 1) throw std::invalid_argument("WallModel: refraction index must be >= 1");
    if (thickness < 0) throw std::invalid_argument("WallModel: thickness must be >= 0");
}

void SystemGeometry::validate() const {
    if (tx_count < 1) throw std::invalid_argument("SystemGeometry: tx_count must be >= 1");
    if (rx_heights.empty()) throw std::invalid_argument("SystemGeometry: needs Rx antennas");
    if (rx_heights.size() != array_center_heights.size()) {
        throw std::invalid_argument("SystemGeometry: one sensor array per Rx antenna");
    }
    if (tx_count > 1 && tx_spacing <= 0) {
        throw std::invalid_argument("SystemGeometry: tx_spacing must be positive");
    }
    if (array_width <= 0) throw std::invalid_argument("SystemGeometry: array_width must be positive");
    if (sensors_per_column < 1) {
        throw std::invalid_argument("SystemGeometry: sensors_per_column must be >= 1");
    }
    if (measuring_distances.empty()) {
        throw std::invalid_argument("SystemGeometry: needs at least one measuring distance");
    }
    for (double d : measuring_distances) {
        if (d <= 0) throw std::invalid_argument("SystemGeometry: distances must be positive");
    }
    if (location_count < 1) throw std::invalid_argument("SystemGeometry: location_count must be >= 1");
    wall.validate();
}

FrequencyGrid FrequencyGrid::linspace(double f_lb, double f_ub, std::size_t n) {
    if (n < 2 || f_ub <= f_lb || f_lb <= 0) {
        throw std::invalid_argument("FrequencyGrid: need f_ub > f_lb > 0 and N_F >= 2");
    }
    FrequencyGrid g;
    g.points.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        g.points[k] = f_lb + (f_ub - f_lb) * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    return g;
}

void FrequencyGrid::validate() const {
    if (points.size() < 2) throw std::invalid_argument("FrequencyGrid: N_F >= 2 required");
    for (std::size_t k = 1; k < points.size(); ++k) {
        if (points[k] <= points[k - 1]) {
            throw std::invalid_argument("FrequencyGrid: points must be strictly increasing");
        }
    }
}

cplx SensingScene::gamma(double f, std::size_t freq_index, const circuit::SensorStructure& d,
                         const circuit::EnvCondition& c, std::size_t cond_index) const {
    return circuit::reflection_coefficient(f, freq_index, d, c, circuit_params, materials,
                                           correction, cond_index);
}

Vec3 mirror_across_array_plane(const Vec3& p, double plane_x) {
    return {2.0 * plane_x - p.x, p.y, p.z};
}

cplx propagation_gain(const Vec3& x, const Vec3& x_m, double f, double D, const WallModel& wall) {
    const double r = distance(x, x_m);
    if (r <= 0.0) throw std::domain_error("propagation_gain: coincident points");
    if (f <= 0.0 || D <= 0.0) throw std::invalid_argument("propagation_gain: f and D must be positive");
    const double v = kSpeedOfLight;
    const double amp = v / (4.0 * kPi * f * r) * std::exp(-wall.attenuation * wall.thickness / D * r);
    const double phase = -(2.0 * kPi * f / v) * r -
                         (2.0 * kPi * f * wall.thickness / (v * D)) * (wall.refraction_index - 1.0) * r;
    return std::polar(amp, phase);
}

std::pair<double, double> steering_angles(const SystemGeometry& geom, int j, int i, double D) {
    if (j < 1 || j > geom.tx_count || i < 1 || i > geom.array_count()) {
        throw std::out_of_range("steering_angles: index out of range");
    }
    const double h_ms = geom.array_center_heights[static_cast<std::size_t>(i - 1)];
    const double theta_tx = std::atan((geom.tx_height(j) - h_ms) / D);
    const double theta_rx = std::atan((h_ms - geom.rx_heights[static_cast<std::size_t>(i - 1)]) / D);
    return {theta_tx, theta_rx};
}

double beamform_phase(int j, int i, double f, double h, double D, const SystemGeometry& geom) {
    if (j < 1 || j > geom.tx_count || i < 1 || i > geom.array_count()) {
        throw std::out_of_range("beamform_phase: index out of range");
    }
    const double h_ms = geom.array_center_heights[static_cast<std::size_t>(i - 1)];
    if (std::abs(h - h_ms) > geom.array_width / 2.0 + 1e-12) {
        throw std::out_of_range("beamform_phase: target height outside the array span");
    }
    const double dh = h - geom.tx_center_height;
    return -(j - 1) * (2.0 * kPi * f * geom.tx_spacing / kSpeedOfLight) * dh /
           std::sqrt(D * D + dh * dh);
}

cplx specular_gain(const Vec3& x_rx, const Vec3& x_tx, double f, double D, const WallModel& wall) {
    const Vec3 image = mirror_across_array_plane(x_rx, D);
    return propagation_gain(x_tx, image, f, D, wall);
}

cplx chi_from_gamma(double f, cplx gamma, double D, const WallModel& wall) {
    if (f <= 0.0) throw std::invalid_argument("chi: frequency must be positive");
    const double v = kSpeedOfLight;
    const cplx denom(2.0 * wall.attenuation * wall.thickness * v * f,
                     4.0 * kPi * f * f * (D + wall.thickness * (wall.refraction_index - 1.0)));
    return D * v * v * gamma / denom;
}

cplx chi(double f, const circuit::SensorStructure& d, const circuit::EnvCondition& c, double D,
         const WallModel& wall, const SensingScene& scene, std::size_t freq_index,
         std::size_t cond_index) {
    return chi_from_gamma(f, scene.gamma(f, freq_index, d, c, cond_index), D, wall);
}

cplx received_signal_large_gamma(int j, int i, double f, cplx gamma, double h, double D,
                                 const SensingScene& scene) {
    const auto& geom = scene.geometry;
    const auto [theta_tx, theta_rx] = steering_angles(geom, j, i, D);
    const double phi = beamform_phase(j, i, f, h, D, geom);
    const Vec3 x_tx{0.0, 0.0, geom.tx_height(j)};
    const Vec3 x_rx{0.0, 0.0, geom.rx_heights[static_cast<std::size_t>(i - 1)]};
    const cplx x = chi_from_gamma(f, gamma, D, geom.wall);
    return std::sqrt(scene.tx_power) * scene.tx_pattern.gain(f, theta_tx) *
           std::polar(1.0, phi) * scene.rx_pattern.gain(f, theta_rx) * x *
           specular_gain(x_rx, x_tx, f, D, geom.wall);
}

cplx received_signal_large(int j, int i, double f, const circuit::SensorStructure& d,
                           const circuit::EnvCondition& c, double h, double D,
                           const SensingScene& scene, std::size_t freq_index,
                           std::size_t cond_index) {
    return received_signal_large_gamma(j, i, f, scene.gamma(f, freq_index, d, c, cond_index), h, D,
                                       scene);
}

cplx received_signal_small(int j, int i, double f, const circuit::SensorStructure& d,
                           const circuit::EnvCondition& c,
                           const std::vector<Vec3>& sensor_centers, double sensor_area, double h,
                           double D, const SensingScene& scene, std::size_t freq_index,
                           std::size_t cond_index, Exec exec) {
    if (sensor_centers.empty()) {
        throw std::invalid_argument("received_signal_small: empty sensor set");
    }
    const auto& geom = scene.geometry;
    const auto [theta_tx, theta_rx] = steering_angles(geom, j, i, D);
    const double phi = beamform_phase(j, i, f, h, D, geom);
    const Vec3 x_tx{0.0, 0.0, geom.tx_height(j)};
    const Vec3 x_rx{0.0, 0.0, geom.rx_heights[static_cast<std::size_t>(i - 1)]};
    const cplx gamma = scene.gamma(f, freq_index, d, c, cond_index);

    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(sensor_centers.size());
    cplx sum(0.0, 0.0);
    if (exec == Exec::parallel) {
        // fixed-size blocks, serially combined, so the result does not depend
        // on the number of threads
        constexpr std::ptrdiff_t block = 1024;
        const std::ptrdiff_t nblocks = (n + block - 1) / block;
        std::vector<cplx> partial(static_cast<std::size_t>(nblocks), cplx(0.0, 0.0));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
            cplx acc(0.0, 0.0);
            const std::ptrdiff_t end = std::min(n, (b + 1) * block);
            for (std::ptrdiff_t m = b * block; m < end; ++m) {
                acc += propagation_gain(x_tx, sensor_centers[static_cast<std::size_t>(m)], f, D,
                                        geom.wall) *
                       propagation_gain(x_rx, sensor_centers[static_cast<std::size_t>(m)], f, D,
                                        geom.wall);
            }
            partial[static_cast<std::size_t>(b)] = acc;
        }
        for (const cplx& p : partial) sum += p;
    } else {
        for (const Vec3& xm : sensor_centers) {
            sum += propagation_gain(x_tx, xm, f, D, geom.wall) *
                   propagation_gain(x_rx, xm, f, D, geom.wall);
        }
    }
    return std::sqrt(scene.tx_power) * scene.tx_pattern.gain(f, theta_tx) *
           scene.rx_pattern.gain(f, theta_rx) * std::polar(1.0, phi) * gamma * sensor_area * sum;
}

namespace {

ReceivedVector received_vector_impl(int i, const circuit::SensorStructure& d,
                                    const circuit::EnvCondition& c, double h, double D,
                                    const FrequencyGrid& grid, const SensingScene& scene,
                                    std::size_t cond_index, bool parallel) {
    ReceivedVector out;
    out.array_index = i;
    out.height = h;
    out.distance = D;
    const std::ptrdiff_t nf = static_cast<std::ptrdiff_t>(grid.size());
    out.y.assign(static_cast<std::size_t>(nf), cplx(0.0, 0.0));
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
    for (std::ptrdiff_t k = 0; k < nf; ++k) {
        const double f = grid.points[static_cast<std::size_t>(k)];
        const cplx gamma = scene.gamma(f, static_cast<std::size_t>(k), d, c, cond_index);
        cplx acc(0.0, 0.0);
        for (int j = 1; j <= scene.geometry.tx_count; ++j) {
            acc += received_signal_large_gamma(j, i, f, gamma, h, D, scene);
        }
        out.y[static_cast<std::size_t>(k)] = acc;
    }
    (void)parallel;
    return out;
}

}  // namespace

ReceivedVector received_vector(int i, const circuit::SensorStructure& d,
                               const circuit::EnvCondition& c, double h, double D,
                               const FrequencyGrid& grid, const SensingScene& scene,
                               std::size_t cond_index, Exec exec) {
    return received_vector_impl(i, d, c, h, D, grid, scene, cond_index, exec == Exec::parallel);
}

ReceivedVector received_vector_serial(int i, const circuit::SensorStructure& d,
                                      const circuit::EnvCondition& c, double h, double D,
                                      const FrequencyGrid& grid, const SensingScene& scene,
                                      std::size_t cond_index) {
    return received_vector_impl(i, d, c, h, D, grid, scene, cond_index, false);
}

double height_displacement(int m, int n_dh, const SystemGeometry& geom) {
    if (m < 1 || m > n_dh) throw std::out_of_range("height_displacement: m out of range");
    return -geom.array_width / 2.0 +
           static_cast<double>(m - 1) * geom.array_width / static_cast<double>(n_dh);
}

FeatureVector feature_vector(int i, int m, int n_dh, const circuit::SensorStructure& d,
                             const circuit::EnvCondition& c, double D, const FrequencyGrid& grid,
                             const SensingScene& scene, std::size_t cond_index, Exec exec) {
    const double h = scene.geometry.array_center_heights[static_cast<std::size_t>(i - 1)] +
                     height_displacement(m, n_dh, scene.geometry);
    const ReceivedVector rv = received_vector(i, d, c, h, D, grid, scene, cond_index, exec);
    FeatureVector fv;
    fv.i = i;
    fv.m = m;
    fv.p_db.resize(rv.y.size());
    for (std::size_t k = 0; k < rv.y.size(); ++k) {
        const double mag = std::abs(rv.y[k]);
        fv.p_db[k] = mag > 0.0 ? 10.0 * std::log10(mag) : kDbFloor;
    }
    return fv;
}

ExponentialIntegralResult exponential_integral(cplx z, int max_terms) {
    constexpr double kCutoff = 30.0;
    if (std::abs(z) < kCutoff) {
        throw std::domain_error("exponential_integral: |z| below asymptotic validity cutoff");
    }
    if (max_terms < 1) throw std::invalid_argument("exponential_integral: need at least one term");
    cplx sum(0.0, 0.0);
    cplx term(1.0, 0.0);  // k = 0
    double last_mag = std::abs(term);
    int used = 0;
    for (int k = 0; k < max_terms; ++k) {
        sum += term;
        ++used;
        const cplx next = term * static_cast<double>(k + 1) / (-z);
        const double mag = std::abs(next);
        if (mag >= last_mag) break;  // divergence onset of the asymptotic series
        term = next;
        last_mag = mag;
    }
    ExponentialIntegralResult r;
    r.value = std::exp(-z) / z * sum;
    r.terms_used = used;
    r.relative_error_bound = last_mag;  // next-term bound, relative to the leading term
    return r;
}

}  // namespace metaiot::channel
