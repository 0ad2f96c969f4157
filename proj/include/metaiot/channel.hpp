#ifndef METAIOT_CHANNEL_HPP
#define METAIOT_CHANNEL_HPP

#include <vector>

#include "metaiot/circuit.hpp"
#include "metaiot/common.hpp"

namespace metaiot::channel {

struct WallModel {
    double attenuation = 0.0;       // beta, Np/m
    double refraction_index = 1.0;  // n_w
    double thickness = 0.0;         // D_w, m (0 = non-embedded case)

    void validate() const;
};

struct SystemGeometry {
    int tx_count = 1;                          // N_AT
    double tx_spacing = 0.0;                   // delta_AT, m
    double tx_center_height = 0.0;             // h_c^AT, m
    std::vector<double> rx_heights;            // h_i^Rx, one per array
    std::vector<double> array_center_heights;  // h_i^MS
    double array_width = 0.0;                  // L_MS, m
    int sensors_per_column = 1;                // N_MS
    std::vector<double> measuring_distances;   // D_q, m
    int location_count = 1;                    // N_loc
    WallModel wall;

    int array_count() const { return static_cast<int>(rx_heights.size()); }
    // symmetric placement around the array center, 1-based antenna index
    double tx_height(int j) const {
        return tx_center_height + (j - 1 - (tx_count - 1) / 2.0) * tx_spacing;
    }
    void validate() const;
};

// cos^p directional pattern, boresight horizontal
struct AntennaPattern {
    double boresight_gain = 1.0;
    double exponent = 2.0;

    double gain(double /*f*/, double theta) const {
        const double c = std::cos(theta);
        if (c <= 0.0) return 0.0;
        return boresight_gain * std::pow(c, exponent);
    }
};

struct FrequencyGrid {
    std::vector<double> points;

    static FrequencyGrid linspace(double f_lb, double f_ub, std::size_t n);
    std::size_t size() const { return points.size(); }
    void validate() const;
};

struct ReceivedVector {
    std::vector<cplx> y;
    int array_index = 0;   // i, 1-based
    double height = 0.0;   // target height used for beamforming
    double distance = 0.0;
};

struct FeatureVector {
    std::vector<double> p_db;
    int i = 0, m = 0, k = 0, t = 0;
};

// Everything the received-signal models need besides the per-call arguments.
struct SensingScene {
    SystemGeometry geometry;
    AntennaPattern tx_pattern;
    AntennaPattern rx_pattern;
    circuit::SensorCircuitParams circuit_params;
    std::vector<circuit::MaterialSensitivity> materials;
    circuit::CorrectionTable correction;
    double tx_power = 1.0;  // P

    cplx gamma(double f, std::size_t freq_index, const circuit::SensorStructure& d,
               const circuit::EnvCondition& c, std::size_t cond_index = 0) const;
};

Vec3 mirror_across_array_plane(const Vec3& p, double plane_x);

// Free-space term times the in-wall factor; r = |x - x_m|.
cplx propagation_gain(const Vec3& x, const Vec3& x_m, double f, double D, const WallModel& wall);

// (theta_tx, theta_rx) for Tx antenna j (1-based) and array i (1-based)
std::pair<double, double> steering_angles(const SystemGeometry& geom, int j, int i, double D);

// phi = -(j-1) * (2 pi f delta / v) * (h - h_c) / sqrt(D^2 + (h - h_c)^2)
double beamform_phase(int j, int i, double f, double h, double D, const SystemGeometry& geom);

// Gain over the specular (mirror) path from x_tx to the image of x_rx.
cplx specular_gain(const Vec3& x_rx, const Vec3& x_tx, double f, double D, const WallModel& wall);

// chi = D v^2 gamma / (2 beta D_w v f + 4 pi f^2 i (D + D_w (n_w - 1)))
cplx chi_from_gamma(double f, cplx gamma, double D, const WallModel& wall);
cplx chi(double f, const circuit::SensorStructure& d, const circuit::EnvCondition& c, double D,
         const WallModel& wall, const SensingScene& scene, std::size_t freq_index = 0,
         std::size_t cond_index = 0);

// Proposition-style large-array model: product of sqrt(P), patterns,
// beamforming phase, chi and the specular-path gain.
cplx received_signal_large(int j, int i, double f, const circuit::SensorStructure& d,
                           const circuit::EnvCondition& c, double h, double D,
                           const SensingScene& scene, std::size_t freq_index = 0,
                           std::size_t cond_index = 0);
// Same with a precomputed reflection coefficient.
cplx received_signal_large_gamma(int j, int i, double f, cplx gamma, double h, double D,
                                 const SensingScene& scene);

// Discretized surface integral over explicit sensor centers (area A each).
cplx received_signal_small(int j, int i, double f, const circuit::SensorStructure& d,
                           const circuit::EnvCondition& c,
                           const std::vector<Vec3>& sensor_centers, double sensor_area, double h,
                           double D, const SensingScene& scene, std::size_t freq_index = 0,
                           std::size_t cond_index = 0, Exec exec = Exec::parallel);

// y_i(f) = sum over Tx antennas of the large-array signals.
ReceivedVector received_vector(int i, const circuit::SensorStructure& d,
                               const circuit::EnvCondition& c, double h, double D,
                               const FrequencyGrid& grid, const SensingScene& scene,
                               std::size_t cond_index = 0, Exec exec = Exec::parallel);
ReceivedVector received_vector_serial(int i, const circuit::SensorStructure& d,
                                      const circuit::EnvCondition& c, double h, double D,
                                      const FrequencyGrid& grid, const SensingScene& scene,
                                      std::size_t cond_index = 0);

// height displacement of the m-th measuring height (1-based m)
double height_displacement(int m, int n_dh, const SystemGeometry& geom);

// p = 10 log10 |y_i| with h = h_i^MS + dh_m
FeatureVector feature_vector(int i, int m, int n_dh, const circuit::SensorStructure& d,
                             const circuit::EnvCondition& c, double D, const FrequencyGrid& grid,
                             const SensingScene& scene, std::size_t cond_index = 0,
                             Exec exec = Exec::parallel);

// E1-type exponential integral via the asymptotic series
// Ei(z) = (e^-z / z) sum_k k! / (-z)^k, truncated adaptively (K <= 20,
// stopping at divergence onset). Valid for |z| >= 30.
struct ExponentialIntegralResult {
    cplx value;
    int terms_used = 0;
    double relative_error_bound = 0.0;
};
ExponentialIntegralResult exponential_integral(cplx z, int max_terms = 20);

}  // namespace metaiot::channel

#endif
