#ifndef METAIOT_COMMON_HPP
#define METAIOT_COMMON_HPP

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace metaiot {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;   // m/s
inline constexpr double kFreeSpaceImpedance = 377.0;   // ohm
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDbFloor = -300.0;             // dB floor for |y| = 0

struct Vec3 {
    double x = 0.0;  // range axis, towards the wall
    double y = 0.0;  // horizontal along the wall
    double z = 0.0;  // height
};

inline double distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Exit-code-mapped error categories (CLI: 2 = config, 3 = data).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct calibration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Exec { serial, parallel };

}  // namespace metaiot

#endif
