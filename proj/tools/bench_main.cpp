// Serial vs OpenMP timings for the hot kernels, plus the model-complexity
// comparison between the large-array and summation received-signal paths.

#include <chrono>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "metaiot/channel.hpp"
#include "metaiot/fft.hpp"
#include "metaiot/harness.hpp"
#include "metaiot/neuralnet.hpp"
#include "metaiot/rng.hpp"

using namespace metaiot;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

harness::ScenarioConfig demo_config() {
    harness::ScenarioConfig cfg;
    cfg.geometry.tx_count = 8;
    cfg.geometry.tx_spacing = 0.0367;
    cfg.geometry.tx_center_height = 0.836;
    cfg.geometry.rx_heights = {1.363, 0.32};
    cfg.geometry.array_center_heights = {1.10, 0.58};
    cfg.geometry.array_width = 0.174;
    cfg.geometry.sensors_per_column = 12;
    cfg.geometry.measuring_distances = {1.0};
    cfg.geometry.location_count = 3;
    cfg.geometry.wall = {8.0, 4.2, 0.03};
    cfg.nominal_gap_widths = {1.126e-3, 1.761e-3};
    cfg.gap_lower = {0.5e-3, 0.5e-3};
    cfg.gap_upper = {2.0e-3, 2.0e-3};
    cfg.materials.resize(2);
    cfg.materials[0].condition_points = {{55.0, 0.11}, {75.0, 0.67}};
    cfg.materials[1].condition_points = {{20.0, 0.32}, {50.0, 0.97}};
    cfg.material_names = {"humidity", "temperature"};
    cfg.normal_condition = {55.0, 20.0};
    cfg.anomaly_conditions["humidity"] = {75.0, 20.0};
    cfg.anomaly_conditions["temperature"] = {55.0, 50.0};
    return cfg;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::cout << "OpenMP threads: " << omp_get_max_threads() << "\n\n";
#else
    std::cout << "built without OpenMP\n\n";
#endif

    const auto cfg = demo_config();
    const auto scene = cfg.scene();
    const auto grid = cfg.grid();
    const circuit::EnvCondition cond{cfg.normal_condition};
    const circuit::SensorStructure d = cfg.structure();

    {
        const int reps = 50;
        auto t0 = Clock::now();
        for (int r = 0; r < reps; ++r) {
            channel::received_vector_serial(1, d, cond, 1.10, 1.0, grid, scene);
        }
        const double serial = seconds_since(t0) / reps;
        t0 = Clock::now();
        for (int r = 0; r < reps; ++r) {
            channel::received_vector(1, d, cond, 1.10, 1.0, grid, scene);
        }
        const double parallel = seconds_since(t0) / reps;
        std::cout << "received_vector (201 freqs x 8 antennas): serial " << serial * 1e3
                  << " ms, parallel " << parallel * 1e3 << " ms, speedup " << serial / parallel
                  << "\n";
    }

    {
        // summation model vs large-array model at one frequency
        std::vector<Vec3> sensors;
        const double ls = cfg.sensor_unit_side;
        for (int r = 0; r < 40; ++r) {
            for (int c = 0; c < 40; ++c) {
                sensors.push_back({1.0, (c - 19.5) * 2 * ls, 1.10 + (r - 19.5) * ls});
            }
        }
        const double f = 3.75e9;
        const double area = 2.0 * ls * ls;
        const int reps = 200;
        auto t0 = Clock::now();
        cplx sink(0, 0);
        for (int r = 0; r < reps; ++r) {
            sink += channel::received_signal_small(1, 1, f, d, cond, sensors, area, 1.10, 1.0,
                                                   scene, 0, 0, Exec::serial);
        }
        const double small_t = seconds_since(t0) / reps;
        t0 = Clock::now();
        for (int r = 0; r < reps * 100; ++r) {
            sink += channel::received_signal_large(1, 1, f, d, cond, 1.10, 1.0, scene);
        }
        const double large_t = seconds_since(t0) / (reps * 100);
        std::cout << "received signal, 1600-sensor summation " << small_t * 1e6
                  << " us vs large-array model " << large_t * 1e6 << " us  (ratio "
                  << small_t / large_t << ")  [" << std::abs(sink) << "]\n";
    }

    {
        // batched FFT preprocessing
        Rng rng(7);
        const int n_vec = 512;
        std::vector<std::vector<double>> vecs(n_vec, std::vector<double>(201));
        for (auto& v : vecs) {
            for (double& x : v) x = rng.normal();
        }
        auto run = [&](Exec exec) {
            auto t0 = Clock::now();
            double sink = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(+ : sink) if (exec == Exec::parallel)
#endif
            for (int k = 0; k < n_vec; ++k) {
                const auto s = fft::dft_real(vecs[static_cast<std::size_t>(k)]);
                sink += std::abs(s[1]);
            }
            (void)exec;
            return std::make_pair(seconds_since(t0), sink);
        };
        const auto [ts, s1] = run(Exec::serial);
        const auto [tp, s2] = run(Exec::parallel);
        std::cout << "512 x length-201 spectra: serial " << ts * 1e3 << " ms, parallel " << tp * 1e3
                  << " ms, speedup " << ts / tp << "  [" << s1 - s2 << "]\n";
    }

    {
        // encoder-decoder forward/backward
        const auto spec = nn::NetworkSpec::build(4, 6, 32, 8, 32);
        nn::Network net(spec, 11);
        nn::Tensor4 x(8, 6, 32, 8);
        Rng rng(3);
        for (double& v : x.data) v = rng.uniform();
        auto run = [&](Exec exec) {
            auto t0 = Clock::now();
            auto ctx = net.forward_cached(x, exec);
            nn::Tensor4 dout = ctx.output();
            for (std::size_t k = 0; k < dout.data.size(); ++k) {
                dout.data[k] = 2.0 * (dout.data[k] - x.data[k]) / static_cast<double>(x.size());
            }
            const auto g = net.backward(ctx, dout, exec);
            return std::make_pair(seconds_since(t0), g[0]);
        };
        const auto [ts, g1] = run(Exec::serial);
        const auto [tp, g2] = run(Exec::parallel);
        std::cout << "depth-4 net fwd+bwd (batch 8): serial " << ts * 1e3 << " ms, parallel "
                  << tp * 1e3 << " ms, speedup " << ts / tp << "  [" << g1 - g2 << "]\n";
    }

    return 0;
}
