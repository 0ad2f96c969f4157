#ifndef METAIOT_TEST_SCENARIO_FIXTURES_HPP
#define METAIOT_TEST_SCENARIO_FIXTURES_HPP

#include "metaiot/harness.hpp"

namespace fixtures {

// Prototype-style scenario: 8 Tx antennas, two sensor arrays behind a
// 30 mm wall, humidity/temperature sensitive units, band 3.5-4 GHz.
inline metaiot::harness::ScenarioConfig paper_scenario() {
    metaiot::harness::ScenarioConfig cfg;
    cfg.geometry.tx_count = 8;
    cfg.geometry.tx_spacing = 0.0367;
    cfg.geometry.tx_center_height = 0.836;
    cfg.geometry.rx_heights = {1.363, 0.32};
    cfg.geometry.array_center_heights = {1.10, 0.58};
    cfg.geometry.array_width = 0.174;
    cfg.geometry.sensors_per_column = 12;
    cfg.geometry.measuring_distances = {1.0};
    cfg.geometry.location_count = 3;
    cfg.geometry.wall.attenuation = 8.0;
    cfg.geometry.wall.refraction_index = 4.2;
    cfg.geometry.wall.thickness = 0.03;
    cfg.f_lb = 3.5e9;
    cfg.f_ub = 4.0e9;
    cfg.n_f = 201;
    cfg.n_dh = 8;
    cfg.band = {3.5e9, 4.0e9};
    cfg.resonance_split = 0.3e9;
    cfg.nominal_gap_widths = {1.126e-3, 1.761e-3};
    cfg.gap_lower = {0.5e-3, 0.5e-3};
    cfg.gap_upper = {2.0e-3, 2.0e-3};
    cfg.sampled_gap_axes = {{0.5e-3, 1.0e-3, 1.5e-3, 2.0e-3}, {0.5e-3, 1.0e-3, 1.5e-3, 2.0e-3}};
    cfg.material_names = {"humidity", "temperature"};
    cfg.materials.resize(2);
    cfg.materials[0].condition_points = {{55.0, 0.11}, {75.0, 0.67}};
    cfg.materials[1].condition_points = {{20.0, 0.32}, {50.0, 0.97}};
    cfg.normal_condition = {55.0, 20.0};
    cfg.anomaly_conditions["humidity"] = {75.0, 20.0};
    cfg.anomaly_conditions["temperature"] = {55.0, 50.0};
    cfg.horizon = 100;
    cfg.post_trials = 50;
    cfg.seed = 1;
    cfg.snr_db = 65.0;
    return cfg;
}

}  // namespace fixtures

#endif
