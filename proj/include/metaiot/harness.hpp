#ifndef METAIOT_HARNESS_HPP
#define METAIOT_HARNESS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metaiot/channel.hpp"
#include "metaiot/optimizer.hpp"
#include "metaiot/sensing.hpp"

namespace metaiot::harness {

struct AnomalyEvent {
    int t = 0;
    int k = 1;               // location, 1-based
    int i = 1;               // array, 1-based
    int unit = 0;            // which condition dimension shifts (0-based)
    double severity = 1.0;   // 0..1 linear blend from normal to the anomaly endpoint
    std::string type;        // material name, informational
};

struct ScenarioConfig {
    channel::SystemGeometry geometry;
    double f_lb = 3.5e9, f_ub = 4.0e9;
    int n_f = 201;
    int n_dh = 8;
    std::pair<double, double> band{3.5e9, 4.0e9};
    double resonance_split = 0.3e9;
    std::vector<double> nominal_gap_widths;  // also the deployed structure
    std::vector<double> gap_lower, gap_upper;
    std::vector<std::vector<double>> sampled_gap_axes;
    std::vector<std::string> material_names;
    std::vector<circuit::MaterialSensitivity> materials;
    std::vector<double> normal_condition;                      // per unit
    std::map<std::string, std::vector<double>> anomaly_conditions;  // per named anomaly
    channel::AntennaPattern tx_pattern, rx_pattern;
    double tx_power = 1.0;
    double sensor_unit_side = 14.54e-3;  // l_s

    int horizon = 100;       // T
    int post_trials = 50;
    std::uint64_t seed = 1;
    std::optional<double> snr_db = 65.0;  // nullopt = noiseless
    std::vector<AnomalyEvent> anomalies;
    sensing::PipelineConfig pipeline;
    double sigma_m = 1.0;  // Proposition 2 noise scale exposed as a utility

    static ScenarioConfig from_json_file(const std::string& path);
    static ScenarioConfig from_json_text(const std::string& text);
    std::string to_json_text() const;

    channel::SensingScene scene() const;  // calibrates parasitics on demand
    channel::FrequencyGrid grid() const { return channel::FrequencyGrid::linspace(f_lb, f_ub, static_cast<std::size_t>(n_f)); }
    circuit::SensorStructure structure() const { return {nominal_gap_widths}; }
    optim::DesignSpace design_space() const;
    optim::ConditionSet condition_set() const;  // normal + each anomaly endpoint
    circuit::EnvCondition condition_for(int k, int i, int t) const;
    std::uint64_t scene_hash() const;
    void validate() const;
};

// Synthetic series: noiseless physics per cell condition plus circular
// complex noise at the configured SNR; per (t, k, i, m) RNG substreams.
std::vector<sensing::MeasurementSet> generate_series(const ScenarioConfig& cfg, int t_begin,
                                                     int t_end, Exec exec = Exec::parallel);

struct DetectionSummary {
    std::vector<sensing::AnomalyReport> reports;
    double false_alarm = 0.0;
    std::optional<double> miss;  // absent when the schedule has no anomalies
    std::optional<double> localization_accuracy;
    int normal_trials = 0, anomalous_trials = 0;
};

DetectionSummary run_detection_experiment(const ScenarioConfig& cfg,
                                          const sensing::TrainedPipeline& pipeline,
                                          Exec exec = Exec::parallel);

struct RocPoint {
    double threshold = 0.0;
    double false_alarm = 0.0;
    double miss_detection = 0.0;
};
struct RocCurve {
    std::vector<RocPoint> points;
    void validate() const;
};

RocCurve roc(const std::vector<double>& normal_scores, const std::vector<double>& anomalous_scores,
             const std::vector<double>& thresholds);

struct SweepRow {
    double value = 0.0;
    std::map<std::string, double> fields;
};
enum class SweepAxis { distance, severity, snr, depth };

std::vector<SweepRow> sweep(const ScenarioConfig& cfg, SweepAxis axis,
                            const std::vector<double>& values, Exec exec = Exec::parallel);

std::string sweep_to_csv(SweepAxis axis, const std::vector<SweepRow>& rows);

// dataset directory IO (manifest.json + t_<idx>.csv)
void save_dataset(const std::string& dir, const ScenarioConfig& cfg,
                  const std::vector<sensing::MeasurementSet>& series);
std::pair<ScenarioConfig, std::vector<sensing::MeasurementSet>> load_dataset(const std::string& dir);

// checkpoint directory IO (checkpoint.json + weights.f64 + stats/baselines)
void save_pipeline(const std::string& dir, const sensing::TrainedPipeline& pipeline);
sensing::TrainedPipeline load_pipeline(const std::string& dir);

}  // namespace metaiot::harness

#endif
