#include "metaiot/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "metaiot/rng.hpp"

namespace metaiot::harness {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json geometry_to_json(const channel::SystemGeometry& g) {
    return json{{"tx_count", g.tx_count},
                {"tx_spacing", g.tx_spacing},
                {"tx_center_height", g.tx_center_height},
                {"rx_heights", g.rx_heights},
                {"array_center_heights", g.array_center_heights},
                {"array_width", g.array_width},
                {"sensors_per_column", g.sensors_per_column},
                {"measuring_distances", g.measuring_distances},
                {"location_count", g.location_count},
                {"wall",
                 {{"attenuation", g.wall.attenuation},
                  {"refraction_index", g.wall.refraction_index},
                  {"thickness", g.wall.thickness}}}};
}

channel::SystemGeometry geometry_from_json(const json& j) {
    channel::SystemGeometry g;
    g.tx_count = j.at("tx_count").get<int>();
    g.tx_spacing = j.at("tx_spacing").get<double>();
    g.tx_center_height = j.at("tx_center_height").get<double>();
    g.rx_heights = j.at("rx_heights").get<std::vector<double>>();
    g.array_center_heights = j.at("array_center_heights").get<std::vector<double>>();
    g.array_width = j.at("array_width").get<double>();
    g.sensors_per_column = j.at("sensors_per_column").get<int>();
    g.measuring_distances = j.at("measuring_distances").get<std::vector<double>>();
    g.location_count = j.at("location_count").get<int>();
    const auto& w = j.at("wall");
    g.wall.attenuation = w.at("attenuation").get<double>();
    g.wall.refraction_index = w.at("refraction_index").get<double>();
    g.wall.thickness = w.at("thickness").get<double>();
    return g;
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw config_error(std::string("config parse failure: ") + e.what());
    }
    try {
        ScenarioConfig c;
        c.geometry = geometry_from_json(j.at("geometry"));
        const auto& fg = j.at("frequency_grid");
        c.f_lb = fg.at("f_lb").get<double>();
        c.f_ub = fg.at("f_ub").get<double>();
        c.n_f = fg.at("count").get<int>();
        const auto& sensor = j.at("sensor");
        c.band = {sensor.at("band").at(0).get<double>(), sensor.at("band").at(1).get<double>()};
        c.resonance_split = sensor.at("resonance_split").get<double>();
        c.nominal_gap_widths = sensor.at("nominal_gap_widths").get<std::vector<double>>();
        c.gap_lower = sensor.at("gap_bounds_lower").get<std::vector<double>>();
        c.gap_upper = sensor.at("gap_bounds_upper").get<std::vector<double>>();
        if (sensor.contains("sampled_gap_axes")) {
            c.sampled_gap_axes = sensor.at("sampled_gap_axes").get<std::vector<std::vector<double>>>();
        }
        c.sensor_unit_side = sensor.value("unit_side", 14.54e-3);
        for (const auto& mat : sensor.at("materials")) {
            circuit::MaterialSensitivity m;
            for (const auto& pt : mat.at("points")) {
                m.condition_points.emplace_back(pt.at(0).get<double>(), pt.at(1).get<double>());
            }
            m.validate();
            c.material_names.push_back(mat.value("name", "material"));
            c.materials.push_back(std::move(m));
        }
        if (j.contains("antenna")) {
            c.tx_pattern.exponent = j["antenna"].value("pattern_exponent", 2.0);
            c.tx_pattern.boresight_gain = j["antenna"].value("boresight_gain", 1.0);
            c.rx_pattern = c.tx_pattern;
        }
        c.tx_power = j.value("tx_power", 1.0);
        const auto& cond = j.at("conditions");
        c.normal_condition = cond.at("normal").get<std::vector<double>>();
        if (cond.contains("anomalies")) {
            for (const auto& [name, vals] : cond.at("anomalies").items()) {
                c.anomaly_conditions[name] = vals.get<std::vector<double>>();
            }
        }
        c.horizon = j.value("horizon", 100);
        c.post_trials = j.value("post_trials", 50);
        c.seed = j.value("seed", std::uint64_t{1});
        if (j.contains("snr_db") && !j.at("snr_db").is_null()) {
            c.snr_db = j.at("snr_db").get<double>();
        } else {
            c.snr_db.reset();
        }
        if (j.contains("anomalies")) {
            for (const auto& a : j.at("anomalies")) {
                AnomalyEvent e;
                e.t = a.at("t").get<int>();
                e.k = a.at("k").get<int>();
                e.i = a.at("i").get<int>();
                e.type = a.at("type").get<std::string>();
                e.severity = a.value("severity", 1.0);
                e.unit = a.value("unit", -1);
                c.anomalies.push_back(e);
            }
        }
        if (j.contains("training")) {
            const auto& tr = j.at("training");
            c.pipeline.depth = tr.value("depth", 4);
            c.pipeline.l_cut = tr.value("l_cut", 32);
            c.pipeline.base_channels = tr.value("base_channels", 32);
            c.pipeline.epochs = tr.value("epochs", 200);
            c.pipeline.learning_rate = tr.value("learning_rate", 1e-3);
            c.pipeline.kappa = tr.value("kappa", 3.0);
            c.pipeline.holdout_fraction = tr.value("holdout_fraction", 0.2);
        }
        c.sigma_m = j.value("sigma_m", 1.0);
        c.pipeline.seed = c.seed;
        c.validate();
        return c;
    } catch (const config_error&) {
        throw;
    } catch (const std::exception& e) {
        throw config_error(std::string("config field failure: ") + e.what());
    }
}

std::string ScenarioConfig::to_json_text() const {
    json sensor{{"band", {band.first, band.second}},
                {"resonance_split", resonance_split},
                {"nominal_gap_widths", nominal_gap_widths},
                {"gap_bounds_lower", gap_lower},
                {"gap_bounds_upper", gap_upper},
                {"unit_side", sensor_unit_side}};
    if (!sampled_gap_axes.empty()) sensor["sampled_gap_axes"] = sampled_gap_axes;
    json mats = json::array();
    for (std::size_t n = 0; n < materials.size(); ++n) {
        json pts = json::array();
        for (const auto& [cv, rho] : materials[n].condition_points) pts.push_back({cv, rho});
        mats.push_back({{"name", material_names[n]}, {"points", pts}});
    }
    sensor["materials"] = mats;

    json anomalies_j = json::array();
    for (const auto& a : anomalies) {
        anomalies_j.push_back({{"t", a.t},
                               {"k", a.k},
                               {"i", a.i},
                               {"type", a.type},
                               {"severity", a.severity},
                               {"unit", a.unit}});
    }
    json cond{{"normal", normal_condition}};
    json anomaly_conds = json::object();
    for (const auto& [name, vals] : anomaly_conditions) anomaly_conds[name] = vals;
    cond["anomalies"] = anomaly_conds;

    json j{{"geometry", geometry_to_json(geometry)},
           {"frequency_grid", {{"f_lb", f_lb}, {"f_ub", f_ub}, {"count", n_f}}},
           {"sensor", sensor},
           {"antenna",
            {{"pattern_exponent", tx_pattern.exponent}, {"boresight_gain", tx_pattern.boresight_gain}}},
           {"tx_power", tx_power},
           {"conditions", cond},
           {"horizon", horizon},
           {"post_trials", post_trials},
           {"seed", seed},
           {"anomalies", anomalies_j},
           {"training",
            {{"depth", pipeline.depth},
             {"l_cut", pipeline.l_cut},
             {"base_channels", pipeline.base_channels},
             {"epochs", pipeline.epochs},
             {"learning_rate", pipeline.learning_rate},
             {"kappa", pipeline.kappa},
             {"holdout_fraction", pipeline.holdout_fraction}}},
           {"sigma_m", sigma_m}};
    if (snr_db) {
        j["snr_db"] = *snr_db;
    } else {
        j["snr_db"] = nullptr;
    }
    return j.dump(2);
}

channel::SensingScene ScenarioConfig::scene() const {
    channel::SensingScene s;
    s.geometry = geometry;
    s.tx_pattern = tx_pattern;
    s.rx_pattern = rx_pattern;
    s.circuit_params = circuit::calibrate_parasitics(band, nominal_gap_widths, resonance_split);
    s.materials = materials;
    s.tx_power = tx_power;
    return s;
}

optim::DesignSpace ScenarioConfig::design_space() const {
    optim::DesignSpace space;
    space.lower = gap_lower;
    space.upper = gap_upper;
    space.sampled_axes = sampled_gap_axes;
    return space;
}

optim::ConditionSet ScenarioConfig::condition_set() const {
    optim::ConditionSet cs;
    cs.conditions.push_back({normal_condition});
    for (const auto& [name, vals] : anomaly_conditions) cs.conditions.push_back({vals});
    return cs;
}

circuit::EnvCondition ScenarioConfig::condition_for(int k, int i, int t) const {
    circuit::EnvCondition c{normal_condition};
    for (const auto& a : anomalies) {
        if (a.t != t || a.k != k || a.i != i) continue;
        const auto it = anomaly_conditions.find(a.type);
        if (it == anomaly_conditions.end()) throw config_error("unknown anomaly type " + a.type);
        for (std::size_t n = 0; n < c.values.size(); ++n) {
            c.values[n] += a.severity * (it->second[n] - normal_condition[n]);
        }
    }
    return c;
}

std::uint64_t ScenarioConfig::scene_hash() const {
    // FNV-1a over the canonical geometry/grid description
    std::ostringstream os;
    os.precision(17);
    os << geometry.tx_count << '|' << geometry.tx_spacing << '|' << geometry.tx_center_height;
    for (double h : geometry.rx_heights) os << '|' << h;
    for (double h : geometry.array_center_heights) os << '|' << h;
    os << '|' << geometry.array_width << '|' << geometry.location_count << '|' << f_lb << '|'
       << f_ub << '|' << n_f << '|' << n_dh;
    for (double d : nominal_gap_widths) os << '|' << d;
    std::uint64_t h = 1469598103934665603ULL;
    for (char ch : os.str()) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ULL;
    }
    return h;
}

void ScenarioConfig::validate() const {
    geometry.validate();
    if (n_f < 2) throw config_error("frequency grid needs at least two points");
    if (nominal_gap_widths.empty()) throw config_error("no sensor units configured");
    if (materials.size() != nominal_gap_widths.size()) {
        throw config_error("one material per sensor unit required");
    }
    if (normal_condition.size() != materials.size()) {
        throw config_error("normal condition dimension mismatch");
    }
    for (const auto& [name, vals] : anomaly_conditions) {
        if (vals.size() != materials.size()) {
            throw config_error("anomaly condition dimension mismatch for " + name);
        }
    }
    for (const auto& a : anomalies) {
        if (a.t <= horizon) throw config_error("anomaly times must be after the training horizon");
        if (a.k < 1 || a.k > geometry.location_count || a.i < 1 || a.i > geometry.array_count()) {
            throw config_error("anomaly indices out of range");
        }
        if (!anomaly_conditions.count(a.type)) throw config_error("unknown anomaly type " + a.type);
    }
    if (horizon < 10) throw config_error("training horizon must be at least 10");
    if (n_dh < 1) throw config_error("n_dh must be positive");
}

namespace {

// mean noiseless power over the (k, i, m, f) cube under normal conditions
double mean_signal_power(const ScenarioConfig& cfg, const channel::SensingScene& scene,
                         const channel::FrequencyGrid& grid) {
    double sum = 0.0;
    std::size_t count = 0;
    const circuit::SensorStructure d = cfg.structure();
    const circuit::EnvCondition c{cfg.normal_condition};
    for (int k = 1; k <= cfg.geometry.location_count; ++k) {
        for (int i = 1; i <= cfg.geometry.array_count(); ++i) {
            for (int m = 1; m <= cfg.n_dh; ++m) {
                const double h =
                    cfg.geometry.array_center_heights[static_cast<std::size_t>(i - 1)] +
                    channel::height_displacement(m, cfg.n_dh, cfg.geometry);
                const auto rv = channel::received_vector(
                    i, d, c, h, cfg.geometry.measuring_distances.front(), grid, scene, 0,
                    Exec::serial);
                for (const cplx& y : rv.y) {
                    sum += std::norm(y);
                    ++count;
                }
            }
        }
    }
    return sum / static_cast<double>(count);
}

}  // namespace

std::vector<sensing::MeasurementSet> generate_series(const ScenarioConfig& cfg, int t_begin,
                                                     int t_end, Exec exec) {
    if (t_end < t_begin) throw config_error("generate_series: empty time range");
    const channel::SensingScene scene = cfg.scene();
    const channel::FrequencyGrid grid = cfg.grid();
    const double D = cfg.geometry.measuring_distances.front();
    const int n_loc = cfg.geometry.location_count;
    const int n_ar = cfg.geometry.array_count();

    double noise_sigma2 = 0.0;
    if (cfg.snr_db) {
        noise_sigma2 = mean_signal_power(cfg, scene, grid) / std::pow(10.0, *cfg.snr_db / 10.0);
    }

    const int count = t_end - t_begin + 1;
    std::vector<sensing::MeasurementSet> series(static_cast<std::size_t>(count));
    const circuit::SensorStructure d = cfg.structure();

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
#endif
    for (int idx = 0; idx < count; ++idx) {
        const int t = t_begin + idx;
        sensing::MeasurementSet ms(t, n_loc, n_ar, cfg.n_dh, cfg.n_f);
        for (int k = 1; k <= n_loc; ++k) {
            for (int i = 1; i <= n_ar; ++i) {
                const circuit::EnvCondition c = cfg.condition_for(k, i, t);
                for (int m = 1; m <= cfg.n_dh; ++m) {
                    const double h =
                        cfg.geometry.array_center_heights[static_cast<std::size_t>(i - 1)] +
                        channel::height_displacement(m, cfg.n_dh, cfg.geometry);
                    auto rv = channel::received_vector(i, d, c, h, D, grid, scene, 0, Exec::serial);
                    Rng rng(substream(cfg.seed, static_cast<std::uint64_t>(t),
                                      static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(i),
                                      static_cast<std::uint64_t>(m)));
                    double* out = ms.cell(k - 1, i - 1, m - 1);
                    for (int fidx = 0; fidx < cfg.n_f; ++fidx) {
                        cplx y = rv.y[static_cast<std::size_t>(fidx)];
                        if (cfg.snr_db) {
                            const double s = std::sqrt(noise_sigma2 / 2.0);
                            y += cplx(s * rng.normal(), s * rng.normal());
                        }
                        const double mag = std::abs(y);
                        out[fidx] = mag > 0.0 ? 10.0 * std::log10(mag) : kDbFloor;
                    }
                }
            }
        }
        series[static_cast<std::size_t>(idx)] = std::move(ms);
    }
    (void)exec;
    return series;
}

DetectionSummary run_detection_experiment(const ScenarioConfig& cfg,
                                          const sensing::TrainedPipeline& pipeline, Exec exec) {
    if (pipeline.scene_hash != cfg.scene_hash()) {
        throw config_error("run_detection_experiment: pipeline was trained for another scenario");
    }
    const int t_begin = cfg.horizon + 1;
    const int t_end = cfg.horizon + cfg.post_trials;
    const auto series = generate_series(cfg, t_begin, t_end, exec);

    DetectionSummary summary;
    int false_alarms = 0, misses = 0, correct_loc = 0;
    for (const auto& ms : series) {
        const auto report = sensing::evaluate_measurement(ms, pipeline, exec);
        const AnomalyEvent* truth = nullptr;
        for (const auto& a : cfg.anomalies) {
            if (a.t == ms.t) {
                truth = &a;
                break;
            }
        }
        if (truth == nullptr) {
            ++summary.normal_trials;
            if (report.indicator == 1) ++false_alarms;
        } else {
            ++summary.anomalous_trials;
            if (report.indicator == 0) {
                ++misses;
            } else if (report.location && report.location->i_ver == truth->i &&
                       report.location->i_hor == truth->k) {
                ++correct_loc;
            }
        }
        summary.reports.push_back(report);
    }
    summary.false_alarm = summary.normal_trials > 0
                              ? static_cast<double>(false_alarms) / summary.normal_trials
                              : 0.0;
    if (summary.anomalous_trials > 0) {
        summary.miss = static_cast<double>(misses) / summary.anomalous_trials;
        summary.localization_accuracy =
            static_cast<double>(correct_loc) / summary.anomalous_trials;
    }
    return summary;
}

void RocCurve::validate() const {
    for (std::size_t k = 1; k < points.size(); ++k) {
        if (points[k].false_alarm > points[k - 1].false_alarm + 1e-12) {
            throw data_error("RocCurve: false alarm must be non-increasing in threshold");
        }
        if (points[k].miss_detection + 1e-12 < points[k - 1].miss_detection) {
            throw data_error("RocCurve: miss detection must be non-decreasing in threshold");
        }
    }
}

RocCurve roc(const std::vector<double>& normal_scores, const std::vector<double>& anomalous_scores,
             const std::vector<double>& thresholds) {
    if (normal_scores.empty() || anomalous_scores.empty()) {
        throw data_error("roc: need at least one normal and one anomalous trial");
    }
    std::vector<double> sorted = thresholds;
    std::sort(sorted.begin(), sorted.end());
    RocCurve curve;
    for (double th : sorted) {
        RocPoint p;
        p.threshold = th;
        int fa = 0;
        for (double s : normal_scores) fa += s > th ? 1 : 0;
        int miss = 0;
        for (double s : anomalous_scores) miss += s <= th ? 1 : 0;
        p.false_alarm = static_cast<double>(fa) / static_cast<double>(normal_scores.size());
        p.miss_detection = static_cast<double>(miss) / static_cast<double>(anomalous_scores.size());
        curve.points.push_back(p);
    }
    curve.validate();
    return curve;
}

namespace {

// one full train + detect cycle for sweeps
DetectionSummary train_and_detect(const ScenarioConfig& cfg, Exec exec, double* train_s) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto series = generate_series(cfg, 1, cfg.horizon, exec);
    const auto pipeline = sensing::train_pipeline(series, cfg.pipeline, cfg.scene_hash(), exec);
    if (train_s != nullptr) {
        *train_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return run_detection_experiment(cfg, pipeline, exec);
}

double mean_injected_score(const ScenarioConfig& cfg, const DetectionSummary& summary) {
    double sum = 0.0;
    int count = 0;
    for (const auto& report : summary.reports) {
        for (const auto& a : cfg.anomalies) {
            if (a.t != report.t) continue;
            sum += report.tau[static_cast<std::size_t>(a.k - 1)][static_cast<std::size_t>(a.i - 1)];
            ++count;
        }
    }
    return count > 0 ? sum / count : 0.0;
}

double mean_other_score(const ScenarioConfig& cfg, const DetectionSummary& summary) {
    double sum = 0.0;
    int count = 0;
    for (const auto& report : summary.reports) {
        const AnomalyEvent* truth = nullptr;
        for (const auto& a : cfg.anomalies) {
            if (a.t == report.t) truth = &a;
        }
        if (truth == nullptr) continue;
        for (std::size_t k = 0; k < report.tau.size(); ++k) {
            for (std::size_t i = 0; i < report.tau[k].size(); ++i) {
                if (static_cast<int>(k) == truth->k - 1 && static_cast<int>(i) == truth->i - 1) {
                    continue;
                }
                sum += report.tau[k][i];
                ++count;
            }
        }
    }
    return count > 0 ? sum / count : 0.0;
}

}  // namespace

std::vector<SweepRow> sweep(const ScenarioConfig& cfg, SweepAxis axis,
                            const std::vector<double>& values, Exec exec) {
    std::vector<SweepRow> rows;
    double base_train_time = -1.0;
    for (double value : values) {
        ScenarioConfig run = cfg;
        SweepRow row;
        row.value = value;
        switch (axis) {
            case SweepAxis::distance:
                run.geometry.measuring_distances = {value};
                break;
            case SweepAxis::severity:
                for (auto& a : run.anomalies) a.severity = value;
                break;
            case SweepAxis::snr:
                run.snr_db = value;
                break;
            case SweepAxis::depth:
                run.pipeline.depth = static_cast<int>(value);
                break;
        }
        double train_s = 0.0;
        const DetectionSummary summary = train_and_detect(run, exec, &train_s);
        row.fields["false_alarm"] = summary.false_alarm;
        row.fields["miss"] = summary.miss.value_or(0.0);
        row.fields["score_injected"] = mean_injected_score(run, summary);
        row.fields["score_other"] = mean_other_score(run, summary);
        row.fields["score_difference"] = row.fields["score_injected"] - row.fields["score_other"];
        if (axis == SweepAxis::depth) {
            if (base_train_time < 0) base_train_time = train_s;
            row.fields["training_time_normalized"] = train_s / base_train_time;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_to_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os.precision(10);
    const char* name = axis == SweepAxis::distance   ? "D"
                       : axis == SweepAxis::severity ? "severity"
                       : axis == SweepAxis::snr      ? "snr_db"
                                                     : "depth";
    os << name;
    if (!rows.empty()) {
        for (const auto& [key, _] : rows.front().fields) os << ',' << key;
    }
    os << '\n';
    for (const auto& row : rows) {
        os << row.value;
        for (const auto& [_, v] : row.fields) os << ',' << v;
        os << '\n';
    }
    return os.str();
}

void save_dataset(const std::string& dir, const ScenarioConfig& cfg,
                  const std::vector<sensing::MeasurementSet>& series) {
    fs::create_directories(dir);
    {
        std::ofstream manifest(fs::path(dir) / "manifest.json");
        json j = json::parse(cfg.to_json_text());
        j["time_steps"] = series.size();
        manifest << j.dump(2) << '\n';
    }
    for (const auto& ms : series) {
        std::ofstream out(fs::path(dir) / ("t_" + std::to_string(ms.t) + ".csv"));
        out << "i,m,k,f_index,p_db\n";
        out.precision(17);
        for (int k = 0; k < ms.n_loc; ++k) {
            for (int i = 0; i < ms.n_ar; ++i) {
                for (int m = 0; m < ms.n_dh; ++m) {
                    const double* cell = ms.cell(k, i, m);
                    for (int f = 0; f < ms.n_f; ++f) {
                        out << (i + 1) << ',' << (m + 1) << ',' << (k + 1) << ',' << f << ','
                            << cell[f] << '\n';
                    }
                }
            }
        }
    }
}

std::pair<ScenarioConfig, std::vector<sensing::MeasurementSet>> load_dataset(
    const std::string& dir) {
    std::ifstream manifest(fs::path(dir) / "manifest.json");
    if (!manifest) throw data_error("load_dataset: missing manifest.json in " + dir);
    std::stringstream ss;
    ss << manifest.rdbuf();
    ScenarioConfig cfg = ScenarioConfig::from_json_text(ss.str());

    std::vector<int> ts;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("t_", 0) == 0 && entry.path().extension() == ".csv") {
            ts.push_back(std::stoi(name.substr(2, name.size() - 6)));
        }
    }
    std::sort(ts.begin(), ts.end());
    std::vector<sensing::MeasurementSet> series;
    for (int t : ts) {
        sensing::MeasurementSet ms(t, cfg.geometry.location_count, cfg.geometry.array_count(),
                                   cfg.n_dh, cfg.n_f);
        std::ifstream in(fs::path(dir) / ("t_" + std::to_string(t) + ".csv"));
        std::string line;
        std::getline(in, line);  // header
        std::size_t rows = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::stringstream ls(line);
            std::string tok;
            std::getline(ls, tok, ',');
            const int i = std::stoi(tok) - 1;
            std::getline(ls, tok, ',');
            const int m = std::stoi(tok) - 1;
            std::getline(ls, tok, ',');
            const int k = std::stoi(tok) - 1;
            std::getline(ls, tok, ',');
            const int f = std::stoi(tok);
            std::getline(ls, tok, ',');
            ms.cell(k, i, m)[f] = std::stod(tok);
            ++rows;
        }
        if (rows != ms.data.size()) {
            throw data_error("load_dataset: incomplete index cube in t_" + std::to_string(t));
        }
        series.push_back(std::move(ms));
    }
    if (series.empty()) throw data_error("load_dataset: no time steps in " + dir);
    return {std::move(cfg), std::move(series)};
}

void save_pipeline(const std::string& dir, const sensing::TrainedPipeline& pipeline) {
    fs::create_directories(dir);
    const std::vector<double> params = pipeline.network.parameters();
    {
        std::ofstream bin(fs::path(dir) / "weights.f64", std::ios::binary);
        bin.write(reinterpret_cast<const char*>(params.data()),
                  static_cast<std::streamsize>(params.size() * sizeof(double)));
    }
    json j{{"depth", pipeline.config.depth},
           {"l_cut", pipeline.config.l_cut},
           {"base_channels", pipeline.config.base_channels},
           {"epochs", pipeline.config.epochs},
           {"learning_rate", pipeline.config.learning_rate},
           {"kappa", pipeline.config.kappa},
           {"holdout_fraction", pipeline.config.holdout_fraction},
           {"seed", pipeline.config.seed},
           {"scene_hash", pipeline.scene_hash},
           {"in_channels", pipeline.network.spec().in_channels},
           {"input_h", pipeline.network.spec().input_h},
           {"input_w", pipeline.network.spec().input_w},
           {"parameter_count", params.size()},
           {"weights_file", "weights.f64"},
           {"loss_history", pipeline.loss_history},
           {"norm_min", pipeline.stats.mins()},
           {"norm_max", pipeline.stats.maxs()},
           {"baseline_mean_loss", pipeline.baselines.mean_loss},
           {"n_loc", pipeline.baselines.n_loc},
           {"n_ar", pipeline.baselines.n_ar},
           {"gamma_mean", pipeline.baselines.gamma_mean},
           {"gamma_std", pipeline.baselines.gamma_std},
           {"gamma_threshold", pipeline.baselines.gamma_threshold}};
    std::ofstream out(fs::path(dir) / "checkpoint.json");
    out << j.dump(2) << '\n';
}

sensing::TrainedPipeline load_pipeline(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "checkpoint.json");
    if (!in) throw data_error("load_pipeline: missing checkpoint.json in " + dir);
    json j;
    in >> j;

    sensing::TrainedPipeline p;
    p.config.depth = j.at("depth").get<int>();
    p.config.l_cut = j.at("l_cut").get<int>();
    p.config.base_channels = j.at("base_channels").get<int>();
    p.config.epochs = j.at("epochs").get<int>();
    p.config.learning_rate = j.at("learning_rate").get<double>();
    p.config.kappa = j.at("kappa").get<double>();
    p.config.holdout_fraction = j.at("holdout_fraction").get<double>();
    p.config.seed = j.at("seed").get<std::uint64_t>();
    p.scene_hash = j.at("scene_hash").get<std::uint64_t>();
    p.loss_history = j.at("loss_history").get<std::vector<double>>();

    const int n_loc = j.at("n_loc").get<int>();
    const int n_ar = j.at("n_ar").get<int>();
    const int in_ch = j.at("in_channels").get<int>();
    const int in_h = j.at("input_h").get<int>();
    const int in_w = j.at("input_w").get<int>();
    p.network = nn::Network(
        nn::NetworkSpec::build(p.config.depth, in_ch, in_h, in_w, p.config.base_channels),
        p.config.seed);

    std::vector<double> params(j.at("parameter_count").get<std::size_t>());
    std::ifstream bin(fs::path(dir) / j.at("weights_file").get<std::string>(), std::ios::binary);
    if (!bin) throw data_error("load_pipeline: missing weight file");
    bin.read(reinterpret_cast<char*>(params.data()),
             static_cast<std::streamsize>(params.size() * sizeof(double)));
    if (bin.gcount() != static_cast<std::streamsize>(params.size() * sizeof(double))) {
        throw data_error("load_pipeline: weight file truncated");
    }
    p.network.set_parameters(params);

    p.stats = sensing::NormStats(n_loc, n_ar, in_w, p.config.l_cut);
    p.stats.set(j.at("norm_min").get<std::vector<double>>(),
                j.at("norm_max").get<std::vector<double>>());
    p.baselines.mean_loss = j.at("baseline_mean_loss").get<std::vector<double>>();
    p.baselines.n_loc = n_loc;
    p.baselines.n_ar = n_ar;
    p.baselines.gamma_mean = j.at("gamma_mean").get<double>();
    p.baselines.gamma_std = j.at("gamma_std").get<double>();
    p.baselines.gamma_threshold = j.at("gamma_threshold").get<double>();
    return p;
}

}  // namespace metaiot::harness
