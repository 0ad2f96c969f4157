// metaiot command line: scenario simulation, structure design, training and
// anomaly detection experiments.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "metaiot/harness.hpp"

namespace fs = std::filesystem;
using namespace metaiot;

namespace {

harness::ScenarioConfig load_config(const std::string& path) {
    return harness::ScenarioConfig::from_json_file(path);
}

int cmd_calibrate(const std::string& config_path, const std::string& out_dir) {
    const auto cfg = load_config(config_path);
    const auto params = circuit::calibrate_parasitics(cfg.band, cfg.nominal_gap_widths,
                                                      cfg.resonance_split);
    nlohmann::json units = nlohmann::json::array();
    for (std::size_t n = 0; n < params.units.size(); ++n) {
        const auto& u = params.units[n];
        units.push_back({{"parasitic_inductance", u.parasitic_inductance},
                         {"parasitic_capacitance", u.parasitic_capacitance},
                         {"unit_gap_capacitance", u.unit_gap_capacitance},
                         {"resonance_hz", circuit::unit_resonance(u, cfg.nominal_gap_widths[n])}});
    }
    nlohmann::json j{{"units", units},
                     {"coupling_capacitance", params.coupling_capacitance},
                     {"characteristic_impedance", params.characteristic_impedance}};
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "calibration.json");
    out << j.dump(2) << '\n';
    std::cout << "calibration written to " << (fs::path(out_dir) / "calibration.json").string()
              << '\n';
    for (std::size_t n = 0; n < params.units.size(); ++n) {
        std::cout << "unit " << n + 1 << " resonance "
                  << circuit::unit_resonance(params.units[n], cfg.nominal_gap_widths[n]) / 1e9
                  << " GHz\n";
    }
    return 0;
}

int cmd_design(const std::string& config_path, std::uint64_t seed, int budget,
               const std::string& out_file) {
    auto cfg = load_config(config_path);
    cfg.seed = seed;
    const auto scene_base = cfg.scene();
    const auto grid = cfg.grid();
    const auto conds = cfg.condition_set();
    const auto space = cfg.design_space();

    const auto objective = [&](const std::vector<double>& d) {
        return optim::discernibility({d}, conds, scene_base, grid, cfg.n_dh);
    };

    const double upsilon = 0.01 * space.box_diagonal();
    const auto result = optim::surrogate_optimize(objective, space, upsilon, seed, budget,
                                                  space.sampled_grid());

    nlohmann::json j{{"d_star", result.best.gap_widths},
                     {"psi", result.best_value},
                     {"evaluations", result.trace.size()},
                     {"termination", result.termination},
                     {"truncated", result.truncated}};
    {
        fs::create_directories(fs::path(out_file).parent_path().empty()
                                   ? "."
                                   : fs::path(out_file).parent_path().string());
        std::ofstream out(out_file);
        out << j.dump(2) << '\n';
    }
    {
        std::ofstream trace(fs::path(out_file).replace_extension(".trace.csv"));
        trace << "iter";
        for (std::size_t k = 0; k < space.dimension(); ++k) trace << ",d" << k + 1;
        trace << ",psi\n";
        trace.precision(12);
        for (const auto& e : result.trace) {
            trace << e.iteration;
            for (double v : e.d) trace << ',' << v;
            trace << ',' << e.value << '\n';
        }
    }
    std::cout << "best structure:";
    for (double v : result.best.gap_widths) std::cout << ' ' << v * 1e3 << " mm";
    std::cout << "  psi = " << result.best_value << "  (" << result.termination << ")\n";
    return 0;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out_dir) {
    auto cfg = load_config(config_path);
    cfg.seed = seed;
    cfg.pipeline.seed = seed;
    const auto series = harness::generate_series(cfg, 1, cfg.horizon + cfg.post_trials);
    harness::save_dataset(out_dir, cfg, series);
    std::cout << "wrote " << series.size() << " time steps to " << out_dir << '\n';
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out_dir) {
    auto [cfg, series] = harness::load_dataset(data_dir);
    std::vector<sensing::MeasurementSet> pre_t;
    for (auto& ms : series) {
        if (ms.t <= cfg.horizon) pre_t.push_back(std::move(ms));
    }
    const auto pipeline = sensing::train_pipeline(pre_t, cfg.pipeline, cfg.scene_hash());
    harness::save_pipeline(out_dir, pipeline);
    std::cout << "trained on " << pre_t.size() << " steps, final loss "
              << pipeline.loss_history.back() << ", gamma threshold "
              << pipeline.baselines.gamma_threshold << '\n';
    return 0;
}

int cmd_detect(const std::string& data_dir, const std::string& model_dir,
               const std::string& out_dir) {
    auto [cfg, series] = harness::load_dataset(data_dir);
    const auto pipeline = harness::load_pipeline(model_dir);
    if (pipeline.scene_hash != cfg.scene_hash()) {
        throw config_error("detect: model geometry/grid hash does not match the dataset");
    }
    fs::create_directories(out_dir);
    std::ofstream all(fs::path(out_dir) / "reports.jsonl");
    int detections = 0, count = 0;
    for (const auto& ms : series) {
        if (ms.t <= cfg.horizon) continue;
        const auto report = sensing::evaluate_measurement(ms, pipeline);
        all << sensing::report_to_json(report) << '\n';
        detections += report.indicator;
        ++count;
    }
    std::cout << detections << " detections over " << count << " post-horizon steps\n";
    return 0;
}

int cmd_eval_roc(const std::string& data_dir, const std::string& model_dir,
                 const std::string& out_dir) {
    auto [cfg, series] = harness::load_dataset(data_dir);
    const auto pipeline = harness::load_pipeline(model_dir);
    std::vector<double> normal, anomalous;
    for (const auto& ms : series) {
        if (ms.t <= cfg.horizon) continue;
        const auto report = sensing::evaluate_measurement(ms, pipeline);
        bool is_anomalous = false;
        for (const auto& a : cfg.anomalies) is_anomalous |= a.t == ms.t;
        (is_anomalous ? anomalous : normal).push_back(report.gamma);
    }
    std::vector<double> thresholds;
    for (double g : normal) thresholds.push_back(g);
    for (double g : anomalous) thresholds.push_back(g);
    const auto curve = harness::roc(normal, anomalous, thresholds);
    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "roc.csv");
    out << "threshold,false_alarm_ratio,miss_detection_ratio\n";
    out.precision(12);
    for (const auto& p : curve.points) {
        out << p.threshold << ',' << p.false_alarm << ',' << p.miss_detection << '\n';
    }
    std::cout << "roc with " << curve.points.size() << " points written\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, std::uint64_t seed, const std::string& axis_name,
              std::vector<double> values, const std::string& out_dir) {
    auto cfg = load_config(config_path);
    cfg.seed = seed;
    cfg.pipeline.seed = seed;

    fs::create_directories(out_dir);
    if (axis_name == "height") {
        // beam scan: received power over target heights, one CSV per array
        const auto scene = cfg.scene();
        const auto grid = cfg.grid();
        const circuit::EnvCondition c{cfg.normal_condition};
        std::ofstream out(fs::path(out_dir) / "height_scan.csv");
        out << "i,h,power_db\n";
        out.precision(12);
        for (int i = 1; i <= cfg.geometry.array_count(); ++i) {
            for (double h : values) {
                channel::SensingScene unconstrained = scene;
                unconstrained.geometry.array_width = 1e9;  // scan beyond the physical span
                const auto rv = channel::received_vector(
                    i, cfg.structure(), c, h, cfg.geometry.measuring_distances.front(), grid,
                    unconstrained);
                double p = 0.0;
                for (const cplx& y : rv.y) p += std::norm(y);
                out << i << ',' << h << ',' << 10.0 * std::log10(p) << '\n';
            }
        }
        std::cout << "height scan written\n";
        return 0;
    }

    harness::SweepAxis axis;
    if (axis_name == "distance") {
        axis = harness::SweepAxis::distance;
    } else if (axis_name == "severity") {
        axis = harness::SweepAxis::severity;
    } else if (axis_name == "snr") {
        axis = harness::SweepAxis::snr;
    } else if (axis_name == "depth") {
        axis = harness::SweepAxis::depth;
    } else {
        throw config_error("unknown sweep axis " + axis_name);
    }
    const auto rows = harness::sweep(cfg, axis, values);
    std::ofstream out(fs::path(out_dir) / (axis_name + "_sweep.csv"));
    out << harness::sweep_to_csv(axis, rows);
    std::cout << rows.size() << " sweep rows written\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"meta-material sensor simulation and sensing toolkit"};
    app.require_subcommand(1);

    std::string config_path, out = "out", data_dir, model_dir, axis;
    std::uint64_t seed = 1;
    int budget = 200;
    std::vector<double> values;

    auto* calibrate = app.add_subcommand("calibrate", "solve circuit parasitics for the band");
    calibrate->add_option("--config", config_path)->required();
    calibrate->add_option("--out", out);

    auto* design = app.add_subcommand("design", "optimize the structure for discernibility");
    design->add_option("--config", config_path)->required();
    design->add_option("--seed", seed);
    design->add_option("--budget", budget);
    design->add_option("--out", out)->default_val("design.json");

    auto* simulate = app.add_subcommand("simulate", "synthesize a measurement dataset");
    simulate->add_option("--config", config_path)->required();
    simulate->add_option("--seed", seed);
    simulate->add_option("--out", out);

    auto* train = app.add_subcommand("train", "train the sensing pipeline on a dataset");
    train->add_option("--data", data_dir)->required();
    train->add_option("--out", out);

    auto* detect = app.add_subcommand("detect", "run detection over post-horizon steps");
    detect->add_option("--data", data_dir)->required();
    detect->add_option("--model", model_dir)->required();
    detect->add_option("--out", out);

    auto* roc = app.add_subcommand("eval-roc", "false alarm vs miss detection curve");
    roc->add_option("--data", data_dir)->required();
    roc->add_option("--model", model_dir)->required();
    roc->add_option("--out", out);

    auto* sweep = app.add_subcommand("sweep", "experiment sweeps over one axis");
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--seed", seed);
    sweep->add_option("--axis", axis)->required();
    sweep->add_option("--values", values)->required()->delimiter(',');
    sweep->add_option("--out", out);

    CLI11_PARSE(app, argc, argv);

    try {
        if (calibrate->parsed()) return cmd_calibrate(config_path, out);
        if (design->parsed()) return cmd_design(config_path, seed, budget, out);
        if (simulate->parsed()) return cmd_simulate(config_path, seed, out);
        if (train->parsed()) return cmd_train(data_dir, out);
        if (detect->parsed()) return cmd_detect(data_dir, model_dir, out);
        if (roc->parsed()) return cmd_eval_roc(data_dir, model_dir, out);
        if (sweep->parsed()) return cmd_sweep(config_path, seed, axis, values, out);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
