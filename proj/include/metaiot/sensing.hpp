#ifndef METAIOT_SENSING_HPP
#define METAIOT_SENSING_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "metaiot/common.hpp"
#include "metaiot/neuralnet.hpp"

namespace metaiot::sensing {

// Feature vectors of one measurement time step over the full (k, i, m) cube.
struct MeasurementSet {
    int t = 0;
    int n_loc = 0, n_ar = 0, n_dh = 0, n_f = 0;
    std::vector<double> data;  // [(k, i, m), f] with k, i, m zero based here

    MeasurementSet() = default;
    MeasurementSet(int t_, int n_loc_, int n_ar_, int n_dh_, int n_f_)
        : t(t_), n_loc(n_loc_), n_ar(n_ar_), n_dh(n_dh_), n_f(n_f_),
          data(static_cast<std::size_t>(n_loc_) * n_ar_ * n_dh_ * n_f_, 0.0) {}

    std::size_t cell_index(int k, int i, int m) const {
        return (static_cast<std::size_t>(k) * n_ar + i) * n_dh + m;
    }
    double* cell(int k, int i, int m) { return &data[cell_index(k, i, m) * n_f]; }
    const double* cell(int k, int i, int m) const { return &data[cell_index(k, i, m) * n_f]; }
    int channel_count() const { return n_loc * n_ar; }
};

// Running per-(cell, bin) min/max of truncated spectrum magnitudes.
class NormStats {
public:
    NormStats() = default;
    NormStats(int n_loc, int n_ar, int n_dh, int l_cut);

    int l_cut() const { return l_cut_; }
    void accumulate(std::size_t cell, const std::vector<double>& mags);
    // (x - min) / (max - min); degenerate bins (max == min) map to 0
    std::vector<double> normalize(std::size_t cell, const std::vector<double>& mags) const;

    const std::vector<double>& mins() const { return min_; }
    const std::vector<double>& maxs() const { return max_; }
    void set(std::vector<double> mins, std::vector<double> maxs);
    std::size_t cells() const { return cell_count_; }

private:
    int l_cut_ = 0;
    std::size_t cell_count_ = 0;
    std::vector<double> min_, max_;
};

enum class TransformMode { train, infer };

// FFT magnitudes of bins 2..L_cut+1 (the DC bin is dropped), min-max
// normalized against the stats. Train mode updates the stats first.
std::vector<double> spectrum_transform(const std::vector<double>& p, int l_cut, NormStats& stats,
                                       std::size_t cell, TransformMode mode);

// truncated magnitudes only, no normalization
std::vector<double> truncated_spectrum(const std::vector<double>& p, int l_cut);

// N_ch-channel L_cut x N_dH tensor; channel g = (k-1) N_AR + i holds the
// transformed vectors of array i at location k, one column per height.
nn::Tensor4 assemble_tensor(const MeasurementSet& ms, const NormStats& stats, int l_cut,
                            Exec exec = Exec::parallel);

struct ChannelLosses {
    std::vector<double> per_channel;  // indexed by g = k * N_AR + i (zero based)
    int n_loc = 0, n_ar = 0;
    double mean = 0.0;

    double at(int k, int i) const { return per_channel[static_cast<std::size_t>(k) * n_ar + i]; }
};

ChannelLosses channel_losses(const nn::Tensor4& m, const nn::Tensor4& m_rec, int n_loc, int n_ar);

struct Baselines {
    std::vector<double> mean_loss;  // L_bar per channel
    int n_loc = 0, n_ar = 0;
    double gamma_mean = 0.0;
    double gamma_std = 0.0;
    double gamma_threshold = 0.0;
};

struct PipelineConfig {
    int depth = 4;
    int l_cut = 32;
    int base_channels = 32;
    int epochs = 200;
    double learning_rate = 1e-3;
    double kappa = 3.0;              // Gamma_th = mean + kappa * std over the hold-out
    double holdout_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct TrainedPipeline {
    nn::Network network;
    NormStats stats;
    Baselines baselines;
    PipelineConfig config;
    std::vector<double> loss_history;
    std::uint64_t scene_hash = 0;
};

// Stats over the full pre-T series, training on the leading 80% split,
// baselines and the detection threshold from the trailing hold-out.
TrainedPipeline train_pipeline(const std::vector<MeasurementSet>& series,
                               const PipelineConfig& config, std::uint64_t scene_hash = 0,
                               Exec exec = Exec::parallel);

// tau[k][i] = L / L_bar
std::vector<std::vector<double>> score(const nn::Tensor4& m, const nn::Tensor4& m_rec,
                                       const Baselines& base);

struct Detection {
    int indicator = 0;  // I_ano
    double gamma = 0.0;
};
Detection detect(const std::vector<std::vector<double>>& tau, double gamma_threshold);

struct Location {
    int i_ver = 0;  // array index, 1-based
    int i_hor = 0;  // location index, 1-based
};
// argmax scoring, ties to the lowest index
Location locate(const std::vector<std::vector<double>>& tau);

struct AnomalyReport {
    int t = 0;
    int indicator = 0;
    double gamma = 0.0;
    std::optional<Location> location;
    std::vector<std::vector<double>> tau;
};

AnomalyReport evaluate_measurement(const MeasurementSet& ms, const TrainedPipeline& pipeline,
                                   Exec exec = Exec::parallel);

std::string report_to_json(const AnomalyReport& report);

}  // namespace metaiot::sensing

#endif
