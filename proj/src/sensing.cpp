#include "metaiot/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "metaiot/fft.hpp"

namespace metaiot::sensing {

NormStats::NormStats(int n_loc, int n_ar, int n_dh, int l_cut)
    : l_cut_(l_cut), cell_count_(static_cast<std::size_t>(n_loc) * n_ar * n_dh) {
    min_.assign(cell_count_ * static_cast<std::size_t>(l_cut), std::numeric_limits<double>::infinity());
    max_.assign(cell_count_ * static_cast<std::size_t>(l_cut), -std::numeric_limits<double>::infinity());
}

void NormStats::accumulate(std::size_t cell, const std::vector<double>& mags) {
    if (static_cast<int>(mags.size()) != l_cut_) {
        throw std::invalid_argument("NormStats::accumulate: length mismatch");
    }
    double* mn = &min_[cell * static_cast<std::size_t>(l_cut_)];
    double* mx = &max_[cell * static_cast<std::size_t>(l_cut_)];
    for (int b = 0; b < l_cut_; ++b) {
        mn[b] = std::min(mn[b], mags[static_cast<std::size_t>(b)]);
        mx[b] = std::max(mx[b], mags[static_cast<std::size_t>(b)]);
    }
}

std::vector<double> NormStats::normalize(std::size_t cell, const std::vector<double>& mags) const {
    const double* mn = &min_[cell * static_cast<std::size_t>(l_cut_)];
    const double* mx = &max_[cell * static_cast<std::size_t>(l_cut_)];
    std::vector<double> out(static_cast<std::size_t>(l_cut_));
    for (int b = 0; b < l_cut_; ++b) {
        const double range = mx[b] - mn[b];
        out[static_cast<std::size_t>(b)] =
            range > 0.0 ? (mags[static_cast<std::size_t>(b)] - mn[b]) / range : 0.0;
    }
    return out;
}

void NormStats::set(std::vector<double> mins, std::vector<double> maxs) {
    if (mins.size() != min_.size() || maxs.size() != max_.size()) {
        throw std::invalid_argument("NormStats::set: size mismatch");
    }
    min_ = std::move(mins);
    max_ = std::move(maxs);
}

std::vector<double> truncated_spectrum(const std::vector<double>& p, int l_cut) {
    if (static_cast<int>(p.size()) < l_cut + 1) {
        throw std::invalid_argument("spectrum_transform: N_F must be at least L_cut + 1");
    }
    const auto spectrum = fft::dft_real(p);
    std::vector<double> mags(static_cast<std::size_t>(l_cut));
    // keep bins 2..L_cut+1 (1-based): the first bin is the average bias
    for (int b = 0; b < l_cut; ++b) {
        mags[static_cast<std::size_t>(b)] = std::abs(spectrum[static_cast<std::size_t>(b + 1)]);
    }
    return mags;
}

std::vector<double> spectrum_transform(const std::vector<double>& p, int l_cut, NormStats& stats,
                                       std::size_t cell, TransformMode mode) {
    const std::vector<double> mags = truncated_spectrum(p, l_cut);
    if (mode == TransformMode::train) stats.accumulate(cell, mags);
    return stats.normalize(cell, mags);
}

nn::Tensor4 assemble_tensor(const MeasurementSet& ms, const NormStats& stats, int l_cut,
                            Exec exec) {
    if (ms.data.empty()) throw data_error("assemble_tensor: empty measurement set");
    nn::Tensor4 out(1, ms.channel_count(), l_cut, ms.n_dh);
    const std::ptrdiff_t cells =
        static_cast<std::ptrdiff_t>(ms.n_loc) * ms.n_ar * ms.n_dh;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
#endif
    for (std::ptrdiff_t idx = 0; idx < cells; ++idx) {
        const int m = static_cast<int>(idx % ms.n_dh);
        const int i = static_cast<int>((idx / ms.n_dh) % ms.n_ar);
        const int k = static_cast<int>(idx / (static_cast<std::ptrdiff_t>(ms.n_dh) * ms.n_ar));
        const double* p = ms.cell(k, i, m);
        std::vector<double> vec(p, p + ms.n_f);
        const std::size_t cell = ms.cell_index(k, i, m);
        const std::vector<double> norm = stats.normalize(cell, truncated_spectrum(vec, l_cut));
        const int ch = k * ms.n_ar + i;  // g_{k,i} with zero-based k, i
        for (int b = 0; b < l_cut; ++b) {
            out.at(0, ch, b, m) = norm[static_cast<std::size_t>(b)];
        }
    }
    (void)exec;
    return out;
}

ChannelLosses channel_losses(const nn::Tensor4& m, const nn::Tensor4& m_rec, int n_loc, int n_ar) {
    if (!m.same_shape(m_rec)) throw std::invalid_argument("channel_losses: shape mismatch");
    if (m.c != n_loc * n_ar) throw std::invalid_argument("channel_losses: channel count mismatch");
    ChannelLosses out;
    out.n_loc = n_loc;
    out.n_ar = n_ar;
    out.per_channel.assign(static_cast<std::size_t>(m.c), 0.0);
    double total = 0.0;
    for (int ch = 0; ch < m.c; ++ch) {
        double s = 0.0;
        for (int y = 0; y < m.h; ++y) {
            for (int x = 0; x < m.w; ++x) {
                const double d = m.at(0, ch, y, x) - m_rec.at(0, ch, y, x);
                s += d * d;
            }
        }
        out.per_channel[static_cast<std::size_t>(ch)] = s;
        total += s;
    }
    out.mean = total / (static_cast<double>(m.w) * n_ar * m.h * n_loc);
    return out;
}

TrainedPipeline train_pipeline(const std::vector<MeasurementSet>& series,
                               const PipelineConfig& config, std::uint64_t scene_hash, Exec exec) {
    if (series.size() < 10) throw data_error("train_pipeline: series too short (need >= 10)");
    const auto& first = series.front();
    const int n_loc = first.n_loc, n_ar = first.n_ar, n_dh = first.n_dh;

    // pass 1: stats on the full pre-T series
    NormStats stats(n_loc, n_ar, n_dh, config.l_cut);
    for (const auto& ms : series) {
        for (int k = 0; k < n_loc; ++k) {
            for (int i = 0; i < n_ar; ++i) {
                for (int m = 0; m < n_dh; ++m) {
                    const double* p = ms.cell(k, i, m);
                    stats.accumulate(ms.cell_index(k, i, m),
                                     truncated_spectrum(std::vector<double>(p, p + ms.n_f),
                                                        config.l_cut));
                }
            }
        }
    }

    // pass 2: tensors with frozen stats
    std::vector<nn::Tensor4> tensors;
    tensors.reserve(series.size());
    for (const auto& ms : series) tensors.push_back(assemble_tensor(ms, stats, config.l_cut, exec));

    const std::size_t holdout =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::round(
                                     config.holdout_fraction * static_cast<double>(series.size()))));
    const std::size_t train_count = series.size() - holdout;
    if (train_count == 0) throw data_error("train_pipeline: nothing left to train on");

    // full training batch as one tensor
    const int n_ch = n_loc * n_ar;
    nn::Tensor4 batch(static_cast<int>(train_count), n_ch, config.l_cut, n_dh);
    for (std::size_t s = 0; s < train_count; ++s) {
        std::copy(tensors[s].data.begin(), tensors[s].data.end(),
                  batch.data.begin() + static_cast<std::ptrdiff_t>(s * tensors[s].size()));
    }

    TrainedPipeline result;
    result.config = config;
    result.scene_hash = scene_hash;
    result.network = nn::Network(
        nn::NetworkSpec::build(config.depth, n_ch, config.l_cut, n_dh, config.base_channels),
        config.seed);
    result.stats = stats;

    std::vector<double> params = result.network.parameters();
    nn::AdamState adam(params.size(), config.learning_rate);
    const double denom = static_cast<double>(batch.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        auto ctx = result.network.forward_cached(batch, exec);
        const auto& out = ctx.output();
        double loss = 0.0;
        nn::Tensor4 dout(batch.n, batch.c, batch.h, batch.w);
        for (std::size_t j = 0; j < batch.data.size(); ++j) {
            const double d = out.data[j] - batch.data[j];
            loss += d * d;
            dout.data[j] = 2.0 * d / denom;
        }
        result.loss_history.push_back(loss / denom);
        const std::vector<double> grads = result.network.backward(ctx, dout, exec);
        nn::adam_step(params, grads, adam, exec);
        result.network.set_parameters(params);
    }

    // baselines on the hold-out
    Baselines base;
    base.n_loc = n_loc;
    base.n_ar = n_ar;
    base.mean_loss.assign(static_cast<std::size_t>(n_ch), 0.0);
    std::vector<ChannelLosses> holdout_losses;
    for (std::size_t s = train_count; s < tensors.size(); ++s) {
        const nn::Tensor4 rec = result.network.forward(tensors[s], exec);
        holdout_losses.push_back(channel_losses(tensors[s], rec, n_loc, n_ar));
        for (int ch = 0; ch < n_ch; ++ch) {
            base.mean_loss[static_cast<std::size_t>(ch)] +=
                holdout_losses.back().per_channel[static_cast<std::size_t>(ch)];
        }
    }
    for (double& v : base.mean_loss) {
        v /= static_cast<double>(holdout);
        if (!(v > 0.0)) throw data_error("train_pipeline: zero hold-out baseline loss");
    }

    std::vector<double> gammas;
    for (const auto& hl : holdout_losses) {
        double g = 0.0;
        for (int ch = 0; ch < n_ch; ++ch) {
            g += hl.per_channel[static_cast<std::size_t>(ch)] /
                 base.mean_loss[static_cast<std::size_t>(ch)];
        }
        gammas.push_back(g / n_ch);
    }
    double mean = 0.0;
    for (double g : gammas) mean += g;
    mean /= static_cast<double>(gammas.size());
    double var = 0.0;
    for (double g : gammas) var += (g - mean) * (g - mean);
    var = gammas.size() > 1 ? var / static_cast<double>(gammas.size() - 1) : 0.0;
    base.gamma_mean = mean;
    base.gamma_std = std::sqrt(var);
    base.gamma_threshold = mean + config.kappa * base.gamma_std;
    result.baselines = base;
    return result;
}

std::vector<std::vector<double>> score(const nn::Tensor4& m, const nn::Tensor4& m_rec,
                                       const Baselines& base) {
    const ChannelLosses losses = channel_losses(m, m_rec, base.n_loc, base.n_ar);
    std::vector<std::vector<double>> tau(static_cast<std::size_t>(base.n_loc),
                                         std::vector<double>(static_cast<std::size_t>(base.n_ar)));
    for (int k = 0; k < base.n_loc; ++k) {
        for (int i = 0; i < base.n_ar; ++i) {
            const double l_bar = base.mean_loss[static_cast<std::size_t>(k * base.n_ar + i)];
            if (!(l_bar > 0.0)) throw data_error("score: zero baseline loss");
            tau[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] = losses.at(k, i) / l_bar;
        }
    }
    return tau;
}

Detection detect(const std::vector<std::vector<double>>& tau, double gamma_threshold) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& row : tau) {
        for (double v : row) {
            sum += v;
            ++count;
        }
    }
    Detection d;
    d.gamma = sum / static_cast<double>(count);
    d.indicator = d.gamma > gamma_threshold ? 1 : 0;
    return d;
}

Location locate(const std::vector<std::vector<double>>& tau) {
    const std::size_t n_loc = tau.size();
    const std::size_t n_ar = tau.front().size();
    Location loc;
    double best_col = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_ar; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < n_loc; ++k) s += tau[k][i];
        if (s > best_col) {
            best_col = s;
            loc.i_ver = static_cast<int>(i) + 1;
        }
    }
    double best_row = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_loc; ++k) {
        const double v = tau[k][static_cast<std::size_t>(loc.i_ver - 1)];
        if (v > best_row) {
            best_row = v;
            loc.i_hor = static_cast<int>(k) + 1;
        }
    }
    return loc;
}

AnomalyReport evaluate_measurement(const MeasurementSet& ms, const TrainedPipeline& pipeline,
                                   Exec exec) {
    const nn::Tensor4 m = assemble_tensor(ms, pipeline.stats, pipeline.config.l_cut, exec);
    const nn::Tensor4 rec = pipeline.network.forward(m, exec);
    AnomalyReport report;
    report.t = ms.t;
    report.tau = score(m, rec, pipeline.baselines);
    const Detection det = detect(report.tau, pipeline.baselines.gamma_threshold);
    report.indicator = det.indicator;
    report.gamma = det.gamma;
    if (det.indicator == 1) report.location = locate(report.tau);
    return report;
}

std::string report_to_json(const AnomalyReport& report) {
    std::ostringstream os;
    os.precision(12);
    os << "{\"t\":" << report.t << ",\"gamma\":" << report.gamma
       << ",\"i_ano\":" << report.indicator;
    if (report.location) {
        os << ",\"i_ver\":" << report.location->i_ver << ",\"i_hor\":" << report.location->i_hor;
    } else {
        os << ",\"i_ver\":null,\"i_hor\":null";
    }
    os << ",\"tau\":[";
    for (std::size_t k = 0; k < report.tau.size(); ++k) {
        os << (k ? "," : "") << "[";
        for (std::size_t i = 0; i < report.tau[k].size(); ++i) {
            os << (i ? "," : "") << report.tau[k][i];
        }
        os << "]";
    }
    os << "]}";
    return os.str();
}

}  // namespace metaiot::sensing
