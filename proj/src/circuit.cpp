#include "metaiot/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace metaiot::circuit {

void UnitCircuitParams::validate() const {
    if (parasitic_inductance <= 0 || parasitic_capacitance <= 0 || unit_gap_capacitance <= 0 ||
        srr_width <= 0 || srr_thickness <= 0 || srr_side <= 0) {
        throw std::invalid_argument("UnitCircuitParams: all fields must be positive");
    }
}

void SensorCircuitParams::validate() const {
    if (units.empty()) throw std::invalid_argument("SensorCircuitParams: needs at least one unit");
    if (coupling_capacitance <= 0) {
        throw std::invalid_argument("SensorCircuitParams: coupling capacitance must be positive");
    }
    for (const auto& u : units) u.validate();
}

void MaterialSensitivity::validate() const {
    if (condition_points.size() < 2) {
        throw std::invalid_argument("MaterialSensitivity: needs at least two condition points");
    }
    for (std::size_t i = 0; i < condition_points.size(); ++i) {
        if (condition_points[i].second <= 0) {
            throw std::invalid_argument("MaterialSensitivity: conductivities must be positive");
        }
        if (i > 0 && condition_points[i].first <= condition_points[i - 1].first) {
            throw std::invalid_argument("MaterialSensitivity: condition values must be increasing");
        }
    }
}

double MaterialSensitivity::conductivity(double condition) const {
    if (condition < condition_points.front().first || condition > condition_points.back().first) {
        throw std::out_of_range("MaterialSensitivity: condition outside tabulated domain");
    }
    for (std::size_t i = 1; i < condition_points.size(); ++i) {
        const auto& [c1, r1] = condition_points[i];
        if (condition <= c1) {
            const auto& [c0, r0] = condition_points[i - 1];
            const double t = (condition - c0) / (c1 - c0);
            return r0 + t * (r1 - r0);
        }
    }
    return condition_points.back().second;
}

CorrectionTable::CorrectionTable(std::vector<std::vector<double>> axes, std::size_t cond_count,
                                 std::size_t freq_count)
    : axes_(std::move(axes)), cond_count_(cond_count), freq_count_(freq_count) {
    for (auto& ax : axes_) {
        if (ax.size() < 2 || !std::is_sorted(ax.begin(), ax.end())) {
            throw std::invalid_argument("CorrectionTable: axes must be sorted with >= 2 samples");
        }
    }
    values_.assign(cond_count_ * freq_count_ * grid_size(), cplx(0.0, 0.0));
}

std::size_t CorrectionTable::grid_size() const {
    std::size_t n = 1;
    for (const auto& ax : axes_) n *= ax.size();
    return n;
}

void CorrectionTable::set(std::size_t cond_index, std::size_t freq_index, std::size_t grid_flat,
                          cplx xi) {
    values_.at((cond_index * freq_count_ + freq_index) * grid_size() + grid_flat) = xi;
}

cplx CorrectionTable::interpolate(const SensorStructure& d, std::size_t cond_index,
                                  std::size_t freq_index) const {
    if (empty()) return {0.0, 0.0};
    if (d.gap_widths.size() != axes_.size()) {
        throw std::invalid_argument("CorrectionTable: dimension mismatch");
    }
    const std::size_t dims = axes_.size();
    std::vector<std::size_t> lo(dims);
    std::vector<double> frac(dims);
    for (std::size_t k = 0; k < dims; ++k) {
        const auto& ax = axes_[k];
        const double x = d.gap_widths[k];
        if (x < ax.front() - 1e-12 || x > ax.back() + 1e-12) {
            throw std::out_of_range("CorrectionTable: structure outside the sampled region");
        }
        auto it = std::upper_bound(ax.begin(), ax.end(), x);
        std::size_t hi = std::min<std::size_t>(ax.size() - 1,
                                               std::max<std::size_t>(1, it - ax.begin()));
        lo[k] = hi - 1;
        frac[k] = std::clamp((x - ax[lo[k]]) / (ax[hi] - ax[lo[k]]), 0.0, 1.0);
    }
    const std::size_t base = (cond_index * freq_count_ + freq_index) * grid_size();
    cplx acc(0.0, 0.0);
    // multilinear: sum over the 2^dims corner weights
    for (std::size_t corner = 0; corner < (std::size_t{1} << dims); ++corner) {
        double w = 1.0;
        std::size_t flat = 0;
        std::size_t stride = 1;
        for (std::size_t k = dims; k-- > 0;) {
            const bool hi = (corner >> k) & 1u;
            w *= hi ? frac[k] : (1.0 - frac[k]);
            flat += (lo[k] + (hi ? 1 : 0)) * stride;
            stride *= axes_[k].size();
        }
        acc += w * values_[base + flat];
    }
    return acc;
}

CorrectionTable CorrectionTable::load_csv(const std::string& path, std::size_t dims) {
    std::ifstream in(path);
    if (!in) throw data_error("CorrectionTable: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error("CorrectionTable: empty file " + path);

    struct Row {
        std::vector<double> d;
        std::size_t cond, freq;
        cplx xi;
    };
    std::vector<Row> rows;
    std::vector<std::vector<double>> axes(dims);
    std::size_t cond_max = 0, freq_max = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        Row r;
        r.d.resize(dims);
        for (std::size_t k = 0; k < dims; ++k) {
            std::getline(ss, tok, ',');
            r.d[k] = std::stod(tok) * 1e-3;  // header is d*_mm
        }
        std::getline(ss, tok, ',');
        r.cond = std::stoul(tok);
        std::getline(ss, tok, ',');
        r.freq = std::stoul(tok);
        std::getline(ss, tok, ',');
        const double re = std::stod(tok);
        std::getline(ss, tok, ',');
        const double im = std::stod(tok);
        r.xi = {re, im};
        cond_max = std::max(cond_max, r.cond + 1);
        freq_max = std::max(freq_max, r.freq + 1);
        for (std::size_t k = 0; k < dims; ++k) axes[k].push_back(r.d[k]);
        rows.push_back(std::move(r));
    }
    for (auto& ax : axes) {
        std::sort(ax.begin(), ax.end());
        ax.erase(std::unique(ax.begin(), ax.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 ax.end());
    }
    CorrectionTable t(axes, cond_max, freq_max);
    for (const auto& r : rows) {
        std::size_t flat = 0, stride = 1;
        for (std::size_t k = dims; k-- > 0;) {
            const auto& ax = axes[k];
            auto it = std::lower_bound(ax.begin(), ax.end(), r.d[k] - 1e-12);
            flat += static_cast<std::size_t>(it - ax.begin()) * stride;
            stride *= ax.size();
        }
        t.set(r.cond, r.freq, flat, r.xi);
    }
    return t;
}

double gap_resistance(double condition, double gap_width, const MaterialSensitivity& material,
                      const UnitCircuitParams& unit) {
    if (gap_width <= 0) throw std::invalid_argument("gap_resistance: gap width must be positive");
    const double rho = material.conductivity(condition);
    return gap_width / (rho * unit.srr_width * unit.srr_thickness);
}

cplx unit_impedance(double f, double condition, double gap_width, const UnitCircuitParams& unit,
                    const MaterialSensitivity& material) {
    if (f <= 0) throw std::invalid_argument("unit_impedance: frequency must be positive");
    const double w = 2.0 * kPi * f;
    const double c_gap = unit.unit_gap_capacitance / gap_width;
    const double r_gap = gap_resistance(condition, gap_width, material, unit);
    const cplx jw(0.0, w);
    const cplx admittance = 1.0 / (jw * unit.parasitic_inductance) +
                            jw * unit.parasitic_capacitance + jw * c_gap + 1.0 / r_gap;
    return 1.0 / admittance;
}

cplx total_impedance(double f, const SensorStructure& d, const EnvCondition& c,
                     const SensorCircuitParams& params,
                     const std::vector<MaterialSensitivity>& materials) {
    const std::size_t nt = params.units.size();
    if (d.gap_widths.size() != nt || c.values.size() != nt || materials.size() != nt) {
        throw std::invalid_argument("total_impedance: inconsistent N_T across inputs");
    }
    cplx z(0.0, 0.0);
    if (nt > 1) {
        z = static_cast<double>(nt - 1) / (cplx(0.0, 2.0 * kPi * f) * params.coupling_capacitance);
    }
    for (std::size_t n = 0; n < nt; ++n) {
        z += unit_impedance(f, c.values[n], d.gap_widths[n], params.units[n], materials[n]);
    }
    return z;
}

cplx reflection_coefficient_analytic(double f, const SensorStructure& d, const EnvCondition& c,
                                     const SensorCircuitParams& params,
                                     const std::vector<MaterialSensitivity>& materials) {
    const cplx z = total_impedance(f, d, c, params, materials);
    const double z0 = params.characteristic_impedance;
    return (z - z0) / (z + z0);
}

cplx reflection_coefficient(double f, std::size_t freq_index, const SensorStructure& d,
                            const EnvCondition& c, const SensorCircuitParams& params,
                            const std::vector<MaterialSensitivity>& materials,
                            const CorrectionTable& table, std::size_t cond_index) {
    cplx g = reflection_coefficient_analytic(f, d, c, params, materials);
    if (!table.empty()) g += table.interpolate(d, cond_index, freq_index);
    return g;
}

double unit_resonance(const UnitCircuitParams& unit, double gap_width) {
    const double c_total = unit.parasitic_capacitance + unit.unit_gap_capacitance / gap_width;
    return 1.0 / (2.0 * kPi * std::sqrt(unit.parasitic_inductance * c_total));
}

SensorCircuitParams calibrate_parasitics(std::pair<double, double> band,
                                         const std::vector<double>& nominal_gap_widths,
                                         double resonance_split) {
    const auto [flb, fub] = band;
    if (!(flb > 0 && fub > flb)) throw calibration_error("calibrate_parasitics: empty band");
    const std::size_t nt = nominal_gap_widths.size();
    if (nt == 0) throw calibration_error("calibrate_parasitics: no units");
    const double width = fub - flb;
    const double span = static_cast<double>(nt - 1) * resonance_split;
    if (span > width) {
        throw calibration_error("calibrate_parasitics: requested split does not fit the band");
    }
    const double inset = (width - span) / 2.0;

    SensorCircuitParams params;
    params.coupling_capacitance = 5e-15;
    for (std::size_t n = 0; n < nt; ++n) {
        const double target = flb + inset + static_cast<double>(n) * resonance_split;
        UnitCircuitParams u;
        u.parasitic_inductance = 5e-9;
        // with C_gap_hat = C_para * d_nominal the total capacitance at the
        // nominal gap is 2 C_para, so C_para follows from the target resonance
        const double w = 2.0 * kPi * target;
        const double c_total = 1.0 / (u.parasitic_inductance * w * w);
        u.parasitic_capacitance = c_total / 2.0;
        u.unit_gap_capacitance = u.parasitic_capacitance * nominal_gap_widths[n];
        params.units.push_back(u);
    }
    params.validate();
    return params;
}

}  // namespace metaiot::circuit
