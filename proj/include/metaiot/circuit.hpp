#ifndef METAIOT_CIRCUIT_HPP
#define METAIOT_CIRCUIT_HPP

#include <optional>
#include <utility>
#include <vector>

#include "metaiot/common.hpp"

namespace metaiot::circuit {

// Equivalent-circuit model of one split-ring-resonator unit. The gap is
// filled with a condition-sensitive material; parasitics come from
// calibrate_parasitics (they are not physical measurements).
struct UnitCircuitParams {
    double parasitic_inductance = 0.0;   // L_para, H
    double parasitic_capacitance = 0.0;  // C_para, F
    double unit_gap_capacitance = 0.0;   // C_gap of a unit-width gap, F*m
    double srr_width = 1.2e-3;           // m
    double srr_thickness = 0.035e-3;     // m
    double srr_side = 7.5e-3;            // m

    void validate() const;
};

struct SensorCircuitParams {
    std::vector<UnitCircuitParams> units;
    double coupling_capacitance = 5e-15;                  // F
    double characteristic_impedance = kFreeSpaceImpedance;  // ohm

    void validate() const;
};

// Piecewise-linear conductivity vs. condition value. Strictly increasing
// condition points, all conductivities positive.
struct MaterialSensitivity {
    std::vector<std::pair<double, double>> condition_points;  // (condition, S/m)

    void validate() const;
    // linear interpolation; throws std::out_of_range outside the tabulated domain
    double conductivity(double condition) const;
    double min_condition() const { return condition_points.front().first; }
    double max_condition() const { return condition_points.back().first; }
};

struct SensorStructure {
    std::vector<double> gap_widths;  // m
};

struct EnvCondition {
    std::vector<double> values;  // physical units per condition
};

// Residual correction xi_n(d, c) on a rectangular grid of sampled structures,
// per (condition index, frequency index). Empty table means xi = 0.
class CorrectionTable {
public:
    CorrectionTable() = default;

    // axes: per-dimension sorted gap-width samples; values laid out
    // row-major over the grid for each (cond_index, freq_index) slot.
    CorrectionTable(std::vector<std::vector<double>> axes, std::size_t cond_count,
                    std::size_t freq_count);

    bool empty() const { return axes_.empty(); }
    std::size_t grid_size() const;
    void set(std::size_t cond_index, std::size_t freq_index, std::size_t grid_flat, cplx xi);
    cplx interpolate(const SensorStructure& d, std::size_t cond_index,
                     std::size_t freq_index) const;

    static CorrectionTable load_csv(const std::string& path, std::size_t dims);
    const std::vector<std::vector<double>>& axes() const { return axes_; }

private:
    std::vector<std::vector<double>> axes_;
    std::size_t cond_count_ = 0;
    std::size_t freq_count_ = 0;
    std::vector<cplx> values_;  // [(cond*freq_count + freq)*grid + flat]
};

// R_gap = d / (rho(c) * W_SRR * H_SRR)
double gap_resistance(double condition, double gap_width, const MaterialSensitivity& material,
                      const UnitCircuitParams& unit);

// Parallel combination of L_para, C_para, C_gap(d) and R_gap(c, d).
cplx unit_impedance(double f, double condition, double gap_width, const UnitCircuitParams& unit,
                    const MaterialSensitivity& material);

// Series sum of unit impedances plus the inter-unit coupling term
// (N_T - 1) / (i 2 pi f C_cp).
cplx total_impedance(double f, const SensorStructure& d, const EnvCondition& c,
                     const SensorCircuitParams& params,
                     const std::vector<MaterialSensitivity>& materials);

// gamma_hat = (Z - Z0) / (Z + Z0)
cplx reflection_coefficient_analytic(double f, const SensorStructure& d, const EnvCondition& c,
                                     const SensorCircuitParams& params,
                                     const std::vector<MaterialSensitivity>& materials);

// gamma = gamma_hat + xi; cond_index/freq_index select the table slot.
cplx reflection_coefficient(double f, std::size_t freq_index, const SensorStructure& d,
                            const EnvCondition& c, const SensorCircuitParams& params,
                            const std::vector<MaterialSensitivity>& materials,
                            const CorrectionTable& table, std::size_t cond_index);

// Closed-form resonance of one unit at gap width d.
double unit_resonance(const UnitCircuitParams& unit, double gap_width);

// Places the N_T unit resonances inside [f_lb, f_ub], equally inset, spaced by
// `resonance_split`. L_para is fixed at 5 nH, C_para solved from the target
// resonance, C_gap_hat = C_para * d_nominal, C_cp = 5 fF.
SensorCircuitParams calibrate_parasitics(std::pair<double, double> band,
                                         const std::vector<double>& nominal_gap_widths,
                                         double resonance_split);

}  // namespace metaiot::circuit

#endif
