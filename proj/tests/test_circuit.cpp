#include <doctest.h>

#include <cmath>

#include "metaiot/circuit.hpp"
#include "metaiot/rng.hpp"
#include "scenario_fixtures.hpp"

using namespace metaiot;
using namespace metaiot::circuit;

namespace {

MaterialSensitivity temp_material() {
    return {{{20.0, 0.32}, {50.0, 0.97}}};
}

SensorCircuitParams paper_params() {
    return calibrate_parasitics({3.5e9, 4.0e9}, {1.126e-3, 1.761e-3}, 0.3e9);
}

// dense-grid peak locator for |Z| of one unit
double resonance_by_sweep(const UnitCircuitParams& unit, const MaterialSensitivity& mat,
                          double gap, double f_lo, double f_hi, std::size_t n) {
    double best_f = f_lo;
    double best_mag = -1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = f_lo + (f_hi - f_lo) * static_cast<double>(k) / static_cast<double>(n - 1);
        const double mag = std::abs(unit_impedance(f, 25.0, gap, unit, mat));
        if (mag > best_mag) {
            best_mag = mag;
            best_f = f;
        }
    }
    return best_f;
}

}  // namespace

TEST_CASE("gap resistance follows d / (rho W H)") {
    const auto mat = temp_material();
    UnitCircuitParams unit;
    unit.parasitic_inductance = 5e-9;
    unit.parasitic_capacitance = 1e-13;
    unit.unit_gap_capacitance = 1e-16;
    const double d = 1.761e-3;
    // normal-case temperature conductivity 0.32 S/m
    const double r = gap_resistance(20.0, d, mat, unit);
    CHECK(r == doctest::Approx(d / (0.32 * 1.2e-3 * 0.035e-3)).epsilon(1e-12));
    // linear in d
    CHECK(gap_resistance(20.0, 2 * d, mat, unit) == doctest::Approx(2 * r).epsilon(1e-12));
    // interpolation node is exact
    const double r_hi = gap_resistance(50.0, d, mat, unit);
    CHECK(r_hi == doctest::Approx(d / (0.97 * 1.2e-3 * 0.035e-3)).epsilon(1e-12));
    CHECK_THROWS_AS(gap_resistance(60.0, d, mat, unit), std::out_of_range);
}

TEST_CASE("piecewise-linear conductivity, midpoint and monotonicity") {
    const auto mat = temp_material();
    CHECK(mat.conductivity(35.0) == doctest::Approx(0.5 * (0.32 + 0.97)));
    double prev = 0.0;
    for (double c = 20.0; c <= 50.0; c += 1.0) {
        const double rho = mat.conductivity(c);
        CHECK(rho >= prev);
        prev = rho;
    }
}

TEST_CASE("unit impedance is purely real at the parallel resonance") {
    const auto params = paper_params();
    const auto mat = temp_material();
    const auto& unit = params.units[1];
    const double d = 1.761e-3;
    const double f_res = unit_resonance(unit, d);
    const cplx z = unit_impedance(f_res, 20.0, d, unit, mat);
    const double r_gap = gap_resistance(20.0, d, mat, unit);
    CHECK(std::abs(z.imag()) / std::abs(z) < 1e-9);
    CHECK(z.real() == doctest::Approx(r_gap).epsilon(1e-9));
    CHECK_THROWS_AS(unit_impedance(-1.0, 20.0, d, unit, mat), std::invalid_argument);
}

TEST_CASE("resonance increases with gap width and matches a dense sweep") {
    const auto params = paper_params();
    const auto mat = temp_material();
    const auto& unit = params.units[0];
    double prev = 0.0;
    for (double d = 0.5e-3; d <= 2.0e-3; d += 0.1e-3) {
        const double f = unit_resonance(unit, d);
        CHECK(f > prev);
        prev = f;
    }
    // dense-grid oracle: peak location within one grid step of the formula
    const double d = 1.126e-3;
    const double f_formula = unit_resonance(unit, d);
    const double span = 0.02e9;
    const std::size_t n = 1000001;
    const double f_peak = resonance_by_sweep(unit, mat, d, f_formula - span, f_formula + span, n);
    const double step = 2 * span / static_cast<double>(n - 1);
    CHECK(std::abs(f_peak - f_formula) <= step);
}

TEST_CASE("total impedance: degenerate, symmetric and local") {
    const auto cfg = fixtures::paper_scenario();
    const auto params = paper_params();
    const double f = 3.7e9;

    SUBCASE("single unit has no coupling term") {
        SensorCircuitParams single;
        single.units = {params.units[0]};
        single.coupling_capacitance = params.coupling_capacitance;
        const cplx total = total_impedance(f, {{1.126e-3}}, {{55.0}}, single, {cfg.materials[0]});
        const cplx unit = unit_impedance(f, 55.0, 1.126e-3, params.units[0], cfg.materials[0]);
        CHECK(total == unit);
    }

    SUBCASE("two identical units") {
        SensorCircuitParams twin;
        twin.units = {params.units[0], params.units[0]};
        twin.coupling_capacitance = params.coupling_capacitance;
        const std::vector<MaterialSensitivity> mats{cfg.materials[0], cfg.materials[0]};
        const cplx total = total_impedance(f, {{1e-3, 1e-3}}, {{60.0, 60.0}}, twin, mats);
        const cplx unit = unit_impedance(f, 60.0, 1e-3, params.units[0], cfg.materials[0]);
        const cplx coupling = 1.0 / (cplx(0.0, 2 * kPi * f) * twin.coupling_capacitance);
        CHECK(std::abs(total - (2.0 * unit + coupling)) < 1e-9 * std::abs(total));
    }

    SUBCASE("swapping units leaves the sum unchanged") {
        SensorCircuitParams swapped;
        swapped.units = {params.units[1], params.units[0]};
        swapped.coupling_capacitance = params.coupling_capacitance;
        const std::vector<MaterialSensitivity> mats_fwd{cfg.materials[0], cfg.materials[1]};
        const std::vector<MaterialSensitivity> mats_rev{cfg.materials[1], cfg.materials[0]};
        const cplx a = total_impedance(f, {{1.126e-3, 1.761e-3}}, {{55.0, 20.0}}, params, mats_fwd);
        const cplx b = total_impedance(f, {{1.761e-3, 1.126e-3}}, {{20.0, 55.0}}, swapped, mats_rev);
        CHECK(a.real() == doctest::Approx(b.real()).epsilon(1e-14));
        CHECK(a.imag() == doctest::Approx(b.imag()).epsilon(1e-14));
    }

    SUBCASE("perturbing one condition changes only that unit's term") {
        const std::vector<MaterialSensitivity> mats{cfg.materials[0], cfg.materials[1]};
        const SensorStructure d{{1.126e-3, 1.761e-3}};
        const cplx base = total_impedance(f, d, {{55.0, 20.0}}, params, mats);
        const cplx bumped = total_impedance(f, d, {{55.0, 30.0}}, params, mats);
        // rebuild both totals from the shared prefix: everything except the
        // perturbed unit's term must be bitwise identical
        cplx prefix = 1.0 / (cplx(0.0, 2 * kPi * f) * params.coupling_capacitance);
        prefix += unit_impedance(f, 55.0, 1.126e-3, params.units[0], mats[0]);
        const cplx rebuilt_base = prefix + unit_impedance(f, 20.0, 1.761e-3, params.units[1], mats[1]);
        const cplx rebuilt_bumped = prefix + unit_impedance(f, 30.0, 1.761e-3, params.units[1], mats[1]);
        CHECK(rebuilt_base.real() == base.real());
        CHECK(rebuilt_base.imag() == base.imag());
        CHECK(rebuilt_bumped.real() == bumped.real());
        CHECK(rebuilt_bumped.imag() == bumped.imag());
    }

    SUBCASE("length mismatch is an argument error") {
        const std::vector<MaterialSensitivity> mats{cfg.materials[0], cfg.materials[1]};
        CHECK_THROWS_AS(total_impedance(f, {{1e-3}}, {{55.0, 20.0}}, params, mats),
                        std::invalid_argument);
    }
}

TEST_CASE("reflection coefficient basics") {
    const auto cfg = fixtures::paper_scenario();
    const auto params = paper_params();
    const std::vector<MaterialSensitivity> mats = cfg.materials;
    const SensorStructure d{{1.126e-3, 1.761e-3}};
    const EnvCondition c{{55.0, 20.0}};

    SUBCASE("passivity over random draws") {
        Rng rng(42);
        for (int trial = 0; trial < 10000; ++trial) {
            const double f = rng.uniform(3.0e9, 4.5e9);
            const SensorStructure dd{{rng.uniform(0.5e-3, 2e-3), rng.uniform(0.5e-3, 2e-3)}};
            const EnvCondition cc{{rng.uniform(55.0, 75.0), rng.uniform(20.0, 50.0)}};
            const cplx g = reflection_coefficient_analytic(f, dd, cc, params, mats);
            CHECK(std::abs(g) <= 1.0 + 1e-12);
        }
    }

    SUBCASE("matched load reflects nothing, limits reflect fully") {
        // gamma = (Z - Z0)/(Z + Z0) checked through the bilinear map directly
        const cplx z = total_impedance(3.7e9, d, c, params, mats);
        const cplx g = reflection_coefficient_analytic(3.7e9, d, c, params, mats);
        CHECK(std::abs(g - (z - 377.0) / (z + 377.0)) < 1e-15);
    }

    SUBCASE("two valleys in band, dense-sweep oracle") {
        std::vector<double> mags;
        const std::size_t n = 100001;
        for (std::size_t k = 0; k < n; ++k) {
            const double f = 3.5e9 + 0.5e9 * static_cast<double>(k) / static_cast<double>(n - 1);
            mags.push_back(std::abs(reflection_coefficient_analytic(f, d, c, params, mats)));
        }
        int minima = 0;
        for (std::size_t k = 1; k + 1 < n; ++k) {
            if (mags[k] < mags[k - 1] && mags[k] < mags[k + 1]) ++minima;
        }
        CHECK(minima == 2);
    }
}

TEST_CASE("conductivity direction moves |gamma| at the unit resonance") {
    const auto cfg = fixtures::paper_scenario();
    const auto params = paper_params();
    const SensorStructure d{{1.126e-3, 1.761e-3}};
    const double f_res = unit_resonance(params.units[0], 1.126e-3);
    const double g_norm = std::abs(
        reflection_coefficient_analytic(f_res, d, {{55.0, 20.0}}, params, cfg.materials));
    const double g_anom = std::abs(
        reflection_coefficient_analytic(f_res, d, {{75.0, 20.0}}, params, cfg.materials));
    CHECK(std::abs(g_anom - g_norm) > 1e-6);
    // and R_gap itself strictly decreases
    CHECK(gap_resistance(75.0, 1.126e-3, cfg.materials[0], params.units[0]) <
          gap_resistance(55.0, 1.126e-3, cfg.materials[0], params.units[0]));
}

TEST_CASE("correction table") {
    const auto cfg = fixtures::paper_scenario();
    const auto params = paper_params();
    const std::vector<MaterialSensitivity> mats = cfg.materials;
    const EnvCondition c{{55.0, 20.0}};
    const double f = 3.7e9;

    SUBCASE("empty table reproduces the analytic value") {
        CorrectionTable empty;
        const SensorStructure d{{1.126e-3, 1.761e-3}};
        const cplx with = reflection_coefficient(f, 3, d, c, params, mats, empty, 0);
        const cplx without = reflection_coefficient_analytic(f, d, c, params, mats);
        CHECK(with == without);
    }

    SUBCASE("node exactness and midpoint average") {
        CorrectionTable table({{0.5e-3, 1.0e-3, 1.5e-3, 2.0e-3}, {0.5e-3, 1.0e-3, 1.5e-3, 2.0e-3}},
                              1, 1);
        Rng rng(5);
        std::vector<cplx> xi(16);
        for (std::size_t g = 0; g < 16; ++g) {
            xi[g] = cplx(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
            table.set(0, 0, g, xi[g]);
        }
        // node (1.0mm, 1.5mm) -> flat = 1*4 + 2
        const SensorStructure node{{1.0e-3, 1.5e-3}};
        const cplx at_node = table.interpolate(node, 0, 0);
        CHECK(std::abs(at_node - xi[6]) < 1e-15);
        const cplx analytic = reflection_coefficient_analytic(f, node, c, params, mats);
        const cplx corrected = reflection_coefficient(f, 0, node, c, params, mats, table, 0);
        CHECK(std::abs(corrected - (analytic + xi[6])) < 1e-15);
        // midpoint in the first coordinate averages the two neighbours
        const SensorStructure mid{{1.25e-3, 1.5e-3}};
        const cplx expect = 0.5 * (xi[6] + xi[10]);
        CHECK(std::abs(table.interpolate(mid, 0, 0) - expect) < 1e-15);
    }

    SUBCASE("outside the sampled region is a range error") {
        CorrectionTable table({{0.5e-3, 2.0e-3}, {0.5e-3, 2.0e-3}}, 1, 1);
        CHECK_THROWS_AS(table.interpolate({{0.4e-3, 1.0e-3}}, 0, 0), std::out_of_range);
    }
}

TEST_CASE("calibration places resonances per the stated rule") {
    SUBCASE("two units, 300 MHz split in a 500 MHz band") {
        const auto params = calibrate_parasitics({3.5e9, 4.0e9}, {1.126e-3, 1.761e-3}, 0.3e9);
        CHECK(unit_resonance(params.units[0], 1.126e-3) == doctest::Approx(3.6e9).epsilon(1e-12));
        CHECK(unit_resonance(params.units[1], 1.761e-3) == doctest::Approx(3.9e9).epsilon(1e-12));
    }
    SUBCASE("single unit lands at the band center") {
        const auto params = calibrate_parasitics({3.5e9, 4.0e9}, {1.0e-3}, 0.0);
        CHECK(unit_resonance(params.units[0], 1.0e-3) == doctest::Approx(3.75e9).epsilon(1e-12));
    }
    SUBCASE("dense sweep reproduces the targets within 1 kHz") {
        const auto cfg = fixtures::paper_scenario();
        const auto params = calibrate_parasitics({3.5e9, 4.0e9}, {1.126e-3, 1.761e-3}, 0.3e9);
        for (int n = 0; n < 2; ++n) {
            const double target = n == 0 ? 3.6e9 : 3.9e9;
            const double gap = cfg.nominal_gap_widths[static_cast<std::size_t>(n)];
            const double found =
                resonance_by_sweep(params.units[static_cast<std::size_t>(n)], cfg.materials[1],
                                   gap, target - 5e5, target + 5e5, 1000001);
            CHECK(std::abs(found - target) <= 1e3);
        }
    }
    SUBCASE("infeasible split") {
        CHECK_THROWS_AS(calibrate_parasitics({3.5e9, 4.0e9}, {1e-3, 1e-3}, 0.6e9),
                        calibration_error);
    }
}
