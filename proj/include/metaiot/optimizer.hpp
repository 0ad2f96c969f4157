#ifndef METAIOT_OPTIMIZER_HPP
#define METAIOT_OPTIMIZER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "metaiot/channel.hpp"
#include "metaiot/circuit.hpp"

namespace metaiot::optim {

struct DesignSpace {
    std::vector<double> lower;  // d_lb per dimension, m
    std::vector<double> upper;  // d_ub
    std::vector<std::vector<double>> sampled_axes;  // per-dim samples of D_hat_A (may be empty)

    std::size_t dimension() const { return lower.size(); }
    bool contains(const std::vector<double>& d, double tol = 1e-12) const;
    double box_diagonal() const;
    // full tensor grid over sampled_axes
    std::vector<std::vector<double>> sampled_grid() const;
    void validate() const;
};

struct ConditionSet {
    std::vector<circuit::EnvCondition> conditions;

    void validate() const;
};

// Mean over unordered condition pairs, arrays, heights and distances of the
// Euclidean distance between dB feature vectors.
double discernibility(const circuit::SensorStructure& d, const ConditionSet& conds,
                      const channel::SensingScene& scene, const channel::FrequencyGrid& grid,
                      int n_dh, Exec exec = Exec::parallel);

// Pr_err = 1/2 - 1/2 erf(||p_l - p_l'||_2 / (2 sqrt(2 sigma^2)))
double pair_error_probability(const std::vector<double>& p_l, const std::vector<double>& p_lp,
                              double sigma_m);

// Cubic RBF with a linear polynomial tail, exact at the nodes.
class RbfModel {
public:
    static RbfModel fit(const std::vector<std::vector<double>>& nodes,
                        const std::vector<double>& values);
    double operator()(const std::vector<double>& x) const;

private:
    std::vector<std::vector<double>> nodes_;
    std::vector<double> weights_;  // node weights then [const, linear...]
    std::vector<double> scale_lo_, scale_span_;
};

struct SurrogateTraceEntry {
    int iteration;
    std::vector<double> d;
    double value;
};

struct SurrogateResult {
    circuit::SensorStructure best;
    double best_value = 0.0;
    std::vector<SurrogateTraceEntry> trace;
    std::string termination;  // "crowding" or "budget"
    bool truncated = false;   // budget exhausted before the crowding criterion
};

// Maximizes the objective with the RBF surrogate search. The candidate pool
// per iteration is 100 uniform samples in a trust box around the incumbent
// plus 100 Gaussian perturbations; both contract when the incumbent stalls,
// which makes the upsilon_min crowding criterion reachable. seed_points are
// evaluated up front (the sampled structure set of the design problem).
SurrogateResult surrogate_optimize(const std::function<double(const std::vector<double>&)>& objective,
                                   const DesignSpace& space, double upsilon_min,
                                   std::uint64_t seed, int budget,
                                   const std::vector<std::vector<double>>& seed_points = {});

}  // namespace metaiot::optim

#endif
