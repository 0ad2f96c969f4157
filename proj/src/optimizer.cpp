#include "metaiot/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "metaiot/rng.hpp"

namespace metaiot::optim {

bool DesignSpace::contains(const std::vector<double>& d, double tol) const {
    if (d.size() != dimension()) return false;
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (d[k] < lower[k] - tol || d[k] > upper[k] + tol) return false;
    }
    return true;
}

double DesignSpace::box_diagonal() const {
    double s = 0.0;
    for (std::size_t k = 0; k < dimension(); ++k) {
        const double w = upper[k] - lower[k];
        s += w * w;
    }
    return std::sqrt(s);
}

std::vector<std::vector<double>> DesignSpace::sampled_grid() const {
    std::vector<std::vector<double>> grid;
    if (sampled_axes.empty()) return grid;
    std::vector<std::size_t> idx(sampled_axes.size(), 0);
    const auto total = [&] {
        std::size_t n = 1;
        for (const auto& ax : sampled_axes) n *= ax.size();
        return n;
    }();
    grid.reserve(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::vector<double> p(sampled_axes.size());
        std::size_t r = flat;
        for (std::size_t k = sampled_axes.size(); k-- > 0;) {
            p[k] = sampled_axes[k][r % sampled_axes[k].size()];
            r /= sampled_axes[k].size();
        }
        grid.push_back(std::move(p));
    }
    return grid;
}

void DesignSpace::validate() const {
    if (lower.empty() || lower.size() != upper.size()) {
        throw std::invalid_argument("DesignSpace: inconsistent bounds");
    }
    for (std::size_t k = 0; k < lower.size(); ++k) {
        if (lower[k] >= upper[k]) throw std::invalid_argument("DesignSpace: d_lb < d_ub required");
    }
    for (const auto& p : sampled_grid()) {
        if (!contains(p)) throw std::invalid_argument("DesignSpace: sampled set outside bounds");
    }
}

void ConditionSet::validate() const {
    if (conditions.size() < 2) throw std::invalid_argument("ConditionSet: N_C >= 2 required");
    for (std::size_t a = 0; a < conditions.size(); ++a) {
        for (std::size_t b = a + 1; b < conditions.size(); ++b) {
            if (conditions[a].values == conditions[b].values) {
                throw std::invalid_argument("ConditionSet: conditions must be pairwise distinct");
            }
        }
    }
}

double discernibility(const circuit::SensorStructure& d, const ConditionSet& conds,
                      const channel::SensingScene& scene, const channel::FrequencyGrid& grid,
                      int n_dh, Exec exec) {
    const auto& geom = scene.geometry;
    const int n_c = static_cast<int>(conds.conditions.size());
    const int n_ar = geom.array_count();
    const int n_md = static_cast<int>(geom.measuring_distances.size());

    // feature vectors for every (condition, array, height, distance) cell
    struct Cell {
        int l, i, m, q;
    };
    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(n_c * n_ar * n_dh * n_md));
    for (int l = 0; l < n_c; ++l)
        for (int i = 1; i <= n_ar; ++i)
            for (int m = 1; m <= n_dh; ++m)
                for (int q = 0; q < n_md; ++q) cells.push_back({l, i, m, q});

    std::vector<std::vector<double>> features(cells.size());
    const std::ptrdiff_t n_cells = static_cast<std::ptrdiff_t>(cells.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
#endif
    for (std::ptrdiff_t idx = 0; idx < n_cells; ++idx) {
        const Cell& cell = cells[static_cast<std::size_t>(idx)];
        const double D = geom.measuring_distances[static_cast<std::size_t>(cell.q)];
        features[static_cast<std::size_t>(idx)] =
            channel::feature_vector(cell.i, cell.m, n_dh, d,
                                    conds.conditions[static_cast<std::size_t>(cell.l)], D, grid,
                                    scene, static_cast<std::size_t>(cell.l), Exec::serial)
                .p_db;
    }

    const auto at = [&](int l, int i, int m, int q) -> const std::vector<double>& {
        const std::size_t idx = static_cast<std::size_t>(
            ((l * n_ar + (i - 1)) * n_dh + (m - 1)) * n_md + q);
        return features[idx];
    };

    double sum = 0.0;
    std::size_t count = 0;
    for (int l = 0; l < n_c; ++l) {
        for (int lp = l + 1; lp < n_c; ++lp) {
            for (int i = 1; i <= n_ar; ++i) {
                for (int m = 1; m <= n_dh; ++m) {
                    for (int q = 0; q < n_md; ++q) {
                        const auto& a = at(l, i, m, q);
                        const auto& b = at(lp, i, m, q);
                        double s = 0.0;
                        for (std::size_t k = 0; k < a.size(); ++k) {
                            const double diff = a[k] - b[k];
                            s += diff * diff;
                        }
                        sum += std::sqrt(s);
                        ++count;
                    }
                }
            }
        }
    }
    return sum / static_cast<double>(count);
}

double pair_error_probability(const std::vector<double>& p_l, const std::vector<double>& p_lp,
                              double sigma_m) {
    if (sigma_m <= 0) throw std::invalid_argument("pair_error_probability: sigma must be positive");
    if (p_l.size() != p_lp.size()) {
        throw std::invalid_argument("pair_error_probability: length mismatch");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < p_l.size(); ++k) {
        const double diff = p_l[k] - p_lp[k];
        s += diff * diff;
    }
    const double dist = std::sqrt(s);
    return 0.5 - 0.5 * std::erf(dist / (2.0 * std::sqrt(2.0) * sigma_m));
}

namespace {

// dense LU solve with partial pivoting, in place
void lu_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    std::vector<std::size_t> piv(n);
    for (std::size_t i = 0; i < n; ++i) piv[i] = i;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t best = col;
        double best_mag = std::abs(a[piv[col] * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double mag = std::abs(a[piv[r] * n + col]);
            if (mag > best_mag) {
                best = r;
                best_mag = mag;
            }
        }
        if (best_mag < 1e-300) throw std::runtime_error("rbf_fit: singular system (duplicate nodes?)");
        std::swap(piv[col], piv[best]);
        const double pivot = a[piv[col] * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[piv[r] * n + col] / pivot;
            a[piv[r] * n + col] = 0.0;
            if (factor == 0.0) continue;
            for (std::size_t c = col + 1; c < n; ++c) a[piv[r] * n + c] -= factor * a[piv[col] * n + c];
            b[piv[r]] -= factor * b[piv[col]];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[piv[i]];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[piv[i] * n + c] * x[c];
        x[i] = s / a[piv[i] * n + i];
    }
    b = std::move(x);
}

}  // namespace

RbfModel RbfModel::fit(const std::vector<std::vector<double>>& nodes,
                       const std::vector<double>& values) {
    const std::size_t n = nodes.size();
    if (n == 0 || n != values.size()) throw std::invalid_argument("rbf_fit: bad sample set");
    const std::size_t dim = nodes.front().size();
    if (n < dim + 1) throw std::invalid_argument("rbf_fit: need at least dim+1 samples");

    RbfModel m;
    m.scale_lo_.assign(dim, std::numeric_limits<double>::infinity());
    m.scale_span_.assign(dim, 0.0);
    std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
    for (const auto& p : nodes) {
        for (std::size_t k = 0; k < dim; ++k) {
            m.scale_lo_[k] = std::min(m.scale_lo_[k], p[k]);
            hi[k] = std::max(hi[k], p[k]);
        }
    }
    for (std::size_t k = 0; k < dim; ++k) {
        m.scale_span_[k] = hi[k] - m.scale_lo_[k];
        if (m.scale_span_[k] <= 0) m.scale_span_[k] = 1.0;
    }
    m.nodes_.resize(n, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < dim; ++k) {
            m.nodes_[i][k] = (nodes[i][k] - m.scale_lo_[k]) / m.scale_span_[k];
        }
    }

    const std::size_t sz = n + dim + 1;
    std::vector<double> a(sz * sz, 0.0);
    std::vector<double> b(sz, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double r2 = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double diff = m.nodes_[i][k] - m.nodes_[j][k];
                r2 += diff * diff;
            }
            const double r = std::sqrt(r2);
            a[i * sz + j] = r * r2;  // r^3
        }
        a[i * sz + n] = 1.0;
        a[n * sz + i] = 1.0;
        for (std::size_t k = 0; k < dim; ++k) {
            a[i * sz + n + 1 + k] = m.nodes_[i][k];
            a[(n + 1 + k) * sz + i] = m.nodes_[i][k];
        }
        b[i] = values[i];
    }
    lu_solve(a, b, sz);
    m.weights_ = std::move(b);
    return m;
}

double RbfModel::operator()(const std::vector<double>& x) const {
    const std::size_t dim = scale_lo_.size();
    std::vector<double> xs(dim);
    for (std::size_t k = 0; k < dim; ++k) xs[k] = (x[k] - scale_lo_[k]) / scale_span_[k];
    const std::size_t n = nodes_.size();
    double out = weights_[n];
    for (std::size_t k = 0; k < dim; ++k) out += weights_[n + 1 + k] * xs[k];
    for (std::size_t i = 0; i < n; ++i) {
        double r2 = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double diff = xs[k] - nodes_[i][k];
            r2 += diff * diff;
        }
        out += weights_[i] * r2 * std::sqrt(r2);
    }
    return out;
}

SurrogateResult surrogate_optimize(const std::function<double(const std::vector<double>&)>& objective,
                                   const DesignSpace& space, double upsilon_min, std::uint64_t seed,
                                   int budget,
                                   const std::vector<std::vector<double>>& seed_points) {
    space.validate();
    const std::size_t dim = space.dimension();
    const int n_init = 2 * (static_cast<int>(dim) + 1);
    if (budget < n_init) throw std::invalid_argument("surrogate_optimize: budget below initial sample count");

    Rng rng(seed);
    std::vector<std::vector<double>> nodes;
    std::vector<double> values;
    SurrogateResult result;

    const auto evaluate = [&](const std::vector<double>& p) {
        const double val = objective(p);
        nodes.push_back(p);
        values.push_back(val);
        result.trace.push_back({static_cast<int>(nodes.size()), p, val});
        return val;
    };

    for (const auto& p : seed_points) {
        if (!space.contains(p)) throw std::out_of_range("surrogate_optimize: seed point outside bounds");
        evaluate(p);
    }
    for (int s = 0; s < n_init; ++s) {
        std::vector<double> p(dim);
        for (std::size_t k = 0; k < dim; ++k) p[k] = rng.uniform(space.lower[k], space.upper[k]);
        evaluate(p);
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }

    double sigma_frac = 0.05;   // Gaussian perturbation scale, fraction of box span
    double trust_frac = 1.0;    // uniform pool half-width, fraction of box span
    int stall = 0;
    const double diag = space.box_diagonal();
    result.termination = "budget";

    const auto min_dist_to_nodes = [&](const std::vector<double>& p) {
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& q : nodes) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double diff = p[k] - q[k];
                s += diff * diff;
            }
            best_d = std::min(best_d, std::sqrt(s));
        }
        return best_d;
    };

    while (static_cast<int>(nodes.size()) < budget) {
        const RbfModel surrogate = RbfModel::fit(nodes, values);
        const auto& incumbent = nodes[best];

        std::vector<std::vector<double>> pool;
        pool.reserve(200);
        for (int s = 0; s < 100; ++s) {
            std::vector<double> p(dim);
            for (std::size_t k = 0; k < dim; ++k) {
                const double half = trust_frac * (space.upper[k] - space.lower[k]) / 2.0;
                const double lo = std::max(space.lower[k], incumbent[k] - half);
                const double hi = std::min(space.upper[k], incumbent[k] + half);
                p[k] = rng.uniform(lo, hi);
            }
            pool.push_back(std::move(p));
        }
        for (int s = 0; s < 100; ++s) {
            std::vector<double> p(dim);
            for (std::size_t k = 0; k < dim; ++k) {
                const double span = space.upper[k] - space.lower[k];
                p[k] = std::clamp(incumbent[k] + rng.normal() * sigma_frac * span, space.lower[k],
                                  space.upper[k]);
            }
            pool.push_back(std::move(p));
        }

        int chosen = -1;
        double chosen_val = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < pool.size(); ++s) {
            if (min_dist_to_nodes(pool[s]) < upsilon_min) continue;
            const double sv = surrogate(pool[s]);
            if (sv > chosen_val) {
                chosen_val = sv;
                chosen = static_cast<int>(s);
            }
        }
        if (chosen < 0) {
            // every candidate sits within upsilon_min of an evaluated sample
            result.termination = "crowding";
            break;
        }

        const double val = evaluate(pool[static_cast<std::size_t>(chosen)]);
        if (val > values[best]) {
            best = values.size() - 1;
            stall = 0;
        } else if (++stall >= 5) {
            sigma_frac = std::max(sigma_frac * 0.6, upsilon_min / diag / 2.0);
            trust_frac = std::max(trust_frac * 0.6, 4.0 * upsilon_min / diag);
            stall = 0;
        }
    }

    result.truncated = result.termination == "budget";
    result.best.gap_widths = nodes[best];
    result.best_value = values[best];
    return result;
}

}  // namespace metaiot::optim
