#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "curvecmp/design.hpp"
#include "curvecmp/linalg.hpp"
#include "curvecmp/models.hpp"

namespace curvecmp {

/// scale * f(d)^T M^{-1} f(t) for one group, with M factored once.
class GroupVariance {
public:
    /// Throws SingularDesign (tagged with `group`) when M is singular.
    GroupVariance(const ModelSpec& model, std::span<const double> points,
                  std::span<const double> weights, double scale, int group);
    GroupVariance(const ModelSpec& model, const Design& design, double scale, int group)
        : GroupVariance(model, design.points(), design.weights(), scale, group) {}

    /// Non-throwing variant for optimizer objectives.
    static std::optional<GroupVariance> try_make(const ModelSpec& model,
                                                 std::span<const double> points,
                                                 std::span<const double> weights, double scale);

    double at(double t) const { return scale_ * chol_.inv_quad(model_.gradient(t)); }
    double at(const Vec& f) const noexcept { return scale_ * chol_.inv_quad(f); }
    double cross(double d, double t) const {
        return scale_ * chol_.inv_bilinear(model_.gradient(d), model_.gradient(t));
    }

    const ModelSpec& model() const noexcept { return model_; }
    const Cholesky& factor() const noexcept { return chol_; }
    double scale() const noexcept { return scale_; }
    const SymMatrix& information() const noexcept { return info_; }

private:
    GroupVariance(ModelSpec model, SymMatrix info, Cholesky chol, double scale)
        : model_(std::move(model)), info_(info), chol_(chol), scale_(scale) {}

    ModelSpec model_;
    SymMatrix info_;
    Cholesky chol_;
    double scale_;
};

/// phi(t) = sum of both group variance terms.
class VarianceFunction {
public:
    explicit VarianceFunction(const DesignPair& pair);
    VarianceFunction(GroupVariance g1, GroupVariance g2) : g1_(std::move(g1)), g2_(std::move(g2)) {}

    double operator()(double t) const { return g1_.at(t) + g2_.at(t); }
    double from_gradients(const Vec& f1, const Vec& f2) const noexcept { return g1_.at(f1) + g2_.at(f2); }

    const GroupVariance& group(int i) const noexcept { return i == 1 ? g1_ : g2_; }

private:
    GroupVariance g1_;
    GroupVariance g2_;
};

struct LocalMax {
    double t = 0.0;
    double value = 0.0;
};

/// Maximize a unimodal function on [a, b] by golden-section search.
template <class F>
LocalMax golden_section_max(F&& fn, double a, double b, double tol) {
    constexpr double kInvPhi = 0.6180339887498949;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = fn(c);
    double fd = fn(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = fn(d);
        }
    }
    return fc >= fd ? LocalMax{c, fc} : LocalMax{d, fd};
}

/// Polished local maxima of fn, given its values on an increasing grid.
///
/// Every grid node that is not exceeded by its neighbours and lies within
/// `margin` (relative) of the grid maximum is refined by golden-section search
/// on the adjacent cells. Results are ordered by position.
template <class F>
std::vector<LocalMax> polished_maxima(F&& fn, std::span<const double> grid,
                                      std::span<const double> values, double tol,
                                      double margin = 1e-3) {
    std::vector<LocalMax> out;
    const std::size_t n = grid.size();
    if (n == 0) return out;
    if (n == 1) {
        out.push_back({grid[0], values[0]});
        return out;
    }
    double vmax = values[0];
    for (double v : values) vmax = v > vmax ? v : vmax;
    const double cutoff = vmax - margin * std::abs(vmax);
    for (std::size_t k = 0; k < n; ++k) {
        const double v = values[k];
        if (v < cutoff) continue;
        if (k > 0 && values[k - 1] > v) continue;
        if (k + 1 < n && values[k + 1] > v) continue;
        // plateau: keep only the left-most node of a run of equal values
        if (k > 0 && values[k - 1] == v) continue;
        LocalMax best{grid[k], v};
        if (k > 0) {
            LocalMax m = golden_section_max(fn, grid[k - 1], grid[k], tol);
            if (m.value > best.value) best = m;
        }
        if (k + 1 < n) {
            LocalMax m = golden_section_max(fn, grid[k], grid[k + 1], tol);
            if (m.value > best.value) best = m;
        }
        out.push_back(best);
    }
    return out;
}

/// Grid scan plus polish on an interval; returns the global maximizer found.
template <class F>
LocalMax maximize_on(F&& fn, const Interval& iv, std::size_t nodes, double tol) {
    const std::vector<double> grid = linspace(iv, nodes);
    std::vector<double> values(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) values[k] = fn(grid[k]);
    const auto maxima = polished_maxima(fn, grid, values, tol);
    LocalMax best = maxima.front();
    for (const auto& m : maxima)
        if (m.value > best.value) best = m;
    return best;
}

/// Gradients of both models cached on the sup grid and the lambda nodes.
class RegionScanner {
public:
    RegionScanner(const ModelSpec& m1, const ModelSpec& m2, const CriterionSpec& spec);

    /// sup over the region of phi, grid scan plus polish.
    LocalMax sup(const VarianceFunction& phi) const;
    /// Largest value on the grid nodes, without polishing.
    LocalMax grid_sup(const VarianceFunction& phi) const;
    /// All polished local maxima within `margin` of the grid maximum.
    std::vector<LocalMax> maxima(const VarianceFunction& phi, double margin = 1e-3) const;
    /// integral of phi^p d lambda
    double integral_pow(const VarianceFunction& phi, double p) const;
    /// Criterion value: mu_p or mu_inf depending on the order.
    double criterion(const VarianceFunction& phi) const;

    const CriterionSpec& spec() const noexcept { return spec_; }
    const std::vector<double>& grid() const noexcept { return grid_; }

private:
    CriterionSpec spec_;
    std::vector<double> grid_;
    std::vector<Vec> grid_f1_, grid_f2_;
    std::vector<Vec> quad_f1_, quad_f2_;
};

/// phi(t, xi1, xi2).
double variance_phi(double t, const DesignPair& pair);

/// (sigma_i^2 / gamma_i) f_i(d)^T M_i^{-1} f_i(t).
double phi_cross(int group, double d, double t, const DesignPair& pair);

/// (integral phi^p d lambda)^(1/p); requires a finite order.
double mu_p(const DesignPair& pair, const CriterionSpec& spec);

/// sup over the region of phi.
double mu_inf(const DesignPair& pair, const CriterionSpec& spec);

/// mu_p or mu_inf according to spec.order.
double criterion_value(const DesignPair& pair, const CriterionSpec& spec);

/// Criterion with the second group's design frozen at `eta`.
double nu_p(const Design& xi1, const Design& eta, const CriterionSpec& spec,
            const GroupSpec& g1, const GroupSpec& g2);

/// mu_inf with an explicit allocation (gamma1, gamma2) in the open simplex.
double mu_inf_gamma(const Design& xi1, const Design& xi2, std::pair<double, double> gamma,
                    const CriterionSpec& spec, const ModelSpec& m1, const ModelSpec& m2,
                    std::pair<double, double> sigma2);

/// Throws InvalidInput unless gamma lies in the open simplex.
void require_allocation(std::pair<double, double> gamma);

struct BandRow {
    double t = 0.0;
    double halfwidth = 0.0;
};

struct BandProfile {
    std::vector<BandRow> rows;
    /// quantile * sqrt(sup phi / n), with sup polished between grid nodes
    double max_halfwidth = 0.0;
};

/// Deterministic confidence-band half-widths quantile * sqrt(phi(t) / n).
BandProfile band_profile(const DesignPair& pair, std::size_t n_total, std::span<const double> grid,
                         double quantile = 1.96, double polish_tol = CriterionSpec::kDefaultPolishTol);

}  // namespace curvecmp
