#include "curvecmp/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "curvecmp/error.hpp"

namespace curvecmp {

namespace {

[[noreturn]] void throw_singular(int group) {
    std::ostringstream os;
    os << "information matrix of group " << group << " is singular";
    throw SingularDesign(group, os.str());
}

void require_region_in_domain(const ModelSpec& m, const Interval& iv) {
    // every model domain is a half-line, so both endpoints suffice
    m.require_domain(iv.lo);
    m.require_domain(iv.hi);
}

}  // namespace

GroupVariance::GroupVariance(const ModelSpec& model, std::span<const double> points,
                             std::span<const double> weights, double scale, int group)
    : model_(model), scale_(scale) {
    info_ = info_matrix(points, weights, model);
    auto chol = Cholesky::factor(info_);
    if (!chol) throw_singular(group);
    chol_ = *chol;
}

std::optional<GroupVariance> GroupVariance::try_make(const ModelSpec& model,
                                                     std::span<const double> points,
                                                     std::span<const double> weights,
                                                     double scale) {
    SymMatrix info(model.dim());
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (!model.in_domain(points[j])) return std::nullopt;
        info.add_outer_lower(weights[j], model.gradient_unchecked(points[j]));
    }
    info.symmetrize_from_lower();
    auto chol = Cholesky::factor(info);
    if (!chol) return std::nullopt;
    return GroupVariance(model, info, *chol, scale);
}

VarianceFunction::VarianceFunction(const DesignPair& pair)
    : g1_(pair.group1().model, pair.xi1(), pair.group1().scale(), 1),
      g2_(pair.group2().model, pair.xi2(), pair.group2().scale(), 2) {}

RegionScanner::RegionScanner(const ModelSpec& m1, const ModelSpec& m2, const CriterionSpec& spec)
    : spec_(spec) {
    spec_.validate();
    require_region_in_domain(m1, spec_.region);
    require_region_in_domain(m2, spec_.region);
    grid_ = linspace(spec_.region, spec_.sup_grid);
    grid_f1_.reserve(grid_.size());
    grid_f2_.reserve(grid_.size());
    for (double t : grid_) {
        grid_f1_.push_back(m1.gradient(t));
        grid_f2_.push_back(m2.gradient(t));
    }
    if (!spec_.order.is_infinite()) {
        for (double t : spec_.lambda.nodes) {
            quad_f1_.push_back(m1.gradient(t));
            quad_f2_.push_back(m2.gradient(t));
        }
    }
}

std::vector<LocalMax> RegionScanner::maxima(const VarianceFunction& phi, double margin) const {
    std::vector<double> values(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k)
        values[k] = phi.from_gradients(grid_f1_[k], grid_f2_[k]);
    return polished_maxima(phi, grid_, values, spec_.polish_tol, margin);
}

LocalMax RegionScanner::grid_sup(const VarianceFunction& phi) const {
    LocalMax best{grid_[0], phi.from_gradients(grid_f1_[0], grid_f2_[0])};
    for (std::size_t k = 1; k < grid_.size(); ++k) {
        const double v = phi.from_gradients(grid_f1_[k], grid_f2_[k]);
        if (v > best.value) best = {grid_[k], v};
    }
    return best;
}

LocalMax RegionScanner::sup(const VarianceFunction& phi) const {
    const auto all = maxima(phi);
    LocalMax best = all.front();
    for (const auto& m : all)
        if (m.value > best.value) best = m;
    return best;
}

double RegionScanner::integral_pow(const VarianceFunction& phi, double p) const {
    double s = 0.0;
    const auto& w = spec_.lambda.weights;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k] == 0.0) continue;
        const double v = phi.from_gradients(quad_f1_[k], quad_f2_[k]);
        s += w[k] * (p == 1.0 ? v : std::pow(v, p));
    }
    return s;
}

double RegionScanner::criterion(const VarianceFunction& phi) const {
    if (spec_.order.is_infinite()) return sup(phi).value;
    const double p = spec_.order.value();
    return std::pow(integral_pow(phi, p), 1.0 / p);
}

double variance_phi(double t, const DesignPair& pair) {
    return VarianceFunction(pair)(t);
}

double phi_cross(int group, double d, double t, const DesignPair& pair) {
    if (group != 1 && group != 2) throw InvalidInput("group index must be 1 or 2");
    const GroupSpec& g = pair.group(group);
    return GroupVariance(g.model, pair.design(group), g.scale(), group).cross(d, t);
}

double mu_p(const DesignPair& pair, const CriterionSpec& spec) {
    if (spec.order.is_infinite()) throw InvalidInput("mu_p requires a finite order p");
    RegionScanner scan(pair.group1().model, pair.group2().model, spec);
    return scan.criterion(VarianceFunction(pair));
}

double mu_inf(const DesignPair& pair, const CriterionSpec& spec) {
    CriterionSpec s = spec;
    s.order = NormOrder::infinity();
    RegionScanner scan(pair.group1().model, pair.group2().model, s);
    return scan.sup(VarianceFunction(pair)).value;
}

double criterion_value(const DesignPair& pair, const CriterionSpec& spec) {
    return spec.order.is_infinite() ? mu_inf(pair, spec) : mu_p(pair, spec);
}

double nu_p(const Design& xi1, const Design& eta, const CriterionSpec& spec, const GroupSpec& g1,
            const GroupSpec& g2) {
    return criterion_value(DesignPair(xi1, eta, g1, g2), spec);
}

void require_allocation(std::pair<double, double> gamma) {
    const auto [a, b] = gamma;
    if (!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0) ||
        std::abs(a + b - 1.0) > DesignPair::kGammaSumTol) {
        std::ostringstream os;
        os << "allocation (" << a << ", " << b << ") outside the open simplex";
        throw InvalidInput(os.str());
    }
}

double mu_inf_gamma(const Design& xi1, const Design& xi2, std::pair<double, double> gamma,
                    const CriterionSpec& spec, const ModelSpec& m1, const ModelSpec& m2,
                    std::pair<double, double> sigma2) {
    require_allocation(gamma);
    const DesignPair pair(xi1, xi2, GroupSpec{m1, sigma2.first, gamma.first},
                          GroupSpec{m2, sigma2.second, gamma.second});
    return mu_inf(pair, spec);
}

BandProfile band_profile(const DesignPair& pair, std::size_t n_total, std::span<const double> grid,
                         double quantile, double polish_tol) {
    if (n_total == 0) throw InvalidInput("band profile needs n_total >= 1");
    if (!(quantile >= 0.0) || !std::isfinite(quantile))
        throw InvalidInput("band quantile D must be finite and >= 0");
    if (grid.empty()) throw InvalidInput("band profile grid is empty");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw InvalidInput("band profile grid must be increasing");
    const VarianceFunction phi(pair);
    const double n = static_cast<double>(n_total);
    BandProfile out;
    std::vector<double> values(grid.size());
    out.rows.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        values[k] = phi(grid[k]);
        out.rows.push_back({grid[k], quantile * std::sqrt(values[k] / n)});
    }
    double sup = values.front();
    for (const auto& m : polished_maxima(phi, grid, values, polish_tol))
        sup = std::max(sup, m.value);
    out.max_halfwidth = quantile * std::sqrt(sup / n);
    return out;
}

}  // namespace curvecmp
