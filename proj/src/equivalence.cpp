#include "curvecmp/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <sstream>

#include "curvecmp/error.hpp"
#include "curvecmp/pso.hpp"

namespace curvecmp {

void CheckOptions::validate() const {
    if (!(cert_tol > 0.0)) throw InvalidInput("certification tolerance must be > 0");
    if (!(extremal_tol >= 0.0)) throw InvalidInput("extremal tolerance must be >= 0");
    if (grid < 2) throw InvalidInput("check grid needs at least 2 nodes");
    if (rho_grid < 2) throw InvalidInput("rho grid needs at least 2 nodes");
    if (!(polish_tol > 0.0)) throw InvalidInput("polish tolerance must be > 0");
}

std::string to_string(CheckKind kind) {
    switch (kind) {
        case CheckKind::MuP: return "mu_p";
        case CheckKind::MuInf: return "mu_inf";
        case CheckKind::NuP: return "nu_p";
        case CheckKind::NuInf: return "nu_inf";
        case CheckKind::Gamma: return "mu_inf_gamma";
    }
    return "unknown";
}

namespace {

SymMatrix weighted_outer(const ModelSpec& model, std::span<const double> nodes,
                         std::span<const double> weights) {
    SymMatrix b(model.dim());
    for (std::size_t k = 0; k < nodes.size(); ++k)
        if (weights[k] != 0.0) b.add_outer_lower(weights[k], model.gradient(nodes[k]));
    b.symmetrize_from_lower();
    return b;
}

// s f(t)^T M^{-1} B M^{-1} f(t) over the design space for one group.
class Sensitivity {
public:
    Sensitivity(const GroupVariance& g, const Interval& space, const CheckOptions& opt)
        : g_(&g), opt_(&opt), grid_(linspace(space, opt.grid)) {
        g.model().require_domain(space.lo);
        g.model().require_domain(space.hi);
        u_.reserve(grid_.size());
        for (double t : grid_) u_.push_back(solve(t));
    }

    double at(double t, const SymMatrix& b) const { return g_->scale() * b.quad(solve(t)); }

    LocalMax max(const SymMatrix& b) const {
        std::vector<double> values(grid_.size());
        std::size_t best = 0;
        for (std::size_t k = 0; k < grid_.size(); ++k) {
            values[k] = g_->scale() * b.quad(u_[k]);
            if (values[k] > values[best]) best = k;
        }
        if (!opt_->polish) return {grid_[best], values[best]};
        const auto fn = [&](double t) { return at(t, b); };
        LocalMax out{grid_[best], values[best]};
        for (const auto& m : polished_maxima(fn, grid_, values, opt_->polish_tol))
            if (m.value > out.value) out = m;
        return out;
    }

private:
    Vec solve(double t) const { return g_->factor().solve(g_->model().gradient(t)); }

    const GroupVariance* g_;
    const CheckOptions* opt_;
    std::vector<double> grid_;
    std::vector<Vec> u_;
};

double clamp_bound(double b) {
    if (!std::isfinite(b)) return std::numeric_limits<double>::min();
    return std::clamp(b, std::numeric_limits<double>::min(), 1.0);
}

void finish(EquivalenceReport& r, const CheckOptions& opt) {
    r.relative_violation = r.max_violation / r.scale;
    r.max_residual = 0.0;
    for (const auto& s : r.residuals) r.max_residual = std::max(r.max_residual, s.residual);
    r.cert_tol = opt.cert_tol;
    r.certified = r.relative_violation <= opt.cert_tol && r.max_residual <= opt.cert_tol;
}

std::vector<double> positive_support(const Design& d) {
    std::vector<double> out;
    for (std::size_t j = 0; j < d.size(); ++j)
        if (d.weights()[j] > 0.0) out.push_back(d.points()[j]);
    return out;
}

ExtremalSet extremal_from(const VarianceFunction& phi, const RegionScanner& scan, double tol) {
    const auto cands = scan.maxima(phi, std::max(1e-3, 2.0 * tol));
    double sup = cands.front().value;
    for (const auto& m : cands) sup = std::max(sup, m.value);
    ExtremalSet out;
    out.level = sup;
    out.tol = tol;
    const double sep = 1e-6 * std::max(scan.spec().region.length(), 1e-300);
    for (const auto& m : cands) {
        if (m.value < sup - tol * std::abs(sup)) continue;
        if (!out.points.empty() && m.t - out.points.back() < sep) {
            if (m.value > out.values.back()) {
                out.points.back() = m.t;
                out.values.back() = m.value;
            }
            continue;
        }
        out.points.push_back(m.t);
        out.values.push_back(m.value);
    }
    return out;
}

// Quantities for N(rho) on a dense design-space grid.
class RhoObjective {
public:
    RhoObjective(const VarianceFunction& phi, const Interval& space, const ExtremalSet& ext, CheckKind kind,
                 std::pair<double, double> gamma, std::size_t nodes)
        : kind_(kind), gamma_(gamma), k_(ext.points.size()) {
        const auto grid = linspace(space, nodes);
        for (int i = 1; i <= 2; ++i) {
            if (i == 2 && kind == CheckKind::NuInf) break;
            const GroupVariance& g = phi.group(i);
            g.model().require_domain(space.lo);
            g.model().require_domain(space.hi);
            std::vector<Vec> fz;
            for (double z : ext.points) fz.push_back(g.model().gradient(z));
            auto& c = i == 1 ? c1_ : c2_;
            c.reserve(grid.size() * k_);
            for (double t : grid) {
                const Vec h = g.factor().half_solve(g.model().gradient(t));
                // f(t)^T M^{-1} f(z) through the half solve of both vectors
                for (std::size_t m = 0; m < k_; ++m) {
                    const double b = h.dot(g.factor().half_solve(fz[m]));
                    c.push_back(g.scale() * b * b);
                }
            }
        }
        rows_ = grid.size();
        if (kind == CheckKind::NuInf)
            for (double z : ext.points) fixed_.push_back(phi.group(2).at(z));
    }

    double operator()(std::span<const double> rho) const {
        const double a1 = row_max(c1_, rho);
        if (kind_ == CheckKind::NuInf) {
            double c = 0.0;
            for (std::size_t m = 0; m < k_; ++m) c += rho[m] * fixed_[m];
            return a1 + c;
        }
        const double a2 = row_max(c2_, rho);
        if (kind_ == CheckKind::Gamma) return std::max(a1 / gamma_.first, a2 / gamma_.second);
        return a1 + a2;
    }

private:
    double row_max(const std::vector<double>& c, std::span<const double> rho) const {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < rows_; ++r) {
            const double* row = c.data() + r * k_;
            double s = 0.0;
            for (std::size_t m = 0; m < k_; ++m) s += rho[m] * row[m];
            best = std::max(best, s);
        }
        return best;
    }

    CheckKind kind_;
    std::pair<double, double> gamma_;
    std::size_t k_;
    std::size_t rows_ = 0;
    std::vector<double> c1_, c2_, fixed_;
};

// Polished N(rho) together with the group maxima and the rho-integrals of phi_i(z, z).
struct NParts {
    LocalMax a1, a2;
    double q1 = 0.0, q2 = 0.0;
    double n = 0.0;
};

NParts n_parts(const VarianceFunction& phi, const Interval& space, const RhoMeasure& rho, CheckKind kind,
               std::pair<double, double> gamma, const CheckOptions& opt) {
    NParts out;
    for (std::size_t m = 0; m < rho.atoms.size(); ++m) {
        out.q1 += rho.weights[m] * phi.group(1).at(rho.atoms[m]);
        out.q2 += rho.weights[m] * phi.group(2).at(rho.atoms[m]);
    }
    const Sensitivity s1(phi.group(1), space, opt);
    out.a1 = s1.max(weighted_outer(phi.group(1).model(), rho.atoms, rho.weights));
    if (kind == CheckKind::NuInf) {
        out.n = out.a1.value + out.q2;
        return out;
    }
    const Sensitivity s2(phi.group(2), space, opt);
    out.a2 = s2.max(weighted_outer(phi.group(2).model(), rho.atoms, rho.weights));
    out.n = kind == CheckKind::Gamma ? std::max(out.a1.value / gamma.first, out.a2.value / gamma.second)
                                     : out.a1.value + out.a2.value;
    return out;
}

void require_rho_kind(CheckKind kind) {
    if (kind == CheckKind::MuP || kind == CheckKind::NuP)
        throw InvalidInput("rho is only defined for sup-norm criteria");
}

RhoMeasure grid_search(const RhoObjective& obj, const ExtremalSet& ext, double step) {
    const std::size_t k = ext.points.size();
    const long total = std::lround(1.0 / step);
    if (total < 1) throw InvalidInput("simplex grid step must be in (0, 1]");
    std::vector<long> c(k, 0);
    std::vector<double> rho(k), best_rho(k);
    double best = std::numeric_limits<double>::infinity();
    // enumerate compositions of `total` into k nonnegative parts
    std::function<void(std::size_t, long)> rec = [&](std::size_t idx, long left) {
        if (idx + 1 == k) {
            c[idx] = left;
            for (std::size_t m = 0; m < k; ++m) rho[m] = static_cast<double>(c[m]) / static_cast<double>(total);
            const double v = obj(rho);
            if (v < best) {
                best = v;
                best_rho = rho;
            }
            return;
        }
        for (long a = 0; a <= left; ++a) {
            c[idx] = a;
            rec(idx + 1, left - a);
        }
    };
    rec(0, total);
    return {ext.points, best_rho};
}

RhoMeasure solve_rho_impl(const VarianceFunction& phi, const Interval& space, const ExtremalSet& ext,
                          CheckKind kind, std::pair<double, double> gamma, const CheckOptions& opt) {
    require_rho_kind(kind);
    const std::size_t k = ext.points.size();
    if (k == 0) throw InvalidInput("extremal set is empty");
    if (k == 1) return {ext.points, {1.0}};
    const RhoObjective obj(phi, space, ext, kind, gamma, opt.rho_grid);

    PsoProblem prob;
    prob.lower.assign(k, 0.0);
    prob.upper.assign(k, 1.0);
    prob.simplex = {SimplexBlock{0, k}};
    // relative to the sup level, so the swarm does not depend on the variance scale
    const double level = ext.level > 0.0 ? ext.level : 1.0;
    prob.objective = [&](std::span<const double> x) { return obj(x) / level; };
    prob.seeds.push_back(std::vector<double>(k, 1.0 / static_cast<double>(k)));
    for (std::size_t m = 0; m < k; ++m) {
        std::vector<double> e(k, 0.0);
        e[m] = 1.0;
        prob.seeds.push_back(e);
    }
    PsoConfig cfg;
    cfg.seed = splitmix(opt.seed, k);
    cfg.threads = threads_from_env();
    const PsoResult res = pso_minimize(prob, cfg);
    RhoMeasure rho{ext.points, res.position};
    normalize_simplex_blocks(rho.weights, prob.simplex);

    if (k <= 4) {
        const double n = n_parts(phi, space, rho, kind, gamma, opt).n;
        if (n - ext.level > opt.cert_tol * ext.level) {
            RhoMeasure alt = grid_search(obj, ext, k <= 3 ? 0.001 : 0.01);
            if (n_parts(phi, space, alt, kind, gamma, opt).n < n) rho = std::move(alt);
        }
    }
    return rho;
}

struct Prepared {
    VarianceFunction phi;
    RegionScanner scan;
};

std::pair<double, double> gammas(const DesignPair& pair) { return {pair.group1().gamma, pair.group2().gamma}; }

CriterionSpec with_order(CriterionSpec spec, NormOrder order) {
    spec.order = order;
    return spec;
}

void validate_rho(const RhoMeasure& rho, const VarianceFunction& phi, const ExtremalSet& ext) {
    if (rho.atoms.empty() || rho.atoms.size() != rho.weights.size())
        throw InvalidInput("rho needs matching, nonempty atoms and weights");
    double s = 0.0;
    for (double w : rho.weights) {
        if (!(w >= 0.0)) throw InvalidInput("rho weights must be nonnegative");
        s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw InvalidInput("rho weights must sum to 1");
    for (double z : rho.atoms) {
        const double v = phi(z);
        if (v < ext.level - ext.tol * std::abs(ext.level)) {
            std::ostringstream os;
            os << "rho atom " << z << " is not an extremal point (phi = " << v << ", sup = " << ext.level << ")";
            throw InvalidInput(os.str());
        }
    }
}

EquivalenceReport sup_report(const VarianceFunction& phi, const RegionScanner& scan, CheckKind kind,
                             const Design& xi1, const Design& xi2, std::pair<double, double> gamma,
                             const std::optional<RhoMeasure>& given, const CheckOptions& opt) {
    const Interval space = scan.spec().design_space;
    EquivalenceReport r;
    r.kind = kind;
    r.order = NormOrder::infinity();
    ExtremalSet ext = extremal_from(phi, scan, opt.extremal_tol);
    r.value = ext.level;
    r.scale = ext.level;
    RhoMeasure rho;
    if (given) {
        validate_rho(*given, phi, ext);
        rho = *given;
    } else {
        rho = solve_rho_impl(phi, space, ext, kind, gamma, opt);
    }
    const NParts np = n_parts(phi, space, rho, kind, gamma, opt);
    const double mu = r.value;
    const double q = np.q1 + np.q2;

    const Sensitivity s1(phi.group(1), space, opt);
    const SymMatrix b1 = weighted_outer(phi.group(1).model(), rho.atoms, rho.weights);
    std::vector<double> a1;
    for (double t : positive_support(xi1)) a1.push_back(s1.at(t, b1));

    if (kind == CheckKind::NuInf) {
        r.max_violation = np.a1.value - np.q1;
        r.argmax_t1 = np.a1.t;
        const auto sup1 = positive_support(xi1);
        for (std::size_t j = 0; j < sup1.size(); ++j)
            r.residuals.push_back({sup1[j], 0.0, -1, std::abs(a1[j] - np.q1) / mu});
        r.eff_lower_bound = clamp_bound((np.q1 * np.q1 / np.a1.value + np.q2) / mu);
    } else {
        const Sensitivity s2(phi.group(2), space, opt);
        const SymMatrix b2 = weighted_outer(phi.group(2).model(), rho.atoms, rho.weights);
        std::vector<double> a2;
        for (double t : positive_support(xi2)) a2.push_back(s2.at(t, b2));
        const auto sup1 = positive_support(xi1);
        const auto sup2 = positive_support(xi2);
        r.argmax_t1 = np.a1.t;
        r.argmax_t2 = np.a2.t;
        r.max_violation = np.n - mu;
        r.eff_lower_bound = clamp_bound(q * q / (np.n * mu));
        if (kind == CheckKind::Gamma) {
            for (std::size_t j = 0; j < sup1.size(); ++j)
                r.residuals.push_back({sup1[j], 0.0, 0, std::abs(a1[j] / gamma.first - mu) / mu});
            for (std::size_t j = 0; j < sup2.size(); ++j)
                r.residuals.push_back({sup2[j], 0.0, 1, std::abs(a2[j] / gamma.second - mu) / mu});
        } else {
            for (std::size_t j = 0; j < sup1.size(); ++j)
                for (std::size_t k = 0; k < sup2.size(); ++k)
                    r.residuals.push_back({sup1[j], sup2[k], -1, std::abs(a1[j] + a2[k] - mu) / mu});
            // the single-point form: rho restricted to one extremal point at a time
            double worst = 0.0;
            for (double z : ext.points) {
                const RhoMeasure point{{z}, {1.0}};
                worst = std::max(worst, n_parts(phi, space, point, kind, gamma, opt).n);
            }
            r.eff_bound_pointwise = clamp_bound(mu / worst);
        }
    }
    r.extremal = std::move(ext);
    r.rho = std::move(rho);
    finish(r, opt);
    return r;
}

// The checks run on the pair with sigma1^2 = 1 so that verdicts do not depend on the variance scale.
double variance_unit(const GroupSpec& g1) { return g1.sigma2; }

GroupSpec unit_variance(GroupSpec g, double c) {
    g.sigma2 /= c;
    return g;
}

EquivalenceReport rescaled(EquivalenceReport r, double c) {
    if (c == 1.0) return r;
    const double cs = r.order.is_infinite() ? c : std::pow(c, r.order.value());
    r.value *= c;
    r.scale *= cs;
    r.max_violation *= cs;
    if (r.extremal) {
        r.extremal->level *= c;
        for (double& v : r.extremal->values) v *= c;
    }
    return r;
}

}  // namespace

ExtremalSet extremal_set(const DesignPair& pair, const CriterionSpec& spec, double tol) {
    if (!(tol >= 0.0)) throw InvalidInput("extremal tolerance must be >= 0");
    const CriterionSpec s = with_order(spec, NormOrder::infinity());
    const RegionScanner scan(pair.group1().model, pair.group2().model, s);
    return extremal_from(VarianceFunction(pair), scan, tol);
}

RhoMeasure solve_rho(const DesignPair& pair, const CriterionSpec& spec, const ExtremalSet& extremal,
                     CheckKind kind, const CheckOptions& opt) {
    opt.validate();
    return solve_rho_impl(VarianceFunction(pair), spec.design_space, extremal, kind, gammas(pair), opt);
}

RhoMeasure solve_rho_grid(const DesignPair& pair, const CriterionSpec& spec, const ExtremalSet& extremal,
                          double step, CheckKind kind, const CheckOptions& opt) {
    opt.validate();
    require_rho_kind(kind);
    if (extremal.points.empty()) throw InvalidInput("extremal set is empty");
    if (!(step > 0.0 && step <= 1.0)) throw InvalidInput("simplex grid step must be in (0, 1]");
    const VarianceFunction phi(pair);
    const RhoObjective obj(phi, spec.design_space, extremal, kind, gammas(pair), opt.rho_grid);
    return grid_search(obj, extremal, step);
}

double n_function(const DesignPair& pair, const CriterionSpec& spec, const RhoMeasure& rho, CheckKind kind,
                  const CheckOptions& opt) {
    opt.validate();
    require_rho_kind(kind);
    return n_parts(VarianceFunction(pair), spec.design_space, rho, kind, gammas(pair), opt).n;
}

EquivalenceReport check_mu_p(const DesignPair& input, const CriterionSpec& spec, const CheckOptions& opt) {
    opt.validate();
    if (spec.order.is_infinite()) throw InvalidInput("check_mu_p requires a finite order p");
    const double c = variance_unit(input.group1());
    const DesignPair pair = input.with_sigma2(1.0, input.group2().sigma2 / c);
    const double p = spec.order.value();
    const VarianceFunction phi(pair);
    const RegionScanner scan(pair.group1().model, pair.group2().model, spec);
    const auto& lam = spec.lambda;
    std::vector<double> w(lam.nodes.size());
    double big_phi = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (lam.weights[k] == 0.0) continue;
        const double v = phi(lam.nodes[k]);
        w[k] = lam.weights[k] * std::pow(v, p - 1.0);
        big_phi += w[k] * v;
    }
    EquivalenceReport r;
    r.kind = CheckKind::MuP;
    r.order = spec.order;
    r.value = std::pow(big_phi, 1.0 / p);
    r.scale = big_phi;
    const Sensitivity s1(phi.group(1), spec.design_space, opt);
    const Sensitivity s2(phi.group(2), spec.design_space, opt);
    const SymMatrix b1 = weighted_outer(pair.group1().model, lam.nodes, w);
    const SymMatrix b2 = weighted_outer(pair.group2().model, lam.nodes, w);
    const LocalMax m1 = s1.max(b1);
    const LocalMax m2 = s2.max(b2);
    r.max_violation = m1.value + m2.value - big_phi;
    r.argmax_t1 = m1.t;
    r.argmax_t2 = m2.t;
    for (double t1 : positive_support(pair.xi1())) {
        const double a1 = s1.at(t1, b1);
        for (double t2 : positive_support(pair.xi2()))
            r.residuals.push_back({t1, t2, -1, std::abs(a1 + s2.at(t2, b2) - big_phi) / big_phi});
    }
    r.eff_lower_bound = clamp_bound(big_phi / (m1.value + m2.value));
    finish(r, opt);
    return rescaled(std::move(r), c);
}

EquivalenceReport check_mu_inf(const DesignPair& input, const CriterionSpec& spec,
                               const std::optional<RhoMeasure>& rho, const CheckOptions& opt) {
    opt.validate();
    const double c = variance_unit(input.group1());
    const DesignPair pair = input.with_sigma2(1.0, input.group2().sigma2 / c);
    const CriterionSpec s = with_order(spec, NormOrder::infinity());
    const VarianceFunction phi(pair);
    const RegionScanner scan(pair.group1().model, pair.group2().model, s);
    return rescaled(sup_report(phi, scan, CheckKind::MuInf, pair.xi1(), pair.xi2(), gammas(pair), rho, opt), c);
}

EquivalenceReport check_nu(const Design& xi1, const Design& eta, const CriterionSpec& spec, const GroupSpec& g1,
                           const GroupSpec& g2, const CheckOptions& opt) {
    opt.validate();
    const double c = variance_unit(g1);
    const DesignPair pair(xi1, eta, unit_variance(g1, c), unit_variance(g2, c));
    const VarianceFunction phi(pair);
    if (spec.order.is_infinite()) {
        const RegionScanner scan(g1.model, g2.model, spec);
        return rescaled(sup_report(phi, scan, CheckKind::NuInf, xi1, eta, gammas(pair), std::nullopt, opt), c);
    }
    const double p = spec.order.value();
    const RegionScanner scan(g1.model, g2.model, spec);
    const auto& lam = spec.lambda;
    std::vector<double> w(lam.nodes.size());
    double big_phi = 0.0;
    double fixed = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (lam.weights[k] == 0.0) continue;
        const double v = phi(lam.nodes[k]);
        w[k] = lam.weights[k] * std::pow(v, p - 1.0);
        big_phi += w[k] * v;
        fixed += w[k] * phi.group(2).at(lam.nodes[k]);
    }
    EquivalenceReport r;
    r.kind = CheckKind::NuP;
    r.order = spec.order;
    r.value = std::pow(big_phi, 1.0 / p);
    r.scale = big_phi;
    const Sensitivity s1(phi.group(1), spec.design_space, opt);
    const SymMatrix b1 = weighted_outer(g1.model, lam.nodes, w);
    const LocalMax m1 = s1.max(b1);
    r.max_violation = m1.value + fixed - big_phi;
    r.argmax_t1 = m1.t;
    for (double t1 : positive_support(xi1))
        r.residuals.push_back({t1, 0.0, -1, std::abs(s1.at(t1, b1) + fixed - big_phi) / big_phi});
    r.eff_lower_bound = clamp_bound(std::pow(std::max(0.0, 1.0 - p * r.max_violation / big_phi), 1.0 / p));
    finish(r, opt);
    return rescaled(std::move(r), c);
}

EquivalenceReport check_gamma(const Design& xi1, const Design& xi2, std::pair<double, double> gamma,
                              const CriterionSpec& spec, const ModelSpec& m1, const ModelSpec& m2,
                              std::pair<double, double> sigma2, const CheckOptions& opt) {
    opt.validate();
    require_allocation(gamma);
    const double c = sigma2.first;
    if (!(c > 0.0)) throw InvalidInput("sigma2 must be positive");
    const DesignPair pair(xi1, xi2, GroupSpec{m1, 1.0, gamma.first}, GroupSpec{m2, sigma2.second / c, gamma.second});
    const CriterionSpec s = with_order(spec, NormOrder::infinity());
    const VarianceFunction phi(pair);
    const RegionScanner scan(m1, m2, s);
    return rescaled(sup_report(phi, scan, CheckKind::Gamma, xi1, xi2, gamma, std::nullopt, opt), c);
}

EquivalenceReport check_pair(const DesignPair& pair, const CriterionSpec& spec, const CheckOptions& opt) {
    return spec.order.is_infinite() ? check_mu_inf(pair, spec, std::nullopt, opt) : check_mu_p(pair, spec, opt);
}

double eff_bound(const DesignPair& pair, const CriterionSpec& spec, const CheckOptions& opt) {
    return check_pair(pair, spec, opt).eff_lower_bound;
}

double efficiency(const DesignPair& pair, const DesignPair& optimal, const CriterionSpec& spec) {
    return criterion_value(optimal, spec) / criterion_value(pair, spec);
}

}  // namespace curvecmp
