#include "curvecmp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "curvecmp/error.hpp"
#include "refine.hpp"

namespace curvecmp {

std::string to_string(Criterion c) {
    switch (c) {
        case Criterion::MuP: return "mu_p";
        case Criterion::MuInf: return "mu_inf";
        case Criterion::NuP: return "nu_p";
        case Criterion::NuInf: return "nu_inf";
        case Criterion::MuInfGamma: return "mu_inf_gamma";
    }
    return "unknown";
}

void Problem::validate() const {
    const bool finite = criterion == Criterion::MuP || criterion == Criterion::NuP;
    if (finite == spec.order.is_infinite())
        throw InvalidInput("criterion " + to_string(criterion) + " does not match norm order " + spec.order.to_string());
    if (support1() < g1.model.dim())
        throw InvalidInput("k1 must be at least the dimension of model 1");
    if (!fixed_second() && support2() < g2.model.dim())
        throw InvalidInput("k2 must be at least the dimension of model 2");
    if (fixed_second() && !eta) throw InvalidInput("criterion " + to_string(criterion) + " needs a fixed design eta");
    if (!fixed_second() && eta) throw InvalidInput("a fixed design eta is only used by nu criteria");
    if (optimizes_gamma()) {
        GroupSpec a = g1, b = g2;
        a.gamma = b.gamma = 0.5;
        a.validate();
        b.validate();
    } else {
        // also checks gamma1 + gamma2 = 1
        DesignPair(Design({spec.design_space.lo}, {1.0}), eta ? *eta : Design({spec.design_space.lo}, {1.0}), g1,
                   g2);
    }
    spec.validate(std::max(g1.model.dim(), g2.model.dim()));
    const Interval& x = spec.design_space;
    for (const auto* g : {&g1, &g2}) {
        g->model.require_domain(x.lo);
        g->model.require_domain(x.hi);
        g->model.require_domain(spec.region.lo);
        g->model.require_domain(spec.region.hi);
    }
    if (eta)
        for (double t : eta->points())
            if (!x.contains(t, Design::kEndpointSlack)) throw InvalidInput("eta has a point outside the design space");
}

DesignPair OptimizeResult::pair(const Problem& p) const {
    GroupSpec a = p.g1, b = p.g2;
    a.gamma = gamma.first;
    b.gamma = gamma.second;
    return DesignPair(xi1, xi2, a, b);
}

namespace {

constexpr double kPenalty = 1e100;

// Position layout: [points1, weights1, (points2, weights2), (gamma1, gamma2)].
struct Layout {
    std::size_t k1 = 0, k2 = 0;
    bool second = true;
    bool gamma = false;

    std::size_t dim() const { return 2 * k1 + (second ? 2 * k2 : 0) + (gamma ? 2 : 0); }
    std::size_t p2() const { return 2 * k1; }
    std::size_t g() const { return 2 * k1 + (second ? 2 * k2 : 0); }

    std::vector<SimplexBlock> blocks() const {
        std::vector<SimplexBlock> b{{k1, k1}};
        if (second) b.push_back({p2() + k2, k2});
        if (gamma) b.push_back({g(), 2});
        return b;
    }
};

Layout layout_for(const Problem& p, std::size_t k1, std::size_t k2) {
    Layout l;
    l.k1 = k1;
    l.k2 = k2;
    l.second = !p.fixed_second();
    l.gamma = p.optimizes_gamma();
    return l;
}

struct Sorted {
    std::vector<double> pts, w;
};

Sorted sorted_design(std::span<const double> pts, std::span<const double> w) {
    std::vector<std::size_t> idx(pts.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pts[a] < pts[b]; });
    Sorted s;
    for (std::size_t i : idx) {
        s.pts.push_back(pts[i]);
        s.w.push_back(std::abs(w[i]));
    }
    return s;
}

class Objective {
public:
    Objective(const Problem& p, Layout layout, bool polish)
        : p_(p),
          l_(layout),
          polish_(polish),
          scan_(p.g1.model, p.g2.model, p.spec) {
        if (p.fixed_second()) {
            eta_ = GroupVariance::try_make(p.g2.model, p.eta->points(), p.eta->weights(), p.g2.scale());
            if (!eta_) throw SingularDesign(2, "fixed design eta has a singular information matrix");
        }
    }

    double operator()(std::span<const double> x) const {
        std::pair<double, double> gamma{p_.g1.gamma, p_.g2.gamma};
        if (l_.gamma) {
            gamma = {x[l_.g()], x[l_.g() + 1]};
            if (!(gamma.first > 1e-9 && gamma.second > 1e-9)) return kPenalty;
        }
        const Sorted d1 = sorted_design(x.subspan(0, l_.k1), x.subspan(l_.k1, l_.k1));
        auto g1 = GroupVariance::try_make(p_.g1.model, d1.pts, d1.w, p_.g1.sigma2 / gamma.first);
        if (!g1) return kPenalty;
        std::optional<GroupVariance> g2;
        if (l_.second) {
            const Sorted d2 = sorted_design(x.subspan(l_.p2(), l_.k2), x.subspan(l_.p2() + l_.k2, l_.k2));
            g2 = GroupVariance::try_make(p_.g2.model, d2.pts, d2.w, p_.g2.sigma2 / gamma.second);
        } else {
            g2 = eta_;
        }
        if (!g2) return kPenalty;
        const VarianceFunction phi(std::move(*g1), std::move(*g2));
        if (!p_.spec.order.is_infinite()) {
            const double q = p_.spec.order.value();
            return std::pow(scan_.integral_pow(phi, q), 1.0 / q);
        }
        return polish_ ? scan_.sup(phi).value : scan_.grid_sup(phi).value;
    }

private:
    const Problem& p_;
    Layout l_;
    bool polish_;
    RegionScanner scan_;
    std::optional<GroupVariance> eta_;
};

struct Candidate {
    Design xi1;
    Design xi2;
    std::pair<double, double> gamma;
};

Candidate decode(const Problem& p, const Layout& l, std::span<const double> x) {
    const Interval& s = p.spec.design_space;
    std::pair<double, double> gamma{p.g1.gamma, p.g2.gamma};
    if (l.gamma) {
        gamma = {x[l.g()], 1.0 - x[l.g()]};
    }
    Design xi1 = Design::normalized(x.subspan(0, l.k1), x.subspan(l.k1, l.k1), s);
    Design xi2 = l.second ? Design::normalized(x.subspan(l.p2(), l.k2), x.subspan(l.p2() + l.k2, l.k2), s) : *p.eta;
    return {std::move(xi1), std::move(xi2), gamma};
}

std::vector<double> encode(const Layout& l, const Candidate& c) {
    std::vector<double> x(l.dim());
    const auto put = [&](const Design& d, std::size_t off, std::size_t k) {
        for (std::size_t j = 0; j < k; ++j) {
            x[off + j] = d.points()[j];
            x[off + k + j] = d.weights()[j];
        }
    };
    put(c.xi1, 0, l.k1);
    if (l.second) put(c.xi2, l.p2(), l.k2);
    if (l.gamma) {
        x[l.g()] = c.gamma.first;
        x[l.g() + 1] = c.gamma.second;
    }
    return x;
}

struct Bounds {
    std::vector<double> lo, hi;
};

Bounds full_bounds(const Problem& p, const Layout& l) {
    Bounds b;
    b.lo.assign(l.dim(), 0.0);
    b.hi.assign(l.dim(), 1.0);
    const Interval& s = p.spec.design_space;
    const auto pts = [&](std::size_t off, std::size_t k) {
        for (std::size_t j = 0; j < k; ++j) {
            b.lo[off + j] = s.lo;
            b.hi[off + j] = s.hi;
        }
    };
    pts(0, l.k1);
    if (l.second) pts(l.p2(), l.k2);
    return b;
}

struct RunResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t iterations = 0;
};

// Global swarm on the grid objective, then shrinking-box swarms on the polished objective.
RunResult run_once(const Problem& p, const Layout& l, const OptimizeOptions& opt, std::uint64_t seed,
                   const std::vector<std::vector<double>>& starts) {
    const Objective coarse(p, l, false);
    const Objective fine(p, l, true);
    const Bounds full = full_bounds(p, l);

    PsoProblem prob;
    prob.lower = full.lo;
    prob.upper = full.hi;
    prob.simplex = l.blocks();
    prob.objective = [&](std::span<const double> x) { return coarse(x); };
    prob.seeds = starts;
    PsoConfig cfg = opt.pso;
    cfg.seed = seed;
    PsoResult res = pso_minimize(prob, cfg);

    RunResult out;
    out.iterations = res.iterations;
    out.x = res.position;
    out.value = fine(out.x);

    PsoConfig local = opt.pso;
    local.swarm_size = std::max<std::size_t>(12, 2 * l.dim());
    local.max_iters = 300;
    local.stagnation_window = 40;
    double frac = 0.05;
    for (std::size_t round = 0; round < opt.polish_rounds; ++round) {
        PsoProblem lp;
        lp.simplex = prob.simplex;
        lp.lower.resize(l.dim());
        lp.upper.resize(l.dim());
        for (std::size_t j = 0; j < l.dim(); ++j) {
            const double r = frac * (full.hi[j] - full.lo[j]);
            lp.lower[j] = std::max(full.lo[j], out.x[j] - r);
            lp.upper[j] = std::min(full.hi[j], out.x[j] + r);
        }
        lp.objective = [&](std::span<const double> x) { return fine(x); };
        lp.seeds = {out.x};
        local.seed = splitmix(seed, 1000 + round);
        const PsoResult lr = pso_minimize(lp, local);
        out.iterations += lr.iterations;
        if (lr.value <= out.value) {
            out.x = lr.position;
            out.value = lr.value;
        }
        frac *= 0.5;
    }
    return out;
}

}  // namespace

double evaluate(const Problem& problem, const Design& xi1, const Design& xi2, std::pair<double, double> gamma) {
    GroupSpec a = problem.g1, b = problem.g2;
    a.gamma = gamma.first;
    b.gamma = gamma.second;
    return criterion_value(DesignPair(xi1, xi2, a, b), problem.spec);
}

EquivalenceReport certify(const Problem& problem, const Design& xi1, const Design& xi2,
                          std::pair<double, double> gamma, const CheckOptions& opt) {
    GroupSpec a = problem.g1, b = problem.g2;
    a.gamma = gamma.first;
    b.gamma = gamma.second;
    switch (problem.criterion) {
        case Criterion::MuP:
        case Criterion::MuInf: return check_pair(DesignPair(xi1, xi2, a, b), problem.spec, opt);
        case Criterion::NuP:
        case Criterion::NuInf: return check_nu(xi1, xi2, problem.spec, a, b, opt);
        case Criterion::MuInfGamma:
            return check_gamma(xi1, xi2, gamma, problem.spec, problem.g1.model, problem.g2.model,
                               {problem.g1.sigma2, problem.g2.sigma2}, opt);
    }
    throw InvalidInput("unknown criterion");
}

Design prune(const Design& d, double merge, double drop, const Interval& space) {
    std::vector<double> pts, w;
    for (std::size_t j = 0; j < d.size(); ++j) {
        const double t = d.points()[j];
        const double wt = d.weights()[j];
        if (!pts.empty() && t - pts.back() < merge) {
            // weighted centre of the merged cluster
            const double total = w.back() + wt;
            if (total > 0.0) pts.back() = (pts.back() * w.back() + t * wt) / total;
            w.back() = total;
        } else {
            pts.push_back(t);
            w.push_back(wt);
        }
    }
    std::vector<double> kp, kw;
    for (std::size_t j = 0; j < pts.size(); ++j)
        if (w[j] >= drop) {
            kp.push_back(pts[j]);
            kw.push_back(w[j]);
        }
    if (kp.empty()) return d;
    return Design::normalized(kp, kw, space);
}

OptimizeResult optimize(const Problem& problem, const OptimizeOptions& options) {
    problem.validate();
    options.pso.validate();
    options.check.validate();
    if (!(options.threshold > 0.0 && options.threshold <= 1.0)) throw InvalidInput("threshold must lie in (0, 1]");

    const Interval& space = problem.spec.design_space;
    const Layout full = layout_for(problem, problem.support1(), problem.support2());
    std::optional<OptimizeResult> best;
    for (std::size_t r = 0; r <= options.restarts; ++r) {
        const std::uint64_t seed = splitmix(options.pso.seed, r);
        const RunResult run = run_once(problem, full, options, seed, {});
        Candidate c = decode(problem, full, run.x);

        // pruning, then a local polish on the reduced support
        Design p1 = prune(c.xi1, options.merge_fraction * space.length(), options.drop_weight, space);
        Design p2 = full.second ? prune(c.xi2, options.merge_fraction * space.length(), options.drop_weight, space)
                                : c.xi2;
        std::size_t iterations = run.iterations;
        if (p1.size() != c.xi1.size() || (full.second && p2.size() != c.xi2.size())) {
            if (p1.size() >= problem.g1.model.dim() && (!full.second || p2.size() >= problem.g2.model.dim())) {
                const Layout reduced = layout_for(problem, p1.size(), full.second ? p2.size() : 0);
                const Candidate pc{p1, p2, c.gamma};
                OptimizeOptions local = options;
                local.pso.max_iters = 1;
                const RunResult rr = run_once(problem, reduced, local, splitmix(seed, 77), {encode(reduced, pc)});
                c = decode(problem, reduced, rr.x);
                iterations += rr.iterations;
            }
        }

        const detail::Refined refined = detail::refine_sqp(problem, c.xi1, c.xi2, c.gamma);
        c = {refined.xi1, refined.xi2, refined.gamma};
        iterations += refined.iterations;

        OptimizeResult res{c.xi1, c.xi2, c.gamma, evaluate(problem, c.xi1, c.xi2, c.gamma), {}};
        res.report = certify(problem, c.xi1, c.xi2, c.gamma, options.check);
        res.iterations = iterations;
        res.restarts_used = r;
        res.seed = options.pso.seed;
        res.certified = res.report.certified && res.report.eff_lower_bound >= options.threshold;
        const bool better = !best || (res.certified && !best->certified) ||
                            (res.certified == best->certified && res.value < best->value);
        if (better) best = std::move(res);
        if (best->certified) break;
    }
    best->restarts_used = std::min(best->restarts_used, options.restarts);
    return *best;
}

OptimizeResult optimize_nu(Problem problem, const OptimizeOptions& options) {
    if (!problem.fixed_second())
        problem.criterion = problem.spec.order.is_infinite() ? Criterion::NuInf : Criterion::NuP;
    return optimize(problem, options);
}

OptimizeResult optimize_gamma(Problem problem, const OptimizeOptions& options) {
    problem.criterion = Criterion::MuInfGamma;
    return optimize(problem, options);
}

}  // namespace curvecmp
