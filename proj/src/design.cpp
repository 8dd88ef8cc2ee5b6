#include "curvecmp/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "curvecmp/error.hpp"

namespace curvecmp {

Interval Interval::make(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
        std::ostringstream os;
        os << "invalid interval [" << lo << ", " << hi << "]";
        throw InvalidInput(os.str());
    }
    return {lo, hi};
}

std::vector<double> linspace(const Interval& iv, std::size_t n) {
    if (n <= 1 || iv.length() == 0.0) return {iv.lo};
    std::vector<double> out(n);
    const double h = iv.length() / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = iv.lo + h * static_cast<double>(i);
    out.back() = iv.hi;
    return out;
}

Design::Design(std::vector<double> points, std::vector<double> weights, std::optional<Interval> space)
    : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.empty()) throw InvalidInput("design needs at least one support point");
    if (points_.size() != weights_.size())
        throw InvalidInput("design points and weights differ in length");
    double sum = 0.0;
    for (std::size_t j = 0; j < points_.size(); ++j) {
        if (!std::isfinite(points_[j])) throw InvalidInput("design point is not finite");
        if (!(weights_[j] >= 0.0)) throw InvalidInput("design weights must be nonnegative");
        if (j > 0 && !(points_[j] > points_[j - 1]))
            throw InvalidInput("design points must be strictly increasing");
        if (space && !space->contains(points_[j], kEndpointSlack)) {
            std::ostringstream os;
            os << "design point " << points_[j] << " outside design space [" << space->lo << ", "
               << space->hi << "]";
            throw InvalidInput(os.str());
        }
        sum += weights_[j];
    }
    if (std::abs(sum - 1.0) > kWeightSumTol) {
        std::ostringstream os;
        os.precision(17);
        os << "design weights sum to " << sum << ", expected 1";
        throw InvalidInput(os.str());
    }
}

Design Design::uniform(std::vector<double> points, std::optional<Interval> space) {
    const std::size_t n = points.size();
    if (n == 0) throw InvalidInput("design needs at least one support point");
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    // force an exact unit sum
    w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
    return Design(std::move(points), std::move(w), space);
}

Design Design::normalized(std::span<const double> points, std::span<const double> weights,
                          std::optional<Interval> space) {
    if (points.size() != weights.size() || points.empty())
        throw InvalidInput("design points and weights differ in length or are empty");
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
    std::vector<double> p;
    std::vector<double> w;
    for (std::size_t idx : order) {
        double t = points[idx];
        if (space) t = std::clamp(t, space->lo, space->hi);
        const double wt = std::abs(weights[idx]);
        if (!p.empty() && t == p.back())
            w.back() += wt;
        else {
            p.push_back(t);
            w.push_back(wt);
        }
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(total > 0.0)) throw InvalidInput("design weights are all zero");
    for (double& x : w) x /= total;
    double rest = 1.0;
    for (std::size_t j = 0; j + 1 < w.size(); ++j) rest -= w[j];
    if (rest >= 0.0) w.back() = rest;
    return Design(std::move(p), std::move(w), space);
}

void GroupSpec::validate() const {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw InvalidInput("group variance sigma2 must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidInput("group fraction gamma must lie in (0, 1)");
}

DesignPair::DesignPair(Design xi1, Design xi2, GroupSpec g1, GroupSpec g2)
    : xi1_(std::move(xi1)), xi2_(std::move(xi2)), g1_(std::move(g1)), g2_(std::move(g2)) {
    g1_.validate();
    g2_.validate();
    if (std::abs(g1_.gamma + g2_.gamma - 1.0) > kGammaSumTol)
        throw InvalidInput("group fractions must satisfy gamma1 + gamma2 = 1");
    for (double t : xi1_.points()) g1_.model.require_domain(t);
    for (double t : xi2_.points()) g2_.model.require_domain(t);
}

DesignPair DesignPair::with_gamma(double gamma1, double gamma2) const {
    GroupSpec a = g1_;
    GroupSpec b = g2_;
    a.gamma = gamma1;
    b.gamma = gamma2;
    return DesignPair(xi1_, xi2_, a, b);
}

DesignPair DesignPair::with_sigma2(double s1, double s2) const {
    GroupSpec a = g1_;
    GroupSpec b = g2_;
    a.sigma2 = s1;
    b.sigma2 = s2;
    return DesignPair(xi1_, xi2_, a, b);
}

NormOrder NormOrder::finite(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidInput("norm order p must lie in [1, inf)");
    return NormOrder(false, p);
}

std::string NormOrder::to_string() const {
    if (infinite_) return "inf";
    std::ostringstream os;
    os << p_;
    return os.str();
}

Quadrature Quadrature::trapezoid(const Interval& region, std::size_t nodes) {
    Quadrature q;
    q.nodes = linspace(region, nodes);
    const std::size_t n = q.nodes.size();
    if (n == 1) {
        q.weights = {1.0};
        return q;
    }
    q.weights.assign(n, 1.0 / static_cast<double>(n - 1));
    q.weights.front() *= 0.5;
    q.weights.back() *= 0.5;
    return q;
}

Quadrature Quadrature::point_mass(double t) { return Quadrature{{t}, {1.0}}; }

double Quadrature::total_mass() const noexcept {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

CriterionSpec CriterionSpec::make(NormOrder order, Interval design_space, Interval region) {
    CriterionSpec s;
    s.order = order;
    s.design_space = design_space;
    s.region = region;
    s.lambda = Quadrature::trapezoid(region, kDefaultNodes);
    return s;
}

void CriterionSpec::validate(std::size_t min_support) const {
    if (design_space.lo > design_space.hi || region.lo > region.hi)
        throw InvalidInput("design space and region must be proper intervals");
    if (sup_grid == 0) throw InvalidInput("sup grid needs at least one node");
    if (!(polish_tol > 0.0)) throw InvalidInput("polish tolerance must be > 0");
    if (order.is_infinite()) return;
    if (lambda.nodes.size() != lambda.weights.size() || lambda.nodes.empty())
        throw InvalidInput("lambda nodes and weights must be nonempty and of equal length");
    std::size_t support = 0;
    for (std::size_t k = 0; k < lambda.nodes.size(); ++k) {
        if (!region.contains(lambda.nodes[k], Design::kEndpointSlack))
            throw InvalidInput("lambda node outside the comparison region");
        if (!(lambda.weights[k] >= 0.0)) throw InvalidInput("lambda weights must be nonnegative");
        if (lambda.weights[k] > 0.0) ++support;
    }
    if (support == 0) throw InvalidInput("lambda weights are all zero");
    if (support < min_support) {
        std::ostringstream os;
        os << "lambda needs at least " << min_support << " support points, has " << support;
        throw InvalidInput(os.str());
    }
}

SymMatrix info_matrix(std::span<const double> points, std::span<const double> weights,
                      const ModelSpec& model) {
    SymMatrix m(model.dim());
    for (std::size_t j = 0; j < points.size(); ++j)
        m.add_outer_lower(weights[j], model.gradient(points[j]));
    m.symmetrize_from_lower();
    return m;
}

SymMatrix info_matrix(const Design& design, const ModelSpec& model) {
    return info_matrix(design.points(), design.weights(), model);
}

}  // namespace curvecmp
