#include "curvecmp/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "curvecmp/criteria.hpp"
#include "curvecmp/error.hpp"

namespace curvecmp {
namespace {

double poly(const std::vector<double>& c, double t) {
    double s = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) s = s * t + c[k];
    return s;
}

void require_positive_weight(const WeightFunction& w, double t) {
    if (!(w.value(t) > 0.0) || !std::isfinite(w.value(t))) {
        std::ostringstream os;
        os << "weight function " << w.describe() << " must be positive at t = " << t;
        throw InvalidInput(os.str());
    }
}

// Coefficients a with w(t_j) sum_k a_k t_j^k = (-1)^j.
std::vector<double> alternating_interpolant(const std::vector<double>& pts, const WeightFunction& w) {
    const auto n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd b(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double t = pts[static_cast<std::size_t>(j)];
        double tk = 1.0;
        for (Eigen::Index k = 0; k < n; ++k, tk *= t) a(j, k) = w.value(t) * tk;
        b(j) = (j % 2 == 0) ? 1.0 : -1.0;
    }
    const Eigen::VectorXd c = a.fullPivLu().solve(b);
    return {c.data(), c.data() + n};
}

template <class F>
double sup_abs(F&& fn, const Interval& x, std::size_t nodes) {
    const auto abs_fn = [&](double t) { return std::abs(fn(t)); };
    return maximize_on(abs_fn, x, nodes, 1e-13).value;
}

struct Extremum {
    double t;
    double e;
};

// Alternating extrema of e over the grid: one per sign run, polished.
template <class F>
std::vector<Extremum> alternating_extrema(F&& e, const std::vector<double>& grid) {
    std::vector<Extremum> out;
    std::size_t start = 0;
    const auto flush = [&](std::size_t lo, std::size_t hi) {
        std::size_t best = lo;
        for (std::size_t k = lo; k < hi; ++k)
            if (std::abs(e(grid[k])) > std::abs(e(grid[best]))) best = k;
        const double sign = e(grid[best]) >= 0.0 ? 1.0 : -1.0;
        const auto signed_fn = [&](double t) { return sign * e(t); };
        Extremum ex{grid[best], e(grid[best])};
        const double a = grid[best > 0 ? best - 1 : best];
        const double b = grid[best + 1 < grid.size() ? best + 1 : best];
        if (b > a) {
            const LocalMax m = golden_section_max(signed_fn, a, b, 1e-14 * (grid.back() - grid.front() + 1.0));
            if (m.value > sign * ex.e) ex = {m.t, sign * m.value};
        }
        out.push_back(ex);
    };
    for (std::size_t k = 1; k <= grid.size(); ++k) {
        const bool end = k == grid.size();
        if (end || (e(grid[k]) >= 0.0) != (e(grid[start]) >= 0.0)) {
            flush(start, k);
            start = k;
        }
    }
    return out;
}

Design make_design(const std::vector<double>& pts, const std::vector<double>& w, const Interval& x) {
    return Design::normalized(pts, w, x);
}

}  // namespace

double ChebyshevSolution::value(double t) const { return weight.value(t) * poly(coefficients, t); }

LagrangeBasis::LagrangeBasis(std::vector<double> knots, WeightFunction weight)
    : knots_(std::move(knots)), weight_(weight) {
    if (knots_.empty()) throw InvalidInput("Lagrange basis needs at least one knot");
    for (std::size_t j = 1; j < knots_.size(); ++j)
        if (!(knots_[j] > knots_[j - 1])) throw InvalidInput("Lagrange knots must be strictly increasing");
    for (double t : knots_) require_positive_weight(weight_, t);
}

double LagrangeBasis::operator()(std::size_t j, double t) const {
    if (j >= knots_.size()) throw InvalidInput("Lagrange basis index out of range");
    double s = weight_.value(t) / weight_.value(knots_[j]);
    for (std::size_t k = 0; k < knots_.size(); ++k)
        if (k != j) s *= (t - knots_[k]) / (knots_[j] - knots_[k]);
    return s;
}

std::vector<double> chebyshev_points_poly(int p, const Interval& x) {
    if (p < 1) throw InvalidInput("polynomial degree must be at least 1");
    if (!(x.hi > x.lo)) throw InvalidInput("design space must have positive length");
    std::vector<double> pts(static_cast<std::size_t>(p) + 1);
    for (int j = 0; j <= p; ++j) {
        const double c = std::cos(static_cast<double>(j) / p * std::numbers::pi);
        pts[static_cast<std::size_t>(j)] = ((1.0 - c) * x.hi + (1.0 + c) * x.lo) / 2.0;
    }
    pts.front() = x.lo;
    pts.back() = x.hi;
    return pts;
}

std::vector<double> lagrange_weights(const std::vector<double>& knots, double z, WeightFunction weight) {
    const LagrangeBasis basis(knots, weight);
    if (z >= knots.front() && z <= knots.back())
        throw InvalidInput("extrapolation point must lie outside the hull of the knots");
    require_positive_weight(weight, z);
    std::vector<double> w(knots.size());
    double total = 0.0;
    for (std::size_t j = 0; j < knots.size(); ++j) {
        w[j] = std::abs(basis(j, z));
        total += w[j];
    }
    for (double& v : w) v /= total;
    return w;
}

ChebyshevSolution equioscillating(const WeightFunction& weight, int p, const Interval& x, const RemezOptions& opt) {
    if (p < 1) throw InvalidInput("polynomial degree must be at least 1");
    if (!(x.hi > x.lo)) throw InvalidInput("design space must have positive length");
    if (opt.grid < 3 || opt.max_iters == 0 || !(opt.tol > 0.0)) throw InvalidInput("invalid exchange options");
    require_positive_weight(weight, x.lo);
    require_positive_weight(weight, x.hi);

    ChebyshevSolution sol;
    sol.weight = weight;
    std::vector<double> ref = chebyshev_points_poly(p, x);

    if (!weight.is_constant()) {
        // Remez exchange on e(t) = w(t) (s^p - sum_{j<p} c_j s^j), s the affine map of X onto [-1, 1]
        const double mid = 0.5 * (x.lo + x.hi), half = 0.5 * x.length();
        const auto n = static_cast<Eigen::Index>(p) + 1;
        const std::vector<double> grid = linspace(x, opt.grid);
        std::vector<double> c(static_cast<std::size_t>(p));
        const auto err = [&](double t) {
            const double s = (t - mid) / half;
            return weight.value(t) * (std::pow(s, p) - poly(c, s));
        };
        bool converged = false;
        double last_gap = 0.0;
        for (std::size_t it = 1; it <= opt.max_iters; ++it) {
            Eigen::MatrixXd a(n, n);
            Eigen::VectorXd b(n);
            for (Eigen::Index k = 0; k < n; ++k) {
                const double t = ref[static_cast<std::size_t>(k)];
                const double s = (t - mid) / half, w = weight.value(t);
                double sj = 1.0;
                for (Eigen::Index j = 0; j < n - 1; ++j, sj *= s) a(k, j) = w * sj;
                a(k, n - 1) = (k % 2 == 0) ? 1.0 : -1.0;
                b(k) = w * std::pow(s, p);
            }
            const Eigen::VectorXd sol_ce = a.fullPivLu().solve(b);
            for (std::size_t j = 0; j < c.size(); ++j) c[j] = sol_ce(static_cast<Eigen::Index>(j));
            const double level = std::abs(sol_ce(n - 1));

            std::vector<Extremum> ext = alternating_extrema(err, grid);
            if (ext.size() < ref.size())
                throw NumericalFailure("exchange lost alternation: " + std::to_string(ext.size()) + " extrema for " +
                                       std::to_string(ref.size()) + " reference points");
            // keep p + 1 consecutive extrema containing the global maximum
            while (ext.size() > ref.size()) {
                std::size_t gmax = 0;
                for (std::size_t k = 0; k < ext.size(); ++k)
                    if (std::abs(ext[k].e) > std::abs(ext[gmax].e)) gmax = k;
                const bool drop_front = gmax != 0 && (gmax == ext.size() - 1 ||
                                                      std::abs(ext.front().e) <= std::abs(ext.back().e));
                if (drop_front)
                    ext.erase(ext.begin());
                else
                    ext.pop_back();
            }
            double top = 0.0;
            for (std::size_t k = 0; k < ext.size(); ++k) {
                ref[k] = ext[k].t;
                top = std::max(top, std::abs(ext[k].e));
            }
            sol.iterations = it;
            last_gap = (top - level) / top;
            if (last_gap < opt.tol) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            std::ostringstream os;
            os << "Remez exchange for weight " << weight.describe() << ", degree " << p << " did not converge in "
               << opt.max_iters << " iterations (relative level gap " << last_gap << ")";
            throw NumericalFailure(os.str());
        }
    }

    sol.points = ref;
    sol.coefficients = alternating_interpolant(ref, weight);
    sol.residual = sup_abs([&](double t) { return sol.value(t); }, x, opt.grid) - 1.0;
    return sol;
}

Design extrapolation_design_poly(int p, const Interval& x, const Interval& z, const WeightFunction& weight) {
    if (x.overlaps(z)) throw InvalidInput("design space and extrapolation region must not intersect");
    const bool right = x.hi < z.lo;
    const int mono = weight.monotonicity();
    if (right && mono < 0)
        throw InvalidInput("weight function must be nondecreasing when the region lies right of the design space");
    if (!right && mono > 0)
        throw InvalidInput("weight function must be nonincreasing when the region lies left of the design space");
    require_positive_weight(weight, std::min(x.lo, z.lo));
    const ChebyshevSolution sol = equioscillating(weight, p, x);
    const double target = right ? z.hi : z.lo;
    return Design::normalized(sol.points, lagrange_weights(sol.points, target, weight), x);
}

Design corollary_design(const ModelSpec& model, const Interval& x, const Interval& z) {
    if (x.overlaps(z) || !(x.hi < z.lo))
        throw InvalidInput("closed-form extrapolation designs need U_X < L_Z");
    if (x.lo < 0.0) throw InvalidInput("closed-form extrapolation designs need L_X >= 0");
    if (!(x.hi > x.lo)) throw InvalidInput("design space must have positive length");
    const double ux = x.hi, lx = x.lo, uz = z.hi;
    switch (model.kind()) {
        case ModelKind::Emax: {
            const double t3 = model.theta()[2];
            const auto g = [t3](double a, double b) { return a / (a + t3) - b / (b + t3); };
            const double ga = g(uz, ux), gb = g(uz, lx);
            const double mid = (2.0 * ux * lx + (ux + lx) * t3) / (2.0 * t3 + ux + lx);
            return make_design({lx, mid, ux}, {(ga + gb) * ga, 4.0 * ga * gb, (ga + gb) * gb}, x);
        }
        case ModelKind::MichaelisMenten: {
            if (!(lx > 0.0)) throw InvalidInput("Michaelis-Menten closed form needs L_X > 0");
            const double t2 = model.theta()[1];
            const double r2 = std::numbers::sqrt2;
            const double inner = t2 * ux * (r2 - 1.0) / ((2.0 - r2) * ux + t2);
            if (inner < lx) {
                std::ostringstream os;
                os << "Michaelis-Menten closed form puts its inner point " << inner << " below L_X = " << lx;
                throw InvalidInput(os.str());
            }
            const double den = ux * uz * (3.0 * r2 - 4.0) + t2 * (r2 * uz - (4.0 - 2.0 * r2) * ux);
            const double w0 = t2 * (uz - ux) / den;
            const double w1 = (r2 - 1.0) * ((2.0 - r2) * ux * uz + t2 * (uz - (r2 - 1.0) * ux)) / den;
            return make_design({inner, ux}, {w0, w1}, x);
        }
        case ModelKind::LogLinearFixed: {
            const double den = 2.0 * std::exp(uz) - (std::exp(lx) + std::exp(ux));
            return make_design({lx, ux}, {(std::exp(uz) - std::exp(ux)) / den, (std::exp(uz) - std::exp(lx)) / den}, x);
        }
        default:
            throw InvalidInput("no closed-form extrapolation design for model " + model.name() +
                               " (supported: emax, michaelis_menten, loglinear with known offset)");
    }
}

}  // namespace curvecmp
