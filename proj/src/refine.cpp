#include "refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

namespace curvecmp::detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxPieces = 8;

struct State {
    std::vector<double> p1, w1, p2, w2;
    std::pair<double, double> gamma;
};

struct Coord {
    enum class Kind { Point, Weight, Gamma };
    Kind kind;
    int group;
    std::size_t j;
};

class Chart {
public:
    Chart(const Problem& p, State base) : p_(p), base_(std::move(base)) {
        const Interval& x = p.spec.design_space;
        const double snap = 1e-3 * x.length();
        const auto add_group = [&](int g, std::vector<double>& pts, const std::vector<double>& w) {
            for (std::size_t j = 0; j < pts.size(); ++j) {
                if (pts[j] - x.lo <= snap) {
                    pts[j] = x.lo;
                } else if (x.hi - pts[j] <= snap) {
                    pts[j] = x.hi;
                } else {
                    coords_.push_back({Coord::Kind::Point, g, j});
                }
            }
            const std::size_t e = static_cast<std::size_t>(std::max_element(w.begin(), w.end()) - w.begin());
            eliminated_[g - 1] = e;
            for (std::size_t j = 0; j < w.size(); ++j)
                if (j != e) coords_.push_back({Coord::Kind::Weight, g, j});
        };
        add_group(1, base_.p1, base_.w1);
        if (!p.fixed_second()) add_group(2, base_.p2, base_.w2);
        if (p.optimizes_gamma()) coords_.push_back({Coord::Kind::Gamma, 1, 0});
    }

    std::size_t size() const { return coords_.size(); }
    const Coord& coord(std::size_t c) const { return coords_[c]; }
    std::size_t eliminated(int group) const { return eliminated_[group - 1]; }
    const State& base() const { return base_; }

    std::vector<double> origin() const {
        std::vector<double> y(coords_.size());
        for (std::size_t c = 0; c < coords_.size(); ++c) y[c] = get(base_, coords_[c]);
        return y;
    }

    double step(std::size_t c) const {
        return coords_[c].kind == Coord::Kind::Point ? 1e-5 * p_.spec.design_space.length() : 1e-5;
    }

    std::optional<State> at(const std::vector<double>& y) const {
        State s = base_;
        const Interval& x = p_.spec.design_space;
        for (std::size_t c = 0; c < coords_.size(); ++c) {
            const Coord& k = coords_[c];
            if (k.kind == Coord::Kind::Gamma) {
                s.gamma = {y[c], 1.0 - y[c]};
            } else {
                auto& v = k.kind == Coord::Kind::Point ? (k.group == 1 ? s.p1 : s.p2) : (k.group == 1 ? s.w1 : s.w2);
                v[k.j] = k.kind == Coord::Kind::Point ? std::clamp(y[c], x.lo, x.hi) : y[c];
            }
        }
        if (p_.optimizes_gamma() && !(s.gamma.first > 1e-9 && s.gamma.second > 1e-9)) return std::nullopt;
        const double gap = 1e-9 * x.length();
        const auto fix = [&](int g, std::vector<double>& pts, std::vector<double>& w) {
            const std::size_t e = eliminated(g);
            double rest = 0.0;
            for (std::size_t j = 0; j < w.size(); ++j)
                if (j != e) rest += w[j];
            w[e] = 1.0 - rest;
            for (double wj : w)
                if (!(wj > 0.0)) return false;
            for (std::size_t j = 1; j < pts.size(); ++j)
                if (!(pts[j] - pts[j - 1] > gap)) return false;
            return true;
        };
        if (!fix(1, s.p1, s.w1)) return std::nullopt;
        if (!p_.fixed_second() && !fix(2, s.p2, s.w2)) return std::nullopt;
        return s;
    }

private:
    static double get(const State& s, const Coord& k) {
        switch (k.kind) {
            case Coord::Kind::Point: return (k.group == 1 ? s.p1 : s.p2)[k.j];
            case Coord::Kind::Weight: return (k.group == 1 ? s.w1 : s.w2)[k.j];
            case Coord::Kind::Gamma: return s.gamma.first;
        }
        return 0.0;
    }

    const Problem& p_;
    State base_;
    std::vector<Coord> coords_;
    std::size_t eliminated_[2] = {0, 0};
};

Vec model_derivative(const ModelSpec& m, double t) {
    const double h = 1e-6 * std::max(1.0, std::abs(t));
    if (m.in_domain(t - h) && m.in_domain(t + h)) {
        const Vec a = m.gradient_unchecked(t + h), b = m.gradient_unchecked(t - h);
        Vec d(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) d[i] = (a[i] - b[i]) / (2.0 * h);
        return d;
    }
    const Vec a = m.gradient_unchecked(t + h), b = m.gradient_unchecked(t);
    Vec d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = (a[i] - b[i]) / h;
    return d;
}

// Factored groups of one state plus cached support gradients.
struct Evaluated {
    std::optional<GroupVariance> g[2];
    std::vector<Vec> f[2], df[2];
    const std::vector<double>* w[2];
    double scale[2];
    double gamma[2];
};

std::optional<Evaluated> evaluate_state(const Problem& p, const State& s) {
    Evaluated e;
    const ModelSpec* m[2] = {&p.g1.model, &p.g2.model};
    const std::vector<double>* pts[2] = {&s.p1, &s.p2};
    e.w[0] = &s.w1;
    e.w[1] = &s.w2;
    e.scale[0] = p.g1.sigma2 / s.gamma.first;
    e.scale[1] = p.g2.sigma2 / s.gamma.second;
    e.gamma[0] = s.gamma.first;
    e.gamma[1] = s.gamma.second;
    for (int i = 0; i < 2; ++i) {
        e.g[i] = GroupVariance::try_make(*m[i], *pts[i], *e.w[i], e.scale[i]);
        if (!e.g[i]) return std::nullopt;
        for (double t : *pts[i]) {
            e.f[i].push_back(m[i]->gradient_unchecked(t));
            e.df[i].push_back(model_derivative(*m[i], t));
        }
    }
    return e;
}

double phi_at(const Evaluated& e, double z) { return e.g[0]->at(z) + e.g[1]->at(z); }

// phi(z) and its gradient in chart coordinates.
double phi_grad(const Chart& chart, const Evaluated& e, double z, std::vector<double>& grad) {
    grad.assign(chart.size(), 0.0);
    double part[2];
    std::vector<double> raw_w[2], raw_t[2];
    for (int i = 0; i < 2; ++i) {
        const GroupVariance& g = *e.g[i];
        const Vec f = g.model().gradient_unchecked(z);
        const Vec u = g.factor().solve(f);
        part[i] = e.scale[i] * f.dot(u);
        const std::size_t k = e.f[i].size();
        raw_w[i].resize(k);
        raw_t[i].resize(k);
        for (std::size_t j = 0; j < k; ++j) {
            const double a = u.dot(e.f[i][j]);
            raw_w[i][j] = -e.scale[i] * a * a;
            raw_t[i][j] = -2.0 * e.scale[i] * (*e.w[i])[j] * a * u.dot(e.df[i][j]);
        }
    }
    for (std::size_t c = 0; c < chart.size(); ++c) {
        const Coord& k = chart.coord(c);
        const int i = k.group - 1;
        switch (k.kind) {
            case Coord::Kind::Point: grad[c] = raw_t[i][k.j]; break;
            case Coord::Kind::Weight: grad[c] = raw_w[i][k.j] - raw_w[i][chart.eliminated(k.group)]; break;
            case Coord::Kind::Gamma:
                grad[c] = -part[0] / e.gamma[0] + part[1] / e.gamma[1];
                break;
        }
    }
    return part[0] + part[1];
}

struct Piece {
    double z = 0.0;
    double value = 0.0;
    std::vector<double> grad;
};

class Model {
public:
    explicit Model(const Problem& p) : p_(p), scan_(p.g1.model, p.g2.model, p.spec) {
        const Interval& r = p.spec.region;
        delta_ = 2.0 * r.length() / static_cast<double>(std::max<std::size_t>(2, p.spec.sup_grid) - 1);
    }

    bool finite() const { return !p_.spec.order.is_infinite(); }

    /// Merit: integral of phi^p for finite p, sup of phi otherwise.
    double merit(const State& s) const {
        const auto e = evaluate_state(p_, s);
        if (!e) return kInf;
        const VarianceFunction phi(*e->g[0], *e->g[1]);
        if (finite()) return scan_.integral_pow(phi, p_.spec.order.value());
        return scan_.sup(phi).value;
    }

    double criterion(double merit) const { return finite() ? std::pow(merit, 1.0 / p_.spec.order.value()) : merit; }

    /// Active pieces at the chart base.
    std::vector<Piece> pieces(const Chart& chart) const {
        const auto e = evaluate_state(p_, chart.base());
        std::vector<Piece> out;
        if (!e) return out;
        if (finite()) {
            out.push_back(integral_piece(chart, *e));
            return out;
        }
        const VarianceFunction phi(*e->g[0], *e->g[1]);
        auto maxima = scan_.maxima(phi, 1e-2);
        std::sort(maxima.begin(), maxima.end(), [](const LocalMax& a, const LocalMax& b) { return a.value > b.value; });
        if (maxima.size() > kMaxPieces) maxima.resize(kMaxPieces);
        for (const auto& m : maxima) {
            Piece pc;
            pc.z = m.t;
            pc.value = phi_grad(chart, *e, m.t, pc.grad);
            out.push_back(std::move(pc));
        }
        return out;
    }

    /// Piece gradients at a perturbed state, each peak relocated near its previous position.
    std::optional<std::vector<std::vector<double>>> gradients(const Chart& chart, const State& s,
                                                              const std::vector<Piece>& at) const {
        const auto e = evaluate_state(p_, s);
        if (!e) return std::nullopt;
        std::vector<std::vector<double>> out;
        if (finite()) {
            out.push_back(integral_piece(chart, *e).grad);
            return out;
        }
        const Interval& r = p_.spec.region;
        const auto fn = [&](double t) { return phi_at(*e, t); };
        for (const auto& pc : at) {
            const LocalMax m = golden_section_max(fn, std::max(r.lo, pc.z - delta_), std::min(r.hi, pc.z + delta_), 1e-12);
            std::vector<double> g;
            phi_grad(chart, *e, m.t, g);
            out.push_back(std::move(g));
        }
        return out;
    }

private:
    Piece integral_piece(const Chart& chart, const Evaluated& e) const {
        const double p = p_.spec.order.value();
        const Quadrature& q = p_.spec.lambda;
        Piece pc;
        pc.grad.assign(chart.size(), 0.0);
        std::vector<double> g;
        for (std::size_t k = 0; k < q.nodes.size(); ++k) {
            if (q.weights[k] == 0.0) continue;
            const double v = phi_grad(chart, e, q.nodes[k], g);
            pc.value += q.weights[k] * std::pow(v, p);
            const double c = q.weights[k] * p * std::pow(v, p - 1.0);
            for (std::size_t j = 0; j < g.size(); ++j) pc.grad[j] += c * g[j];
        }
        return pc;
    }

    const Problem& p_;
    RegionScanner scan_;
    double delta_ = 0.0;
};

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Inverse of a symmetric matrix with eigenvalues lifted to a positive floor.
MatrixXd positive_inverse(const MatrixXd& h) {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
    const VectorXd ev = es.eigenvalues();
    const double floor = std::max(1e-8 * ev.cwiseAbs().maxCoeff(), 1e-300);
    const VectorXd inv = ev.cwiseAbs().cwiseMax(floor).cwiseInverse();
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// max over the simplex of rho.v - rho^T Q rho / 2, by enumerating supports.
VectorXd simplex_qp(const MatrixXd& q, const VectorXd& v) {
    const auto m = v.size();
    VectorXd best = VectorXd::Zero(m);
    double best_val = -kInf;
    const double scale = std::max(q.cwiseAbs().maxCoeff(), 1.0);
    for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
        std::vector<Eigen::Index> s;
        for (Eigen::Index i = 0; i < m; ++i)
            if (mask >> i & 1) s.push_back(i);
        const auto k = static_cast<Eigen::Index>(s.size());
        MatrixXd a = MatrixXd::Zero(k + 1, k + 1);
        VectorXd b = VectorXd::Zero(k + 1);
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < k; ++j) a(i, j) = q(s[i], s[j]);
            a(i, k) = a(k, i) = 1.0;
            b(i) = v(s[i]);
        }
        b(k) = 1.0;
        const Eigen::FullPivLU<MatrixXd> lu(a);
        if (lu.rank() < k + 1 || std::abs(lu.determinant()) < 1e-300) continue;
        if (lu.rcond() < 1e-13 / scale) continue;
        const VectorXd x = lu.solve(b);
        VectorXd rho = VectorXd::Zero(m);
        bool ok = true;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (x(i) < -1e-12) ok = false;
            rho(s[i]) = std::max(0.0, x(i));
        }
        if (!ok) continue;
        rho /= rho.sum();
        const double val = rho.dot(v) - 0.5 * rho.dot(q * rho);
        if (val > best_val) {
            best_val = val;
            best = rho;
        }
    }
    return best;
}

State to_state(const Design& xi1, const Design& xi2, std::pair<double, double> gamma) {
    return {xi1.points(), xi1.weights(), xi2.points(), xi2.weights(), gamma};
}

}  // namespace

Refined refine_sqp(const Problem& problem, const Design& xi1, const Design& xi2, std::pair<double, double> gamma,
                   std::size_t max_iters) {
    const Model model(problem);
    State cur = to_state(xi1, xi2, gamma);
    double cur_merit = model.merit(cur);
    Refined out{xi1, xi2, gamma, model.criterion(cur_merit), 0};

    VectorXd rho_prev;
    std::vector<double> zs_prev;
    for (std::size_t it = 0; it < max_iters; ++it) {
        const Chart chart(problem, cur);
        const std::size_t n = chart.size();
        if (n == 0) break;
        // snapping to the boundary may change the merit
        const auto snapped = chart.at(chart.origin());
        if (!snapped) break;
        const double snap_merit = model.merit(*snapped);
        if (!(snap_merit <= cur_merit * (1.0 + 1e-9))) break;
        cur = *snapped;
        cur_merit = std::min(cur_merit, snap_merit);

        const std::vector<Piece> pieces = model.pieces(chart);
        const std::size_t m = pieces.size();
        if (m == 0) break;

        // Hessians of each piece by central differences of the relocated gradients
        const auto nn = static_cast<Eigen::Index>(n);
        const auto mm = static_cast<Eigen::Index>(m);
        std::vector<MatrixXd> hess(m, MatrixXd::Zero(nn, nn));
        MatrixXd grads(mm, nn);
        VectorXd values(mm);
        for (std::size_t k = 0; k < m; ++k) {
            grads.row(static_cast<Eigen::Index>(k)) = Eigen::Map<const VectorXd>(pieces[k].grad.data(), nn);
            values(static_cast<Eigen::Index>(k)) = pieces[k].value;
        }
        const std::vector<double> y0 = chart.origin();
        bool ok = true;
        for (std::size_t c = 0; c < n && ok; ++c) {
            const double h = chart.step(c);
            std::vector<double> yp = y0, ym = y0;
            yp[c] += h;
            ym[c] -= h;
            const auto sp = chart.at(yp), sm = chart.at(ym);
            if (!sp || !sm) {
                ok = false;
                break;
            }
            const auto gp = model.gradients(chart, *sp, pieces), gm = model.gradients(chart, *sm, pieces);
            if (!gp || !gm) {
                ok = false;
                break;
            }
            for (std::size_t k = 0; k < m; ++k)
                for (std::size_t j = 0; j < n; ++j)
                    hess[k](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) =
                        ((*gp)[k][j] - (*gm)[k][j]) / (2.0 * h);
        }
        if (!ok) break;
        for (auto& hk : hess) hk = 0.5 * (hk + hk.transpose()).eval();

        // multipliers from the previous step when the peaks persist
        VectorXd rho = VectorXd::Zero(mm);
        bool reuse = static_cast<std::size_t>(rho_prev.size()) == m;
        for (std::size_t k = 0; reuse && k < m; ++k)
            if (std::abs(zs_prev[k] - pieces[k].z) > 1e-2 * problem.spec.region.length()) reuse = false;
        if (reuse) {
            rho = rho_prev;
        } else {
            const double top = values.maxCoeff();
            for (Eigen::Index k = 0; k < mm; ++k)
                if (values(k) >= top - 1e-3 * std::abs(top)) rho(k) = 1.0;
            rho /= rho.sum();
        }

        VectorXd d = VectorXd::Zero(nn);
        for (int pass = 0; pass < 2; ++pass) {
            MatrixXd b = MatrixXd::Zero(nn, nn);
            for (std::size_t k = 0; k < m; ++k) b += rho(static_cast<Eigen::Index>(k)) * hess[k];
            const MatrixXd bg = positive_inverse(b) * grads.transpose();
            const MatrixXd q = grads * bg;
            rho = simplex_qp(q, values.array() - values(0));
            d = -bg * rho;
        }
        rho_prev = rho;
        zs_prev.clear();
        for (const auto& pc : pieces) zs_prev.push_back(pc.z);

        const double top = values.maxCoeff();
        const double predicted = top - (values + grads * d).maxCoeff();
        if (!(predicted > 1e-15 * std::abs(top))) break;

        bool accepted = false;
        double alpha = 1.0;
        for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
            std::vector<double> y = y0;
            for (std::size_t i = 0; i < n; ++i) y[i] += alpha * d(static_cast<Eigen::Index>(i));
            const auto s = chart.at(y);
            if (!s) continue;
            const double mt = model.merit(*s);
            if (mt <= cur_merit - 1e-4 * alpha * predicted) {
                cur = *s;
                cur_merit = mt;
                accepted = true;
                break;
            }
        }
        ++out.iterations;
        if (!accepted) break;
    }

    const Interval& x = problem.spec.design_space;
    const double final_value = model.criterion(cur_merit);
    if (final_value < out.value) {
        out.xi1 = Design(cur.p1, cur.w1, x);
        if (!problem.fixed_second()) out.xi2 = Design(cur.p2, cur.w2, x);
        out.gamma = cur.gamma;
        out.value = final_value;
    }
    return out;
}

}  // namespace curvecmp::detail
