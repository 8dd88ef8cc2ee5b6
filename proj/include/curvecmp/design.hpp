#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curvecmp/linalg.hpp"
#include "curvecmp/models.hpp"

namespace curvecmp {

/// Closed interval [lo, hi]; lo == hi denotes a single point.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    static Interval make(double lo, double hi);

    double length() const noexcept { return hi - lo; }
    bool contains(double t, double slack = 0.0) const noexcept {
        return t >= lo - slack && t <= hi + slack;
    }
    bool overlaps(const Interval& o) const noexcept { return lo <= o.hi && o.lo <= hi; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// `n` equally spaced nodes covering the interval (one node when degenerate).
std::vector<double> linspace(const Interval& iv, std::size_t n);

/// Approximate design: a probability measure with finite support.
class Design {
public:
    static constexpr double kWeightSumTol = 1e-12;
    static constexpr double kEndpointSlack = 1e-12;

    /// Validating constructor. Points must be strictly increasing and, when a
    /// design space is given, lie inside it; weights nonnegative summing to one.
    Design(std::vector<double> points, std::vector<double> weights,
           std::optional<Interval> space = std::nullopt);

    /// Equal weights on the given points.
    static Design uniform(std::vector<double> points, std::optional<Interval> space = std::nullopt);

    /// Sorts, merges coincident points and renormalizes raw coordinates.
    /// Used for decoded optimizer positions, which need not be ordered.
    static Design normalized(std::span<const double> points, std::span<const double> weights,
                             std::optional<Interval> space = std::nullopt);

    const std::vector<double>& points() const noexcept { return points_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return points_.size(); }

    friend bool operator==(const Design&, const Design&) = default;

private:
    std::vector<double> points_;
    std::vector<double> weights_;
};

/// One group of the comparison: its model, error variance and sample fraction.
struct GroupSpec {
    ModelSpec model = ModelSpec::linear();
    double sigma2 = 1.0;
    double gamma = 0.5;

    /// sigma2 / gamma: the factor multiplying the group's variance term.
    double scale() const noexcept { return sigma2 / gamma; }
    void validate() const;
};

/// Two designs together with their groups.
class DesignPair {
public:
    static constexpr double kGammaSumTol = 1e-12;

    DesignPair(Design xi1, Design xi2, GroupSpec g1, GroupSpec g2);

    const Design& xi1() const noexcept { return xi1_; }
    const Design& xi2() const noexcept { return xi2_; }
    const Design& design(int group) const noexcept { return group == 1 ? xi1_ : xi2_; }
    const GroupSpec& group1() const noexcept { return g1_; }
    const GroupSpec& group2() const noexcept { return g2_; }
    const GroupSpec& group(int group) const noexcept { return group == 1 ? g1_ : g2_; }

    DesignPair with_gamma(double gamma1, double gamma2) const;
    DesignPair with_sigma2(double s1, double s2) const;

private:
    Design xi1_;
    Design xi2_;
    GroupSpec g1_;
    GroupSpec g2_;
};

/// Order p of the L_p norm; infinity is a distinct tag.
class NormOrder {
public:
    static NormOrder infinity() { return NormOrder(true, 0.0); }
    static NormOrder finite(double p);

    bool is_infinite() const noexcept { return infinite_; }
    /// Only meaningful for finite orders.
    double value() const noexcept { return p_; }
    std::string to_string() const;

    friend bool operator==(const NormOrder&, const NormOrder&) = default;

private:
    NormOrder(bool inf, double p) : infinite_(inf), p_(p) {}
    bool infinite_;
    double p_;
};

/// Discrete measure lambda on the comparison region.
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;

    /// Trapezoid rule with weights normalized to total mass one.
    static Quadrature trapezoid(const Interval& region, std::size_t nodes);
    static Quadrature point_mass(double t);
    double total_mass() const noexcept;
};

/// Which criterion, over which region, with which measure.
struct CriterionSpec {
    static constexpr std::size_t kDefaultNodes = 501;
    static constexpr double kDefaultPolishTol = 1e-10;

    NormOrder order = NormOrder::infinity();
    Interval design_space{0.0, 1.0};
    Interval region{0.0, 1.0};
    Quadrature lambda;
    std::size_t sup_grid = kDefaultNodes;
    double polish_tol = kDefaultPolishTol;

    /// Defaults: trapezoid lambda with 501 nodes on the region.
    static CriterionSpec make(NormOrder order, Interval design_space, Interval region);

    /// Throws InvalidInput when lambda or the grids violate their invariants.
    /// `min_support` is max(d1, d2) for the models in use.
    void validate(std::size_t min_support = 1) const;
};

/// M = sum_j w_j f(t_j) f(t_j)^T, symmetric by construction.
SymMatrix info_matrix(const Design& design, const ModelSpec& model);
SymMatrix info_matrix(std::span<const double> points, std::span<const double> weights,
                      const ModelSpec& model);

}  // namespace curvecmp
