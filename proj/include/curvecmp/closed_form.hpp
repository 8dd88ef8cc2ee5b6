#pragma once

#include <cstddef>
#include <vector>

#include "curvecmp/design.hpp"
#include "curvecmp/models.hpp"

namespace curvecmp {

/// Equioscillating weighted polynomial v(t) = w(t) * sum_k coefficients[k] t^k
/// with |v| <= 1 on the design space and v(points[j]) = (-1)^j.
struct ChebyshevSolution {
    std::vector<double> points;
    std::vector<double> coefficients;
    WeightFunction weight;
    /// Exchange iterations used (0 for the cosine formula).
    std::size_t iterations = 0;
    /// max |v| - 1 on a dense grid of the design space.
    double residual = 0.0;

    double value(double t) const;
};

/// Lagrange basis L_j(t) = (w(t) / w(t_j)) prod_{k != j} (t - t_k) / (t_j - t_k).
class LagrangeBasis {
public:
    explicit LagrangeBasis(std::vector<double> knots, WeightFunction weight = WeightFunction::constant());

    double operator()(std::size_t j, double t) const;
    std::size_t size() const noexcept { return knots_.size(); }
    const std::vector<double>& knots() const noexcept { return knots_; }

private:
    std::vector<double> knots_;
    WeightFunction weight_;
};

/// Extremal points of the Chebyshev polynomial of degree p on X, increasing.
std::vector<double> chebyshev_points_poly(int p, const Interval& x);

/// |L_j(z)| / sum_k |L_k(z)|. Throws InvalidInput when z lies in the knot hull.
std::vector<double> lagrange_weights(const std::vector<double>& knots, double z,
                                     WeightFunction weight = WeightFunction::constant());

struct RemezOptions {
    std::size_t max_iters = 100;
    double tol = 1e-10;
    /// Dense grid used to locate the extrema of the error curve.
    std::size_t grid = 2001;
};

/// Equioscillating polynomial for the system {w(t) t^j : j = 0..p} on X.
/// Constant weights use the cosine formula; others a Remez exchange.
/// Throws NumericalFailure when the exchange does not converge.
ChebyshevSolution equioscillating(const WeightFunction& weight, int p, const Interval& x,
                                  const RemezOptions& opt = {});

/// Sup-norm optimal extrapolation design for a weighted polynomial of degree p:
/// Chebyshev points with Lagrange weights at U_Z (or at L_Z when Z lies left of X).
Design extrapolation_design_poly(int p, const Interval& x, const Interval& z,
                                 const WeightFunction& weight = WeightFunction::constant());

/// Closed-form sup-norm optimal extrapolation design for the Michaelis-Menten,
/// loglinear (known offset) or EMAX model, requiring 0 <= L_X and U_X < L_Z.
/// The loglinear weights follow the printed formula in exp(U_Z), exp(U_X), exp(L_X).
Design corollary_design(const ModelSpec& model, const Interval& x, const Interval& z);

}  // namespace curvecmp
