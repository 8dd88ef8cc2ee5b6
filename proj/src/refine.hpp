#pragma once

#include <utility>

#include "curvecmp/optimizer.hpp"

namespace curvecmp::detail {

struct Refined {
    Design xi1;
    Design xi2;
    std::pair<double, double> gamma;
    double value = 0.0;
    std::size_t iterations = 0;
};

/// Sequential quadratic refinement of a near-optimal candidate. Each step
/// linearizes the active peaks of phi (or the integral for finite p), uses a
/// finite-difference Hessian of the Lagrangian and solves the small dual QP
/// over the simplex of peak multipliers. Points on the boundary of the design
/// space stay there. Never returns a worse candidate than its input.
Refined refine_sqp(const Problem& problem, const Design& xi1, const Design& xi2, std::pair<double, double> gamma,
                   std::size_t max_iters = 60);

}  // namespace curvecmp::detail
