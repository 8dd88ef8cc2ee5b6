#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "curvecmp/criteria.hpp"
#include "curvecmp/design.hpp"

namespace curvecmp {

/// Points of the region where phi attains its supremum up to a relative tolerance.
struct ExtremalSet {
    std::vector<double> points;
    std::vector<double> values;
    double level = 0.0;
    double tol = 0.0;
};

/// Probability measure on extremal points.
struct RhoMeasure {
    std::vector<double> atoms;
    std::vector<double> weights;
};

struct CheckOptions {
    static constexpr double kCertTol = 1e-4;
    static constexpr double kExtremalTol = 1e-6;
    static constexpr std::size_t kCheckGrid = 201;

    double cert_tol = kCertTol;
    double extremal_tol = kExtremalTol;
    /// Nodes on the design space for the t1 / t2 scans.
    std::size_t grid = kCheckGrid;
    double polish_tol = 1e-10;
    /// Refine grid maxima by golden-section search.
    bool polish = true;
    /// Dense grid used while minimizing over rho.
    std::size_t rho_grid = 2001;
    std::uint64_t seed = 20240601;

    void validate() const;
};

enum class CheckKind { MuP, MuInf, NuP, NuInf, Gamma };

std::string to_string(CheckKind kind);

/// One evaluation of the left-hand side at support points.
struct SupportResidual {
    /// For pair checks: (t1, t2). For single-design checks t2 is unused.
    /// For allocation checks `omega` selects the group (0 or 1) and t1 its point.
    double t1 = 0.0;
    double t2 = 0.0;
    int omega = -1;
    /// |lhs| / scale
    double residual = 0.0;
};

struct EquivalenceReport {
    CheckKind kind = CheckKind::MuInf;
    NormOrder order = NormOrder::infinity();
    /// Criterion value (mu_p, mu_inf, nu_p, ...).
    double value = 0.0;
    /// Normalization for relative quantities: value^p for finite p, value otherwise.
    double scale = 0.0;
    /// Largest left-hand side over the check grids (absolute) and its location.
    double max_violation = 0.0;
    double argmax_t1 = 0.0;
    double argmax_t2 = 0.0;
    double relative_violation = 0.0;
    std::vector<SupportResidual> residuals;
    double max_residual = 0.0;
    std::optional<ExtremalSet> extremal;
    std::optional<RhoMeasure> rho;
    /// Lower bound on the efficiency; see eff_bound.
    double eff_lower_bound = 0.0;
    /// Single-point form of the sup-norm bound, reported for comparison.
    std::optional<double> eff_bound_pointwise;
    double cert_tol = CheckOptions::kCertTol;
    bool certified = false;
};

ExtremalSet extremal_set(const DesignPair& pair, const CriterionSpec& spec,
                         double tol = CheckOptions::kExtremalTol);

/// argmin over the simplex of the N function for the given check kind
/// (MuInf, NuInf or Gamma). PSO with a simplex-grid fallback for up to four atoms.
RhoMeasure solve_rho(const DesignPair& pair, const CriterionSpec& spec, const ExtremalSet& extremal,
                     CheckKind kind = CheckKind::MuInf, const CheckOptions& opt = {});

/// N(rho) for the check kind, maxima over the design space polished.
double n_function(const DesignPair& pair, const CriterionSpec& spec, const RhoMeasure& rho,
                  CheckKind kind = CheckKind::MuInf, const CheckOptions& opt = {});

/// Same value from a brute-force search over a simplex grid with the given step.
RhoMeasure solve_rho_grid(const DesignPair& pair, const CriterionSpec& spec, const ExtremalSet& extremal,
                          double step, CheckKind kind = CheckKind::MuInf, const CheckOptions& opt = {});

EquivalenceReport check_mu_p(const DesignPair& pair, const CriterionSpec& spec, const CheckOptions& opt = {});

/// Solves for rho when none is given.
EquivalenceReport check_mu_inf(const DesignPair& pair, const CriterionSpec& spec,
                               const std::optional<RhoMeasure>& rho = std::nullopt,
                               const CheckOptions& opt = {});

/// Criterion with the second design frozen; dispatches on spec.order.
EquivalenceReport check_nu(const Design& xi1, const Design& eta, const CriterionSpec& spec,
                           const GroupSpec& g1, const GroupSpec& g2, const CheckOptions& opt = {});

/// Sup-norm criterion optimized jointly over the allocation.
EquivalenceReport check_gamma(const Design& xi1, const Design& xi2, std::pair<double, double> gamma,
                              const CriterionSpec& spec, const ModelSpec& m1, const ModelSpec& m2,
                              std::pair<double, double> sigma2, const CheckOptions& opt = {});

/// Pair criterion check dispatching on spec.order.
EquivalenceReport check_pair(const DesignPair& pair, const CriterionSpec& spec, const CheckOptions& opt = {});

/// Efficiency lower bound in (0, 1].
double eff_bound(const DesignPair& pair, const CriterionSpec& spec, const CheckOptions& opt = {});

/// criterion(optimal) / criterion(pair).
double efficiency(const DesignPair& pair, const DesignPair& optimal, const CriterionSpec& spec);

}  // namespace curvecmp
