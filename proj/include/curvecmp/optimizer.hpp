#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "curvecmp/design.hpp"
#include "curvecmp/equivalence.hpp"
#include "curvecmp/pso.hpp"

namespace curvecmp {

enum class Criterion { MuP, MuInf, NuP, NuInf, MuInfGamma };

std::string to_string(Criterion c);

struct Problem {
    Criterion criterion = Criterion::MuInf;
    /// For MuInfGamma the gamma fields are ignored (they are optimized).
    GroupSpec g1;
    GroupSpec g2;
    CriterionSpec spec;
    /// Support sizes; 0 selects the model dimension.
    std::size_t k1 = 0;
    std::size_t k2 = 0;
    /// Fixed second design for NuP / NuInf.
    std::optional<Design> eta;

    /// Throws InvalidInput when the problem is inconsistent.
    void validate() const;
    std::size_t support1() const { return k1 ? k1 : g1.model.dim(); }
    std::size_t support2() const { return k2 ? k2 : g2.model.dim(); }
    bool optimizes_gamma() const { return criterion == Criterion::MuInfGamma; }
    bool fixed_second() const { return criterion == Criterion::NuP || criterion == Criterion::NuInf; }
};

struct OptimizeOptions {
    PsoConfig pso;
    std::size_t restarts = 5;
    double threshold = 0.99;
    CheckOptions check;
    /// Local PSO rounds in a shrinking box after each global run, before the SQP refinement.
    std::size_t polish_rounds = 4;
    double merge_fraction = 1e-3;
    double drop_weight = 1e-4;
};

struct OptimizeResult {
    Design xi1;
    Design xi2;
    std::pair<double, double> gamma{0.5, 0.5};
    double value = 0.0;
    EquivalenceReport report;
    std::size_t iterations = 0;
    std::size_t restarts_used = 0;
    std::uint64_t seed = 0;
    bool certified = false;

    DesignPair pair(const Problem& p) const;
};

/// Criterion value of a candidate for the problem (eta and gamma handled).
double evaluate(const Problem& problem, const Design& xi1, const Design& xi2, std::pair<double, double> gamma);

/// Equivalence check matching the problem's criterion.
EquivalenceReport certify(const Problem& problem, const Design& xi1, const Design& xi2,
                          std::pair<double, double> gamma, const CheckOptions& opt = {});

OptimizeResult optimize(const Problem& problem, const OptimizeOptions& options = {});
OptimizeResult optimize_nu(Problem problem, const OptimizeOptions& options = {});
OptimizeResult optimize_gamma(Problem problem, const OptimizeOptions& options = {});

/// Merge points closer than `merge` and drop weights below `drop`, then renormalize.
Design prune(const Design& d, double merge, double drop, const Interval& space);

}  // namespace curvecmp
