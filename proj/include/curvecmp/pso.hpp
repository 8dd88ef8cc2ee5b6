#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace curvecmp {

struct PsoConfig {
    /// 0 selects ceil(40 * sqrt(dimension)).
    std::size_t swarm_size = 0;
    double inertia = 0.72;
    double cognitive = 1.49;
    double social = 1.49;
    std::size_t max_iters = 2000;
    /// Stop after this many iterations without relative improvement above stagnation_tol.
    std::size_t stagnation_window = 200;
    double stagnation_tol = 1e-13;
    std::uint64_t seed = 1;
    /// Worker threads for objective evaluation; results do not depend on it.
    std::size_t threads = 1;

    void validate() const;
    std::size_t swarm_for(std::size_t dim) const;
};

/// Coordinates [offset, offset + size) hold nonnegative weights that the
/// swarm keeps normalized to the unit simplex.
struct SimplexBlock {
    std::size_t offset = 0;
    std::size_t size = 0;
};

struct PsoProblem {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<SimplexBlock> simplex;
    std::function<double(std::span<const double>)> objective;
    /// Optional starting positions, placed in the first particles.
    std::vector<std::vector<double>> seeds;
};

struct PsoResult {
    std::vector<double> position;
    double value = 0.0;
    std::size_t iterations = 0;
    /// Best value after each iteration; nonincreasing.
    std::vector<double> history;
};

PsoResult pso_minimize(const PsoProblem& problem, const PsoConfig& config);

/// Project the simplex blocks of x: absolute values, then normalize.
void normalize_simplex_blocks(std::span<double> x, std::span<const SimplexBlock> blocks);

/// SplitMix64 mix of (seed, index); used to derive independent streams.
std::uint64_t splitmix(std::uint64_t seed, std::uint64_t index) noexcept;

/// Thread count from CURVECMP_THREADS (default 1).
std::size_t threads_from_env();

}  // namespace curvecmp
