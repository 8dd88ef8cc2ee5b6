#include "curvecmp/pso.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <string>
#include <thread>

#include "curvecmp/error.hpp"

namespace curvecmp {

void PsoConfig::validate() const {
    if (swarm_size == 1) throw InvalidInput("PSO swarm size must be >= 2");
    if (!(inertia >= 0.0 && inertia <= 1.0)) throw InvalidInput("PSO inertia must lie in [0, 1]");
    if (!(cognitive > 0.0) || !(social > 0.0))
        throw InvalidInput("PSO cognitive and social coefficients must be > 0");
    if (max_iters == 0) throw InvalidInput("PSO needs max_iters >= 1");
    if (stagnation_window == 0) throw InvalidInput("PSO stagnation window must be >= 1");
}

std::size_t PsoConfig::swarm_for(std::size_t dim) const {
    if (swarm_size != 0) return swarm_size;
    return static_cast<std::size_t>(std::ceil(40.0 * std::sqrt(static_cast<double>(dim))));
}

std::uint64_t splitmix(std::uint64_t seed, std::uint64_t index) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::size_t threads_from_env() {
    const char* v = std::getenv("CURVECMP_THREADS");
    if (!v || !*v) return 1;
    try {
        const long n = std::stol(v);
        return n >= 1 ? static_cast<std::size_t>(n) : 1;
    } catch (const std::exception&) {
        throw InvalidInput(std::string("CURVECMP_THREADS must be a positive integer, got '") + v + "'");
    }
}

void normalize_simplex_blocks(std::span<double> x, std::span<const SimplexBlock> blocks) {
    for (const auto& b : blocks) {
        double s = 0.0;
        for (std::size_t j = 0; j < b.size; ++j) {
            x[b.offset + j] = std::abs(x[b.offset + j]);
            s += x[b.offset + j];
        }
        if (!(s > 0.0) || !std::isfinite(s)) {
            for (std::size_t j = 0; j < b.size; ++j) x[b.offset + j] = 1.0 / static_cast<double>(b.size);
        } else {
            for (std::size_t j = 0; j < b.size; ++j) x[b.offset + j] /= s;
        }
    }
}

namespace {

template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& body) {
    if (threads <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    threads = std::min(threads, n);
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += threads) body(i);
        });
}

double safe(double v) { return std::isfinite(v) ? v : 1e300; }

}  // namespace

PsoResult pso_minimize(const PsoProblem& problem, const PsoConfig& config) {
    config.validate();
    const std::size_t dim = problem.lower.size();
    if (dim == 0 || problem.upper.size() != dim) throw InvalidInput("PSO bounds are empty or mismatched");
    for (std::size_t j = 0; j < dim; ++j)
        if (!(problem.lower[j] <= problem.upper[j])) throw InvalidInput("PSO lower bound exceeds upper bound");
    for (const auto& b : problem.simplex)
        if (b.size == 0 || b.offset + b.size > dim) throw InvalidInput("PSO simplex block out of range");
    if (!problem.objective) throw InvalidInput("PSO objective is empty");

    const std::size_t n = config.swarm_for(dim);
    std::vector<std::mt19937_64> rng;
    rng.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rng.emplace_back(splitmix(config.seed, i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<std::vector<double>> x(n, std::vector<double>(dim));
    std::vector<std::vector<double>> v(n, std::vector<double>(dim));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            const double w = problem.upper[j] - problem.lower[j];
            x[i][j] = problem.lower[j] + w * unit(rng[i]);
            v[i][j] = 0.25 * w * (2.0 * unit(rng[i]) - 1.0);
        }
        if (i < problem.seeds.size()) {
            if (problem.seeds[i].size() != dim) throw InvalidInput("PSO seed position has wrong length");
            for (std::size_t j = 0; j < dim; ++j)
                x[i][j] = std::clamp(problem.seeds[i][j], problem.lower[j], problem.upper[j]);
        }
        normalize_simplex_blocks(x[i], problem.simplex);
    }

    std::vector<double> fx(n);
    parallel_for(n, config.threads, [&](std::size_t i) { fx[i] = safe(problem.objective(x[i])); });
    auto pbest = x;
    auto fp = fx;
    std::size_t g = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (fp[i] < fp[g]) g = i;
    std::vector<double> gbest = pbest[g];
    double fg = fp[g];

    PsoResult out;
    out.history.reserve(config.max_iters);
    double last_mark = fg;
    std::size_t since_mark = 0;
    std::size_t it = 0;
    while (it < config.max_iters) {
        ++it;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                const double r1 = unit(rng[i]);
                const double r2 = unit(rng[i]);
                const double w = problem.upper[j] - problem.lower[j];
                double vel = config.inertia * v[i][j] + config.cognitive * r1 * (pbest[i][j] - x[i][j]) +
                             config.social * r2 * (gbest[j] - x[i][j]);
                vel = std::clamp(vel, -w, w);
                double pos = x[i][j] + vel;
                if (pos < problem.lower[j]) {
                    pos = problem.lower[j];
                    vel = 0.0;
                } else if (pos > problem.upper[j]) {
                    pos = problem.upper[j];
                    vel = 0.0;
                }
                x[i][j] = pos;
                v[i][j] = vel;
            }
            normalize_simplex_blocks(x[i], problem.simplex);
        }
        parallel_for(n, config.threads, [&](std::size_t i) { fx[i] = safe(problem.objective(x[i])); });
        for (std::size_t i = 0; i < n; ++i) {
            if (fx[i] < fp[i]) {
                fp[i] = fx[i];
                pbest[i] = x[i];
            }
            if (fp[i] < fg) {
                fg = fp[i];
                gbest = pbest[i];
            }
        }
        out.history.push_back(fg);
        if (last_mark - fg > config.stagnation_tol * std::max(std::abs(last_mark), 1e-300)) {
            last_mark = fg;
            since_mark = 0;
        } else if (++since_mark >= config.stagnation_window) {
            break;
        }
    }
    out.position = std::move(gbest);
    out.value = fg;
    out.iterations = it;
    return out;
}

}  // namespace curvecmp
