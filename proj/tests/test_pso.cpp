#include <cmath>

#include "curvecmp/error.hpp"
#include "curvecmp/pso.hpp"
#include "doctest.h"

using namespace curvecmp;

namespace {

PsoProblem sphere(std::size_t dim) {
    PsoProblem p;
    p.lower.assign(dim, -5.0);
    p.upper.assign(dim, 5.0);
    p.objective = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    };
    return p;
}

}  // namespace

TEST_CASE("pso: sphere in four dimensions") {
    PsoConfig cfg;
    cfg.seed = 7;
    const PsoResult r = pso_minimize(sphere(4), cfg);
    CHECK(r.value <= 1e-8);
    REQUIRE(r.position.size() == 4);
    for (double v : r.position) CHECK(std::abs(v) < 1e-3);
}

TEST_CASE("pso: fixed seed gives bit-identical trajectories") {
    PsoConfig cfg;
    cfg.seed = 12345;
    cfg.max_iters = 300;
    const PsoResult a = pso_minimize(sphere(3), cfg);
    const PsoResult b = pso_minimize(sphere(3), cfg);
    CHECK(a.position == b.position);
    CHECK(a.history == b.history);
    CHECK(a.iterations == b.iterations);

    cfg.seed = 54321;
    const PsoResult c = pso_minimize(sphere(3), cfg);
    CHECK(c.history != a.history);
}

TEST_CASE("pso: thread count does not change the result") {
    PsoConfig cfg;
    cfg.seed = 99;
    cfg.max_iters = 200;
    const PsoResult a = pso_minimize(sphere(5), cfg);
    cfg.threads = 4;
    const PsoResult b = pso_minimize(sphere(5), cfg);
    CHECK(a.position == b.position);
    CHECK(a.history == b.history);
}

TEST_CASE("pso: best value is nonincreasing") {
    PsoConfig cfg;
    cfg.seed = 3;
    cfg.max_iters = 500;
    PsoProblem p = sphere(6);
    p.objective = [](std::span<const double> x) {
        double s = 10.0 * static_cast<double>(x.size());
        for (double v : x) s += v * v - 10.0 * std::cos(2.0 * M_PI * v);
        return s;
    };
    const PsoResult r = pso_minimize(p, cfg);
    REQUIRE(!r.history.empty());
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
    CHECK(r.history.back() == r.value);
}

TEST_CASE("pso: convex quadratic on a simplex block") {
    // x0^2 + 2 x1^2 with x0 + x1 = 1 is minimized at (2/3, 1/3)
    PsoProblem p;
    p.lower = {0.0, 0.0};
    p.upper = {1.0, 1.0};
    p.simplex = {{0, 2}};
    p.objective = [](std::span<const double> x) { return x[0] * x[0] + 2.0 * x[1] * x[1]; };
    PsoConfig cfg;
    cfg.seed = 11;
    const PsoResult r = pso_minimize(p, cfg);
    CHECK(r.position[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(r.position[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    CHECK(r.position[0] + r.position[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pso: seeds are evaluated") {
    PsoProblem p = sphere(2);
    p.seeds = {{0.0, 0.0}};
    PsoConfig cfg;
    cfg.max_iters = 1;
    cfg.seed = 5;
    const PsoResult r = pso_minimize(p, cfg);
    CHECK(r.value == 0.0);
}

TEST_CASE("pso: simplex normalization") {
    std::vector<double> x{5.0, -1.0, 1.0, 2.0};
    const std::vector<SimplexBlock> blocks{{1, 3}};
    normalize_simplex_blocks(x, blocks);
    CHECK(x[0] == 5.0);
    CHECK(x[1] == doctest::Approx(0.25));
    CHECK(x[2] == doctest::Approx(0.25));
    CHECK(x[3] == doctest::Approx(0.5));
}

TEST_CASE("pso: configuration validation") {
    PsoConfig cfg;
    CHECK(cfg.swarm_for(4) == 80);
    CHECK(cfg.swarm_for(12) == static_cast<std::size_t>(std::ceil(40.0 * std::sqrt(12.0))));
    cfg.swarm_size = 1;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.inertia = 1.5;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
    cfg = {};
    cfg.max_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}

TEST_CASE("pso: splitmix streams differ") {
    CHECK(splitmix(1, 0) != splitmix(1, 1));
    CHECK(splitmix(1, 0) != splitmix(2, 0));
    CHECK(splitmix(1, 0) == splitmix(1, 0));
}
