#include <cmath>
#include <random>

#include "curvecmp/closed_form.hpp"
#include "curvecmp/equivalence.hpp"
#include "curvecmp/error.hpp"
#include "curvecmp/optimizer.hpp"
#include "doctest.h"

using namespace curvecmp;

namespace {

const Interval kUnit{0.0, 1.0};
const Interval kFar{1.5, 2.0};

CheckOptions loose() {
    CheckOptions o;
    o.cert_tol = 1e-3;
    return o;
}

EquivalenceReport check_same_model(const Design& d, const ModelSpec& m, const Interval& x, const Interval& z) {
    const GroupSpec g{m, 1.0, 0.5};
    const DesignPair pair(d, d, g, g);
    return check_mu_inf(pair, CriterionSpec::make(NormOrder::infinity(), x, z), std::nullopt, loose());
}

}  // namespace

TEST_CASE("closed form: Chebyshev points") {
    CHECK(chebyshev_points_poly(1, kUnit) == std::vector<double>{0.0, 1.0});
    const auto p2 = chebyshev_points_poly(2, kUnit);
    REQUIRE(p2.size() == 3);
    CHECK(p2[1] == doctest::Approx(0.5).epsilon(1e-15));
    const auto p3 = chebyshev_points_poly(3, Interval{-1.0, 1.0});
    REQUIRE(p3.size() == 4);
    CHECK(p3[0] == -1.0);
    CHECK(p3[1] == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(p3[2] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(p3[3] == 1.0);
    // symmetric about the midpoint
    const auto p5 = chebyshev_points_poly(5, Interval{2.0, 7.0});
    for (std::size_t j = 0; j < p5.size(); ++j) CHECK(p5[j] + p5[p5.size() - 1 - j] == doctest::Approx(9.0));
    CHECK_THROWS_AS(chebyshev_points_poly(0, kUnit), InvalidInput);
}

TEST_CASE("closed form: Lagrange basis") {
    const LagrangeBasis b({0.0, 0.3, 0.5, 1.0});
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(b(j, b.knots()[k]) - (j == k ? 1.0 : 0.0)) <= 1e-12);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-2.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const double t = u(rng);
        double s = 0.0;
        for (std::size_t j = 0; j < 4; ++j) s += b(j, t);
        CHECK(std::abs(s - 1.0) <= 1e-10);
    }
    const LagrangeBasis w({0.2, 0.6}, WeightFunction::exponential(1.0));
    CHECK(w(0, 0.2) == doctest::Approx(1.0));
    CHECK(std::abs(w(0, 0.6)) <= 1e-15);
    // weighted basis carries w(t) / w(t_j)
    CHECK(w(1, 1.0) == doctest::Approx(std::exp(0.4) * 0.8 / 0.4));
    CHECK_THROWS_AS(LagrangeBasis({0.5, 0.5}), InvalidInput);
}

TEST_CASE("closed form: Lagrange weights") {
    const auto w = lagrange_weights({0.0, 1.0}, 2.0);
    CHECK(std::abs(w[0] - 1.0 / 3.0) <= 1e-15);
    CHECK(std::abs(w[1] - 2.0 / 3.0) <= 1e-15);

    const auto far = lagrange_weights({0.0, 0.5, 1.0}, 1e7);
    CHECK(far[0] == doctest::Approx(0.25).epsilon(1e-6));
    CHECK(far[1] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(far[2] == doctest::Approx(0.25).epsilon(1e-6));

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> knots{u(rng)};
        for (int j = 0; j < 3; ++j) knots.push_back(knots.back() + 0.05 + u(rng));
        const double z = knots.back() + 0.01 + 3.0 * u(rng);
        const auto wt = lagrange_weights(knots, z);
        double s = 0.0;
        for (double v : wt) {
            CHECK(v >= 0.0);
            s += v;
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
    CHECK_THROWS_AS(lagrange_weights({0.0, 1.0}, 0.5), InvalidInput);
    CHECK_THROWS_AS(lagrange_weights({0.0, 1.0}, 1.0), InvalidInput);
}

TEST_CASE("closed form: equioscillating polynomials with constant weight") {
    const ChebyshevSolution s = equioscillating(WeightFunction::constant(), 2, kUnit);
    CHECK(s.iterations == 0);
    REQUIRE(s.points.size() == 3);
    CHECK(s.points[1] == doctest::Approx(0.5));
    for (double t : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0}) {
        const double x = 2.0 * t - 1.0;
        CHECK(s.value(t) == doctest::Approx(2.0 * x * x - 1.0).epsilon(1e-12));
    }
    CHECK(s.residual <= 1e-8);

    const ChebyshevSolution lin = equioscillating(WeightFunction::constant(), 1, Interval{-3.0, 5.0});
    CHECK(lin.points == std::vector<double>{-3.0, 5.0});
}

TEST_CASE("closed form: Remez exchange for an exponential weight") {
    const ChebyshevSolution s = equioscillating(WeightFunction::exponential(1.0), 1, kUnit);
    REQUIRE(s.points.size() == 2);
    CHECK(std::abs(s.points[0]) <= 1e-9);
    CHECK(std::abs(s.points[1] - 1.0) <= 1e-9);
    CHECK(s.residual <= 1e-8);
    CHECK(s.value(s.points[0]) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.value(s.points[1]) == doctest::Approx(-1.0).epsilon(1e-9));

    // grid minimax oracle over c for max |e^t (t - c)|
    double best_c = 0.0, best = 1e300;
    for (int i = 0; i <= 20000; ++i) {
        const double c = i * 1e-4;
        double m = 0.0;
        for (int k = 0; k <= 1000; ++k) {
            const double t = k * 1e-3;
            m = std::max(m, std::abs(std::exp(t) * (t - c)));
        }
        if (m < best) {
            best = m;
            best_c = c;
        }
    }
    // v(t) = e^t (1 - t / c)
    CHECK(s.coefficients[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(-1.0 / s.coefficients[1] == doctest::Approx(best_c).epsilon(2e-4));
}

TEST_CASE("closed form: Remez exchange for higher degrees") {
    for (const auto& [w, p, x] : {std::tuple{WeightFunction::exponential(2.0), 3, kUnit},
                                  std::tuple{WeightFunction::exponential(-1.5), 4, Interval{-1.0, 2.0}},
                                  std::tuple{WeightFunction::power(1.5), 2, Interval{0.5, 2.0}}}) {
        const ChebyshevSolution s = equioscillating(w, p, x);
        REQUIRE(s.points.size() == static_cast<std::size_t>(p) + 1);
        CHECK(s.iterations >= 1);
        CHECK(s.iterations <= 100);
        CHECK(s.residual <= 1e-8);
        CHECK(s.points.front() >= x.lo);
        CHECK(s.points.back() <= x.hi);
        for (std::size_t j = 0; j < s.points.size(); ++j)
            CHECK(std::abs(s.value(s.points[j]) - (j % 2 == 0 ? 1.0 : -1.0)) <= 1e-9);
    }
    RemezOptions tight;
    tight.max_iters = 1;
    tight.tol = 1e-15;
    CHECK_THROWS_AS(equioscillating(WeightFunction::exponential(3.0), 4, kUnit, tight), NumericalFailure);
}

TEST_CASE("closed form: polynomial extrapolation designs") {
    const Design d1 = extrapolation_design_poly(1, kUnit, kFar);
    CHECK(d1.points() == std::vector<double>{0.0, 1.0});
    CHECK(std::abs(d1.weights()[0] - 1.0 / 3.0) <= 1e-9);
    CHECK(std::abs(d1.weights()[1] - 2.0 / 3.0) <= 1e-9);

    // |L_j(2)| = 3, 8, 6 at the knots 0, 0.5, 1
    const Design d2 = extrapolation_design_poly(2, kUnit, kFar);
    CHECK(d2.points()[1] == doctest::Approx(0.5));
    CHECK(d2.weights()[0] == doctest::Approx(3.0 / 17.0).epsilon(1e-12));
    CHECK(d2.weights()[1] == doctest::Approx(8.0 / 17.0).epsilon(1e-12));
    CHECK(d2.weights()[2] == doctest::Approx(6.0 / 17.0).epsilon(1e-12));

    // reflection t -> -t
    const Interval sym{-1.0, 1.0};
    const Design right = extrapolation_design_poly(3, sym, Interval{1.5, 2.0});
    const Design left = extrapolation_design_poly(3, sym, Interval{-2.0, -1.5});
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(left.points()[j] == doctest::Approx(-right.points()[3 - j]));
        CHECK(left.weights()[j] == doctest::Approx(right.weights()[3 - j]).epsilon(1e-12));
    }

    CHECK_THROWS_AS(extrapolation_design_poly(1, kUnit, Interval{0.5, 2.0}), InvalidInput);
    CHECK_THROWS_AS(extrapolation_design_poly(1, kUnit, kFar, WeightFunction::exponential(-1.0)), InvalidInput);
    CHECK_THROWS_AS(extrapolation_design_poly(1, Interval{1.0, 2.0}, Interval{0.0, 0.5}, WeightFunction::power(1.0)),
                    InvalidInput);
}

TEST_CASE("closed form: quadratic extrapolation design against the optimizer") {
    const ModelSpec quad = ModelSpec::polynomial(2, {0.0, 0.0, 1.0});
    Problem p;
    p.g1 = {quad, 1.0, 0.5};
    p.g2 = {quad, 1.0, 0.5};
    p.spec = CriterionSpec::make(NormOrder::infinity(), kUnit, kFar);
    OptimizeOptions o;
    o.pso.seed = 17;
    o.pso.max_iters = 600;
    o.restarts = 1;
    const OptimizeResult r = optimize(p, o);
    const Design d = extrapolation_design_poly(2, kUnit, kFar);
    for (const Design* got : {&r.xi1, &r.xi2}) {
        REQUIRE(got->size() == 3);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(std::abs(got->points()[j] - d.points()[j]) <= 1e-3);
            CHECK(std::abs(got->weights()[j] - d.weights()[j]) <= 1e-3);
        }
    }
}

TEST_CASE("closed form: EMAX corollary") {
    const ModelSpec emax = ModelSpec::emax(nominal::kEmax);
    const Design d = corollary_design(emax, kUnit, kFar);
    REQUIRE(d.size() == 3);
    CHECK(d.points()[1] == doctest::Approx(1.0 / 7.0).epsilon(1e-14));

    // oracle: quadratic Chebyshev design in z = t / (t + theta3), mapped back
    const double t3 = nominal::kEmax[2];
    const auto zmap = [t3](double t) { return t / (t + t3); };
    const Design zd = extrapolation_design_poly(2, Interval{zmap(0.0), zmap(1.0)}, Interval{zmap(1.5), zmap(2.0)});
    for (std::size_t j = 0; j < 3; ++j) {
        const double z = zd.points()[j];
        CHECK(d.points()[j] == doctest::Approx(t3 * z / (1.0 - z)).epsilon(1e-12));
        CHECK(d.weights()[j] == doctest::Approx(zd.weights()[j]).epsilon(1e-12));
    }

    const EquivalenceReport r = check_same_model(d, emax, kUnit, kFar);
    CHECK(r.certified);
    CHECK(r.eff_lower_bound >= 0.999);
}

TEST_CASE("closed form: Michaelis-Menten corollary") {
    const ModelSpec mm = ModelSpec::michaelis_menten({1.0, 1.0});
    const Interval x{0.1, 1.0};
    const Design d = corollary_design(mm, x, kFar);
    REQUIRE(d.size() == 2);
    CHECK(d.points()[1] == 1.0);

    // oracle: weight w(z) = z, degree 1, in z = t / (theta2 + t)
    const auto zmap = [](double t) { return t / (1.0 + t); };
    const Design zd = extrapolation_design_poly(1, Interval{zmap(0.1), zmap(1.0)}, Interval{zmap(1.5), zmap(2.0)},
                                                WeightFunction::power(1.0));
    for (std::size_t j = 0; j < 2; ++j) {
        const double z = zd.points()[j];
        CHECK(d.points()[j] == doctest::Approx(z / (1.0 - z)).epsilon(1e-8));
        CHECK(d.weights()[j] == doctest::Approx(zd.weights()[j]).epsilon(1e-8));
    }
    CHECK(check_same_model(d, mm, x, kFar).certified);

    CHECK_THROWS_AS(corollary_design(mm, Interval{0.0, 1.0}, kFar), InvalidInput);
    CHECK_THROWS_AS(corollary_design(mm, Interval{0.5, 1.0}, kFar), InvalidInput);
}

TEST_CASE("closed form: loglinear corollary reproduces the printed weights") {
    const ModelSpec ll = ModelSpec::loglinear(nominal::kLogLinear, false);
    const Design d = corollary_design(ll, kUnit, kFar);
    REQUIRE(d.size() == 2);
    const double e2 = std::exp(2.0), e1 = std::exp(1.0);
    CHECK(d.weights()[0] == doctest::Approx((e2 - e1) / (2.0 * e2 - 1.0 - e1)).epsilon(1e-14));
    CHECK(d.weights()[1] == doctest::Approx((e2 - 1.0) / (2.0 * e2 - 1.0 - e1)).epsilon(1e-14));
    // the printed weights do not depend on the offset
    const Design other = corollary_design(ModelSpec::loglinear({0.74, 0.33, 0.7}, false), kUnit, kFar);
    CHECK(other.weights() == d.weights());
    // the check runs; its verdict is reported, not asserted
    const EquivalenceReport r = check_same_model(d, ll, kUnit, kFar);
    CHECK(r.eff_lower_bound > 0.0);
    CHECK(r.eff_lower_bound <= 1.0);
    MESSAGE("printed loglinear design: relative violation " << r.relative_violation << ", bound "
                                                            << r.eff_lower_bound);
}

TEST_CASE("closed form: corollary preconditions") {
    const ModelSpec emax = ModelSpec::emax(nominal::kEmax);
    CHECK_THROWS_AS(corollary_design(emax, kUnit, Interval{0.8, 2.0}), InvalidInput);
    CHECK_THROWS_AS(corollary_design(emax, Interval{-0.1, 1.0}, kFar), InvalidInput);
    CHECK_THROWS_AS(corollary_design(ModelSpec::exponential(nominal::kExponential), kUnit, kFar), InvalidInput);
    CHECK_THROWS_AS(corollary_design(ModelSpec::loglinear(nominal::kLogLinear, true), kUnit, kFar), InvalidInput);
}

TEST_CASE("closed form: variance is nondecreasing on the extrapolation region") {
    const std::vector<std::pair<ModelSpec, Interval>> cases{
        {ModelSpec::emax(nominal::kEmax), kUnit},
        {ModelSpec::michaelis_menten({1.0, 1.0}), Interval{0.1, 1.0}},
        {ModelSpec::polynomial(2, {0.0, 0.0, 1.0}), kUnit},
    };
    for (const auto& [m, x] : cases) {
        const Design d = m.kind() == ModelKind::Polynomial ? extrapolation_design_poly(2, x, kFar)
                                                           : corollary_design(m, x, kFar);
        const GroupSpec g{m, 1.0, 0.5};
        const DesignPair pair(d, d, g, g);
        double prev = 0.0;
        for (double t : linspace(kFar, 201)) {
            const double v = variance_phi(t, pair);
            CHECK(v >= prev);
            prev = v;
        }
    }
}
