#include <cmath>
#include <random>

#include "curvecmp/criteria.hpp"
#include "curvecmp/design.hpp"
#include "curvecmp/error.hpp"
#include "doctest.h"

using namespace curvecmp;

namespace {

constexpr double kSigma2 = 1.478 * 1.478;

const Interval kUnit{0.0, 1.0};
const Interval kSym{-1.0, 1.0};

GroupSpec linear_group() { return GroupSpec{ModelSpec::linear(), 1.0, 0.5}; }

DesignPair linear_pair() {
    const Design d({-1.0, 1.0}, {0.5, 0.5}, kSym);
    return DesignPair(d, d, linear_group(), linear_group());
}

double det3(const SymMatrix& m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

Design random_design(std::mt19937_64& rng, std::size_t k, const Interval& x) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(k), w(k);
    for (std::size_t j = 0; j < k; ++j) {
        p[j] = x.lo + x.length() * u(rng);
        w[j] = 0.05 + u(rng);
    }
    return Design::normalized(p, w, x);
}

// EMAX (group 1) against exponential (group 2), equal variances and fractions.
DesignPair emax_exponential(const Design& emax_design, const Design& exp_design, double s1 = kSigma2,
                            double s2 = kSigma2, double g1 = 0.5) {
    return DesignPair(emax_design, exp_design, GroupSpec{ModelSpec::emax(nominal::kEmax), s1, g1},
                      GroupSpec{ModelSpec::exponential(nominal::kExponential), s2, 1.0 - g1});
}

const Design kStandard({0.0, 0.05, 0.2, 0.6, 1.0}, {0.2, 0.2, 0.2, 0.2, 0.2}, kUnit);

}  // namespace

TEST_CASE("design invariants are enforced") {
    CHECK_THROWS_AS(Design({0.0, 1.0}, {0.5, 0.6}), InvalidInput);
    CHECK_THROWS_AS(Design({0.5, 0.2}, {0.5, 0.5}), InvalidInput);
    CHECK_THROWS_AS(Design({0.0, 0.0}, {0.5, 0.5}), InvalidInput);
    CHECK_THROWS_AS(Design({0.0, 1.0}, {1.2, -0.2}), InvalidInput);
    CHECK_THROWS_AS(Design({}, {}), InvalidInput);
    CHECK_THROWS_AS(Design({0.0, 1.5}, {0.5, 0.5}, kUnit), InvalidInput);
    CHECK_NOTHROW(Design({0.0, 1.0}, {0.5, 0.5}, kUnit));

    const Design n = Design::normalized(std::vector<double>{0.7, 0.1, 0.7},
                                        std::vector<double>{1.0, -2.0, 1.0}, kUnit);
    CHECK(n.points() == std::vector<double>{0.1, 0.7});
    CHECK(n.weights()[0] == doctest::Approx(0.5));
}

TEST_CASE("simplex invariant on random designs") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Design d = random_design(rng, 1 + trial % 6, kUnit);
        double s = 0.0;
        for (double w : d.weights()) {
            CHECK(w >= 0.0);
            s += w;
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);
        for (std::size_t j = 1; j < d.size(); ++j) CHECK(d.points()[j] > d.points()[j - 1]);
    }
}

TEST_CASE("information matrix") {
    SUBCASE("linear model, two points") {
        const Design d({0.0, 1.0}, {0.5, 0.5});
        const SymMatrix m = info_matrix(d, ModelSpec::linear());
        CHECK(m(0, 0) == 1.0);
        CHECK(m(0, 1) == 0.5);
        CHECK(m(1, 0) == 0.5);
        CHECK(m(1, 1) == 0.5);
    }
    SUBCASE("one-point design is rank one") {
        const auto model = ModelSpec::emax(nominal::kEmax);
        const double t0 = 0.3;
        const SymMatrix m = info_matrix(Design({t0}, {1.0}), model);
        const Vec f = model.gradient(t0);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) CHECK(m(i, j) == doctest::Approx(f[i] * f[j]));
        CHECK(std::abs(det3(m)) < 1e-15);
        CHECK_FALSE(Cholesky::factor(m).has_value());
    }
    SUBCASE("EMAX three-point design is positive definite") {
        const SymMatrix m = info_matrix(Design::uniform({0.0, 0.14, 1.0}), ModelSpec::emax(nominal::kEmax));
        CHECK(det3(m) > 0.0);
        auto chol = Cholesky::factor(m);
        REQUIRE(chol.has_value());
        CHECK(std::exp(chol->log_det()) == doctest::Approx(det3(m)).epsilon(1e-10));
    }
}

TEST_CASE("SPD invariant on random designs") {
    std::mt19937_64 rng(5);
    const auto model = ModelSpec::exponential(nominal::kExponential);
    for (int trial = 0; trial < 200; ++trial) {
        const Design d = random_design(rng, 3 + trial % 4, kUnit);
        const SymMatrix m = info_matrix(d, model);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) CHECK(m(i, j) == m(j, i));
        auto chol = Cholesky::factor(m);
        if (chol) {
            CHECK(chol->rcond() >= Cholesky::kSingularRcond);
            CHECK(chol->log_det() > -1e9);
        } else {
            // only nearly coincident supports may fail
            double gap = 1.0;
            for (std::size_t j = 1; j < d.size(); ++j) gap = std::min(gap, d.points()[j] - d.points()[j - 1]);
            CHECK(gap < 1e-3);
        }
    }
}

TEST_CASE("variance function of the linear pair") {
    const DesignPair pair = linear_pair();
    CHECK(variance_phi(0.0, pair) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(variance_phi(1.0, pair) == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(phi_cross(1, 1.0, 0.0, pair) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(phi_cross(1, 0.3, 0.3, pair) + phi_cross(2, 0.3, 0.3, pair) ==
          doctest::Approx(variance_phi(0.3, pair)));
    CHECK_THROWS_AS(phi_cross(3, 0.0, 0.0, pair), InvalidInput);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const DesignPair ee = emax_exponential(Design::uniform({0.0, 0.14, 1.0}), kStandard);
    for (int k = 0; k < 50; ++k) {
        const double d = 0.5 * (u(rng) + 1.0);
        const double t = 0.5 * (u(rng) + 1.0);
        for (int g = 1; g <= 2; ++g)
            CHECK(phi_cross(g, d, t, ee) == doctest::Approx(phi_cross(g, t, d, ee)).epsilon(1e-12));
    }
}

TEST_CASE("singular designs are reported per group") {
    const Design one({0.0}, {1.0}, kSym);
    const Design two({-1.0, 1.0}, {0.5, 0.5}, kSym);
    const DesignPair bad(two, one, linear_group(), linear_group());
    try {
        variance_phi(0.0, bad);
        FAIL("expected SingularDesign");
    } catch (const SingularDesign& e) {
        CHECK(e.group() == 2);
    }
    const DesignPair bad1(one, two, linear_group(), linear_group());
    CHECK_THROWS_AS(mu_inf(bad1, CriterionSpec::make(NormOrder::infinity(), kSym, kSym)), SingularDesign);
    CHECK_THROWS_AS(mu_p(bad1, CriterionSpec::make(NormOrder::finite(1.0), kSym, kSym)), SingularDesign);
}

TEST_CASE("mu_p") {
    const DesignPair pair = linear_pair();
    SUBCASE("point mass lambda") {
        auto spec = CriterionSpec::make(NormOrder::finite(1.0), kSym, kSym);
        spec.lambda = Quadrature::point_mass(0.3);
        CHECK(mu_p(pair, spec) == doctest::Approx(variance_phi(0.3, pair)).epsilon(1e-14));
    }
    SUBCASE("uniform trapezoid lambda") {
        // integral of 4(1 + t^2) dt / 2 over [-1, 1]
        const auto spec = CriterionSpec::make(NormOrder::finite(1.0), kSym, kSym);
        CHECK(std::abs(mu_p(pair, spec) - 16.0 / 3.0) <= 1e-3);
    }
    SUBCASE("p = 2") {
        // (integral 16 (1 + t^2)^2 dt / 2)^(1/2) = 4 sqrt(28/15)
        const auto spec = CriterionSpec::make(NormOrder::finite(2.0), kSym, kSym);
        CHECK(std::abs(mu_p(pair, spec) - 4.0 * std::sqrt(28.0 / 15.0)) <= 1e-3);
    }
    SUBCASE("lambda must identify the model") {
        auto spec = CriterionSpec::make(NormOrder::finite(1.0), kSym, kSym);
        spec.lambda = Quadrature::point_mass(0.3);
        const auto emax = ModelSpec::emax(nominal::kEmax);
        CHECK_THROWS_AS(spec.validate(emax.dim()), InvalidInput);
        spec.lambda = Quadrature{{0.0, 2.0}, {0.5, 0.5}};
        CHECK_THROWS_AS(spec.validate(), InvalidInput);
        spec.lambda = Quadrature{{0.0, 0.5}, {0.0, 0.0}};
        CHECK_THROWS_AS(spec.validate(), InvalidInput);
    }
    CHECK_THROWS_AS(mu_p(pair, CriterionSpec::make(NormOrder::infinity(), kSym, kSym)), InvalidInput);
    CHECK_THROWS_AS(NormOrder::finite(0.5), InvalidInput);
}

TEST_CASE("mu_inf") {
    const DesignPair pair = linear_pair();
    CHECK(mu_inf(pair, CriterionSpec::make(NormOrder::infinity(), kSym, kSym)) ==
          doctest::Approx(8.0).epsilon(1e-14));
    const Interval single{0.25, 0.25};
    CHECK(mu_inf(pair, CriterionSpec::make(NormOrder::infinity(), kSym, single)) ==
          doctest::Approx(variance_phi(0.25, pair)).epsilon(1e-14));

    SUBCASE("D-optimal EMAX pair attains the sup at its support") {
        const Design d = Design::uniform({0.0, 1.0 / 7.0, 1.0}, kUnit);
        const auto g = GroupSpec{ModelSpec::emax(nominal::kEmax), kSigma2, 0.5};
        const DesignPair ee(d, d, g, g);
        const double sup = mu_inf(ee, CriterionSpec::make(NormOrder::infinity(), kUnit, kUnit));
        // f^T M^{-1} f = 1 / w = 3 at each support point of a saturated design
        CHECK(sup == doctest::Approx(2.0 * (kSigma2 / 0.5) * 3.0).epsilon(1e-9));
        for (double t : d.points()) CHECK(variance_phi(t, ee) == doctest::Approx(sup).epsilon(1e-9));
    }
}

TEST_CASE("mu_inf dominates the grid and polishes between nodes") {
    std::mt19937_64 rng(21);
    const auto spec = CriterionSpec::make(NormOrder::infinity(), kUnit, kUnit);
    for (int trial = 0; trial < 30; ++trial) {
        const DesignPair pair =
            emax_exponential(random_design(rng, 4, kUnit), random_design(rng, 4, kUnit));
        double value = 0.0;
        try {
            value = mu_inf(pair, spec);
        } catch (const SingularDesign&) {
            continue;
        }
        for (double t : linspace(kUnit, spec.sup_grid)) CHECK(value >= variance_phi(t, pair) - 1e-9);
    }
}

TEST_CASE("variance function is positive on random pairs") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int evaluated = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const DesignPair pair = emax_exponential(random_design(rng, 3 + trial % 3, kUnit),
                                                 random_design(rng, 3 + trial % 2, kUnit),
                                                 0.1 + u(rng), 0.1 + u(rng), 0.1 + 0.8 * u(rng));
        try {
            for (double t : {0.0, 0.3, 0.77, 1.0}) {
                const double v = variance_phi(t, pair);
                CHECK(v > 0.0);
            }
            ++evaluated;
        } catch (const SingularDesign&) {
        }
    }
    CHECK(evaluated > 150);
}

TEST_CASE("scale equivariance in the variances") {
    const DesignPair pair = emax_exponential(Design::uniform({0.0, 0.15, 1.0}), kStandard);
    for (double c : {0.01, 3.7, 250.0}) {
        const DesignPair scaled = pair.with_sigma2(c * kSigma2, c * kSigma2);
        const auto inf = CriterionSpec::make(NormOrder::infinity(), kUnit, kUnit);
        const auto p2 = CriterionSpec::make(NormOrder::finite(2.0), kUnit, kUnit);
        CHECK(std::abs(mu_inf(scaled, inf) - c * mu_inf(pair, inf)) <= 1e-12 * c * mu_inf(pair, inf));
        CHECK(std::abs(mu_p(scaled, p2) - c * mu_p(pair, p2)) <= 1e-12 * c * mu_p(pair, p2));
    }
}

TEST_CASE("quadrature refinement barely moves mu_p") {
    const std::vector<DesignPair> pairs{
        emax_exponential(Design::uniform({0.0, 0.15, 1.0}), Design::uniform({0.0, 0.75, 1.0})),
        emax_exponential(kStandard, kStandard),
    };
    for (const auto& pair : pairs) {
        for (double p : {1.0, 2.0, 5.0}) {
            auto coarse = CriterionSpec::make(NormOrder::finite(p), kUnit, kUnit);
            auto fine = coarse;
            fine.lambda = Quadrature::trapezoid(kUnit, 1001);
            const double a = mu_p(pair, coarse);
            const double b = mu_p(pair, fine);
            CHECK(std::abs(a - b) < 1e-4 * b);
        }
    }
}

TEST_CASE("nu_p freezes the second design") {
    std::mt19937_64 rng(8);
    const Design eta = Design::uniform({0.0, 1.0 / 7.0, 1.0}, kUnit);
    const GroupSpec g1{ModelSpec::exponential(nominal::kExponential), kSigma2, 0.5};
    const GroupSpec g2{ModelSpec::emax(nominal::kEmax), kSigma2, 0.5};
    for (auto order : {NormOrder::infinity(), NormOrder::finite(1.0), NormOrder::finite(3.0)}) {
        const auto spec = CriterionSpec::make(order, kUnit, kUnit);
        for (int trial = 0; trial < 5; ++trial) {
            const Design xi1 = random_design(rng, 4, kUnit);
            const DesignPair pair(xi1, eta, g1, g2);
            CHECK(nu_p(xi1, eta, spec, g1, g2) == criterion_value(pair, spec));
        }
    }
    const Design degenerate({0.5}, {1.0}, kUnit);
    CHECK_THROWS_AS(nu_p(Design::uniform({0.0, 0.5, 1.0}), degenerate,
                         CriterionSpec::make(NormOrder::infinity(), kUnit, kUnit), g1, g2),
                    SingularDesign);
}

TEST_CASE("allocation-flexible mu_inf") {
    const auto spec = CriterionSpec::make(NormOrder::infinity(), kUnit, kUnit);
    const auto emax = ModelSpec::emax(nominal::kEmax);
    const auto expo = ModelSpec::exponential(nominal::kExponential);
    const Design a = Design::uniform({0.0, 0.15, 1.0}, kUnit);
    const Design b = Design::uniform({0.0, 0.75, 1.0}, kUnit);

    const double half = mu_inf_gamma(a, b, {0.5, 0.5}, spec, emax, expo, {kSigma2, kSigma2});
    CHECK(half == mu_inf(emax_exponential(a, b), spec));
    const double scaled = mu_inf_gamma(a, b, {0.3, 0.7}, spec, emax, expo, {4 * kSigma2, 4 * kSigma2});
    CHECK(scaled == doctest::Approx(4 * mu_inf_gamma(a, b, {0.3, 0.7}, spec, emax, expo, {kSigma2, kSigma2}))
                        .epsilon(1e-12));

    CHECK_THROWS_AS(mu_inf_gamma(a, b, {1.2, -0.2}, spec, emax, expo, {kSigma2, kSigma2}), InvalidInput);
    CHECK_THROWS_AS(mu_inf_gamma(a, b, {0.0, 1.0}, spec, emax, expo, {kSigma2, kSigma2}), InvalidInput);
    CHECK_THROWS_AS(mu_inf_gamma(a, b, {0.4, 0.5}, spec, emax, expo, {kSigma2, kSigma2}), InvalidInput);

    // tabulated allocation-optimal triple with a noisier second group
    const Design t1({0.0, 0.15, 1.0}, {0.324, 0.249, 0.427}, kUnit);
    const Design t2({0.0, 0.75, 1.0}, {0.369, 0.304, 0.327}, kUnit);
    const std::pair<double, double> sig{kSigma2, 5 * kSigma2};
    CHECK(mu_inf_gamma(t1, t2, {0.302, 0.698}, spec, emax, expo, sig) <
          mu_inf_gamma(t1, t2, {0.5, 0.5}, spec, emax, expo, sig));
}

TEST_CASE("band profile") {
    const auto grid = linspace(kUnit, 101);
    const DesignPair opt = emax_exponential(Design({0.0, 0.15, 1.0}, {0.320, 0.282, 0.398}, kUnit),
                                            Design({0.0, 0.74, 1.0}, {0.403, 0.274, 0.323}, kUnit));
    const DesignPair std_pair = emax_exponential(kStandard, kStandard);

    const auto zero = band_profile(opt, 200, grid, 0.0);
    for (const auto& r : zero.rows) CHECK(r.halfwidth == 0.0);

    const auto a = band_profile(opt, 200, grid);
    const auto b = band_profile(opt, 800, grid);
    REQUIRE(a.rows.size() == grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k)
        CHECK(b.rows[k].halfwidth == doctest::Approx(0.5 * a.rows[k].halfwidth).epsilon(1e-14));

    const auto s = band_profile(std_pair, 200, grid);
    CHECK(a.max_halfwidth < s.max_halfwidth);

    const auto again = band_profile(opt, 200, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK(again.rows[k].halfwidth == a.rows[k].halfwidth);

    CHECK_THROWS_AS(band_profile(opt, 0, grid), InvalidInput);
}
