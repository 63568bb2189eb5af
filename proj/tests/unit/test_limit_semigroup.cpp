#include <doctest.h>

#include <cmath>
#include <vector>

#include "gwflow/errors.hpp"
#include "gwflow/limit_semigroup.hpp"
#include "support.hpp"

using namespace gwflow;
using gwflow::testing::uniform_grid;

namespace {

double drift_feller(double b, double sigma2, double t, double lambda) {
    if (b == 0.0) {
        return lambda / (1.0 + 0.5 * sigma2 * lambda * t);
    }
    const double decay = std::exp(-b * t);
    return b * lambda * decay / (b + 0.5 * sigma2 * lambda * (1.0 - decay));
}

const BranchingMechanism kJumpy(0.3, 0.8, JumpMeasure::atoms({{0.5, 1.0}, {2.0, 0.4}}));

}  // namespace

TEST_CASE("local cumulant examples") {
    CHECK(solve_cumulant(BranchingMechanism::zero(), 2.0, 1.3) == 1.3);
    CHECK(solve_cumulant(kJumpy, 0.0, 1.3) == 1.3);
    CHECK(solve_cumulant(kJumpy, 1.0, 0.0) == 0.0);
    CHECK(solve_cumulant(BranchingMechanism::feller(1.0), 1.0, 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(solve_cumulant(BranchingMechanism::drift(1.0), 1.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK_THROWS_AS((void)solve_cumulant(kJumpy, -1.0, 1.0), DomainError);
    CHECK_THROWS_AS((void)solve_cumulant(kJumpy, 1.0, -1.0), DomainError);
}

TEST_CASE("closed forms agree with the solver") {
    for (double b : {-0.5, 0.0, 0.7}) {
        for (double sigma2 : {0.0, 0.5, 2.0}) {
            const BranchingMechanism mech(b, sigma2);
            for (double lambda : {0.1, 1.0, 5.0}) {
                const auto exact = closed_form_cumulant(mech, 1.5, lambda);
                REQUIRE(exact.has_value());
                CHECK(*exact == doctest::Approx(drift_feller(b, sigma2, 1.5, lambda)).epsilon(1e-13));
                CHECK(solve_cumulant(mech, 1.5, lambda) == doctest::Approx(*exact).epsilon(1e-9));
            }
        }
    }
    CHECK_FALSE(closed_form_cumulant(kJumpy, 1.0, 1.0).has_value());
}

TEST_CASE("stable panel follows the power-law cumulant") {
    StablePanel panel;
    panel.alpha = 0.5;
    panel.scale = StablePanel::unit_power_scale(0.5);
    panel.eps = 1e-8;
    panel.cap = 1e8;
    panel.nodes = 400;
    const BranchingMechanism mech(0.0, 0.0, JumpMeasure::stable(panel));
    const auto exact = closed_form_cumulant(mech, 2.0, 1.0);
    REQUIRE(exact.has_value());
    CHECK(*exact == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(solve_cumulant(mech, 2.0, 1.0) == doctest::Approx(0.25).epsilon(2e-3));
}

TEST_CASE("supercritical growth is reported as blow-up") {
    CHECK_THROWS_AS((void)solve_cumulant(BranchingMechanism::drift(-1.0), 40.0, 1.0), BlowUpError);
}

TEST_CASE("property: semigroup, monotonicity and positivity") {
    gwflow::testing::MechanismGenerator gen(909);
    for (int trial = 0; trial < 60; ++trial) {
        auto mech = gen.next();
        mech = BranchingMechanism(std::abs(mech.b()), mech.sigma2(), mech.jumps());
        const double lambda = gen.uniform(0.0, 4.0);
        const double s = 0.01 * gen.integer(1, 80);
        const double t = 0.01 * gen.integer(1, 80);
        const CumulantSolverOptions opts{0.01};
        const double whole = solve_cumulant(mech, s + t, lambda, opts);
        CHECK(whole == doctest::Approx(solve_cumulant(mech, t, solve_cumulant(mech, s, lambda, opts), opts))
                           .epsilon(1e-9));
        CHECK(whole >= 0.0);
        CHECK(whole <= lambda + 1e-12);
        CHECK(solve_cumulant(mech, t, lambda + 0.5, opts) >= solve_cumulant(mech, t, lambda, opts));
    }
}

TEST_CASE("RK4 error ratio under step halving") {
    const double coarse = solve_cumulant(kJumpy, 2.0, 3.0, {0.2});
    const double mid = solve_cumulant(kJumpy, 2.0, 3.0, {0.1});
    const double fine = solve_cumulant(kJumpy, 2.0, 3.0, {0.05});
    const double ratio = (coarse - mid) / (mid - fine);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("linearization at the origin decays at the drift rate") {
    const double eps = 1e-7;
    CHECK(solve_cumulant(kJumpy, 1.2, eps) / eps == doctest::Approx(std::exp(-0.3 * 1.2)).epsilon(1e-5));
}

TEST_CASE("field solver uses each node's mechanism") {
    auto grid = uniform_grid(1.0, 5);
    const MechanismField field(grid, {BranchingMechanism::drift(1.0), BranchingMechanism::drift(1.0),
                                      BranchingMechanism::feller(2.0), BranchingMechanism::feller(2.0), kJumpy});
    const FunctionOnGrid f(grid, {1.0, 2.0, 0.5, 1.5, 3.0});
    const auto v = solve_cumulant_field(field, 0.8, f);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(v[i] == solve_cumulant(field.node(i), 0.8, f[i]));
    }
}

TEST_CASE("nonlocal solver reduces to the local one when psi vanishes") {
    auto grid = uniform_grid(1.0, 9);
    const auto family = AdmissibleFamily::local_only(kJumpy, grid);
    std::vector<double> values;
    for (double x : grid->nodes()) {
        values.push_back(1.0 + std::sin(3.0 * x));
    }
    const FunctionOnGrid f(grid, values);
    const auto nonlocal = solve_nonlocal_cumulant(family, 0.7, f);
    const auto local = solve_cumulant_field(MechanismField::uniform(grid, kJumpy), 0.7, f);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        CHECK(std::abs(nonlocal[i] - local[i]) <= 1e-10);
    }
}

TEST_CASE("nonlocal endpoint grows exponentially") {
    auto grid = uniform_grid(1.0, 21);
    const AdmissibleFamily family(BranchingMechanism::zero(), grid, std::vector<ImmigrationKernel>(21, {1.0, {}}));
    const auto v = solve_nonlocal_cumulant(family, 0.5, FunctionOnGrid::constant(grid, 1.0));
    CHECK(v[20] == doctest::Approx(std::exp(0.5)).epsilon(1e-10));
    const auto zero = solve_nonlocal_cumulant(family, 0.5, FunctionOnGrid::constant(grid, 0.0));
    for (std::size_t i = 0; i < grid->size(); ++i) {
        CHECK(zero[i] == 0.0);
    }
}

TEST_CASE("nonlocal solver matches a direct RK4 on the nonlocal operator") {
    auto grid = uniform_grid(1.0, 11);
    const auto family = gwflow::testing::sloped_family(BranchingMechanism::feller(1.0), grid, 0.5, 1.0, 0.7, 0.4);
    std::vector<double> f;
    for (double x : grid->nodes()) {
        f.push_back(0.5 + x * x);
    }
    const double t = 0.5, h = 0.01;
    auto rhs = [&](const std::vector<double>& v) {
        std::vector<double> out(v.size());
        std::vector<double> clipped(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            clipped[i] = std::max(v[i], 0.0);
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            out[i] = -family.phi0()(clipped[i]) + eval_nonlocal_psi(family, i, clipped);
        }
        return out;
    };
    std::vector<double> y = f;
    for (int step = 0; step < 50; ++step) {
        auto axpy = [&](const std::vector<double>& k, double c) {
            std::vector<double> out(y);
            for (std::size_t i = 0; i < y.size(); ++i) {
                out[i] += c * k[i];
            }
            return out;
        };
        const auto k1 = rhs(y);
        const auto k2 = rhs(axpy(k1, h / 2));
        const auto k3 = rhs(axpy(k2, h / 2));
        const auto k4 = rhs(axpy(k3, h));
        for (std::size_t i = 0; i < y.size(); ++i) {
            y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        }
    }
    const auto v = solve_nonlocal_cumulant(family, t, FunctionOnGrid(grid, f), {h});
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(v[i] == doctest::Approx(y[i]).epsilon(1e-12));
    }
}

TEST_CASE("property: nonlocal solutions are nonnegative and monotone in f") {
    gwflow::testing::MechanismGenerator gen(1001);
    auto grid = uniform_grid(1.0, 9);
    for (int trial = 0; trial < 20; ++trial) {
        auto phi0 = gen.next();
        phi0 = BranchingMechanism(std::abs(phi0.b()), phi0.sigma2(), phi0.jumps());
        const auto family = gwflow::testing::sloped_family(phi0, grid, gen.uniform(0, 0.5), gen.uniform(0, 0.5),
                                                            gen.uniform(0.1, 2), gen.uniform(0, 0.5));
        std::vector<double> f(9), g(9);
        for (std::size_t i = 0; i < 9; ++i) {
            f[i] = gen.uniform(0.0, 2.0);
            g[i] = f[i] + gen.uniform(0.0, 1.0);
        }
        const auto vf = solve_nonlocal_cumulant(family, 0.4, FunctionOnGrid(grid, f), {0.01});
        const auto vg = solve_nonlocal_cumulant(family, 0.4, FunctionOnGrid(grid, g), {0.01});
        for (std::size_t i = 0; i < 9; ++i) {
            CHECK(vf[i] >= 0.0);
            CHECK(vf[i] <= vg[i] + 1e-12);
        }
    }
}

TEST_CASE("laplace functional") {
    auto grid = uniform_grid(1.0, 5);
    const FunctionOnGrid v(grid, {0.0, 1.0, 2.0, 3.0, 4.0});
    CHECK(laplace_functional(StepMeasure::zero(1.0), v) == 1.0);
    CHECK(laplace_functional(StepMeasure(1.0, {{0.25, 1.0}, {1.0, 0.5}}), v) == doctest::Approx(std::exp(-3.0)));
}
