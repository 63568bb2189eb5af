#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "gwflow/errors.hpp"
#include "gwflow/measures.hpp"
#include "support.hpp"

using namespace gwflow;
using gwflow::testing::lattice_grid;

namespace {

StepMeasure random_measure(std::mt19937_64& rng, int k, double a) {
    std::uniform_int_distribution<int> site(0, static_cast<int>(k * a));
    std::uniform_real_distribution<double> mass(0.0, 2.0);
    std::vector<MeasureAtom> atoms;
    const int n = std::uniform_int_distribution<int>(0, 6)(rng);
    for (int i = 0; i < n; ++i) {
        atoms.push_back({site(rng) / static_cast<double>(k), mass(rng)});
    }
    return {a, atoms};
}

}  // namespace

TEST_CASE("integration against grid functions") {
    auto grid = lattice_grid(4, 1.0);
    const auto one = FunctionOnGrid::constant(grid, 1.0);
    CHECK(integrate(StepMeasure::zero(1.0), one) == 0.0);
    CHECK(integrate(StepMeasure(1.0, {{0.25, 2.0}, {0.75, 0.5}}), one) == 2.5);
    const FunctionOnGrid f(grid, {0.0, 1.0, 2.0, 3.0, 4.0});
    CHECK(integrate(StepMeasure(1.0, {{0.25, 2.0}, {1.0, 1.0}}), f) == 6.0);
    CHECK_THROWS_AS((void)integrate(StepMeasure::unit_atom(1.0, 0.3), f), DomainError);
}

TEST_CASE("step measures merge atoms and report cumulative mass") {
    const StepMeasure mu(1.0, {{0.5, 1.0}, {0.0, 2.0}, {0.5, 0.5}});
    REQUIRE(mu.atoms().size() == 2);
    CHECK(mu.atoms()[0].location == 0.0);
    CHECK(mu.atoms()[1].mass == 1.5);
    CHECK(mu.total_mass() == 3.5);
    CHECK(mu.cumulative(0.0) == 2.0);
    CHECK(mu.cumulative(0.49) == 2.0);
    CHECK(mu.cumulative(0.5) == 3.5);

    const std::vector<std::uint64_t> counts{3, 1, 4};
    const auto lattice = StepMeasure::lattice(2, counts, 1.0);
    REQUIRE(lattice.atoms().size() == 3);
    CHECK(lattice.atoms()[2].location == 1.0);
    CHECK(lattice.atoms()[2].mass == 2.0);
    CHECK(lattice.total_mass() == 4.0);
    CHECK_THROWS_AS(StepMeasure(1.0, {{1.5, 1.0}}), DomainError);
    CHECK_THROWS_AS(StepMeasure(1.0, {{0.5, -1.0}}), DomainError);
}

TEST_CASE("default test family") {
    auto grid = lattice_grid(20, 1.0);
    const auto single = default_family(1.0, grid, 1);
    REQUIRE(single.size() == 1);
    CHECK(single[0].min() == 1.0);
    CHECK(single.truncation_bound() == doctest::Approx(1.0));

    const auto family = default_family(1.0, grid, 16);
    CHECK(family.size() == 16);
    for (std::size_t i = 0; i < family.size(); ++i) {
        CHECK(family[i].min() >= 0.05);
        CHECK(family[i].max() <= 1.0);
    }
    CHECK(family.truncation_bound() == doctest::Approx(std::ldexp(1.0, -15)));
}

TEST_CASE("rho distance") {
    auto grid = lattice_grid(10, 1.0);
    const auto family = default_family(1.0, grid, 24);
    const auto mu = StepMeasure(1.0, {{0.2, 1.0}, {0.7, 0.4}});
    CHECK(rho(mu, mu, family) == 0.0);
    const auto one = StepMeasure::unit_atom(1.0, 0.0);
    const auto two = StepMeasure::unit_atom(1.0, 0.0, 2.0);
    CHECK(rho(one, two, family) >= 1.0);
    CHECK(rho(StepMeasure::zero(1.0), StepMeasure::unit_atom(1.0, 0.5, 1e6), family) <= 2.0);
}

TEST_CASE("property: rho is a bounded symmetric metric on random step measures") {
    std::mt19937_64 rng(707);
    auto grid = lattice_grid(10, 1.0);
    const auto family = default_family(1.0, grid, 20);
    for (int trial = 0; trial < 500; ++trial) {
        const auto x = random_measure(rng, 10, 1.0);
        const auto y = random_measure(rng, 10, 1.0);
        const auto z = random_measure(rng, 10, 1.0);
        const double xy = rho(x, y, family);
        CHECK(xy == rho(y, x, family));
        CHECK(xy >= 0.0);
        CHECK(xy <= 2.0);
        CHECK(xy <= rho(x, z, family) + rho(z, y, family) + 1e-15);
    }
}

TEST_CASE("rho metrizes convergence of a moving atom") {
    auto grid = lattice_grid(1024, 1.0);
    const auto family = default_family(1.0, grid, 20);
    const auto limit = StepMeasure::unit_atom(1.0, 0.5);
    double previous = 2.0;
    for (int n = 1; n <= 8; ++n) {
        const auto mu = StepMeasure::unit_atom(1.0, 0.5 + std::ldexp(1.0, -n - 1), 1.0 + std::ldexp(1.0, -n));
        const double d = rho(mu, limit, family);
        CHECK(d < previous);
        previous = d;
    }
    CHECK(previous < 0.05);
}

TEST_CASE("separation bound") {
    auto grid = lattice_grid(20, 1.0);
    const auto family = default_family(1.0, grid, 32);
    const auto nu = StepMeasure(1.0, {{0.25, 1.0}, {0.75, 0.5}});
    const auto bound = separation_bound(nu, 0.1, family);
    // least n0 with 2^{-n0} < 0.05
    CHECK(bound.n0 == 5);
    CHECK(bound.bound > 0.0);
    CHECK(separation_gap(nu, nu, family, bound.n0) == 0.0);

    std::mt19937_64 rng(808);
    int checked = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const auto mu = random_measure(rng, 20, 1.0);
        if (rho(mu, nu, family) >= 0.1) {
            ++checked;
            CHECK(separation_gap(mu, nu, family, bound.n0) >= bound.bound);
        }
    }
    CHECK(checked > 100);
    CHECK_THROWS_AS((void)separation_bound(nu, 0.0, family), DomainError);
}

TEST_CASE("measure CSV round trip") {
    const StepMeasure mu(2.0, {{0.0, 1.5}, {0.125, 0.1}, {2.0, 3.0}});
    std::stringstream buffer;
    write_measure_csv(buffer, mu);
    CHECK(buffer.str().rfind("# a=2", 0) == 0);
    const auto back = read_measure_csv(buffer);
    CHECK(back.a() == 2.0);
    REQUIRE(back.atoms().size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.atoms()[i].location == mu.atoms()[i].location);
        CHECK(back.atoms()[i].mass == mu.atoms()[i].mass);
    }
    std::stringstream bad("# a=1\nlocation,mass\n0.5,abc\n");
    CHECK_THROWS_AS((void)read_measure_csv(bad), DomainError);
}
