#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "gwflow/discrete_flow.hpp"
#include "gwflow/errors.hpp"

using namespace gwflow;

namespace {

const Pgf kBinary = Pgf::from_coefficients({0.5, 0.0, 0.5});

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    Moments m;
    for (double x : xs) {
        m.mean += x;
    }
    m.mean /= static_cast<double>(xs.size());
    for (double x : xs) {
        m.variance += (x - m.mean) * (x - m.mean);
    }
    m.variance /= static_cast<double>(xs.size() - 1);
    return m;
}

RunControl control(std::uint64_t seed, std::uint64_t replicate, std::size_t generations) {
    RunControl run;
    run.master_seed = seed;
    run.replicate = replicate;
    run.generations = generations;
    return run;
}

}  // namespace

TEST_CASE("step counts") {
    CHECK(generations_for(10.0, 0.3) == 3);
    CHECK(generations_for(3.0, 0.1) == 0);
    CHECK(generations_for(2.0, 1.0) == 2);
    CHECK(site_count(4, 1.0) == 5);
    CHECK(site_count(3, 0.5) == 2);
}

TEST_CASE("step_site basics") {
    auto rng = StreamFactory(1, 0).stream(0, 0);
    const auto binary = make_sampler(kBinary);
    CHECK(step_site(0, binary, rng) == 0);
    CHECK(step_site(7, make_sampler(Pgf::from_coefficients({0.0, 0.0, 1.0})), rng) == 14);
    const auto odd = step_site(17, binary, rng);
    CHECK(odd % 2 == 0);
    CHECK_THROWS_AS((void)step_site(1000, make_sampler(Pgf::from_coefficients({0.0, 0.0, 1.0})), rng, 1500),
                    PopulationCapError);
}

TEST_CASE("step_site moments for a large count") {
    const auto binary = make_sampler(kBinary);
    const std::uint64_t count = 1000000;
    std::vector<double> sums;
    for (std::uint64_t r = 0; r < 1000; ++r) {
        auto rng = StreamFactory(2, r).stream(0, 0);
        sums.push_back(static_cast<double>(step_site(count, binary, rng)));
    }
    const auto m = moments(sums);
    // offspring mean 1 and variance 1
    const double mean_se = std::sqrt(static_cast<double>(count) / 1000.0);
    CHECK(std::abs(m.mean - count) < 3.0 * mean_se);
    CHECK(std::abs(m.variance / count - 1.0) < 3.0 * std::sqrt(2.0 / 999.0));
}

TEST_CASE("step_site moments on both sides of the alias threshold") {
    const auto law = make_sampler(Pgf::from_coefficients({0.2, 0.3, 0.1, 0.4}));
    for (std::uint64_t count : {16u, 17u}) {
        std::vector<double> sums;
        for (std::uint64_t r = 0; r < 20000; ++r) {
            auto rng = StreamFactory(3, r).stream(0, count);
            sums.push_back(static_cast<double>(step_site(count, law, rng)));
        }
        const auto m = moments(sums);
        // offspring mean 1.7, variance 4.3 - 1.7² = 1.41
        CHECK(std::abs(m.mean - 1.7 * count) < 4.0 * std::sqrt(1.41 * count / 20000.0));
        CHECK(std::abs(m.variance / (1.41 * count) - 1.0) < 0.06);
    }
}

TEST_CASE("zero populations stay at zero and identity pgfs freeze the flow") {
    const IndependentFlow flow(2, 2.0, {kBinary, kBinary, kBinary});
    const std::vector<std::uint64_t> zeros(3, 0);
    const auto traj = flow.simulate(zeros, control(1, 0, 5));
    CHECK(traj.snapshots.back().counts == zeros);

    const IndependentFlow frozen(2, 2.0, {Pgf::identity(), Pgf::identity(), Pgf::identity()});
    const std::vector<std::uint64_t> init{4, 0, 9};
    CHECK(frozen.simulate(init, control(1, 0, 5)).snapshots.back().counts == init);
}

TEST_CASE("extinction frequency matches the iterated pgf") {
    const IndependentFlow flow(1, 1.0, {kBinary});
    const std::vector<std::uint64_t> init{5};
    const int n = 20000;
    int extinct = 0;
    for (int r = 0; r < n; ++r) {
        extinct += flow.simulate(init, control(4, r, 3)).snapshots.back().counts[0] == 0;
    }
    const double p = std::pow(iterate(kBinary, 0.0, 3), 5);
    CHECK(std::abs(extinct / static_cast<double>(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("chi-squared test of the exact three-generation law") {
    // law of Z_3 from one ancestor: P_{n+1}(s) = 1/2 + P_n(s)²/2
    std::vector<double> law{0.0, 1.0};
    for (int gen = 0; gen < 3; ++gen) {
        std::vector<double> next(2 * law.size() - 1, 0.0);
        for (std::size_t i = 0; i < law.size(); ++i) {
            for (std::size_t j = 0; j < law.size(); ++j) {
                next[i + j] += 0.5 * law[i] * law[j];
            }
        }
        next[0] += 0.5;
        law = next;
    }
    const IndependentFlow flow(1, 1.0, {kBinary});
    const std::vector<std::uint64_t> init{1};
    const int n = 20000;
    std::map<std::uint64_t, int> observed;
    for (int r = 0; r < n; ++r) {
        ++observed[flow.simulate(init, control(5, r, 3)).snapshots.back().counts[0]];
    }
    // bins with expected count >= 5, the rest merged into one
    double statistic = 0.0, rest_expected = 0.0, rest_observed = 0.0;
    int bins = 0;
    for (std::size_t v = 0; v < law.size(); ++v) {
        const double expected = law[v] * n;
        const double seen = observed.count(v) ? observed[v] : 0.0;
        if (expected >= 5.0) {
            statistic += (seen - expected) * (seen - expected) / expected;
            ++bins;
        } else {
            rest_expected += expected;
            rest_observed += seen;
        }
    }
    if (rest_expected > 0.0) {
        statistic += (rest_observed - rest_expected) * (rest_observed - rest_expected) / rest_expected;
        ++bins;
    }
    for (const auto& [value, hits] : observed) {
        CHECK(value < law.size());
        CHECK((value % 2 == 0 || value == 1) == true);
    }
    const boost::math::chi_squared dist(bins - 1);
    CHECK(boost::math::cdf(boost::math::complement(dist, statistic)) > 0.001);
}

TEST_CASE("independent sites are uncorrelated") {
    const IndependentFlow flow(1, 1.0, {kBinary, kBinary});
    const std::vector<std::uint64_t> init{20, 20};
    const int n = 10000;
    std::vector<double> xs, ys;
    for (int r = 0; r < n; ++r) {
        const auto traj = flow.simulate(init, control(6, r, 5));
        const auto& counts = traj.snapshots.back().counts;
        xs.push_back(static_cast<double>(counts[0]));
        ys.push_back(static_cast<double>(counts[1]));
    }
    const auto mx = moments(xs), my = moments(ys);
    double cov = 0.0;
    for (int r = 0; r < n; ++r) {
        cov += (xs[r] - mx.mean) * (ys[r] - my.mean);
    }
    cov /= n - 1;
    CHECK(std::abs(cov) < 4.0 * std::sqrt(mx.variance * my.variance / n));
    // each site: mean 20, variance 20 · 5 generations
    CHECK(std::abs(mx.mean - 20.0) < 4.0 * std::sqrt(100.0 / n));
}

TEST_CASE("interactive one-step mean recursion") {
    const double p = 0.1;
    const Pgf h = Pgf::from_coefficients({1.0 - p, p});
    const InteractiveFlow flow(4, 1.0, Pgf::identity(), {h, h, h, h});
    const std::vector<std::uint64_t> init{10, 0, 5, 3, 0};
    const int n = 20000;
    std::vector<std::vector<double>> samples(5);
    for (int r = 0; r < n; ++r) {
        const auto traj = flow.simulate(init, control(7, r, 1));
        const auto& counts = traj.snapshots.back().counts;
        for (std::size_t m = 0; m < 5; ++m) {
            samples[m].push_back(static_cast<double>(counts[m]));
        }
    }
    std::uint64_t prefix = 0;
    for (std::size_t m = 0; m < 5; ++m) {
        // E X_1(m) = X_0(m)(1 + m p) + p X̄_0(m - 1)
        const double expected = init[m] * (1.0 + m * p) + p * static_cast<double>(prefix);
        prefix += init[m];
        const auto s = moments(samples[m]);
        CHECK(std::abs(s.mean - expected) <= 4.0 * std::sqrt(s.variance / n) + 1e-12);
    }
    CHECK(samples[0] == std::vector<double>(n, 10.0));
}

TEST_CASE("interactive flow with trivial immigration equals the independent flow") {
    const Pgf g0 = Pgf::from_coefficients({0.3, 0.3, 0.4});
    const InteractiveFlow interactive(3, 3.0, g0, {Pgf::constant_one(), Pgf::constant_one(), Pgf::constant_one()});
    const IndependentFlow independent(3, 3.0, {g0, g0, g0, g0});
    const std::vector<std::uint64_t> init{3, 30, 0, 7};
    for (std::uint64_t r = 0; r < 20; ++r) {
        const auto a = interactive.simulate(init, control(8, r, 6));
        const auto b = independent.simulate(init, control(8, r, 6));
        REQUIRE(a.snapshots.size() == b.snapshots.size());
        for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
            CHECK(a.snapshots[i].counts == b.snapshots[i].counts);
        }
    }
}

TEST_CASE("runs are reproducible") {
    const IndependentFlow flow(2, 2.0, {kBinary, kBinary, kBinary});
    const std::vector<std::uint64_t> init{50, 50, 50};
    auto run = control(9, 3, 10);
    run.record = {2, 5};
    const auto a = flow.simulate(init, run);
    const auto b = flow.simulate(init, run);
    REQUIRE(a.snapshots.size() == 4);
    CHECK(a.snapshots[1].generation == 2);
    for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
        CHECK(a.snapshots[i].counts == b.snapshots[i].counts);
    }
    const auto c = flow.simulate(init, control(9, 4, 10));
    CHECK(c.snapshots.back().counts != a.snapshots.back().counts);
}

TEST_CASE("supercritical growth hits the population cap") {
    const IndependentFlow flow(1, 1.0, {Pgf::from_coefficients({0.0, 0.0, 1.0})});
    const std::vector<std::uint64_t> init{1};
    auto run = control(1, 0, 20);
    run.cap = 1000;
    CHECK_THROWS_AS((void)flow.simulate(init, run), PopulationCapError);
}

TEST_CASE("measure extraction and lattice counts") {
    FlowTrajectory traj;
    FlowState state;
    state.k = 2;
    state.gamma = 2.0;
    state.generation = 2;
    state.counts = {3, 1, 4};
    traj.snapshots.push_back(state);
    const auto mu = extract_measure(traj, 1.0, 1.0);
    REQUIRE(mu.atoms().size() == 3);
    CHECK(mu.atoms()[0].mass == 1.5);
    CHECK(mu.atoms()[2].location == 1.0);
    CHECK(mu.cumulative(0.5) == 2.0);
    CHECK(state.cumulative(1) == 4);
    CHECK(state.total() == 8);
    CHECK_THROWS_AS((void)extract_measure(traj, 2.0, 1.0), DomainError);

    CHECK(lattice_counts(mu, 2) == std::vector<std::uint64_t>{3, 1, 4});
    CHECK_THROWS_AS((void)lattice_counts(StepMeasure::unit_atom(1.0, 0.3), 4), DomainError);
    CHECK_THROWS_AS((void)lattice_counts(StepMeasure::unit_atom(1.0, 0.25, 0.1), 4), DomainError);
}

TEST_CASE("Poisson product-law initial counts") {
    const auto mu = StepMeasure(1.0, {{0.0, 2.0}, {0.5, 0.5}});
    double sum0 = 0.0, sum1 = 0.0;
    const int n = 5000;
    for (int r = 0; r < n; ++r) {
        const auto counts = poisson_initial_counts(mu, 4, StreamFactory(10, r));
        REQUIRE(counts.size() == 5);
        CHECK(counts[1] == 0);
        sum0 += static_cast<double>(counts[0]);
        sum1 += static_cast<double>(counts[2]);
    }
    CHECK(std::abs(sum0 / n - 8.0) < 4.0 * std::sqrt(8.0 / n));
    CHECK(std::abs(sum1 / n - 2.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("discrete cumulant") {
    CHECK(discrete_cumulant(kBinary, 10, 10.0, 1.0, 0.0) == 0.0);
    CHECK(discrete_cumulant(kBinary, 10, 10.0, 0.0, 1.5) == doctest::Approx(1.5).epsilon(1e-15));
    // -k log g^{[γt]}(e^{-1/k}), frozen from 40-digit evaluations
    const double binary[] = {0.657540094293352985, 0.665764465277561535, 0.666576551626167852};
    const double thinning[] = {0.347099258815595888, 0.365797356823534699, 0.367671202476049530};
    const int ks[] = {10, 100, 1000};
    for (int i = 0; i < 3; ++i) {
        const int k = ks[i];
        CHECK(discrete_cumulant(build_local_pgf(BranchingMechanism::feller(1.0), k, k), k, k, 1.0, 1.0) ==
              doctest::Approx(binary[i]).epsilon(1e-11));
        CHECK(discrete_cumulant(build_local_pgf(BranchingMechanism::drift(1.0), k, 2.0 * k), k, 2.0 * k, 1.0,
                                1.0) == doctest::Approx(thinning[i]).epsilon(1e-11));
    }
    CHECK(std::abs(discrete_cumulant(kBinary, 1000, 1000.0, 1.0, 1.0) - 2.0 / 3.0) < 5e-3);
}

TEST_CASE("trajectory CSV") {
    const IndependentFlow flow(1, 1.0, {kBinary, kBinary});
    const std::vector<std::uint64_t> init{2, 3};
    const std::vector<FlowTrajectory> trajs{flow.simulate(init, control(1, 0, 1))};
    std::ostringstream out;
    write_trajectory_csv(out, trajs);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "replicate,generation,site,count");
    std::getline(in, line);
    CHECK(line == "0,0,0,2");
    int rows = 1;
    while (std::getline(in, line)) {
        ++rows;
    }
    CHECK(rows == 4);
}
