#include "gwflow/discrete_flow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "gwflow/errors.hpp"

namespace gwflow {

namespace {

constexpr std::uint64_t kAliasThreshold = 16;

[[noreturn]] void cap_exceeded(std::uint64_t cap) {
    std::ostringstream msg;
    msg << "site population exceeded the cap " << cap << " (supercritical blow-up?)";
    throw PopulationCapError(msg.str());
}

std::uint64_t add_checked(std::uint64_t sum, std::uint64_t multiplicity, std::uint64_t value, std::uint64_t cap) {
    std::uint64_t product = 0;
    if (__builtin_mul_overflow(multiplicity, value, &product) || product > cap - std::min(sum, cap)) {
        cap_exceeded(cap);
    }
    return sum + product;
}

void check_init(std::span<const std::uint64_t> init, std::size_t sites) {
    if (init.size() != sites) {
        std::ostringstream msg;
        msg << "initial condition has " << init.size() << " sites, flow has " << sites;
        throw DomainError(msg.str());
    }
}

template <class Flow>
FlowTrajectory run_flow(const Flow& flow, FlowModel model, std::span<const std::uint64_t> init,
                        const RunControl& run) {
    check_init(init, flow.sites());
    std::vector<std::size_t> record = run.record;
    record.push_back(0);
    record.push_back(run.generations);
    std::sort(record.begin(), record.end());
    record.erase(std::unique(record.begin(), record.end()), record.end());
    std::erase_if(record, [&](std::size_t g) { return g > run.generations; });

    FlowTrajectory traj;
    traj.model = model;
    traj.master_seed = run.master_seed;
    traj.replicate = run.replicate;
    const StreamFactory streams(run.master_seed, run.replicate);
    FlowState state{flow.k(), flow.gamma(), 0, {init.begin(), init.end()}};
    for (auto c : state.counts) {
        if (c > run.cap) {
            cap_exceeded(run.cap);
        }
    }
    auto next = record.begin();
    for (;;) {
        if (next != record.end() && *next == state.generation) {
            traj.snapshots.push_back(state);
            ++next;
        }
        if (state.generation >= run.generations) {
            break;
        }
        flow.step(state, streams, run.cap);
    }
    return traj;
}

}  // namespace

std::uint64_t FlowState::cumulative(std::size_t m) const {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i <= m && i < counts.size(); ++i) {
        sum += counts[i];
    }
    return sum;
}

std::uint64_t FlowState::total() const { return counts.empty() ? 0 : cumulative(counts.size() - 1); }

const FlowState* FlowTrajectory::find(std::size_t generation) const noexcept {
    for (const auto& s : snapshots) {
        if (s.generation == generation) {
            return &s;
        }
    }
    return nullptr;
}

std::size_t generations_for(double gamma, double t) {
    if (!(gamma > 0.0) || !(t >= 0.0) || !std::isfinite(gamma * t)) {
        throw DomainError("generation count needs gamma > 0 and finite t >= 0");
    }
    return static_cast<std::size_t>(std::floor(gamma * t + 1e-9));
}

std::size_t site_count(int k, double a) {
    if (k < 1 || !(a >= 0.0)) {
        throw DomainError("site count needs k >= 1 and a >= 0");
    }
    return static_cast<std::size_t>(std::floor(k * a + 1e-9)) + 1;
}

std::uint64_t step_site(std::uint64_t count, const SamplingTable& table, PhiloxStream& rng, std::uint64_t cap) {
    if (count == 0) {
        return 0;
    }
    const auto entries = table.entries();
    if (table.deterministic()) {
        return add_checked(0, count, entries.front().value, cap);
    }
    std::uint64_t sum = 0;
    if (count <= kAliasThreshold) {
        for (std::uint64_t j = 0; j < count; ++j) {
            sum = add_checked(sum, 1, table.draw(rng.uniform()), cap);
        }
        return sum;
    }
    // Sequential binomial decomposition of the multinomial over the support,
    // most likely counts first so the loop usually stops early.
    auto remaining = static_cast<long long>(std::min<std::uint64_t>(count, std::uint64_t{1} << 62));
    double rest = 1.0;
    for (std::size_t e = 0; e < entries.size() && remaining > 0; ++e) {
        long long m = remaining;
        if (e + 1 < entries.size()) {
            const double p = rest > 0.0 ? std::clamp(entries[e].probability / rest, 0.0, 1.0) : 1.0;
            std::binomial_distribution<long long> binomial(remaining, p);
            m = binomial(rng);
        }
        sum = add_checked(sum, static_cast<std::uint64_t>(m), entries[e].value, cap);
        remaining -= m;
        rest -= entries[e].probability;
    }
    return sum;
}

IndependentFlow::IndependentFlow(int k, double gamma, std::vector<Pgf> pgfs, double delta_tail)
    : k_(k), gamma_(gamma), pgfs_(std::move(pgfs)) {
    if (k < 1 || !(gamma > 0.0)) {
        throw DomainError("flow needs k >= 1 and gamma > 0");
    }
    if (pgfs_.empty()) {
        throw DomainError("flow needs at least one site");
    }
    tables_.reserve(pgfs_.size());
    for (const auto& g : pgfs_) {
        tables_.push_back(make_sampler(g, delta_tail));
    }
}

IndependentFlow IndependentFlow::from_field(const MechanismField& field, int k, double gamma, double delta_tail) {
    const std::size_t n = site_count(k, field.grid().a());
    std::vector<Pgf> pgfs;
    pgfs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        pgfs.push_back(build_local_pgf(field.at(static_cast<double>(i) / k), k, gamma));
    }
    return {k, gamma, std::move(pgfs), delta_tail};
}

void IndependentFlow::step(FlowState& state, const StreamFactory& streams, std::uint64_t cap) const {
    for (std::size_t i = 0; i < state.counts.size(); ++i) {
        if (state.counts[i] == 0) {
            continue;
        }
        auto rng = streams.stream(state.generation, i, stream_tag::kOffspring);
        state.counts[i] = step_site(state.counts[i], tables_[i], rng, cap);
    }
    ++state.generation;
}

FlowTrajectory IndependentFlow::simulate(std::span<const std::uint64_t> init, const RunControl& run) const {
    return run_flow(*this, FlowModel::Independent, init, run);
}

InteractiveFlow::InteractiveFlow(int k, double gamma, Pgf g0, std::vector<Pgf> h, double delta_tail)
    : k_(k), gamma_(gamma), g0_(std::move(g0)), h_(std::move(h)), g0_table_(make_sampler(g0_, delta_tail)) {
    if (k < 1 || !(gamma > 0.0)) {
        throw DomainError("flow needs k >= 1 and gamma > 0");
    }
    h_tables_.reserve(h_.size());
    for (const auto& pgf : h_) {
        h_tables_.push_back(make_sampler(pgf, delta_tail));
    }
}

InteractiveFlow InteractiveFlow::from_family(const AdmissibleFamily& family, int k, double gamma,
                                             double delta_tail) {
    const std::size_t n = site_count(k, family.a());
    Pgf g0 = build_local_pgf(family.phi0(), k, gamma);
    std::vector<Pgf> h;
    h.reserve(n - 1);
    for (std::size_t m = 1; m < n; ++m) {
        h.push_back(build_nonlocal_pgf(family.kernel_at(std::min(static_cast<double>(m) / k, family.a())), k, gamma));
    }
    return {k, gamma, std::move(g0), std::move(h), delta_tail};
}

CompositePgf InteractiveFlow::composite(std::size_t m) const {
    std::vector<const Pgf*> factors{&g0_};
    for (std::size_t i = 1; i <= m; ++i) {
        factors.push_back(&h(i));
    }
    return CompositePgf(std::move(factors));
}

void InteractiveFlow::step(FlowState& state, const StreamFactory& streams, std::uint64_t cap) const {
    const std::size_t n = state.counts.size();
    // X̄_n(m - 1) from the frozen generation-n state.
    std::vector<std::uint64_t> below(n, 0);
    for (std::size_t m = 1; m < n; ++m) {
        below[m] = below[m - 1] + state.counts[m - 1];
    }
    std::vector<std::uint64_t> next(n, 0);
    for (std::size_t m = 0; m < n; ++m) {
        const std::uint64_t x = state.counts[m];
        std::uint64_t total = 0;
        if (x > 0) {
            auto rng = streams.stream(state.generation, m, stream_tag::kOffspring);
            total = step_site(x, g0_table_, rng, cap);
            for (std::size_t i = 1; i <= m; ++i) {
                auto factor_rng = streams.stream(state.generation, m, stream_tag::kFactorBase + static_cast<std::uint32_t>(i));
                total = add_checked(total, 1, step_site(x, h_tables_[i - 1], factor_rng, cap), cap);
            }
        }
        if (m > 0 && below[m] > 0) {
            auto rng = streams.stream(state.generation, m, stream_tag::kImmigrants);
            total = add_checked(total, 1, step_site(below[m], h_tables_[m - 1], rng, cap), cap);
        }
        next[m] = total;
    }
    state.counts = std::move(next);
    ++state.generation;
}

FlowTrajectory InteractiveFlow::simulate(std::span<const std::uint64_t> init, const RunControl& run) const {
    return run_flow(*this, FlowModel::Interactive, init, run);
}

FlowTrajectory simulate_independent(const IndependentFlow& flow, std::span<const std::uint64_t> init,
                                    const RunControl& run) {
    return flow.simulate(init, run);
}

FlowTrajectory simulate_interactive(const InteractiveFlow& flow, std::span<const std::uint64_t> init,
                                    const RunControl& run) {
    return flow.simulate(init, run);
}

StepMeasure extract_measure(const FlowTrajectory& traj, double t, double a) {
    if (traj.snapshots.empty()) {
        throw DomainError("trajectory has no snapshots");
    }
    const auto& first = traj.snapshots.front();
    const std::size_t generation = generations_for(first.gamma, t);
    const FlowState* state = traj.find(generation);
    if (!state) {
        std::ostringstream msg;
        msg << "generation " << generation << " (t = " << t << ") was not recorded";
        throw DomainError(msg.str());
    }
    const std::size_t n = std::min(state->counts.size(), site_count(state->k, a));
    return StepMeasure::lattice(state->k, std::span(state->counts).first(n), a);
}

std::vector<std::uint64_t> lattice_counts(const StepMeasure& mu, int k) {
    std::vector<std::uint64_t> counts(site_count(k, mu.a()), 0);
    for (const auto& atom : mu.atoms()) {
        const double scaled = atom.location * k;
        const double index = std::round(scaled);
        const double mass = atom.mass * k;
        const double count = std::round(mass);
        if (std::abs(scaled - index) > 1e-9 * std::max(1.0, scaled) || index >= static_cast<double>(counts.size())) {
            std::ostringstream msg;
            msg << "atom at " << atom.location << " is not on the 1/" << k << " lattice";
            throw DomainError(msg.str());
        }
        if (std::abs(mass - count) > 1e-9 * std::max(1.0, mass)) {
            std::ostringstream msg;
            msg << "atom mass " << atom.mass << " is not a multiple of 1/" << k;
            throw DomainError(msg.str());
        }
        counts[static_cast<std::size_t>(index)] += static_cast<std::uint64_t>(count);
    }
    return counts;
}

std::vector<std::uint64_t> poisson_initial_counts(const StepMeasure& mu, int k, const StreamFactory& streams) {
    std::vector<double> means(site_count(k, mu.a()), 0.0);
    for (const auto& atom : mu.atoms()) {
        const auto index = static_cast<std::size_t>(std::llround(atom.location * k));
        if (std::abs(atom.location * k - static_cast<double>(index)) > 1e-9 * std::max(1.0, atom.location * k) ||
            index >= means.size()) {
            throw DomainError("initial measure is not on the site lattice");
        }
        means[index] += atom.mass * k;
    }
    std::vector<std::uint64_t> counts(means.size(), 0);
    for (std::size_t i = 0; i < means.size(); ++i) {
        if (means[i] > 0.0) {
            auto rng = streams.stream(0, i, stream_tag::kInitial);
            std::poisson_distribution<long long> poisson(means[i]);
            counts[i] = static_cast<std::uint64_t>(poisson(rng));
        }
    }
    return counts;
}

double discrete_cumulant(const Pgf& g, int k, double gamma, double t, double lambda) {
    if (k < 1) {
        throw DomainError("k must be at least 1");
    }
    if (!(lambda >= 0.0)) {
        throw DomainError("lambda must be nonnegative");
    }
    if (lambda == 0.0) {
        return 0.0;
    }
    const std::size_t n = generations_for(gamma, t);
    const double w = iterate_complement(g, one_minus_exp(lambda / k), n);
    if (!(w < 1.0)) {
        std::ostringstream msg;
        msg << "g^" << n << "(e^{-lambda/k}) vanished; (k, t, lambda) = (" << k << ", " << t << ", " << lambda
            << ") is outside the model's range";
        throw DomainError(msg.str());
    }
    return -static_cast<double>(k) * std::log1p(-w);
}

void write_trajectory_csv(std::ostream& out, std::span<const FlowTrajectory> trajectories, bool header) {
    if (header) {
        out << "replicate,generation,site,count\n";
    }
    for (const auto& traj : trajectories) {
        for (const auto& state : traj.snapshots) {
            for (std::size_t i = 0; i < state.counts.size(); ++i) {
                out << traj.replicate << ',' << state.generation << ',' << i << ',' << state.counts[i] << '\n';
            }
        }
    }
}

}  // namespace gwflow
