#include "gwflow/convergence_lab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "gwflow/discrete_flow.hpp"
#include "gwflow/errors.hpp"
#include "gwflow/rng.hpp"

namespace gwflow {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Neumaier-compensated sum of x_r - x_0, so that identical samples give
// their common value back exactly.
struct SampleSummary {
    double mean = 0.0;
    double standard_error = 0.0;
};

SampleSummary summarize(std::span<const double> xs) {
    if (xs.empty()) {
        return {};
    }
    const double origin = xs.front();
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        const double d = x - origin;
        const double t = sum + d;
        comp += std::abs(sum) >= std::abs(d) ? (sum - t) + d : (d - t) + sum;
        sum = t;
    }
    const double n = static_cast<double>(xs.size());
    const double shift = (sum + comp) / n;
    double ss = 0.0, ss_comp = 0.0;
    for (double x : xs) {
        const double d = (x - origin) - shift;
        const double term = d * d;
        const double t = ss + term;
        ss_comp += ss >= term ? (ss - t) + term : (term - t) + ss;
        ss = t;
    }
    SampleSummary out;
    out.mean = shift == 0.0 ? origin : origin + shift;
    out.standard_error = xs.size() > 1 ? std::sqrt((ss + ss_comp) / (n - 1.0) / n) : 0.0;
    return out;
}

void check_ladder(std::span<const int> ladder) {
    if (ladder.empty()) {
        throw DomainError("k-ladder must not be empty");
    }
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        if (ladder[i] < 1 || (i > 0 && ladder[i] <= ladder[i - 1])) {
            throw DomainError("k-ladder must be strictly increasing positive integers");
        }
    }
}

double model_a(const ModelSpec& model) {
    return std::visit([](const auto& m) { return m.grid().a(); }, model);
}

using AnyFlow = std::variant<IndependentFlow, InteractiveFlow>;

AnyFlow build_flow(const ModelSpec& model, int k, double gamma, double delta_tail) {
    if (const auto* field = std::get_if<MechanismField>(&model)) {
        return IndependentFlow::from_field(*field, k, gamma, delta_tail);
    }
    return InteractiveFlow::from_family(std::get<AdmissibleFamily>(model), k, gamma, delta_tail);
}

// E[X_n] under the first-moment recursion of either flow.
std::vector<double> expected_counts(const AnyFlow& flow, std::span<const std::uint64_t> init, std::size_t n) {
    std::vector<double> x(init.begin(), init.end());
    if (const auto* ind = std::get_if<IndependentFlow>(&flow)) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] *= std::pow(ind->pgf(i).mean(), static_cast<double>(n));
        }
        return x;
    }
    const auto& inter = std::get<InteractiveFlow>(flow);
    std::vector<double> g_mean(x.size()), h_mean(x.size(), 0.0);
    for (std::size_t m = 0; m < x.size(); ++m) {
        g_mean[m] = inter.composite(m).mean();
        if (m > 0) {
            h_mean[m] = inter.h(m).mean();
        }
    }
    for (std::size_t step = 0; step < n; ++step) {
        std::vector<double> next(x.size());
        double below = 0.0;
        for (std::size_t m = 0; m < x.size(); ++m) {
            next[m] = x[m] * g_mean[m] + below * h_mean[m];
            below += x[m];
        }
        x = std::move(next);
    }
    return x;
}

struct ReplicateSample {
    double functional = 0.0;
    double mass = 0.0;
    bool monotone = true;
};

using Evaluate = std::function<ReplicateSample(const FlowState&)>;

bool cumulative_monotone(const FlowTrajectory& traj, double a) {
    for (const auto& state : traj.snapshots) {
        double previous = 0.0;
        double running = 0.0;
        const std::size_t n = std::min(state.counts.size(), site_count(state.k, a));
        for (std::size_t i = 0; i < n; ++i) {
            running += static_cast<double>(state.counts[i]) / state.k;
            if (running < previous) {
                return false;
            }
            previous = running;
        }
    }
    return true;
}

std::vector<ReplicateSample> run_replicates(const AnyFlow& flow, std::span<const std::uint64_t> init,
                                            std::size_t generations, double a, const MonteCarloOptions& opts,
                                            const Evaluate& evaluate) {
    std::vector<ReplicateSample> samples(opts.replicates);
    const unsigned workers =
        static_cast<unsigned>(std::clamp<std::size_t>(opts.workers, 1, std::max<std::size_t>(opts.replicates, 1)));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](unsigned w) {
        try {
            for (std::size_t r = w; r < opts.replicates; r += workers) {
                RunControl run;
                run.master_seed = opts.seed;
                run.replicate = r;
                run.generations = generations;
                run.cap = opts.cap;
                auto traj = std::visit([&](const auto& f) { return f.simulate(init, run); }, flow);
                auto sample = evaluate(traj.snapshots.back());
                sample.monotone = sample.monotone && cumulative_monotone(traj, a);
                samples[r] = sample;
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) {
                failure = std::current_exception();
            }
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            threads.emplace_back(work, w);
        }
        for (auto& th : threads) {
            th.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return samples;
}

std::vector<double> lattice_values(const TestFunction& f, int k, std::size_t sites) {
    std::vector<double> values(sites);
    for (std::size_t i = 0; i < sites; ++i) {
        values[i] = f(static_cast<double>(i) / k);
        if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
            throw DomainError("Laplace test functions must be finite and nonnegative");
        }
    }
    return values;
}

FunctionOnGrid tabulate(const TestFunction& f, GridPtr grid) {
    std::vector<double> values;
    values.reserve(grid->size());
    for (double x : grid->nodes()) {
        values.push_back(f(x));
    }
    return {std::move(grid), std::move(values)};
}

double laplace_oracle(const ModelSpec& model, const StepMeasure& init, const TestFunction& f, double t, int k,
                      const MonteCarloOptions& opts) {
    const double a = model_a(model);
    auto grid = std::make_shared<const Grid>(Grid::lattice(k * std::max(opts.oracle_refinement, 1), a));
    const auto fg = tabulate(f, grid);
    if (const auto* field = std::get_if<MechanismField>(&model)) {
        return laplace_functional(init, solve_cumulant_field(*field, t, fg, opts.solver));
    }
    return laplace_functional(init, solve_nonlocal_cumulant(std::get<AdmissibleFamily>(model), t, fg, opts.solver));
}

double lattice_mass(std::span<const std::uint64_t> counts, int k) {
    double sum = 0.0;
    for (auto c : counts) {
        sum += static_cast<double>(c) / k;
    }
    return sum;
}

struct MonteCarloSetup {
    AnyFlow flow;
    std::vector<std::uint64_t> init;
    std::size_t generations;
    double gamma;
};

MonteCarloSetup setup(const ModelSpec& model, const StepMeasure& init, double t, int k, const GammaRule& gamma,
                      const MonteCarloOptions& opts) {
    if (opts.replicates < 1) {
        throw DomainError("Monte Carlo needs at least one replicate");
    }
    if (std::abs(init.a() - model_a(model)) > 1e-12 * std::max(1.0, init.a())) {
        throw DomainError("initial measure and model live on different domains");
    }
    const double g = gamma(k);
    auto counts = lattice_counts(init, k);
    return {build_flow(model, k, g, opts.delta_tail), std::move(counts), generations_for(g, t), g};
}

// Common tail of the Monte Carlo experiments: Laplace band, first moment,
// flow monotonicity.
ExperimentResult finish_mc(std::string tag, int k, const MonteCarloSetup& s, std::span<const ReplicateSample> samples,
                           double oracle, const MonteCarloOptions& opts, Clock::time_point start) {
    std::vector<double> functional, mass;
    functional.reserve(samples.size());
    mass.reserve(samples.size());
    bool monotone = true;
    for (const auto& sample : samples) {
        functional.push_back(sample.functional);
        mass.push_back(sample.mass);
        monotone = monotone && sample.monotone;
    }
    const auto f_stats = summarize(functional);
    const auto m_stats = summarize(mass);
    const auto expected = expected_counts(s.flow, s.init, s.generations);
    double expected_mass = 0.0;
    for (double x : expected) {
        expected_mass += x / k;
    }

    ExperimentResult result;
    result.tag = std::move(tag);
    result.ladder = {k};
    RungStats rung;
    rung.k = k;
    rung.estimate = f_stats.mean;
    rung.standard_error = f_stats.standard_error;
    rung.oracle = oracle;
    rung.gap = std::abs(f_stats.mean - oracle);
    rung.allowance = opts.z_score * f_stats.standard_error + opts.bias_coefficient / k;
    rung.pass = rung.gap <= rung.allowance;
    result.rungs.push_back(rung);

    std::ostringstream laplace;
    laplace << std::setprecision(10) << "|" << rung.estimate << " - " << oracle << "| = " << rung.gap
            << " vs allowance " << rung.allowance;
    result.verdicts.push_back({"laplace", rung.pass, laplace.str()});

    const double mass_gap = std::abs(m_stats.mean - expected_mass);
    const double mass_allowance = opts.z_score * m_stats.standard_error + 1e-12 * std::max(1.0, expected_mass);
    std::ostringstream moment;
    moment << std::setprecision(10) << "mean mass " << m_stats.mean << " vs " << expected_mass << " (SE "
           << m_stats.standard_error << ")";
    result.verdicts.push_back({"first_moment", mass_gap <= mass_allowance, moment.str()});
    result.verdicts.push_back(
        {"flow_monotone", monotone, monotone ? "cumulative functions nondecreasing in every replicate" : "violated"});

    result.extras = {{"replicates", static_cast<double>(samples.size())},
                     {"generations", static_cast<double>(s.generations)},
                     {"gamma", s.gamma},
                     {"sites", static_cast<double>(s.init.size())},
                     {"mass_mean", m_stats.mean},
                     {"mass_standard_error", m_stats.standard_error},
                     {"expected_mass", expected_mass},
                     {"initial_mass", lattice_mass(s.init, k)}};
    result.wall_clock_seconds = seconds_since(start);
    return result;
}

}  // namespace

bool ExperimentResult::passed() const noexcept {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

const Verdict* ExperimentResult::verdict(const std::string& name) const noexcept {
    for (const auto& v : verdicts) {
        if (v.name == name) {
            return &v;
        }
    }
    return nullptr;
}

double ExperimentResult::extra(const std::string& name) const {
    for (const auto& [key, value] : extras) {
        if (key == name) {
            return value;
        }
    }
    throw DomainError("experiment has no output named " + name);
}

void write_result_csv(std::ostream& out, const ExperimentResult& result) {
    const auto old = out.precision(17);
    out << "k,estimate,standard_error,oracle,gap,allowance,pass\n";
    for (const auto& r : result.rungs) {
        out << r.k << ',' << r.estimate << ',' << r.standard_error << ',' << r.oracle << ',' << r.gap << ','
            << r.allowance << ',' << (r.pass ? "true" : "false") << '\n';
    }
    out.precision(old);
}

TestFunction step_test_function(std::vector<double> points, std::vector<double> weights) {
    if (points.empty() || points.size() != weights.size()) {
        throw DomainError("step test function needs matching, nonempty points and weights");
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(weights[i] >= 0.0) || !(points[i] >= 0.0) || (i > 0 && !(points[i] > points[i - 1]))) {
            throw DomainError("step test function needs increasing points and nonnegative weights");
        }
    }
    return [points = std::move(points), weights = std::move(weights)](double x) {
        double sum = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i] >= x - 1e-12 * std::max(1.0, std::abs(x))) {
                sum += weights[i];
            }
        }
        return sum;
    };
}

ExperimentResult cumulant_convergence(const BranchingMechanism& mech, std::span<const int> ladder,
                                      const GammaRule& gamma, double t, double lambda, const LadderOptions& opts) {
    const auto start = Clock::now();
    check_ladder(ladder);
    ExperimentResult result;
    result.tag = "cumulant_convergence";
    result.ladder.assign(ladder.begin(), ladder.end());
    const double oracle = solve_cumulant(mech, t, lambda, opts.solver);
    for (int k : ladder) {
        const double g = gamma(k);
        const Pgf pgf = build_local_pgf(mech, k, g);
        RungStats rung;
        rung.k = k;
        rung.estimate = discrete_cumulant(pgf, k, g, t, lambda);
        rung.oracle = oracle;
        rung.gap = std::abs(rung.estimate - oracle);
        rung.allowance = opts.final_bound;
        rung.pass = true;
        result.rungs.push_back(rung);
    }
    result.rungs.back().pass = result.rungs.back().gap <= opts.final_bound;

    bool monotone = true;
    for (std::size_t r = 1; r < result.rungs.size(); ++r) {
        monotone = monotone && result.rungs[r].gap <= (1.0 + opts.slack) * result.rungs[r - 1].gap;
    }
    const double first = result.rungs.front().gap;
    const double last = result.rungs.back().gap;
    std::ostringstream gaps;
    gaps << std::setprecision(6) << "gaps";
    for (const auto& r : result.rungs) {
        gaps << " k=" << r.k << ":" << r.gap;
    }
    result.verdicts.push_back({"nonincreasing", monotone, gaps.str()});
    std::ostringstream fin;
    fin << std::setprecision(6) << "final gap " << last << " vs bound " << opts.final_bound;
    result.verdicts.push_back({"final_gap", last <= opts.final_bound, fin.str()});
    result.verdicts.push_back(
        {"ladder_sanity", last < first || (first == 0.0 && last == 0.0), "largest-k gap below smallest-k gap"});
    result.extras = {{"oracle", oracle}, {"t", t}, {"lambda", lambda}};
    result.wall_clock_seconds = seconds_since(start);
    return result;
}

ExperimentResult mc_laplace(const ModelSpec& model, const StepMeasure& init, const TestFunction& f, double t, int k,
                            const GammaRule& gamma, const MonteCarloOptions& opts) {
    const auto start = Clock::now();
    const double a = model_a(model);
    const auto s = setup(model, init, t, k, gamma, opts);
    const auto fk = lattice_values(f, k, s.init.size());
    const auto samples = run_replicates(s.flow, s.init, s.generations, a, opts, [&](const FlowState& state) {
        ReplicateSample sample;
        double pairing = 0.0;
        for (std::size_t i = 0; i < state.counts.size(); ++i) {
            const double y = static_cast<double>(state.counts[i]) / k;
            pairing += y * fk[i];
            sample.mass += y;
        }
        sample.functional = std::exp(-pairing);
        return sample;
    });
    const double oracle = laplace_oracle(model, init, f, t, k, opts);
    const bool interactive = std::holds_alternative<AdmissibleFamily>(model);
    return finish_mc(interactive ? "mc_laplace_interactive" : "mc_laplace_independent", k, s, samples, oracle, opts,
                     start);
}

ExperimentResult mc_laplace_independent(const MechanismField& field, const StepMeasure& init, const TestFunction& f,
                                        double t, int k, const GammaRule& gamma, const MonteCarloOptions& opts) {
    return mc_laplace(ModelSpec{field}, init, f, t, k, gamma, opts);
}

ExperimentResult mc_laplace_interactive(const AdmissibleFamily& family, const StepMeasure& init,
                                        const TestFunction& f, double t, int k, const GammaRule& gamma,
                                        const MonteCarloOptions& opts) {
    return mc_laplace(ModelSpec{family}, init, f, t, k, gamma, opts);
}

ExperimentResult fdd_flow(const ModelSpec& model, const StepMeasure& init, std::span<const double> points,
                          std::span<const double> weights, double t, int k, const GammaRule& gamma,
                          const MonteCarloOptions& opts) {
    const auto start = Clock::now();
    const double a = model_a(model);
    if (points.empty() || std::abs(points.back() - a) > 1e-12 * std::max(1.0, a)) {
        throw DomainError("the last finite-dimensional point must be a");
    }
    const auto f = step_test_function({points.begin(), points.end()}, {weights.begin(), weights.end()});
    const auto s = setup(model, init, t, k, gamma, opts);
    std::vector<std::size_t> last_site;
    for (double p : points) {
        last_site.push_back(std::min(site_count(k, p), s.init.size()) - 1);
    }
    const auto samples = run_replicates(s.flow, s.init, s.generations, a, opts, [&](const FlowState& state) {
        ReplicateSample sample;
        double running = 0.0;
        double pairing = 0.0;
        double previous = -1.0;
        std::size_t next = 0;
        for (std::size_t i = 0; i < state.counts.size() && next < last_site.size(); ++i) {
            running += static_cast<double>(state.counts[i]) / k;
            while (next < last_site.size() && last_site[next] == i) {
                // Y_t(a_1) <= Y_t(a_2) <= ... along the flow.
                sample.monotone = sample.monotone && running >= previous;
                previous = running;
                pairing += weights[next] * running;
                ++next;
            }
        }
        sample.mass = running;
        sample.functional = std::exp(-pairing);
        return sample;
    });
    const double oracle = laplace_oracle(model, init, f, t, k, opts);
    auto result = finish_mc("fdd_flow", k, s, samples, oracle, opts, start);
    result.extras.push_back({"points", static_cast<double>(points.size())});
    return result;
}

ExperimentResult degeneration_check(const BranchingMechanism& phi0, const StepMeasure& init, double a, double t,
                                    int k, const GammaRule& gamma, const MonteCarloOptions& opts) {
    const auto start = Clock::now();
    auto grid = std::make_shared<const Grid>(Grid::lattice(k, a));
    const auto family = AdmissibleFamily::local_only(phi0, grid);
    const auto field = MechanismField::uniform(grid, phi0);
    const double g = gamma(k);
    const auto independent = IndependentFlow::from_field(field, k, g, opts.delta_tail);
    const auto interactive = InteractiveFlow::from_family(family, k, g, opts.delta_tail);
    const auto counts = lattice_counts(init, k);
    RunControl run;
    run.master_seed = opts.seed;
    run.generations = generations_for(g, t);
    run.cap = opts.cap;
    for (std::size_t n = 0; n <= run.generations; ++n) {
        run.record.push_back(n);
    }
    std::size_t mismatches = 0;
    std::size_t compared = 0;
    bool monotone = true;
    for (std::size_t r = 0; r < opts.replicates; ++r) {
        run.replicate = r;
        const auto x = independent.simulate(counts, run);
        const auto y = interactive.simulate(counts, run);
        monotone = monotone && cumulative_monotone(x, a) && cumulative_monotone(y, a);
        for (std::size_t j = 0; j < x.snapshots.size(); ++j) {
            ++compared;
            if (j >= y.snapshots.size() || x.snapshots[j].counts != y.snapshots[j].counts) {
                ++mismatches;
            }
        }
        if (x.snapshots.size() != y.snapshots.size()) {
            ++mismatches;
        }
    }
    ExperimentResult result;
    result.tag = "degeneration";
    result.ladder = {k};
    RungStats rung;
    rung.k = k;
    rung.estimate = static_cast<double>(mismatches);
    rung.pass = mismatches == 0;
    result.rungs.push_back(rung);
    std::ostringstream detail;
    detail << mismatches << " mismatching snapshots out of " << compared;
    result.verdicts.push_back({"bit_identical", mismatches == 0, detail.str()});
    result.verdicts.push_back({"flow_monotone", monotone, "cumulative functions nondecreasing"});
    result.extras = {{"replicates", static_cast<double>(opts.replicates)},
                     {"generations", static_cast<double>(run.generations)},
                     {"snapshots_compared", static_cast<double>(compared)}};
    result.wall_clock_seconds = seconds_since(start);
    return result;
}

double discrete_generator(const AdmissibleFamily& family, std::span<const std::uint64_t> counts,
                          const TestFunction& f, int k, double gamma_k) {
    const std::size_t sites = counts.size();
    if (sites != site_count(k, family.a())) {
        throw DomainError("site counts do not match the lattice of [0, a]");
    }
    const Pgf g0 = build_local_pgf(family.phi0(), k, gamma_k);
    std::vector<Pgf> h(sites);
    for (std::size_t m = 1; m < sites; ++m) {
        h[m] = build_nonlocal_pgf(family.kernel_at(std::min(static_cast<double>(m) / k, family.a())), k, gamma_k);
    }
    const auto fk = lattice_values(f, k, sites);
    // log h_j(s) and log g_0(s) + f/k from complements, so nothing cancels.
    auto log_h = [&](std::size_t j, double w) { return std::log1p(-h[j].complement(w)); };
    double pairing = 0.0;
    double exponent = 0.0;  // α_k + β_k
    std::uint64_t below = 0;
    for (std::size_t i = 0; i < sites; ++i) {
        pairing += static_cast<double>(counts[i]) * fk[i] / k;
        const double w = one_minus_exp(fk[i] / k);
        const double s = 1.0 - w;
        if (counts[i] > 0) {
            double log_g = s > 0.0 ? std::log1p(g0.excess(w) / s) : std::log(g0(0.0));
            for (std::size_t j = 1; j <= i; ++j) {
                log_g += log_h(j, w);
            }
            exponent += static_cast<double>(counts[i]) * log_g;
        }
        if (i > 0 && below > 0) {
            exponent += static_cast<double>(below) * log_h(i, w);
        }
        below += counts[i];
    }
    return gamma_k * std::exp(-pairing) * std::expm1(exponent);
}

double limit_generator(const AdmissibleFamily& family, const StepMeasure& nu, const TestFunction& f,
                       int reference_k) {
    auto grid = std::make_shared<const Grid>(Grid::lattice(reference_k, family.a()));
    const auto on_grid = family.resample(grid);
    const auto fg = tabulate(f, grid);
    double pairing = 0.0;
    double bracket = 0.0;
    for (const auto& atom : nu.atoms()) {
        const auto index = grid->find(atom.location);
        if (!index) {
            throw DomainError("generator measure is not on the reference lattice");
        }
        const double value = fg[*index];
        pairing += atom.mass * value;
        bracket += atom.mass * (family.phi0()(value) - eval_nonlocal_psi(on_grid, *index, fg.values()));
    }
    return std::exp(-pairing) * bracket;
}

ExperimentResult generator_gap(const AdmissibleFamily& family, const StepMeasure& nu, const TestFunction& f,
                               std::span<const int> ladder, const GammaRule& gamma, const GeneratorOptions& opts) {
    const auto start = Clock::now();
    check_ladder(ladder);
    ExperimentResult result;
    result.tag = "generator_gap";
    result.ladder.assign(ladder.begin(), ladder.end());
    const double limit = limit_generator(family, nu, f, ladder.back() * std::max(opts.reference_refinement, 1));
    for (int k : ladder) {
        RungStats rung;
        rung.k = k;
        rung.estimate = discrete_generator(family, lattice_counts(nu, k), f, k, gamma(k));
        rung.oracle = limit;
        rung.gap = std::abs(rung.estimate - limit);
        rung.allowance = opts.final_relative_bound * std::abs(limit);
        rung.pass = true;
        result.rungs.push_back(rung);
    }
    auto& last = result.rungs.back();
    const double relative = limit != 0.0 ? last.gap / std::abs(limit) : last.gap;
    last.pass = limit != 0.0 ? relative <= opts.final_relative_bound : last.gap == 0.0;

    bool decreasing = true;
    bool all_zero = true;
    for (std::size_t r = 0; r < result.rungs.size(); ++r) {
        all_zero = all_zero && result.rungs[r].gap == 0.0;
        if (r > 0) {
            decreasing = decreasing && result.rungs[r].gap < result.rungs[r - 1].gap;
        }
    }
    std::ostringstream gaps;
    gaps << std::setprecision(6) << "gaps";
    for (const auto& r : result.rungs) {
        gaps << " k=" << r.k << ":" << r.gap;
    }
    result.verdicts.push_back({"decreasing", decreasing || all_zero, gaps.str()});
    std::ostringstream fin;
    fin << std::setprecision(6) << "relative gap " << relative << " at k=" << last.k << " vs "
        << opts.final_relative_bound;
    result.verdicts.push_back({"final_relative_gap", last.pass, fin.str()});
    result.extras = {{"limit", limit}, {"final_relative_gap", relative}};
    result.wall_clock_seconds = seconds_since(start);
    return result;
}

ExperimentResult nonlocal_endpoint(const AdmissibleFamily& family, double t, double f_value, double tolerance,
                                   const CumulantSolverOptions& solver) {
    const auto start = Clock::now();
    const auto& phi0 = family.phi0();
    if (phi0.b() != 0.0 || phi0.sigma2() != 0.0 || !phi0.jumps().is_empty()) {
        throw DomainError("the endpoint closed form needs phi_0 = 0");
    }
    const auto& grid = family.grid();
    double rate = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& kernel = family.kernel_node(i);
        if (std::any_of(kernel.atoms.begin(), kernel.atoms.end(), [](const Atom& a) { return a.mass != 0.0; })) {
            throw DomainError("the endpoint closed form needs n_theta = 0");
        }
        rate += grid.trapezoid_weights()[i] * kernel.h;
    }
    const auto f = FunctionOnGrid::constant(family.grid_ptr(), f_value);
    const auto v = solve_nonlocal_cumulant(family, t, f, solver);
    ExperimentResult result;
    result.tag = "nonlocal_endpoint";
    RungStats rung;
    rung.estimate = v[v.size() - 1];
    rung.oracle = f_value * std::exp(rate * t);
    rung.gap = std::abs(rung.estimate - rung.oracle);
    rung.allowance = tolerance;
    rung.pass = rung.gap <= tolerance;
    result.rungs.push_back(rung);
    std::ostringstream detail;
    detail << std::setprecision(12) << "V_t f(a) = " << rung.estimate << ", f(a) e^{t int h} = " << rung.oracle;
    result.verdicts.push_back({"endpoint", rung.pass, detail.str()});
    result.extras = {{"t", t}, {"rate", rate}};
    result.wall_clock_seconds = seconds_since(start);
    return result;
}

ExperimentResult closed_form_check(const BranchingMechanism& mech, double t, double lambda, double tolerance,
                                   const CumulantSolverOptions& solver) {
    const auto start = Clock::now();
    const auto exact = closed_form_cumulant(mech, t, lambda);
    if (!exact) {
        throw DomainError("no closed form is known for this mechanism");
    }
    ExperimentResult result;
    result.tag = "closed_form";
    RungStats rung;
    rung.estimate = solve_cumulant(mech, t, lambda, solver);
    rung.oracle = *exact;
    rung.gap = std::abs(rung.estimate - rung.oracle);
    rung.allowance = tolerance;
    rung.pass = rung.gap <= tolerance;
    result.rungs.push_back(rung);
    std::ostringstream detail;
    detail << std::setprecision(12) << "v = " << rung.estimate << " vs " << rung.oracle;
    result.verdicts.push_back({"closed_form", rung.pass, detail.str()});
    result.wall_clock_seconds = seconds_since(start);
    return result;
}

ExperimentResult condition_3a_audit(const MechanismField& target, std::span<const int> ladder,
                                    const GammaRule& gamma, std::span<const double> z_grid) {
    const auto start = Clock::now();
    check_ladder(ladder);
    const auto report = check_condition_3a(target, ladder, gamma, z_grid);
    ExperimentResult result;
    result.tag = "condition_3a";
    result.ladder.assign(ladder.begin(), ladder.end());
    for (std::size_t r = 0; r < ladder.size(); ++r) {
        RungStats rung;
        rung.k = ladder[r];
        rung.estimate = report.sup_gap[r];
        rung.gap = report.sup_gap[r];
        rung.allowance = report.lipschitz[r];
        result.rungs.push_back(rung);
        result.extras.push_back({"lipschitz_k" + std::to_string(ladder[r]), report.lipschitz[r]});
    }
    result.extras.push_back({"target_lipschitz", report.target_lipschitz});
    result.verdicts.push_back({"condition_3a", report.pass, report.message});
    result.wall_clock_seconds = seconds_since(start);
    return result;
}

namespace {

StepMeasure random_measure(PhiloxStream& rng, double a, int k) {
    const std::size_t sites = site_count(k, a);
    const auto atoms = 1 + static_cast<std::size_t>(rng.uniform() * 5.0);
    std::vector<MeasureAtom> out;
    for (std::size_t j = 0; j < atoms; ++j) {
        const auto site = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(sites)), sites - 1);
        out.push_back({static_cast<double>(site) / k, 2.0 * rng.uniform()});
    }
    return {a, std::move(out)};
}

}  // namespace

ExperimentResult metric_audit(const MetricAuditOptions& opts) {
    const auto start = Clock::now();
    auto grid = std::make_shared<const Grid>(Grid::lattice(opts.lattice_k, opts.a));
    const auto family = default_family(opts.a, grid, opts.family_size);
    const StreamFactory streams(opts.seed, 0);
    auto rng = streams.stream(0, 0, stream_tag::kInitial);

    std::size_t asymmetric = 0, triangle = 0, bounded = 0;
    double worst_triangle = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < opts.fuzz_triples; ++n) {
        const auto mu = random_measure(rng, opts.a, opts.lattice_k);
        const auto nu = random_measure(rng, opts.a, opts.lattice_k);
        const auto la = random_measure(rng, opts.a, opts.lattice_k);
        const double mn = rho(mu, nu, family);
        const double nl = rho(nu, la, family);
        const double ml = rho(mu, la, family);
        if (mn != rho(nu, mu, family) || rho(mu, mu, family) != 0.0) {
            ++asymmetric;
        }
        worst_triangle = std::max(worst_triangle, ml - (mn + nl));
        // ρ sums at most 32 rounded terms; 1e-12 covers their rounding.
        if (ml > mn + nl + 1e-12) {
            ++triangle;
        }
        if (mn > 2.0) {
            ++bounded;
        }
    }

    const auto nu = random_measure(rng, opts.a, opts.lattice_k);
    const auto bound = separation_bound(nu, opts.delta, family);
    std::size_t violations = 0, drawn = 0;
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < opts.corpus_size;) {
        const auto mu = random_measure(rng, opts.a, opts.lattice_k);
        ++drawn;
        if (rho(mu, nu, family) < opts.delta) {
            continue;
        }
        ++n;
        const double gap = separation_gap(mu, nu, family, bound.n0);
        worst_ratio = std::min(worst_ratio, gap / bound.bound);
        if (!(gap >= bound.bound)) {
            ++violations;
        }
    }

    ExperimentResult result;
    result.tag = "metric_audit";
    std::ostringstream sym, tri, sep;
    sym << asymmetric << " failures over " << opts.fuzz_triples << " triples";
    tri << triangle << " failures over " << opts.fuzz_triples << " triples; max excess " << worst_triangle;
    sep << violations << " violations over " << opts.corpus_size << " measures (n0 = " << bound.n0 << ", bound "
        << bound.bound << ", min gap/bound " << worst_ratio << ")";
    result.verdicts.push_back({"symmetry", asymmetric == 0, sym.str()});
    result.verdicts.push_back({"triangle", triangle == 0, tri.str()});
    result.verdicts.push_back({"bounded_by_two", bounded == 0, "rho <= 2"});
    result.verdicts.push_back({"separation", violations == 0, sep.str()});
    result.extras = {{"n0", static_cast<double>(bound.n0)},
                     {"separation_bound", bound.bound},
                     {"min_gap_over_bound", worst_ratio},
                     {"corpus_draws", static_cast<double>(drawn)},
                     {"truncation_bound", family.truncation_bound()}};
    result.wall_clock_seconds = seconds_since(start);
    return result;
}

}  // namespace gwflow
