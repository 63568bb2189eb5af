#pragma once

// Experiments comparing the discrete flows with their continuum limits.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gwflow/genfun.hpp"
#include "gwflow/limit_semigroup.hpp"
#include "gwflow/measures.hpp"
#include "gwflow/mechanisms.hpp"

namespace gwflow {

struct RungStats {
    int k = 0;
    double estimate = 0.0;
    double standard_error = 0.0;
    double oracle = 0.0;
    double gap = 0.0;
    double allowance = 0.0;
    bool pass = true;
};

struct Verdict {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ExperimentResult {
    std::string tag;
    std::vector<int> ladder;
    std::vector<RungStats> rungs;
    std::vector<Verdict> verdicts;
    /// Auxiliary scalar outputs (sample means, bounds, counts).
    std::vector<std::pair<std::string, double>> extras;
    double wall_clock_seconds = 0.0;

    [[nodiscard]] bool passed() const noexcept;
    [[nodiscard]] const Verdict* verdict(const std::string& name) const noexcept;
    [[nodiscard]] double extra(const std::string& name) const;
};

/// One row per rung: k,estimate,standard_error,oracle,gap,allowance,pass.
void write_result_csv(std::ostream& out, const ExperimentResult& result);

using TestFunction = std::function<double(double)>;

/// f(x) = Σ_{i : a_i >= x} λ_i, the encoding of Σ_i λ_i Y(a_i) as <Y, f>.
[[nodiscard]] TestFunction step_test_function(std::vector<double> points, std::vector<double> weights);

struct LadderOptions {
    double final_bound = 5e-3;
    /// Consecutive gaps may grow by at most this fraction.
    double slack = 0.1;
    CumulantSolverOptions solver{};
};

[[nodiscard]] ExperimentResult cumulant_convergence(const BranchingMechanism& mech, std::span<const int> ladder,
                                                    const GammaRule& gamma, double t, double lambda,
                                                    const LadderOptions& opts = {});

struct MonteCarloOptions {
    std::size_t replicates = 10000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    /// Bias allowance b(k) = bias_coefficient / k.
    double bias_coefficient = 2.0;
    double z_score = 3.0;
    /// Oracle grid is the lattice refined by this factor.
    int oracle_refinement = 4;
    double delta_tail = kDefaultTailMass;
    std::uint64_t cap = (std::uint64_t{1} << 62) - 1;
    CumulantSolverOptions solver{};
};

/// Either an x-dependent local field (independent flow) or an admissible
/// family (interactive flow).
using ModelSpec = std::variant<MechanismField, AdmissibleFamily>;

[[nodiscard]] ExperimentResult mc_laplace(const ModelSpec& model, const StepMeasure& init, const TestFunction& f,
                                          double t, int k, const GammaRule& gamma,
                                          const MonteCarloOptions& opts);

[[nodiscard]] ExperimentResult mc_laplace_independent(const MechanismField& field, const StepMeasure& init,
                                                      const TestFunction& f, double t, int k,
                                                      const GammaRule& gamma, const MonteCarloOptions& opts);

[[nodiscard]] ExperimentResult mc_laplace_interactive(const AdmissibleFamily& family, const StepMeasure& init,
                                                      const TestFunction& f, double t, int k,
                                                      const GammaRule& gamma, const MonteCarloOptions& opts);

struct GeneratorOptions {
    double final_relative_bound = 0.05;
    /// The limit Ψ is evaluated on the lattice of this many times the largest k.
    int reference_refinement = 8;
};

/// Exact L_k e^{-<ν_k,f>} from the one-step transition law against
/// L e^{-<ν,f>} = e^{-<ν,f>} [<ν, φ_0(f)> - <ν, Ψ(·,f)>]. ν must sit on every
/// lattice of the ladder with k-integral masses.
[[nodiscard]] ExperimentResult generator_gap(const AdmissibleFamily& family, const StepMeasure& nu,
                                             const TestFunction& f, std::span<const int> ladder,
                                             const GammaRule& gamma, const GeneratorOptions& opts = {});

/// Exact L_k e^{-<ν,f>} for one rung (log-domain product over sites).
[[nodiscard]] double discrete_generator(const AdmissibleFamily& family, std::span<const std::uint64_t> counts,
                                        const TestFunction& f, int k, double gamma_k);

/// L e^{-<ν,f>} for the limiting nonlocal superprocess.
[[nodiscard]] double limit_generator(const AdmissibleFamily& family, const StepMeasure& nu, const TestFunction& f,
                                     int reference_k);

/// Joint Laplace transform of (Y_t(a_1), ..., Y_t(a_n)) with a_n = a.
[[nodiscard]] ExperimentResult fdd_flow(const ModelSpec& model, const StepMeasure& init,
                                        std::span<const double> points, std::span<const double> weights, double t,
                                        int k, const GammaRule& gamma, const MonteCarloOptions& opts);

/// Runs both flows with the same seeds for a ψ ≡ 0 family and compares every
/// snapshot bit for bit.
[[nodiscard]] ExperimentResult degeneration_check(const BranchingMechanism& phi0, const StepMeasure& init,
                                                  double a, double t, int k, const GammaRule& gamma,
                                                  const MonteCarloOptions& opts);

/// V_t f(a) from the nonlocal solver against f(a) exp(t ∫_0^a h_θ dθ), valid
/// when φ_0 ≡ 0 and n_θ ≡ 0.
[[nodiscard]] ExperimentResult nonlocal_endpoint(const AdmissibleFamily& family, double t, double f_value,
                                                 double tolerance = 1e-4, const CumulantSolverOptions& solver = {});

/// Solver output against the analytic cumulant.
[[nodiscard]] ExperimentResult closed_form_check(const BranchingMechanism& mech, double t, double lambda,
                                                 double tolerance = 1e-6, const CumulantSolverOptions& solver = {});


[[nodiscard]] ExperimentResult condition_3a_audit(const MechanismField& target, std::span<const int> ladder,
                                                  const GammaRule& gamma, std::span<const double> z_grid);

struct MetricAuditOptions {
    double a = 1.0;
    int lattice_k = 20;
    std::size_t family_size = 32;
    std::size_t fuzz_triples = 1000;
    std::size_t corpus_size = 100;
    double delta = 0.1;
    std::uint64_t seed = 0;
};

/// Symmetry and triangle inequality of ρ on random step measures, and the
/// separation bound on a random corpus around a fixed ν.
[[nodiscard]] ExperimentResult metric_audit(const MetricAuditOptions& opts);

}  // namespace gwflow
