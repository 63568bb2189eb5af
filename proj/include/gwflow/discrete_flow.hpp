#pragma once

// Discrete Galton-Watson flows on the sites i = 0..[ka].
//
// Independent flow: each site is its own GW chain with pgf g_i.
// Interactive flow: X_{n+1}(m) = Σ_{j<=X_n(m)} ξ_{n,j}(m) + Σ_{j<=X̄_n(m-1)} η_{n,j}(m)
// with ξ(m) ~ g_m = g_0 h_1 ⋯ h_m and η(m) ~ h_m.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "gwflow/genfun.hpp"
#include "gwflow/measures.hpp"
#include "gwflow/mechanisms.hpp"
#include "gwflow/rng.hpp"

namespace gwflow {

inline constexpr std::uint64_t kDefaultPopulationCap = (std::uint64_t{1} << 62) - 1;

struct FlowState {
    int k = 1;
    double gamma = 1.0;
    std::size_t generation = 0;
    std::vector<std::uint64_t> counts;

    /// X̄(m) = Σ_{i<=m} X(i).
    [[nodiscard]] std::uint64_t cumulative(std::size_t m) const;
    [[nodiscard]] std::uint64_t total() const;
};

enum class FlowModel { Independent, Interactive };

struct FlowTrajectory {
    FlowModel model = FlowModel::Independent;
    std::uint64_t master_seed = 0;
    std::uint64_t replicate = 0;
    std::vector<FlowState> snapshots;  ///< ordered by generation

    [[nodiscard]] const FlowState* find(std::size_t generation) const noexcept;
};

struct RunControl {
    std::uint64_t master_seed = 0;
    std::uint64_t replicate = 0;
    std::size_t generations = 0;
    /// Generations to record (always including 0 and `generations`).
    std::vector<std::size_t> record;
    std::uint64_t cap = kDefaultPopulationCap;
};

/// [γ t], robust to γ t landing a rounding error below an integer.
[[nodiscard]] std::size_t generations_for(double gamma, double t);

/// Number of sites [ka] + 1.
[[nodiscard]] std::size_t site_count(int k, double a);

/// Sum of `count` i.i.d. draws from `table`. Multinomial decomposition over the
/// support (sequential binomials) for large counts, alias draws for small ones.
/// Throws PopulationCapError when the sum exceeds `cap`.
[[nodiscard]] std::uint64_t step_site(std::uint64_t count, const SamplingTable& table, PhiloxStream& rng,
                                      std::uint64_t cap = kDefaultPopulationCap);

class IndependentFlow {
public:
    IndependentFlow(int k, double gamma, std::vector<Pgf> pgfs, double delta_tail = kDefaultTailMass);

    /// g_i built at x = i/k from the field, i = 0..[ka].
    static IndependentFlow from_field(const MechanismField& field, int k, double gamma,
                                      double delta_tail = kDefaultTailMass);

    [[nodiscard]] int k() const noexcept { return k_; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] std::size_t sites() const noexcept { return pgfs_.size(); }
    [[nodiscard]] const Pgf& pgf(std::size_t i) const { return pgfs_.at(i); }
    [[nodiscard]] const SamplingTable& table(std::size_t i) const { return tables_.at(i); }

    [[nodiscard]] FlowTrajectory simulate(std::span<const std::uint64_t> init, const RunControl& run) const;
    /// One generation in place.
    void step(FlowState& state, const StreamFactory& streams, std::uint64_t cap) const;

private:
    int k_;
    double gamma_;
    std::vector<Pgf> pgfs_;
    std::vector<SamplingTable> tables_;
};

class InteractiveFlow {
public:
    /// `h` holds h_1..h_M for sites 1..M (site 0 uses g_0 only, h_0 ≡ 1).
    InteractiveFlow(int k, double gamma, Pgf g0, std::vector<Pgf> h, double delta_tail = kDefaultTailMass);

    /// g_0 from φ_0, h_m from ψ_{m/k}, m = 1..[ka].
    static InteractiveFlow from_family(const AdmissibleFamily& family, int k, double gamma,
                                       double delta_tail = kDefaultTailMass);

    [[nodiscard]] int k() const noexcept { return k_; }
    [[nodiscard]] double gamma() const noexcept { return gamma_; }
    [[nodiscard]] std::size_t sites() const noexcept { return h_.size() + 1; }
    [[nodiscard]] const Pgf& g0() const noexcept { return g0_; }
    /// h_m, m >= 1.
    [[nodiscard]] const Pgf& h(std::size_t m) const { return h_.at(m - 1); }
    /// g_m = g_0 h_1 ⋯ h_m (view into this flow).
    [[nodiscard]] CompositePgf composite(std::size_t m) const;

    [[nodiscard]] FlowTrajectory simulate(std::span<const std::uint64_t> init, const RunControl& run) const;
    void step(FlowState& state, const StreamFactory& streams, std::uint64_t cap) const;

private:
    int k_;
    double gamma_;
    Pgf g0_;
    std::vector<Pgf> h_;
    SamplingTable g0_table_;
    std::vector<SamplingTable> h_tables_;
};

[[nodiscard]] FlowTrajectory simulate_independent(const IndependentFlow& flow, std::span<const std::uint64_t> init,
                                                  const RunControl& run);
[[nodiscard]] FlowTrajectory simulate_interactive(const InteractiveFlow& flow, std::span<const std::uint64_t> init,
                                                  const RunControl& run);

/// Y_t^{(k)} = k^{-1} Σ_{i<=[ka]} X_{[γt]}(i) δ_{i/k}.
[[nodiscard]] StepMeasure extract_measure(const FlowTrajectory& traj, double t, double a);

/// Site counts x_i = k μ({i/k}); DomainError unless μ lives on the lattice
/// with integral k-multiples.
[[nodiscard]] std::vector<std::uint64_t> lattice_counts(const StepMeasure& mu, int k);

/// Product-law initial condition: independent Poisson(k μ({i/k})) counts.
[[nodiscard]] std::vector<std::uint64_t> poisson_initial_counts(const StepMeasure& mu, int k,
                                                                const StreamFactory& streams);

/// -k log g^{[γt]}(e^{-λ/k}), exact Laplace exponent of one rescaled site.
[[nodiscard]] double discrete_cumulant(const Pgf& g, int k, double gamma, double t, double lambda);

/// CSV columns replicate,generation,site,count.
void write_trajectory_csv(std::ostream& out, std::span<const FlowTrajectory> trajectories, bool header = true);

}  // namespace gwflow
