#pragma once

// Finite measures on [0, a] with finitely many atoms, the metric
// ρ(μ,ν) = Σ_i 2^{-i} (1 ∧ |<μ,h_i> - <ν,h_i>|) over a truncated test family,
// and the strong-separation bound for e_h(ν) = exp(-<ν,h>).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "gwflow/grid.hpp"

namespace gwflow {

struct MeasureAtom {
    double location = 0.0;
    double mass = 0.0;
};

class StepMeasure {
public:
    /// Atoms are sorted and atoms at the same location merged.
    StepMeasure(double a, std::vector<MeasureAtom> atoms);

    static StepMeasure zero(double a) { return {a, {}}; }
    static StepMeasure unit_atom(double a, double x, double mass = 1.0) { return {a, {{x, mass}}}; }
    /// k^{-1} Σ_i counts[i] δ_{i/k}.
    static StepMeasure lattice(int k, std::span<const std::uint64_t> counts, double a);

    [[nodiscard]] double a() const noexcept { return a_; }
    [[nodiscard]] const std::vector<MeasureAtom>& atoms() const noexcept { return atoms_; }
    [[nodiscard]] double total_mass() const noexcept;
    /// μ[0, x] (right-continuous, nondecreasing).
    [[nodiscard]] double cumulative(double x) const noexcept;

private:
    double a_;
    std::vector<MeasureAtom> atoms_;
};

/// <μ, f>; DomainError if an atom is not a node of f's grid.
[[nodiscard]] double integrate(const StepMeasure& mu, const FunctionOnGrid& f);

/// h_0 ≡ 1, h_1, ..., h_{N-1}: strictly positive grid functions with sup <= 1.
class TestFamily {
public:
    explicit TestFamily(std::vector<FunctionOnGrid> members);

    [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
    [[nodiscard]] const FunctionOnGrid& operator[](std::size_t i) const { return members_[i]; }
    [[nodiscard]] const Grid& grid() const { return members_.front().grid(); }
    /// Σ_{i >= N} 2^{-i}: the bias of the truncated ρ.
    [[nodiscard]] double truncation_bound() const noexcept;

private:
    std::vector<FunctionOnGrid> members_;
};

/// h_0 ≡ 1 followed by x/a, (1 + cos(jπx/a))/2, (1 + sin(jπx/a))/2, (x/a)^j, ...
/// each clipped to [floor, 1].
[[nodiscard]] TestFamily default_family(double a, GridPtr grid, std::size_t n, double floor = 0.05);

[[nodiscard]] double rho(const StepMeasure& mu, const StepMeasure& nu, const TestFamily& family);

struct SeparationBound {
    std::size_t n0 = 0;  ///< members h_0..h_{n0} are used
    double bound = 0.0;
};

/// Lower bound on max_{i<=n0} |e_{h_i}(μ) - e_{h_i}(ν)| over all μ with
/// ρ(μ, ν) >= δ: e^{-max_i <ν,h_i>} [(e^{δ/2n0} - 1) ∧ (1 - e^{-δ/2n0})],
/// with n0 the least positive integer such that Σ_{i>n0} 2^{-i} < δ/2.
[[nodiscard]] SeparationBound separation_bound(const StepMeasure& nu, double delta, const TestFamily& family);

/// max_{i<=n0} |e^{-<μ,h_i>} - e^{-<ν,h_i>}|.
[[nodiscard]] double separation_gap(const StepMeasure& mu, const StepMeasure& nu, const TestFamily& family,
                                    std::size_t n0);

/// CSV: a line "# a=<a>", header "location,mass", one row per atom.
void write_measure_csv(std::ostream& out, const StepMeasure& mu);
[[nodiscard]] StepMeasure read_measure_csv(std::istream& in);

}  // namespace gwflow
