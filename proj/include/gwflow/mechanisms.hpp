#pragma once

// Local branching mechanisms, admissible families {φ_q} and the nonlocal
// operator Ψ(x, f).
//
//   φ(z)   = b z + σ²z²/2 + ∫ (e^{-zu} - 1 + zu) m(du)
//   ψ_θ(z) = h_θ z + ∫ (1 - e^{-zu}) n_θ(du)
//   φ_q(z) = φ_0(z) - ∫_0^q ψ_θ(z) dθ
//   Ψ(x,f) = ∫ f(x∨θ) h_θ dθ + ∫ dθ ∫ (1 - e^{-u f(x∨θ)}) n_θ(du)

#include <cmath>
#include <optional>
#include <span>
#include <utility>
#include <string>
#include <vector>

#include "gwflow/grid.hpp"

namespace gwflow {

/// e^{-x} - 1 + x without cancellation for small x.
[[nodiscard]] double compensated_exp(double x) noexcept;

/// 1 - e^{-x}.
[[nodiscard]] inline double one_minus_exp(double x) noexcept { return -std::expm1(-x); }

struct Atom {
    double size = 0.0;  ///< jump size u > 0
    double mass = 0.0;  ///< weight w >= 0
};

/// Truncated stable panel. The continuous measure has density
/// scale · u^{-2-alpha} on (0, ∞); its mechanism is
/// scale / unit_power_scale(alpha) · z^{1+alpha}. The panel keeps [eps, cap]
/// split into `nodes` geometric cells, one atom per cell.
struct StablePanel {
    double alpha = 0.5;
    double scale = 1.0;
    double eps = 1e-4;
    double cap = 1e3;
    int nodes = 200;

    /// Scale for which the untruncated mechanism is exactly z^{1+alpha}:
    /// alpha (1 + alpha) / Γ(1 - alpha).
    [[nodiscard]] static double unit_power_scale(double alpha);
};

class JumpMeasure {
public:
    enum class Kind { Empty, Atoms, Stable };

    JumpMeasure() = default;
    static JumpMeasure empty() { return {}; }
    static JumpMeasure atoms(std::vector<Atom> atoms);
    static JumpMeasure stable(const StablePanel& panel);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] bool is_empty() const noexcept { return atoms_.empty(); }
    /// Discretized atoms (the panel's quadrature nodes for Kind::Stable).
    [[nodiscard]] const std::vector<Atom>& support() const noexcept { return atoms_; }
    [[nodiscard]] const std::optional<StablePanel>& panel() const noexcept { return panel_; }

    /// ∫ (u ∧ u²) m(du) of the discretized measure.
    [[nodiscard]] double small_large_moment() const noexcept;
    /// ∫ u m(du).
    [[nodiscard]] double first_moment() const noexcept;

private:
    Kind kind_ = Kind::Empty;
    std::vector<Atom> atoms_;
    std::optional<StablePanel> panel_;
};

class BranchingMechanism {
public:
    BranchingMechanism() = default;
    BranchingMechanism(double b, double sigma2, JumpMeasure jumps = {});

    static BranchingMechanism zero() { return {}; }
    static BranchingMechanism drift(double b) { return {b, 0.0}; }
    static BranchingMechanism feller(double sigma2) { return {0.0, sigma2}; }

    [[nodiscard]] double b() const noexcept { return b_; }
    [[nodiscard]] double sigma2() const noexcept { return sigma2_; }
    [[nodiscard]] const JumpMeasure& jumps() const noexcept { return jumps_; }

    /// φ(z); throws DomainError for z < 0.
    [[nodiscard]] double operator()(double z) const;
    /// φ'(z).
    [[nodiscard]] double derivative(double z) const;

    /// σ² + |b| + ∫ u(1∧u) m(du) + 1, the default constant C in γ_k = C k.
    [[nodiscard]] double default_gamma_constant() const noexcept;

private:
    double b_ = 0.0;
    double sigma2_ = 0.0;
    JumpMeasure jumps_;
};

[[nodiscard]] inline double eval_local(const BranchingMechanism& mech, double z) { return mech(z); }

/// x ↦ φ(x, ·) tabulated on a grid of [0, a], nearest-node lookup.
class MechanismField {
public:
    MechanismField(GridPtr grid, std::vector<BranchingMechanism> mechanisms);
    static MechanismField uniform(GridPtr grid, const BranchingMechanism& mech);

    [[nodiscard]] const Grid& grid() const noexcept { return *grid_; }
    [[nodiscard]] const GridPtr& grid_ptr() const noexcept { return grid_; }
    [[nodiscard]] const BranchingMechanism& at(double x) const;
    [[nodiscard]] const BranchingMechanism& node(std::size_t i) const { return mechs_.at(i); }
    [[nodiscard]] double operator()(double x, double z) const { return at(x)(z); }

private:
    GridPtr grid_;
    std::vector<BranchingMechanism> mechs_;
};

/// ψ_θ at one grid node: drift h_θ and finite atoms n_θ.
struct ImmigrationKernel {
    double h = 0.0;
    std::vector<Atom> atoms;

    [[nodiscard]] double operator()(double z) const;
    /// h + ∫ u n(du).
    [[nodiscard]] double bound() const noexcept;
};

/// φ_0 plus θ ↦ ψ_θ tabulated on a θ-grid of [0, a]. Sign conditions are not
/// enforced at construction; see validate_admissible.
class AdmissibleFamily {
public:
    AdmissibleFamily(BranchingMechanism phi0, GridPtr grid, std::vector<ImmigrationKernel> kernels);

    /// h_θ = h(θ), n_θ = Σ_j w_j(θ) δ_{u_j}, tabulated on `grid`.
    static AdmissibleFamily from_tables(BranchingMechanism phi0, GridPtr grid, const Table& h,
                                        const std::vector<std::pair<double, Table>>& atoms);
    /// ψ ≡ 0.
    static AdmissibleFamily local_only(BranchingMechanism phi0, GridPtr grid);

    [[nodiscard]] const BranchingMechanism& phi0() const noexcept { return phi0_; }
    [[nodiscard]] const Grid& grid() const noexcept { return *grid_; }
    [[nodiscard]] const GridPtr& grid_ptr() const noexcept { return grid_; }
    [[nodiscard]] double a() const noexcept { return grid_->a(); }
    [[nodiscard]] const ImmigrationKernel& kernel_node(std::size_t i) const { return kernels_.at(i); }
    /// Kernel at an arbitrary θ ∈ [0, a]: linear mixture of the neighbouring nodes.
    [[nodiscard]] ImmigrationKernel kernel_at(double theta) const;
    [[nodiscard]] bool is_local() const noexcept;

    /// The same family retabulated on another grid of [0, a].
    [[nodiscard]] AdmissibleFamily resample(GridPtr grid) const;

    /// sup_θ [h_θ + ∫ u n_θ(du)] over the grid.
    [[nodiscard]] double admissibility_bound() const noexcept;

private:
    BranchingMechanism phi0_;
    GridPtr grid_;
    std::vector<ImmigrationKernel> kernels_;
};

[[nodiscard]] double eval_psi(const AdmissibleFamily& family, double theta, double z);
[[nodiscard]] double eval_phi_q(const AdmissibleFamily& family, double q, double z);

/// Ψ(x, f) with x = grid node `x_index`; f shares the family grid.
[[nodiscard]] double eval_nonlocal_psi(const AdmissibleFamily& family, std::size_t x_index,
                                       std::span<const double> f);
[[nodiscard]] double eval_nonlocal_psi(const AdmissibleFamily& family, double x, const FunctionOnGrid& f);

struct AdmissibilityReport {
    double sup_bound = 0.0;
    bool kernels_nonnegative = true;
    std::optional<double> offending_theta;
    bool monotone_in_q = true;
    /// max |Δφ_q/Δq + ψ_q| over the lattice; informational only.
    double difference_quotient_residual = 0.0;
    std::size_t q_points = 0;
    std::size_t z_points = 0;
    bool pass = true;
    std::string message;
};

[[nodiscard]] AdmissibilityReport validate_admissible(const AdmissibleFamily& family,
                                                      std::span<const double> z_grid = {});

}  // namespace gwflow
