#pragma once

// Probability generating functions on [0, 1].
//
// Two representations:
//   explicit coefficients  g(s) = Σ_n p_n s^n
//   excess form            g(s) = s + D(1 - s),
//                          D(w) = Σ_{n>=1} d_n w^n + Σ_j ω_j (e^{-λ_j w} - 1 + λ_j w)
// The excess form is what the mechanism builders produce: g(1) = 1 holds
// structurally, the coefficients of s^n for n >= 2 beyond the polynomial part
// are Poisson-mixture weights ω_j e^{-λ_j} λ_j^n / n! (nonnegative by
// construction), and g(1-w) - (1-w) is evaluated without cancellation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gwflow/mechanisms.hpp"

namespace gwflow {

struct PoissonTerm {
    double weight = 0.0;  ///< ω >= 0
    double rate = 0.0;    ///< λ > 0
};

inline constexpr double kCoefficientTolerance = 1e-10;
inline constexpr double kDefaultTailMass = 1e-12;
inline constexpr std::size_t kDefaultMaxOrder = std::size_t{1} << 20;

class Pgf {
public:
    /// g(s) = s.
    Pgf();

    static Pgf from_coefficients(std::vector<double> p);
    static Pgf identity() { return {}; }
    /// g ≡ 1 (no offspring).
    static Pgf constant_one();
    /// Excess form; `poly` holds d_1, d_2, ... (no constant term).
    static Pgf from_excess(std::vector<double> poly, std::vector<PoissonTerm> mix = {});

    [[nodiscard]] bool is_explicit() const noexcept { return explicit_; }

    /// g(s); DomainError unless 0 <= s <= 1.
    [[nodiscard]] double operator()(double s) const;
    /// g(1-w) - (1-w).
    [[nodiscard]] double excess(double w) const;
    /// 1 - g(1-w).
    [[nodiscard]] double complement(double w) const;
    [[nodiscard]] double derivative(double s) const;
    /// g'(1⁻).
    [[nodiscard]] double mean() const;

    /// Coefficient of s^n.
    [[nodiscard]] double coefficient(std::size_t n) const;
    /// p_0 .. p_order.
    [[nodiscard]] std::vector<double> coefficients(std::size_t order) const;
    /// Σ_{n > order} p_n.
    [[nodiscard]] double tail_mass(std::size_t order) const;
    /// Highest order that is not part of the nonnegative Poisson tail.
    [[nodiscard]] std::size_t structural_order() const noexcept;
    /// Smallest order whose tail mass is <= `tail`, if it is <= max_order.
    [[nodiscard]] std::optional<std::size_t> certified_order(double tail = kDefaultTailMass,
                                                             std::size_t max_order = kDefaultMaxOrder) const;

    /// Throws ValidityError naming the lowest order with a coefficient below -tol.
    void validate(double tol = kCoefficientTolerance) const;

    [[nodiscard]] std::span<const double> explicit_coefficients() const noexcept { return coeffs_; }
    [[nodiscard]] std::span<const double> excess_polynomial() const noexcept { return poly_; }
    [[nodiscard]] std::span<const PoissonTerm> poisson_terms() const noexcept { return mix_; }

private:
    bool explicit_ = false;
    std::vector<double> coeffs_;   // explicit p_n
    std::vector<double> poly_;     // d_1, d_2, ... (excess form only)
    std::vector<PoissonTerm> mix_;
};

/// g^n(s), with g^0(s) = s.
[[nodiscard]] double iterate(const Pgf& g, double s, std::size_t n);
/// 1 - g^n(1-w), iterated in the complement variable.
[[nodiscard]] double iterate_complement(const Pgf& g, double w, std::size_t n);

/// g_0 h_1 ⋯ h_m as a list of factors.
class CompositePgf {
public:
    CompositePgf() = default;
    explicit CompositePgf(std::vector<const Pgf*> factors) : factors_(std::move(factors)) {}

    [[nodiscard]] std::span<const Pgf* const> factors() const noexcept { return factors_; }
    [[nodiscard]] double operator()(double s) const;
    /// log g(s) accumulated factor by factor.
    [[nodiscard]] double log_eval(double s) const;
    [[nodiscard]] double mean() const;

private:
    std::vector<const Pgf*> factors_;
};

using GammaRule = std::function<double(int)>;

/// γ_k = C k.
[[nodiscard]] GammaRule linear_gamma(double C);

/// g(s) := s + φ(k(1-s)) / (k γ_k). Throws ValidityError if γ_k is too small.
[[nodiscard]] Pgf build_local_pgf(const BranchingMechanism& mech, int k, double gamma_k);

/// h̃(s) := 1 - ψ(k(1-s)) / (k² γ_k). Throws ValidityError if not a pgf.
[[nodiscard]] Pgf build_nonlocal_pgf(const ImmigrationKernel& psi, int k, double gamma_k);

/// k γ_k [g(e^{-z/k}) - e^{-z/k}].
[[nodiscard]] double scaled_phi_k(const Pgf& g, int k, double gamma_k, double z);
/// k² γ_k [1 - h(e^{-z/k})].
[[nodiscard]] double scaled_psi_k(const Pgf& h, int k, double gamma_k, double z);

struct Condition3AReport {
    std::vector<int> ladder;
    std::vector<double> sup_gap;     ///< sup_{x,z} |φ_k(x,z) - φ(x,z)| per rung
    std::vector<double> lipschitz;   ///< sup |Δφ_k / Δz| per rung
    double target_lipschitz = 0.0;
    std::vector<double> x_grid;
    std::vector<double> z_grid;
    bool pass = false;
    std::string message;
};

/// Site pgf g_{[kx]}^{(k)} as a function of (x = i/k, k, γ_k).
using SitePgfBuilder = std::function<Pgf(double x, int k, double gamma_k)>;

/// Audits uniform convergence and uniform z-Lipschitz bounds of the scaled
/// mechanisms on the finite (x, z) grid: x over the field's nodes, z over
/// `z_grid`. Passes iff gaps strictly decrease along the ladder (or are all
/// zero) and every rung's Lipschitz estimate is at most twice the larger of
/// the target's and the first rung's.
[[nodiscard]] Condition3AReport check_condition_3a(const MechanismField& target, std::span<const int> ladder,
                                                   const GammaRule& gamma, std::span<const double> z_grid,
                                                   const SitePgfBuilder& builder = {});

/// Truncated offspring law for fast sampling.
class SamplingTable {
public:
    struct Entry {
        std::uint64_t value = 0;
        double probability = 0.0;
    };

    explicit SamplingTable(std::vector<Entry> entries, double tail_bound = 0.0);

    /// Entries with positive probability, sorted by decreasing probability.
    [[nodiscard]] std::span<const Entry> entries() const noexcept { return entries_; }
    [[nodiscard]] double tail_bound() const noexcept { return tail_bound_; }
    [[nodiscard]] std::uint64_t max_value() const noexcept { return max_value_; }
    [[nodiscard]] bool deterministic() const noexcept { return entries_.size() == 1; }
    [[nodiscard]] double probability_of(std::uint64_t value) const;
    [[nodiscard]] double mean() const;

    /// One draw via the alias table from a uniform u in [0, 1).
    [[nodiscard]] std::uint64_t draw(double u) const;

private:
    std::vector<Entry> entries_;
    std::vector<double> alias_prob_;
    std::vector<std::uint32_t> alias_index_;
    double tail_bound_ = 0.0;
    std::uint64_t max_value_ = 0;
};

/// Folds the tail beyond the certified order into the largest retained count.
[[nodiscard]] SamplingTable make_sampler(const Pgf& g, double delta_tail = kDefaultTailMass,
                                         std::size_t max_order = kDefaultMaxOrder);

}  // namespace gwflow
