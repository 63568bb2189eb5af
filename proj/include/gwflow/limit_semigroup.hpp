#pragma once

// Continuum cumulant equations, integrated with fixed-step classical RK4:
//   local:     dv/dt = -φ(x, v)
//   nonlocal:  dV(x)/dt = -φ_0(V(x)) + Ψ(x, V)

#include <optional>

#include "gwflow/grid.hpp"
#include "gwflow/measures.hpp"
#include "gwflow/mechanisms.hpp"

namespace gwflow {

struct CumulantSolverOptions {
    double step = 1e-3;
    double max_time = 1e6;
    /// Abort when |state| exceeds this or becomes nonfinite.
    double blowup = 1e12;
};

[[nodiscard]] double solve_cumulant(const BranchingMechanism& mech, double t, double lambda,
                                    const CumulantSolverOptions& opts = {});

/// v(t, f)(x) at every node of f's grid, using the field's mechanism nearest x.
[[nodiscard]] FunctionOnGrid solve_cumulant_field(const MechanismField& field, double t, const FunctionOnGrid& f,
                                                  const CumulantSolverOptions& opts = {});

/// V_t f on f's grid (the family is retabulated on that grid if needed).
[[nodiscard]] FunctionOnGrid solve_nonlocal_cumulant(const AdmissibleFamily& family, double t,
                                                     const FunctionOnGrid& f,
                                                     const CumulantSolverOptions& opts = {});

/// exp(-<μ, v>).
[[nodiscard]] double laplace_functional(const StepMeasure& mu, const FunctionOnGrid& v);

/// Analytic v(t, λ) where one is known: drift + Feller diffusion without
/// jumps, or a pure stable panel read as its untruncated power law.
[[nodiscard]] std::optional<double> closed_form_cumulant(const BranchingMechanism& mech, double t, double lambda);

}  // namespace gwflow
