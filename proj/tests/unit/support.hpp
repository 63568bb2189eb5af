#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "gwflow/grid.hpp"
#include "gwflow/mechanisms.hpp"

namespace gwflow::testing {

inline GridPtr uniform_grid(double a, std::size_t n) { return std::make_shared<const Grid>(Grid::uniform(a, n)); }
inline GridPtr lattice_grid(int k, double a) { return std::make_shared<const Grid>(Grid::lattice(k, a)); }

/// Random mechanisms for property tests: drift, diffusion, and up to three atoms.
class MechanismGenerator {
public:
    explicit MechanismGenerator(std::uint64_t seed) : rng_(seed) {}

    BranchingMechanism next() {
        std::uniform_real_distribution<double> b(-1.0, 2.0), s2(0.0, 2.0), u(0.05, 3.0), w(0.0, 1.5);
        std::uniform_int_distribution<int> atoms(0, 3);
        std::vector<Atom> list;
        const int n = atoms(rng_);
        for (int i = 0; i < n; ++i) {
            list.push_back({u(rng_), w(rng_)});
        }
        return {b(rng_), s2(rng_), list.empty() ? JumpMeasure{} : JumpMeasure::atoms(list)};
    }

    ImmigrationKernel next_kernel() {
        std::uniform_real_distribution<double> h(0.0, 2.0), u(0.05, 3.0), w(0.0, 1.5);
        ImmigrationKernel kernel{h(rng_), {}};
        const int n = std::uniform_int_distribution<int>(0, 2)(rng_);
        for (int i = 0; i < n; ++i) {
            kernel.atoms.push_back({u(rng_), w(rng_)});
        }
        return kernel;
    }

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

private:
    std::mt19937_64 rng_;
};

/// φ_0 plus a θ-dependent kernel on `grid`: h_θ = h0 + h1 θ, one atom with mass w0 (1 + θ).
inline AdmissibleFamily sloped_family(const BranchingMechanism& phi0, GridPtr grid, double h0, double h1, double u,
                                      double w0) {
    std::vector<ImmigrationKernel> kernels;
    for (double theta : grid->nodes()) {
        kernels.push_back({h0 + h1 * theta, {{u, w0 * (1.0 + theta)}}});
    }
    return {phi0, std::move(grid), std::move(kernels)};
}

}  // namespace gwflow::testing
