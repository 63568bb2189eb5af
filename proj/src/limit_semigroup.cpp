#include "gwflow/limit_semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "gwflow/errors.hpp"

namespace gwflow {

namespace {

void check_time(double t, const CumulantSolverOptions& opts) {
    if (!(opts.step > 0.0)) {
        throw DomainError("solver step must be positive");
    }
    if (!(t >= 0.0) || t > opts.max_time) {
        std::ostringstream msg;
        msg << "time " << t << " outside [0, " << opts.max_time << "]";
        throw DomainError(msg.str());
    }
}

// Classical RK4 with step t / ceil(t / h). `rhs(state, out)` fills out with
// the time derivative. The same routine serves every solver so that
// degenerate nonlocal systems reproduce the local ones bit for bit.
template <class Rhs>
std::vector<double> rk4(std::vector<double> y, double t, const CumulantSolverOptions& opts, Rhs&& rhs) {
    check_time(t, opts);
    if (t == 0.0) {
        return y;
    }
    const auto steps = static_cast<long long>(std::ceil(t / opts.step - 1e-9));
    const double h = t / static_cast<double>(std::max(steps, 1LL));
    const std::size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (long long s = 0; s < std::max(steps, 1LL); ++s) {
        rhs(y, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
        rhs(tmp, k4);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (!std::isfinite(y[i]) || std::abs(y[i]) > opts.blowup) {
                std::ostringstream msg;
                msg << "cumulant solution left the bounded region at time " << h * static_cast<double>(s + 1)
                    << " (value " << y[i] << ")";
                throw BlowUpError(msg.str());
            }
        }
    }
    return y;
}

// Ψ(x_i, V) for all nodes in O(n · distinct atom sizes): the part θ <= x_i
// sees V(x_i) and uses prefix sums of the kernel weights; the part θ > x_i
// sees V(θ) and is a suffix sum.
class NonlocalOperator {
public:
    explicit NonlocalOperator(const AdmissibleFamily& family) : family_(family) {
        const auto& grid = family.grid();
        const auto& w = grid.trapezoid_weights();
        const std::size_t n = grid.size();
        std::map<double, std::size_t> index;
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& atom : family.kernel_node(i).atoms) {
                index.try_emplace(atom.size, index.size());
            }
        }
        sizes_.resize(index.size());
        for (const auto& [size, d] : index) {
            sizes_[d] = size;
        }
        prefix_h_.assign(n, 0.0);
        prefix_mass_.assign(index.size(), std::vector<double>(n, 0.0));
        double h_acc = 0.0;
        std::vector<double> mass_acc(index.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& kernel = family.kernel_node(i);
            h_acc += w[i] * kernel.h;
            prefix_h_[i] = h_acc;
            for (const auto& atom : kernel.atoms) {
                mass_acc[index.at(atom.size)] += w[i] * atom.mass;
            }
            for (std::size_t d = 0; d < sizes_.size(); ++d) {
                prefix_mass_[d][i] = mass_acc[d];
            }
        }
        local_ = family.is_local();
    }

    [[nodiscard]] bool local() const noexcept { return local_; }

    void apply(const std::vector<double>& v, std::vector<double>& out) const {
        const auto& grid = family_.grid();
        const auto& w = grid.trapezoid_weights();
        const std::size_t n = grid.size();
        double suffix = 0.0;
        for (std::size_t i = n; i-- > 0;) {
            const double vi = std::max(v[i], 0.0);
            double value = vi * prefix_h_[i] + suffix;
            for (std::size_t d = 0; d < sizes_.size(); ++d) {
                value += prefix_mass_[d][i] * one_minus_exp(sizes_[d] * vi);
            }
            out[i] = value;
            suffix += w[i] * family_.kernel_node(i)(vi);
        }
    }

private:
    const AdmissibleFamily& family_;
    std::vector<double> sizes_;
    std::vector<double> prefix_h_;
    std::vector<std::vector<double>> prefix_mass_;
    bool local_ = false;
};

void check_nonnegative(const FunctionOnGrid& f) {
    if (f.size() > 0 && f.min() < 0.0) {
        throw DomainError("cumulant equations need a nonnegative initial function");
    }
}

}  // namespace

double solve_cumulant(const BranchingMechanism& mech, double t, double lambda, const CumulantSolverOptions& opts) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw DomainError("lambda must be finite and nonnegative");
    }
    const auto v = rk4({lambda}, t, opts, [&](const std::vector<double>& y, std::vector<double>& out) {
        out[0] = -mech(std::max(y[0], 0.0));
    });
    return v[0];
}

FunctionOnGrid solve_cumulant_field(const MechanismField& field, double t, const FunctionOnGrid& f,
                                    const CumulantSolverOptions& opts) {
    check_nonnegative(f);
    std::vector<const BranchingMechanism*> mechs;
    mechs.reserve(f.size());
    for (double x : f.grid().nodes()) {
        mechs.push_back(&field.at(x));
    }
    std::vector<double> y(f.values().begin(), f.values().end());
    y = rk4(std::move(y), t, opts, [&](const std::vector<double>& v, std::vector<double>& out) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            out[i] = -(*mechs[i])(std::max(v[i], 0.0));
        }
    });
    return {f.grid_ptr(), std::move(y)};
}

FunctionOnGrid solve_nonlocal_cumulant(const AdmissibleFamily& family, double t, const FunctionOnGrid& f,
                                       const CumulantSolverOptions& opts) {
    check_nonnegative(f);
    const AdmissibleFamily on_grid = family.resample(f.grid_ptr());
    const NonlocalOperator psi(on_grid);
    const auto& phi0 = on_grid.phi0();
    std::vector<double> nonlocal(f.size());
    std::vector<double> y(f.values().begin(), f.values().end());
    y = rk4(std::move(y), t, opts, [&](const std::vector<double>& v, std::vector<double>& out) {
        if (psi.local()) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                out[i] = -phi0(std::max(v[i], 0.0));
            }
            return;
        }
        psi.apply(v, nonlocal);
        for (std::size_t i = 0; i < v.size(); ++i) {
            out[i] = -phi0(std::max(v[i], 0.0)) + nonlocal[i];
        }
    });
    return {f.grid_ptr(), std::move(y)};
}

double laplace_functional(const StepMeasure& mu, const FunctionOnGrid& v) {
    if (v.size() > 0 && v.min() < 0.0) {
        throw DomainError("Laplace functional needs a nonnegative function");
    }
    return std::exp(-integrate(mu, v));
}

std::optional<double> closed_form_cumulant(const BranchingMechanism& mech, double t, double lambda) {
    if (!(t >= 0.0) || !(lambda >= 0.0)) {
        throw DomainError("closed forms need t >= 0 and lambda >= 0");
    }
    const auto& jumps = mech.jumps();
    if (jumps.is_empty()) {
        const double b = mech.b();
        const double s2 = mech.sigma2();
        if (b == 0.0) {
            return 2.0 * lambda / (2.0 + s2 * lambda * t);
        }
        const double decay = std::exp(-b * t);
        const double denom = 1.0 - s2 * lambda * std::expm1(-b * t) / (2.0 * b);
        if (!(denom > 0.0)) {
            return std::nullopt;
        }
        return lambda * decay / denom;
    }
    if (jumps.kind() == JumpMeasure::Kind::Stable && mech.b() == 0.0 && mech.sigma2() == 0.0) {
        const auto& panel = *jumps.panel();
        if (lambda == 0.0) {
            return 0.0;
        }
        const double c = panel.scale / StablePanel::unit_power_scale(panel.alpha);
        return std::pow(std::pow(lambda, -panel.alpha) + panel.alpha * c * t, -1.0 / panel.alpha);
    }
    return std::nullopt;
}

}  // namespace gwflow
