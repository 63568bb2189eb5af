#include "gwflow/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gwflow/errors.hpp"

namespace gwflow {

double compensated_exp(double x) noexcept {
    if (std::abs(x) < 1e-2) {
        // x²/2 - x³/6 + x⁴/24 - ...
        double term = x * x / 2.0;
        double sum = term;
        for (int n = 3; n <= 9; ++n) {
            term *= -x / n;
            sum += term;
        }
        return sum;
    }
    return std::expm1(-x) + x;
}

namespace {

void check_atoms(const std::vector<Atom>& atoms) {
    for (const auto& atom : atoms) {
        if (!(atom.size > 0.0) || !std::isfinite(atom.size)) {
            throw DomainError("jump sizes must be positive and finite");
        }
        if (!(atom.mass >= 0.0) || !std::isfinite(atom.mass)) {
            throw DomainError("jump masses must be nonnegative and finite");
        }
    }
}

std::vector<Atom> discretize(const StablePanel& p) {
    if (!(p.alpha > 0.0 && p.alpha < 1.0)) {
        throw DomainError("stable panel index must lie in (0, 1)");
    }
    if (!(p.scale > 0.0)) {
        throw DomainError("stable panel scale must be positive");
    }
    if (!(p.eps > 0.0 && p.cap > p.eps)) {
        throw DomainError("stable panel needs 0 < eps < cap");
    }
    if (p.nodes < 1) {
        throw DomainError("stable panel needs at least one node");
    }
    const double ratio = std::log(p.cap / p.eps) / p.nodes;
    std::vector<Atom> atoms;
    atoms.reserve(static_cast<std::size_t>(p.nodes));
    for (int j = 0; j < p.nodes; ++j) {
        const double lo = p.eps * std::exp(ratio * j);
        const double hi = (j + 1 == p.nodes) ? p.cap : p.eps * std::exp(ratio * (j + 1));
        // cell mass and cell second moment of scale · u^{-2-alpha}
        const double m0 = p.scale * (std::pow(lo, -1.0 - p.alpha) - std::pow(hi, -1.0 - p.alpha)) / (1.0 + p.alpha);
        const double m2 = p.scale * (std::pow(hi, 1.0 - p.alpha) - std::pow(lo, 1.0 - p.alpha)) / (1.0 - p.alpha);
        // node matches the cell's second moment, so small-z behaviour is exact
        atoms.push_back({std::sqrt(m2 / m0), m0});
    }
    return atoms;
}

void merge_atoms(std::vector<Atom>& atoms) {
    std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.size < r.size; });
    std::vector<Atom> merged;
    for (const auto& atom : atoms) {
        if (atom.mass == 0.0) {
            continue;
        }
        if (!merged.empty() && merged.back().size == atom.size) {
            merged.back().mass += atom.mass;
        } else {
            merged.push_back(atom);
        }
    }
    atoms = std::move(merged);
}

}  // namespace

double StablePanel::unit_power_scale(double alpha) { return alpha * (1.0 + alpha) / std::tgamma(1.0 - alpha); }

JumpMeasure JumpMeasure::atoms(std::vector<Atom> atoms) {
    check_atoms(atoms);
    JumpMeasure m;
    m.kind_ = Kind::Atoms;
    m.atoms_ = std::move(atoms);
    return m;
}

JumpMeasure JumpMeasure::stable(const StablePanel& panel) {
    JumpMeasure m;
    m.kind_ = Kind::Stable;
    m.atoms_ = discretize(panel);
    m.panel_ = panel;
    return m;
}

double JumpMeasure::small_large_moment() const noexcept {
    double sum = 0.0;
    for (const auto& a : atoms_) {
        sum += a.mass * std::min(a.size, a.size * a.size);
    }
    return sum;
}

double JumpMeasure::first_moment() const noexcept {
    double sum = 0.0;
    for (const auto& a : atoms_) {
        sum += a.mass * a.size;
    }
    return sum;
}

BranchingMechanism::BranchingMechanism(double b, double sigma2, JumpMeasure jumps)
    : b_(b), sigma2_(sigma2), jumps_(std::move(jumps)) {
    if (!std::isfinite(b_)) {
        throw DomainError("drift must be finite");
    }
    if (!(sigma2_ >= 0.0) || !std::isfinite(sigma2_)) {
        throw DomainError("diffusion coefficient must be nonnegative");
    }
}

double BranchingMechanism::operator()(double z) const {
    if (!(z >= 0.0)) {
        throw DomainError("branching mechanism evaluated at negative z");
    }
    double sum = b_ * z + 0.5 * sigma2_ * z * z;
    for (const auto& a : jumps_.support()) {
        sum += a.mass * compensated_exp(z * a.size);
    }
    return sum;
}

double BranchingMechanism::derivative(double z) const {
    if (!(z >= 0.0)) {
        throw DomainError("branching mechanism evaluated at negative z");
    }
    double sum = b_ + sigma2_ * z;
    for (const auto& a : jumps_.support()) {
        sum += a.mass * a.size * one_minus_exp(z * a.size);
    }
    return sum;
}

double BranchingMechanism::default_gamma_constant() const noexcept {
    return sigma2_ + std::abs(b_) + jumps_.small_large_moment() + 1.0;
}

MechanismField::MechanismField(GridPtr grid, std::vector<BranchingMechanism> mechanisms)
    : grid_(std::move(grid)), mechs_(std::move(mechanisms)) {
    if (!grid_ || mechs_.size() != grid_->size()) {
        throw DomainError("mechanism field needs one mechanism per grid node");
    }
}

MechanismField MechanismField::uniform(GridPtr grid, const BranchingMechanism& mech) {
    const auto n = grid->size();
    return {std::move(grid), std::vector<BranchingMechanism>(n, mech)};
}

const BranchingMechanism& MechanismField::at(double x) const { return mechs_[grid_->nearest(x)]; }

double ImmigrationKernel::operator()(double z) const {
    if (!(z >= 0.0)) {
        throw DomainError("immigration mechanism evaluated at negative z");
    }
    double sum = h * z;
    for (const auto& a : atoms) {
        sum += a.mass * one_minus_exp(z * a.size);
    }
    return sum;
}

double ImmigrationKernel::bound() const noexcept {
    double sum = h;
    for (const auto& a : atoms) {
        sum += a.mass * a.size;
    }
    return sum;
}

AdmissibleFamily::AdmissibleFamily(BranchingMechanism phi0, GridPtr grid, std::vector<ImmigrationKernel> kernels)
    : phi0_(std::move(phi0)), grid_(std::move(grid)), kernels_(std::move(kernels)) {
    if (!grid_ || kernels_.size() != grid_->size()) {
        throw DomainError("admissible family needs one kernel per grid node");
    }
    for (const auto& kernel : kernels_) {
        if (!std::isfinite(kernel.h)) {
            throw DomainError("kernel drift must be finite");
        }
        for (const auto& atom : kernel.atoms) {
            if (!(atom.size > 0.0) || !std::isfinite(atom.mass)) {
                throw DomainError("kernel atoms need positive sizes and finite masses");
            }
        }
    }
}

AdmissibleFamily AdmissibleFamily::from_tables(BranchingMechanism phi0, GridPtr grid, const Table& h,
                                               const std::vector<std::pair<double, Table>>& atoms) {
    std::vector<ImmigrationKernel> kernels;
    kernels.reserve(grid->size());
    for (double theta : grid->nodes()) {
        ImmigrationKernel kernel;
        kernel.h = h.empty() ? 0.0 : h(theta);
        for (const auto& [size, mass] : atoms) {
            const double w = mass(theta);
            if (w != 0.0) {
                kernel.atoms.push_back({size, w});
            }
        }
        kernels.push_back(std::move(kernel));
    }
    return {std::move(phi0), std::move(grid), std::move(kernels)};
}

AdmissibleFamily AdmissibleFamily::local_only(BranchingMechanism phi0, GridPtr grid) {
    const auto n = grid->size();
    return {std::move(phi0), std::move(grid), std::vector<ImmigrationKernel>(n)};
}

ImmigrationKernel AdmissibleFamily::kernel_at(double theta) const {
    const double a = grid_->a();
    if (!(theta >= 0.0) || theta > a * (1.0 + 1e-12) + 1e-15) {
        std::ostringstream msg;
        msg << "theta = " << theta << " outside [0, " << a << "]";
        throw DomainError(msg.str());
    }
    if (auto node = grid_->find(theta)) {
        return kernels_[*node];
    }
    const auto nodes = grid_->nodes();
    auto it = std::upper_bound(nodes.begin(), nodes.end(), theta);
    const auto hi = static_cast<std::size_t>(it - nodes.begin());
    const auto lo = hi - 1;
    const double tau = (theta - nodes[lo]) / (nodes[hi] - nodes[lo]);
    ImmigrationKernel out;
    out.h = (1.0 - tau) * kernels_[lo].h + tau * kernels_[hi].h;
    for (const auto& atom : kernels_[lo].atoms) {
        out.atoms.push_back({atom.size, (1.0 - tau) * atom.mass});
    }
    for (const auto& atom : kernels_[hi].atoms) {
        out.atoms.push_back({atom.size, tau * atom.mass});
    }
    merge_atoms(out.atoms);
    return out;
}

bool AdmissibleFamily::is_local() const noexcept {
    return std::all_of(kernels_.begin(), kernels_.end(), [](const ImmigrationKernel& kernel) {
        return kernel.h == 0.0 &&
               std::all_of(kernel.atoms.begin(), kernel.atoms.end(), [](const Atom& a) { return a.mass == 0.0; });
    });
}

AdmissibleFamily AdmissibleFamily::resample(GridPtr grid) const {
    if (std::abs(grid->a() - a()) > 1e-12 * std::max(1.0, a())) {
        throw DomainError("resampling grid must cover the same [0, a]");
    }
    if (*grid == *grid_) {
        return *this;
    }
    std::vector<ImmigrationKernel> kernels;
    kernels.reserve(grid->size());
    for (double theta : grid->nodes()) {
        kernels.push_back(kernel_at(std::min(theta, a())));
    }
    return {phi0_, std::move(grid), std::move(kernels)};
}

double AdmissibleFamily::admissibility_bound() const noexcept {
    double sup = 0.0;
    for (const auto& kernel : kernels_) {
        sup = std::max(sup, kernel.bound());
    }
    return sup;
}

double eval_psi(const AdmissibleFamily& family, double theta, double z) { return family.kernel_at(theta)(z); }

double eval_phi_q(const AdmissibleFamily& family, double q, double z) {
    const double a = family.a();
    if (!(q >= 0.0) || q > a * (1.0 + 1e-12) + 1e-15) {
        std::ostringstream msg;
        msg << "q = " << q << " outside [0, " << a << "]";
        throw DomainError(msg.str());
    }
    const auto nodes = family.grid().nodes();
    double integral = 0.0;
    double left = family.kernel_node(0)(z);
    for (std::size_t i = 1; i < nodes.size() && nodes[i - 1] < q; ++i) {
        const double upper = std::min(nodes[i], q);
        const double right = upper == nodes[i] ? family.kernel_node(i)(z) : family.kernel_at(upper)(z);
        integral += 0.5 * (upper - nodes[i - 1]) * (left + right);
        left = right;
    }
    return family.phi0()(z) - integral;
}

double eval_nonlocal_psi(const AdmissibleFamily& family, std::size_t x_index, std::span<const double> f) {
    const auto& grid = family.grid();
    if (f.size() != grid.size()) {
        throw DomainError("test function must share the family grid");
    }
    if (x_index >= grid.size()) {
        throw DomainError("x is not a node of the family grid");
    }
    const auto& weights = grid.trapezoid_weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double value = f[std::max(x_index, i)];
        if (!(value >= 0.0)) {
            throw DomainError("nonlocal mechanism needs a nonnegative test function");
        }
        const auto& kernel = family.kernel_node(i);
        double integrand = kernel.h * value;
        for (const auto& atom : kernel.atoms) {
            integrand += atom.mass * one_minus_exp(atom.size * value);
        }
        sum += weights[i] * integrand;
    }
    return sum;
}

double eval_nonlocal_psi(const AdmissibleFamily& family, double x, const FunctionOnGrid& f) {
    if (!(f.grid() == family.grid())) {
        throw DomainError("test function must share the family grid");
    }
    if (f.min() < 0.0) {
        throw DomainError("nonlocal mechanism needs a nonnegative test function");
    }
    auto index = family.grid().find(x);
    if (!index) {
        throw DomainError("x is not a node of the family grid");
    }
    return eval_nonlocal_psi(family, *index, f.values());
}

AdmissibilityReport validate_admissible(const AdmissibleFamily& family, std::span<const double> z_grid) {
    static constexpr double kDefaultZ[] = {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
    if (z_grid.empty()) {
        z_grid = kDefaultZ;
    }
    AdmissibilityReport report;
    const auto& grid = family.grid();
    report.q_points = grid.size();
    report.z_points = z_grid.size();
    report.sup_bound = family.admissibility_bound();

    for (std::size_t i = 0; i < grid.size() && report.kernels_nonnegative; ++i) {
        const auto& kernel = family.kernel_node(i);
        bool ok = kernel.h >= 0.0;
        for (const auto& atom : kernel.atoms) {
            ok = ok && atom.mass >= 0.0;
        }
        if (!ok) {
            report.kernels_nonnegative = false;
            report.offending_theta = grid[i];
        }
    }

    for (double z : z_grid) {
        double previous = family.phi0()(z);
        double psi_left = family.kernel_node(0)(z);
        double integral = 0.0;
        const double scale = std::max(1.0, std::abs(previous));
        for (std::size_t i = 1; i < grid.size(); ++i) {
            const double dq = grid[i] - grid[i - 1];
            const double psi_right = family.kernel_node(i)(z);
            integral += 0.5 * dq * (psi_left + psi_right);
            const double current = family.phi0()(z) - integral;
            if (current > previous + 1e-12 * scale) {
                report.monotone_in_q = false;
            }
            report.difference_quotient_residual =
                std::max(report.difference_quotient_residual, std::abs((current - previous) / dq + psi_left));
            previous = current;
            psi_left = psi_right;
        }
    }

    report.pass = report.kernels_nonnegative && report.monotone_in_q && std::isfinite(report.sup_bound);
    std::ostringstream msg;
    msg << "grid of " << report.q_points << " q-nodes on [0, " << family.a() << "] x " << report.z_points
        << " z-points; sup bound " << report.sup_bound;
    if (!report.kernels_nonnegative) {
        msg << "; negative kernel at theta = " << *report.offending_theta;
    }
    if (!report.monotone_in_q) {
        msg << "; q -> phi_q(z) increases somewhere";
    }
    msg << "; difference-quotient residual " << report.difference_quotient_residual
        << " (grid consistency only, smoothness in q is not certified)";
    report.message = msg.str();
    return report;
}

}  // namespace gwflow
