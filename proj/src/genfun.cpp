#include "gwflow/genfun.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "gwflow/errors.hpp"

namespace gwflow {

namespace {

void check_unit(double s, const char* what) {
    if (!(s >= 0.0 && s <= 1.0)) {
        std::ostringstream msg;
        msg << what << " = " << s << " outside [0, 1]";
        throw DomainError(msg.str());
    }
}

double binomial(std::size_t n, std::size_t m) {
    double c = 1.0;
    for (std::size_t i = 1; i <= m; ++i) {
        c = c * static_cast<double>(n - m + i) / static_cast<double>(i);
    }
    return c;
}

double poisson_log_pmf(double rate, std::size_t n) {
    const double dn = static_cast<double>(n);
    return -rate + dn * std::log(rate) - std::lgamma(dn + 1.0);
}

// Adds weight · P(Poisson(rate) = m) to out[m] for 2 <= m < out.size(),
// walking outward from the mode so no term underflows before it matters.
void add_poisson_tail(std::vector<double>& out, double weight, double rate) {
    if (out.size() <= 2 || weight == 0.0) {
        return;
    }
    const std::size_t last = out.size() - 1;
    const auto mode = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(rate)), 2, last);
    const double at_mode = std::exp(poisson_log_pmf(rate, mode));
    double p = at_mode;
    for (std::size_t m = mode; m <= last; ++m) {
        if (m > mode) {
            p *= rate / static_cast<double>(m);
        }
        if (p < 1e-300) {
            break;
        }
        out[m] += weight * p;
    }
    p = at_mode;
    for (std::size_t m = mode; m > 2; --m) {
        p *= static_cast<double>(m) / rate;
        if (p < 1e-300) {
            break;
        }
        out[m - 1] += weight * p;
    }
}

}  // namespace

Pgf::Pgf() = default;

Pgf Pgf::from_coefficients(std::vector<double> p) {
    if (p.empty()) {
        throw DomainError("a pgf needs at least one coefficient");
    }
    double total = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) {
        if (!std::isfinite(p[n])) {
            throw DomainError("pgf coefficients must be finite");
        }
        if (p[n] < -kCoefficientTolerance) {
            std::ostringstream msg;
            msg << "negative coefficient " << p[n] << " at order " << n;
            throw ValidityError(msg.str(), n);
        }
        p[n] = std::max(p[n], 0.0);
        total += p[n];
    }
    if (std::abs(total - 1.0) > 1e-10) {
        std::ostringstream msg;
        msg << "coefficients sum to " << total << ", not 1";
        throw ValidityError(msg.str(), p.size());
    }
    while (p.size() > 1 && p.back() == 0.0) {
        p.pop_back();
    }
    Pgf g;
    g.explicit_ = true;
    g.coeffs_ = std::move(p);
    return g;
}

Pgf Pgf::constant_one() { return from_coefficients({1.0}); }

Pgf Pgf::from_excess(std::vector<double> poly, std::vector<PoissonTerm> mix) {
    for (double d : poly) {
        if (!std::isfinite(d)) {
            throw DomainError("excess polynomial must be finite");
        }
    }
    for (const auto& term : mix) {
        if (!(term.weight >= 0.0) || !std::isfinite(term.weight) || !(term.rate > 0.0) || !std::isfinite(term.rate)) {
            throw DomainError("Poisson terms need finite weight >= 0 and rate > 0");
        }
    }
    while (!poly.empty() && poly.back() == 0.0) {
        poly.pop_back();
    }
    std::erase_if(mix, [](const PoissonTerm& t) { return t.weight == 0.0; });
    Pgf g;
    g.poly_ = std::move(poly);
    g.mix_ = std::move(mix);
    return g;
}

double Pgf::operator()(double s) const {
    check_unit(s, "s");
    if (explicit_) {
        double acc = 0.0;
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
            acc = acc * s + *it;
        }
        return acc;
    }
    return s + excess(1.0 - s);
}

double Pgf::excess(double w) const {
    check_unit(w, "w");
    if (explicit_) {
        return (*this)(1.0 - w) - (1.0 - w);
    }
    double poly = 0.0;
    for (auto it = poly_.rbegin(); it != poly_.rend(); ++it) {
        poly = (poly + *it) * w;
    }
    double mix = 0.0;
    for (const auto& term : mix_) {
        mix += term.weight * compensated_exp(term.rate * w);
    }
    return poly + mix;
}

double Pgf::complement(double w) const {
    check_unit(w, "w");
    if (explicit_) {
        return 1.0 - (*this)(1.0 - w);
    }
    return w - excess(w);
}

double Pgf::derivative(double s) const {
    check_unit(s, "s");
    if (explicit_) {
        double acc = 0.0;
        for (std::size_t n = coeffs_.size(); n-- > 1;) {
            acc = acc * s + static_cast<double>(n) * coeffs_[n];
        }
        return acc;
    }
    const double w = 1.0 - s;
    double dpoly = 0.0;
    for (std::size_t n = poly_.size(); n-- > 0;) {
        dpoly = dpoly * w + static_cast<double>(n + 1) * poly_[n];
    }
    double dmix = 0.0;
    for (const auto& term : mix_) {
        dmix += term.weight * term.rate * one_minus_exp(term.rate * w);
    }
    return 1.0 - dpoly - dmix;
}

double Pgf::mean() const {
    if (explicit_) {
        return derivative(1.0);
    }
    return 1.0 - (poly_.empty() ? 0.0 : poly_[0]);
}

std::vector<double> Pgf::coefficients(std::size_t order) const {
    std::vector<double> out(order + 1, 0.0);
    if (explicit_) {
        std::copy_n(coeffs_.begin(), std::min(coeffs_.size(), out.size()), out.begin());
        return out;
    }
    if (order >= 1) {
        out[1] = 1.0;
    }
    // Σ_n d_n (1 - s)^n
    for (std::size_t n = 1; n <= poly_.size(); ++n) {
        const double d = poly_[n - 1];
        for (std::size_t m = 0; m <= std::min(n, order); ++m) {
            const double sign = (m % 2 == 0) ? 1.0 : -1.0;
            out[m] += d * sign * binomial(n, m);
        }
    }
    for (const auto& term : mix_) {
        out[0] += term.weight * compensated_exp(term.rate);
        if (order >= 1) {
            out[1] += term.weight * term.rate * std::expm1(-term.rate);
        }
        add_poisson_tail(out, term.weight, term.rate);
    }
    return out;
}

double Pgf::coefficient(std::size_t n) const {
    if (explicit_) {
        return n < coeffs_.size() ? coeffs_[n] : 0.0;
    }
    if (n <= std::max<std::size_t>(poly_.size(), 1)) {
        return coefficients(n)[n];
    }
    double sum = 0.0;
    for (const auto& term : mix_) {
        sum += term.weight * std::exp(poisson_log_pmf(term.rate, n));
    }
    return sum;
}

double Pgf::tail_mass(std::size_t order) const {
    if (explicit_) {
        double sum = 0.0;
        for (std::size_t n = order + 1; n < coeffs_.size(); ++n) {
            sum += coeffs_[n];
        }
        return sum;
    }
    const std::size_t structural = structural_order();
    if (order < structural) {
        const auto head = coefficients(structural);
        double sum = 0.0;
        for (std::size_t n = order + 1; n <= structural; ++n) {
            sum += head[n];
        }
        return sum + tail_mass(structural);
    }
    // Beyond the polynomial degree only the Poisson tails remain:
    // P(N > order) = P(order + 1, λ), the regularized lower gamma function.
    double sum = 0.0;
    for (const auto& term : mix_) {
        sum += term.weight * boost::math::gamma_p(static_cast<double>(order) + 1.0, term.rate);
    }
    return sum;
}

std::size_t Pgf::structural_order() const noexcept {
    if (explicit_) {
        return coeffs_.size() - 1;
    }
    return std::max<std::size_t>(poly_.size(), 1);
}

std::optional<std::size_t> Pgf::certified_order(double tail, std::size_t max_order) const {
    const std::size_t structural = structural_order();
    for (std::size_t n = 0; n <= std::min(structural, max_order); ++n) {
        if (tail_mass(n) <= tail) {
            return n;
        }
    }
    if (structural >= max_order || tail_mass(max_order) > tail) {
        return std::nullopt;
    }
    std::size_t lo = structural;  // tail_mass(lo) > tail
    std::size_t hi = max_order;   // tail_mass(hi) <= tail
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (tail_mass(mid) <= tail) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

void Pgf::validate(double tol) const {
    // Orders above the structural order are nonnegative Poisson weights.
    const auto head = coefficients(structural_order());
    for (std::size_t n = 0; n < head.size(); ++n) {
        if (!std::isfinite(head[n]) || head[n] < -tol) {
            std::ostringstream msg;
            msg << "coefficient of s^" << n << " is " << head[n];
            throw ValidityError(msg.str(), n);
        }
    }
}

double iterate(const Pgf& g, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        s = g(s);
    }
    return s;
}

double iterate_complement(const Pgf& g, double w, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        w = std::clamp(g.complement(w), 0.0, 1.0);
    }
    return w;
}

double CompositePgf::operator()(double s) const {
    double product = 1.0;
    for (const Pgf* f : factors_) {
        product *= (*f)(s);
    }
    return product;
}

double CompositePgf::log_eval(double s) const {
    double sum = 0.0;
    for (const Pgf* f : factors_) {
        sum += std::log((*f)(s));
    }
    return sum;
}

double CompositePgf::mean() const {
    double sum = 0.0;
    for (const Pgf* f : factors_) {
        sum += f->mean();
    }
    return sum;
}

GammaRule linear_gamma(double C) {
    if (!(C > 0.0)) {
        throw DomainError("gamma constant must be positive");
    }
    return [C](int k) { return C * k; };
}

namespace {

void check_scaling(int k, double gamma_k) {
    if (k < 1) {
        throw DomainError("k must be at least 1");
    }
    if (!(gamma_k > 0.0) || !std::isfinite(gamma_k)) {
        throw DomainError("gamma_k must be positive and finite");
    }
}

}  // namespace

Pgf build_local_pgf(const BranchingMechanism& mech, int k, double gamma_k) {
    check_scaling(k, gamma_k);
    const double kd = k;
    std::vector<double> poly{mech.b() / gamma_k, 0.5 * mech.sigma2() * kd / gamma_k};
    std::vector<PoissonTerm> mix;
    for (const auto& atom : mech.jumps().support()) {
        mix.push_back({atom.mass / (kd * gamma_k), kd * atom.size});
    }
    auto g = Pgf::from_excess(std::move(poly), std::move(mix));
    try {
        g.validate();
    } catch (const ValidityError& e) {
        std::ostringstream msg;
        msg << "local pgf at k = " << k << ", gamma_k = " << gamma_k << " is not a pgf: " << e.what()
            << " (increase gamma_k)";
        throw ValidityError(msg.str(), e.offending_order());
    }
    return g;
}

Pgf build_nonlocal_pgf(const ImmigrationKernel& psi, int k, double gamma_k) {
    check_scaling(k, gamma_k);
    const double kd = k;
    double d1 = 1.0 - psi.h / (kd * gamma_k);
    std::vector<PoissonTerm> mix;
    for (const auto& atom : psi.atoms) {
        const double weight = atom.mass / (kd * kd * gamma_k);
        d1 -= atom.mass * atom.size / (kd * gamma_k);
        mix.push_back({weight, kd * atom.size});
    }
    if (std::any_of(mix.begin(), mix.end(), [](const PoissonTerm& t) { return t.weight < 0.0; })) {
        throw ValidityError("immigration measure has negative mass", 2);
    }
    auto h = Pgf::from_excess({d1}, std::move(mix));
    try {
        h.validate();
    } catch (const ValidityError& e) {
        std::ostringstream msg;
        msg << "immigration pgf at k = " << k << ", gamma_k = " << gamma_k << " is not a pgf: " << e.what();
        throw ValidityError(msg.str(), e.offending_order());
    }
    return h;
}

double scaled_phi_k(const Pgf& g, int k, double gamma_k, double z) {
    check_scaling(k, gamma_k);
    if (!(z >= 0.0)) {
        throw DomainError("z must be nonnegative");
    }
    return static_cast<double>(k) * gamma_k * g.excess(one_minus_exp(z / k));
}

double scaled_psi_k(const Pgf& h, int k, double gamma_k, double z) {
    check_scaling(k, gamma_k);
    if (!(z >= 0.0)) {
        throw DomainError("z must be nonnegative");
    }
    const double kd = k;
    return kd * kd * gamma_k * h.complement(one_minus_exp(z / k));
}

Condition3AReport check_condition_3a(const MechanismField& target, std::span<const int> ladder,
                                     const GammaRule& gamma, std::span<const double> z_grid,
                                     const SitePgfBuilder& builder) {
    if (ladder.empty()) {
        throw DomainError("condition audit needs a nonempty ladder");
    }
    if (z_grid.size() < 2) {
        throw DomainError("condition audit needs at least two z points");
    }
    Condition3AReport report;
    report.ladder.assign(ladder.begin(), ladder.end());
    report.z_grid.assign(z_grid.begin(), z_grid.end());
    std::sort(report.z_grid.begin(), report.z_grid.end());
    const auto nodes = target.grid().nodes();
    report.x_grid.assign(nodes.begin(), nodes.end());
    const auto& zs = report.z_grid;

    auto lipschitz_of = [&](auto&& fn) {
        double sup = 0.0;
        for (std::size_t j = 1; j < zs.size(); ++j) {
            const double dz = zs[j] - zs[j - 1];
            if (dz > 0.0) {
                sup = std::max(sup, std::abs(fn(zs[j]) - fn(zs[j - 1])) / dz);
            }
        }
        return sup;
    };

    for (std::size_t i = 0; i < report.x_grid.size(); ++i) {
        const auto& mech = target.node(i);
        report.target_lipschitz =
            std::max(report.target_lipschitz, lipschitz_of([&](double z) { return mech(z); }));
    }

    for (int k : ladder) {
        const double g_k = gamma(k);
        double gap = 0.0;
        double lip = 0.0;
        for (std::size_t i = 0; i < report.x_grid.size(); ++i) {
            const double x = report.x_grid[i];
            const Pgf pgf = builder ? builder(x, k, g_k) : build_local_pgf(target.node(i), k, g_k);
            const auto& mech = target.node(i);
            auto scaled = [&](double z) { return scaled_phi_k(pgf, k, g_k, z); };
            for (double z : zs) {
                gap = std::max(gap, std::abs(scaled(z) - mech(z)));
            }
            lip = std::max(lip, lipschitz_of(scaled));
        }
        report.sup_gap.push_back(gap);
        report.lipschitz.push_back(lip);
    }

    bool decreasing = true;
    const bool all_zero =
        std::all_of(report.sup_gap.begin(), report.sup_gap.end(), [](double g) { return g == 0.0; });
    for (std::size_t r = 1; r < report.sup_gap.size(); ++r) {
        decreasing = decreasing && report.sup_gap[r] < report.sup_gap[r - 1];
    }
    const double lip_cap = 2.0 * std::max(report.target_lipschitz, report.lipschitz.front());
    const bool bounded = std::all_of(report.lipschitz.begin(), report.lipschitz.end(),
                                     [&](double l) { return l <= lip_cap; });
    report.pass = (decreasing || all_zero) && bounded;

    std::ostringstream msg;
    msg << "sup gaps:";
    for (std::size_t r = 0; r < ladder.size(); ++r) {
        msg << " k=" << ladder[r] << ":" << report.sup_gap[r];
    }
    msg << "; Lipschitz cap " << lip_cap;
    if (!(decreasing || all_zero)) {
        msg << "; gaps do not decrease along the ladder";
    }
    if (!bounded) {
        msg << "; Lipschitz bound not uniform";
    }
    report.message = msg.str();
    return report;
}

SamplingTable::SamplingTable(std::vector<Entry> entries, double tail_bound) : tail_bound_(tail_bound) {
    double total = 0.0;
    for (const auto& e : entries) {
        if (!(e.probability >= 0.0) || !std::isfinite(e.probability)) {
            throw DomainError("sampling probabilities must be finite and nonnegative");
        }
        total += e.probability;
    }
    std::erase_if(entries, [](const Entry& e) { return e.probability == 0.0; });
    if (entries.empty() || !(total > 0.0)) {
        throw DomainError("sampling table has no mass");
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& l, const Entry& r) { return l.probability > r.probability; });
    for (auto& e : entries) {
        e.probability /= total;
        max_value_ = std::max(max_value_, e.value);
    }
    entries_ = std::move(entries);

    // Vose's alias method.
    const std::size_t n = entries_.size();
    alias_prob_.assign(n, 1.0);
    alias_index_.resize(n);
    std::iota(alias_index_.begin(), alias_index_.end(), 0u);
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
        scaled[i] = entries_[i].probability * static_cast<double>(n);
        (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
        const auto s = small.back();
        small.pop_back();
        const auto l = large.back();
        alias_prob_[s] = scaled[s];
        alias_index_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
}

double SamplingTable::probability_of(std::uint64_t value) const {
    for (const auto& e : entries_) {
        if (e.value == value) {
            return e.probability;
        }
    }
    return 0.0;
}

double SamplingTable::mean() const {
    double sum = 0.0;
    for (const auto& e : entries_) {
        sum += static_cast<double>(e.value) * e.probability;
    }
    return sum;
}

std::uint64_t SamplingTable::draw(double u) const {
    const double x = u * static_cast<double>(entries_.size());
    auto i = static_cast<std::size_t>(x);
    if (i >= entries_.size()) {
        i = entries_.size() - 1;
    }
    const double frac = x - static_cast<double>(i);
    return frac < alias_prob_[i] ? entries_[i].value : entries_[alias_index_[i]].value;
}

SamplingTable make_sampler(const Pgf& g, double delta_tail, std::size_t max_order) {
    g.validate();
    const auto order = g.certified_order(delta_tail, max_order);
    if (!order) {
        std::ostringstream msg;
        msg << "offspring tail mass above " << delta_tail << " at order " << max_order;
        throw DomainError(msg.str());
    }
    auto p = g.coefficients(*order);
    const double tail = g.tail_mass(*order);
    p.back() += tail;
    std::vector<SamplingTable::Entry> entries;
    for (std::size_t n = 0; n < p.size(); ++n) {
        if (p[n] > 0.0) {
            entries.push_back({n, p[n]});
        }
    }
    return SamplingTable(std::move(entries), tail);
}

}  // namespace gwflow
