#include "gwflow/measures.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "gwflow/errors.hpp"

namespace gwflow {

StepMeasure::StepMeasure(double a, std::vector<MeasureAtom> atoms) : a_(a) {
    if (!(a >= 0.0) || !std::isfinite(a)) {
        throw DomainError("measure domain endpoint must be finite and nonnegative");
    }
    const double slack = 1e-12 * std::max(1.0, a);
    for (auto& atom : atoms) {
        if (!(atom.location >= -slack && atom.location <= a + slack)) {
            std::ostringstream msg;
            msg << "atom at " << atom.location << " outside [0, " << a << "]";
            throw DomainError(msg.str());
        }
        if (!(atom.mass >= 0.0) || !std::isfinite(atom.mass)) {
            throw DomainError("atom masses must be finite and nonnegative");
        }
        atom.location = std::clamp(atom.location, 0.0, a);
    }
    std::sort(atoms.begin(), atoms.end(),
              [](const MeasureAtom& l, const MeasureAtom& r) { return l.location < r.location; });
    for (const auto& atom : atoms) {
        if (atom.mass == 0.0) {
            continue;
        }
        if (!atoms_.empty() && atom.location - atoms_.back().location <= slack) {
            atoms_.back().mass += atom.mass;
        } else {
            atoms_.push_back(atom);
        }
    }
}

StepMeasure StepMeasure::lattice(int k, std::span<const std::uint64_t> counts, double a) {
    if (k < 1) {
        throw DomainError("k must be at least 1");
    }
    std::vector<MeasureAtom> atoms;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] != 0) {
            atoms.push_back({static_cast<double>(i) / k, static_cast<double>(counts[i]) / k});
        }
    }
    return {a, std::move(atoms)};
}

double StepMeasure::total_mass() const noexcept {
    double sum = 0.0;
    for (const auto& atom : atoms_) {
        sum += atom.mass;
    }
    return sum;
}

double StepMeasure::cumulative(double x) const noexcept {
    double sum = 0.0;
    for (const auto& atom : atoms_) {
        if (atom.location > x) {
            break;
        }
        sum += atom.mass;
    }
    return sum;
}

double integrate(const StepMeasure& mu, const FunctionOnGrid& f) {
    double sum = 0.0;
    for (const auto& atom : mu.atoms()) {
        const auto index = f.grid().find(atom.location);
        if (!index) {
            std::ostringstream msg;
            msg << "atom at " << atom.location << " is not a grid node";
            throw DomainError(msg.str());
        }
        sum += atom.mass * f[*index];
    }
    return sum;
}

TestFamily::TestFamily(std::vector<FunctionOnGrid> members) : members_(std::move(members)) {
    if (members_.empty()) {
        throw DomainError("test family needs at least h_0");
    }
    for (std::size_t i = 0; i < members_.size(); ++i) {
        const auto& h = members_[i];
        if (!(h.grid() == members_.front().grid())) {
            throw DomainError("test family members must share one grid");
        }
        if (!(h.min() > 0.0) || h.max() > 1.0 + 1e-12) {
            std::ostringstream msg;
            msg << "test function h_" << i << " must take values in (0, 1]";
            throw DomainError(msg.str());
        }
    }
    if (members_.front().min() != 1.0) {
        throw DomainError("h_0 must be identically 1");
    }
}

double TestFamily::truncation_bound() const noexcept { return std::ldexp(1.0, 1 - static_cast<int>(size())); }

TestFamily default_family(double a, GridPtr grid, std::size_t n, double floor) {
    if (n < 1) {
        throw DomainError("test family size must be at least 1");
    }
    if (!grid || std::abs(grid->a() - a) > 1e-12 * std::max(1.0, a) || !(a > 0.0)) {
        throw DomainError("test family grid must cover [0, a] with a > 0");
    }
    if (!(floor > 0.0 && floor < 1.0)) {
        throw DomainError("test family floor must lie in (0, 1)");
    }
    std::vector<FunctionOnGrid> members;
    members.push_back(FunctionOnGrid::constant(grid, 1.0));
    auto add = [&](auto&& fn) {
        if (members.size() >= n) {
            return;
        }
        std::vector<double> values;
        values.reserve(grid->size());
        for (double x : grid->nodes()) {
            values.push_back(std::clamp(fn(x / a), floor, 1.0));
        }
        members.emplace_back(grid, std::move(values));
    };
    add([](double y) { return y; });
    for (int j = 1; members.size() < n; ++j) {
        const double freq = j * std::numbers::pi;
        add([&](double y) { return 0.5 * (1.0 + std::cos(freq * y)); });
        add([&](double y) { return 0.5 * (1.0 + std::sin(freq * y)); });
        add([&](double y) { return std::pow(y, j + 1); });
    }
    return TestFamily(std::move(members));
}

namespace {

void check_domains(const StepMeasure& mu, const StepMeasure& nu) {
    if (mu.a() != nu.a()) {
        throw DomainError("measures live on different domains");
    }
}

}  // namespace

double rho(const StepMeasure& mu, const StepMeasure& nu, const TestFamily& family) {
    check_domains(mu, nu);
    double sum = 0.0;
    double weight = 1.0;
    for (std::size_t i = 0; i < family.size(); ++i) {
        sum += weight * std::min(1.0, std::abs(integrate(mu, family[i]) - integrate(nu, family[i])));
        weight *= 0.5;
    }
    return sum;
}

SeparationBound separation_bound(const StepMeasure& nu, double delta, const TestFamily& family) {
    if (!(delta > 0.0)) {
        throw DomainError("separation radius must be positive");
    }
    SeparationBound out;
    out.n0 = 1;
    while (std::ldexp(1.0, -static_cast<int>(out.n0)) >= delta / 2.0) {
        ++out.n0;
    }
    if (out.n0 >= family.size()) {
        std::ostringstream msg;
        msg << "separation at delta = " << delta << " needs " << out.n0 + 1 << " test functions, family has "
            << family.size();
        throw DomainError(msg.str());
    }
    double top = 0.0;
    for (std::size_t i = 0; i <= out.n0; ++i) {
        top = std::max(top, integrate(nu, family[i]));
    }
    const double eps = delta / (2.0 * static_cast<double>(out.n0));
    out.bound = std::exp(-top) * std::min(std::expm1(eps), -std::expm1(-eps));
    return out;
}

double separation_gap(const StepMeasure& mu, const StepMeasure& nu, const TestFamily& family, std::size_t n0) {
    check_domains(mu, nu);
    if (n0 >= family.size()) {
        throw DomainError("separation index beyond the family");
    }
    double gap = 0.0;
    for (std::size_t i = 0; i <= n0; ++i) {
        gap = std::max(gap, std::abs(std::exp(-integrate(mu, family[i])) - std::exp(-integrate(nu, family[i]))));
    }
    return gap;
}

void write_measure_csv(std::ostream& out, const StepMeasure& mu) {
    const auto old = out.precision(17);
    out << "# a=" << mu.a() << "\nlocation,mass\n";
    for (const auto& atom : mu.atoms()) {
        out << atom.location << ',' << atom.mass << '\n';
    }
    out.precision(old);
}

StepMeasure read_measure_csv(std::istream& in) {
    std::string line;
    std::optional<double> a;
    bool header = false;
    std::vector<MeasureAtom> atoms;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line.rfind("# a=", 0) == 0) {
            a = std::stod(line.substr(4));
            continue;
        }
        if (line.front() == '#') {
            continue;
        }
        if (!header) {
            if (line != "location,mass") {
                throw DomainError("measure CSV must start with a 'location,mass' header");
            }
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw DomainError("malformed measure CSV row: " + line);
        }
        try {
            atoms.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
        } catch (const std::exception&) {
            throw DomainError("malformed measure CSV row: " + line);
        }
    }
    if (!a) {
        throw DomainError("measure CSV lacks the '# a=' line");
    }
    return {*a, std::move(atoms)};
}

}  // namespace gwflow
