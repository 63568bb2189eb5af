#include "gwflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gwflow/errors.hpp"

namespace gwflow {

Grid::Grid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) {
        throw DomainError("grid needs at least one node");
    }
    if (nodes_.front() != 0.0) {
        throw DomainError("grid must start at 0");
    }
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (!(nodes_[i] > nodes_[i - 1])) {
            throw DomainError("grid nodes must be strictly increasing");
        }
    }
    if (!std::isfinite(nodes_.back())) {
        throw DomainError("grid endpoint must be finite");
    }
    weights_.assign(nodes_.size(), 0.0);
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        const double half = 0.5 * (nodes_[i] - nodes_[i - 1]);
        weights_[i - 1] += half;
        weights_[i] += half;
    }
}

Grid Grid::uniform(double a, std::size_t n) {
    if (a < 0.0) {
        throw DomainError("grid endpoint must be nonnegative");
    }
    if (a == 0.0) {
        return Grid({0.0});
    }
    if (n < 2) {
        throw DomainError("a uniform grid on [0,a] with a > 0 needs at least 2 nodes");
    }
    std::vector<double> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i] = a * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    nodes.back() = a;
    return Grid(std::move(nodes));
}

Grid Grid::lattice(int k, double a) {
    if (k < 1) {
        throw DomainError("lattice index k must be positive");
    }
    if (a < 0.0) {
        throw DomainError("grid endpoint must be nonnegative");
    }
    const double ka = static_cast<double>(k) * a;
    const auto last = static_cast<std::size_t>(std::floor(ka + 1e-9));
    std::vector<double> nodes;
    nodes.reserve(last + 2);
    for (std::size_t i = 0; i <= last; ++i) {
        nodes.push_back(static_cast<double>(i) / static_cast<double>(k));
    }
    if (std::abs(nodes.back() - a) > 1e-12 * std::max(1.0, a)) {
        nodes.push_back(a);
    } else {
        nodes.back() = std::max(nodes.back(), a);
    }
    return Grid(std::move(nodes));
}

std::optional<std::size_t> Grid::find(double x) const {
    const double tol = 1e-9 * std::max(1.0, a());
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x - tol);
    if (it != nodes_.end() && std::abs(*it - x) <= tol) {
        return static_cast<std::size_t>(it - nodes_.begin());
    }
    return std::nullopt;
}

std::size_t Grid::nearest(double x) const {
    if (x <= nodes_.front()) {
        return 0;
    }
    if (x >= nodes_.back()) {
        return nodes_.size() - 1;
    }
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x);
    const auto hi = static_cast<std::size_t>(it - nodes_.begin());
    const auto lo = hi - 1;
    return (x - nodes_[lo] <= nodes_[hi] - x) ? lo : hi;
}

FunctionOnGrid::FunctionOnGrid(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) {
        throw DomainError("function needs a grid");
    }
    if (values_.size() != grid_->size()) {
        throw DomainError("function has " + std::to_string(values_.size()) + " values for a grid of " +
                          std::to_string(grid_->size()) + " nodes");
    }
}

FunctionOnGrid FunctionOnGrid::constant(GridPtr grid, double value) {
    const auto n = grid->size();
    return {std::move(grid), std::vector<double>(n, value)};
}

double FunctionOnGrid::min() const { return *std::min_element(values_.begin(), values_.end()); }

double FunctionOnGrid::max() const { return *std::max_element(values_.begin(), values_.end()); }

Table::Table(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.empty() || x_.size() != y_.size()) {
        throw DomainError("table needs matching, nonempty x and y");
    }
    for (std::size_t i = 1; i < x_.size(); ++i) {
        if (!(x_[i] > x_[i - 1])) {
            throw DomainError("table abscissae must be strictly increasing");
        }
    }
}

double Table::operator()(double x) const {
    if (x <= x_.front()) {
        return y_.front();
    }
    if (x >= x_.back()) {
        return y_.back();
    }
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const auto hi = static_cast<std::size_t>(it - x_.begin());
    const auto lo = hi - 1;
    const double tau = (x - x_[lo]) / (x_[hi] - x_[lo]);
    return (1.0 - tau) * y_[lo] + tau * y_[hi];
}

}  // namespace gwflow
