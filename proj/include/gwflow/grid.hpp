#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace gwflow {

/// Strictly increasing nodes covering [0, a]. Shared between x- and θ-grids so
/// that x ∨ θ is always a node.
class Grid {
public:
    explicit Grid(std::vector<double> nodes);

    /// n equally spaced nodes on [0, a] (n >= 2, or n == 1 when a == 0).
    static Grid uniform(double a, std::size_t n);

    /// The lattice {i/k : i = 0..[ka]}, with a appended when ka is not an integer.
    static Grid lattice(int k, double a);

    [[nodiscard]] double a() const noexcept { return nodes_.back(); }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return nodes_[i]; }
    [[nodiscard]] std::span<const double> nodes() const noexcept { return nodes_; }

    /// Index of the node equal to x (relative tolerance 1e-9), if any.
    [[nodiscard]] std::optional<std::size_t> find(double x) const;

    /// Index of the nearest node to x (x clamped into [0, a]).
    [[nodiscard]] std::size_t nearest(double x) const;

    /// Trapezoid weights: Σ_i w_i f(x_i) ≈ ∫_0^a f.
    [[nodiscard]] const std::vector<double>& trapezoid_weights() const noexcept { return weights_; }

    friend bool operator==(const Grid& l, const Grid& r) { return l.nodes_ == r.nodes_; }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Values of a function at the nodes of a shared grid.
class FunctionOnGrid {
public:
    FunctionOnGrid(GridPtr grid, std::vector<double> values);

    static FunctionOnGrid constant(GridPtr grid, double value);

    [[nodiscard]] const Grid& grid() const noexcept { return *grid_; }
    [[nodiscard]] const GridPtr& grid_ptr() const noexcept { return grid_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] double min() const;
    [[nodiscard]] double max() const;
    [[nodiscard]] bool nonnegative() const { return min() >= 0.0; }
    /// Bounded away from zero (the C[0,a]^{++} role).
    [[nodiscard]] bool strictly_positive() const { return min() > 0.0; }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Piecewise-linear interpolant of (x, y) samples; constant outside the range.
class Table {
public:
    Table() = default;
    Table(std::vector<double> x, std::vector<double> y);
    static Table constant(double value) { return Table({0.0}, {value}); }

    [[nodiscard]] double operator()(double x) const;
    [[nodiscard]] bool empty() const noexcept { return x_.empty(); }
    [[nodiscard]] std::span<const double> xs() const noexcept { return x_; }
    [[nodiscard]] std::span<const double> ys() const noexcept { return y_; }

private:
    std::vector<double> x_;
    std::vector<double> y_;
};

}  // namespace gwflow
