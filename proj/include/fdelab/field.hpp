#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "fdelab/errors.hpp"

namespace fdelab {

/// Shared, immutable spatial grid. Grids are referenced by many fields, so
/// they are passed around as shared pointers and compared by pointer first.
using NodeGrid = std::shared_ptr<const std::vector<double>>;

/// Uniform grid of `count` nodes on [0, length] with exact endpoints.
/// A single-node grid {0} represents a spatially trivial (pure ODE) state.
NodeGrid make_uniform_grid(double length, std::size_t count);

NodeGrid make_grid(std::vector<double> nodes);

/// A vector-valued function sampled on a spatial grid: `components` scalar
/// fields over the same ordered nodes in [0, length]. Values are stored
/// component-major. Immutable after construction.
class SpatialField {
public:
    SpatialField(std::size_t components, NodeGrid nodes, std::vector<double> values);
    SpatialField(std::size_t components, std::vector<double> nodes, std::vector<double> values);

    static SpatialField constant(std::size_t components, NodeGrid nodes, double value);
    static SpatialField zeros(std::size_t components, NodeGrid nodes);
    static SpatialField zeros_like(const SpatialField& other);

    std::size_t components() const { return components_; }
    std::size_t node_count() const { return nodes_->size(); }
    double length() const { return nodes_->back(); }

    const std::vector<double>& nodes() const { return *nodes_; }
    const NodeGrid& grid() const { return nodes_; }

    double operator()(std::size_t component, std::size_t node) const {
        return values_[component * nodes_->size() + node];
    }

    std::span<const double> values() const { return values_; }
    std::span<const double> component(std::size_t c) const {
        return std::span<const double>(values_).subspan(c * nodes_->size(), nodes_->size());
    }

    bool same_shape(const SpatialField& other) const;
    bool is_finite() const;

private:
    std::size_t components_;
    NodeGrid nodes_;
    std::vector<double> values_;
};

/// Maximum of |value| over all components and nodes.
/// Throws InvalidFieldError if any value is non-finite.
double sup_norm(const SpatialField& x);

/// a*x + b*y for fields of identical shape.
SpatialField lin_comb(double a, const SpatialField& x, double b, const SpatialField& y);

SpatialField scale(double a, const SpatialField& x);

SpatialField operator+(const SpatialField& x, const SpatialField& y);
SpatialField operator-(const SpatialField& x, const SpatialField& y);

/// sup-norm of (x - y) without forming the difference field.
double max_abs_diff(const SpatialField& x, const SpatialField& y);

/// Pointwise combination out[i] = f(x[i], y[i]); shapes must match.
template <class Fn>
SpatialField combine(const SpatialField& x, const SpatialField& y, Fn&& f) {
    if (!x.same_shape(y)) throw DimensionError("combine: field shapes differ");
    std::vector<double> out(x.values().begin(), x.values().end());
    auto yv = y.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(out[i], yv[i]);
    return SpatialField(x.components(), x.grid(), std::move(out));
}

} // namespace fdelab
