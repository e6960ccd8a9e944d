#include "fdelab/field.hpp"

#include <cmath>
#include <limits>

namespace fdelab {

namespace {

void validate_grid(const std::vector<double>& nodes) {
    if (nodes.empty()) throw DimensionError("spatial grid must contain at least one node");
    if (nodes.front() != 0.0) throw DomainError("spatial grid must start at 0");
    for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
        if (!(nodes[j] < nodes[j + 1]))
            throw DomainError("spatial grid nodes must be strictly increasing");
    }
    for (double v : nodes) {
        if (!std::isfinite(v)) throw DomainError("spatial grid nodes must be finite");
    }
}

} // namespace

NodeGrid make_uniform_grid(double length, std::size_t count) {
    if (count == 0) throw DimensionError("grid needs at least one node");
    if (count == 1) {
        if (length != 0.0) throw DomainError("single-node grid must have length 0");
        return std::make_shared<const std::vector<double>>(std::vector<double>{0.0});
    }
    if (!(length > 0.0)) throw DomainError("grid length must be positive");
    std::vector<double> nodes(count);
    const auto m = static_cast<double>(count - 1);
    for (std::size_t j = 0; j < count; ++j) {
        // j/m hits 0 and 1 exactly, so endpoints are exact.
        nodes[j] = length * (static_cast<double>(j) / m);
    }
    nodes.back() = length;
    return std::make_shared<const std::vector<double>>(std::move(nodes));
}

NodeGrid make_grid(std::vector<double> nodes) {
    validate_grid(nodes);
    return std::make_shared<const std::vector<double>>(std::move(nodes));
}

SpatialField::SpatialField(std::size_t components, NodeGrid nodes, std::vector<double> values)
    : components_(components), nodes_(std::move(nodes)), values_(std::move(values)) {
    if (components_ == 0) throw DimensionError("field needs at least one component");
    if (!nodes_) throw DimensionError("field needs a grid");
    validate_grid(*nodes_);
    if (values_.size() != components_ * nodes_->size())
        throw DimensionError("field value count does not match components x nodes");
}

SpatialField::SpatialField(std::size_t components, std::vector<double> nodes,
                           std::vector<double> values)
    : SpatialField(components, make_grid(std::move(nodes)), std::move(values)) {}

SpatialField SpatialField::constant(std::size_t components, NodeGrid nodes, double value) {
    std::vector<double> v(components * nodes->size(), value);
    return SpatialField(components, std::move(nodes), std::move(v));
}

SpatialField SpatialField::zeros(std::size_t components, NodeGrid nodes) {
    return constant(components, std::move(nodes), 0.0);
}

SpatialField SpatialField::zeros_like(const SpatialField& other) {
    return zeros(other.components(), other.grid());
}

bool SpatialField::same_shape(const SpatialField& other) const {
    if (components_ != other.components_) return false;
    if (nodes_ == other.nodes_) return true;
    return *nodes_ == *other.nodes_;
}

bool SpatialField::is_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double sup_norm(const SpatialField& x) {
    double best = 0.0;
    for (double v : x.values()) {
        if (!std::isfinite(v)) throw InvalidFieldError("sup_norm: field has non-finite values");
        best = std::max(best, std::abs(v));
    }
    return best;
}

SpatialField lin_comb(double a, const SpatialField& x, double b, const SpatialField& y) {
    if (!x.same_shape(y)) throw DimensionError("lin_comb: field shapes differ");
    std::vector<double> out(x.values().size());
    auto xv = x.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * xv[i] + b * yv[i];
    return SpatialField(x.components(), x.grid(), std::move(out));
}

SpatialField scale(double a, const SpatialField& x) {
    std::vector<double> out(x.values().begin(), x.values().end());
    for (double& v : out) v *= a;
    return SpatialField(x.components(), x.grid(), std::move(out));
}

SpatialField operator+(const SpatialField& x, const SpatialField& y) {
    return lin_comb(1.0, x, 1.0, y);
}

SpatialField operator-(const SpatialField& x, const SpatialField& y) {
    return lin_comb(1.0, x, -1.0, y);
}

double max_abs_diff(const SpatialField& x, const SpatialField& y) {
    if (!x.same_shape(y)) throw DimensionError("max_abs_diff: field shapes differ");
    double best = 0.0;
    auto xv = x.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < xv.size(); ++i) best = std::max(best, std::abs(xv[i] - yv[i]));
    return best;
}

} // namespace fdelab
