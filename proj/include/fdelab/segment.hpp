#pragma once

#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "fdelab/field.hpp"

namespace fdelab {

using ThetaGrid = std::shared_ptr<const std::vector<double>>;

/// The state of a delay equation: a function on [-tau, 0] with values in the
/// spatial state space, sampled at strictly increasing theta nodes with exact
/// endpoints -tau and 0. Evaluation between nodes is piecewise linear, so the
/// sup over theta of any nodal norm is attained at a node.
class HistorySegment {
public:
    HistorySegment(double tau, ThetaGrid theta_nodes, std::vector<SpatialField> fields);

    /// Uniform theta grid with exact endpoints: theta_j = -tau*(n-1-j)/(n-1).
    static ThetaGrid make_theta_grid(double tau, std::size_t node_count);

    static HistorySegment from_function(double tau, std::size_t node_count,
                                        const std::function<SpatialField(double)>& f);
    static HistorySegment constant(double tau, std::size_t node_count, const SpatialField& value);

    double tau() const { return tau_; }
    std::size_t node_count() const { return theta_.size(); }
    const std::vector<double>& theta_nodes() const { return *theta_nodes_; }
    const ThetaGrid& theta_grid() const { return theta_nodes_; }

    const SpatialField& field(std::size_t j) const { return theta_[j]; }
    /// Value at theta = 0.
    const SpatialField& head() const { return theta_.back(); }

    /// Piecewise-linear interpolant; exact at nodes.
    /// Throws DomainError for theta outside [-tau, 0] (beyond rounding slack).
    SpatialField evaluate(double theta) const;

    /// Same theta grid and same field shape.
    bool same_layout(const HistorySegment& other) const;

private:
    double tau_;
    ThetaGrid theta_nodes_;
    std::vector<SpatialField> theta_;
};

/// Exponential weight data for the history norm sup_theta ||phi(theta)|| * e^{r theta}.
struct RenormWeights {
    double r;
    double tau;

    RenormWeights(double r_, double tau_);
};

/// max over theta nodes of sup_norm(phi(theta)). Exact for the piecewise-linear
/// interpolant (the sup of a convex function on each panel sits at an endpoint).
double segment_sup_norm(const HistorySegment& phi);

/// max over theta nodes of sup_norm(phi(theta)) * e^{r theta}.
/// Satisfies e^{-r tau} * segment_sup_norm <= renorm <= segment_sup_norm.
double renorm(const HistorySegment& phi, const RenormWeights& w);

double renorm_distance(const HistorySegment& a, const HistorySegment& b, const RenormWeights& w);

/// max over nodes of the field-level sup distance.
double sup_distance(const HistorySegment& a, const HistorySegment& b);

HistorySegment seg_lin_comb(double a, const HistorySegment& x, double b, const HistorySegment& y);

/// CSV serialization: header `theta,component,node,value`,
/// one row per (theta node, component, spatial node).
void write_segment_csv(std::ostream& out, const HistorySegment& phi);
std::string segment_to_csv(const HistorySegment& phi);

} // namespace fdelab
