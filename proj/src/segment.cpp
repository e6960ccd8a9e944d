#include "fdelab/segment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fdelab/csv.hpp"

namespace fdelab {

HistorySegment::HistorySegment(double tau, ThetaGrid theta_nodes, std::vector<SpatialField> fields)
    : tau_(tau), theta_nodes_(std::move(theta_nodes)), theta_(std::move(fields)) {
    if (!(tau_ > 0.0)) throw DomainError("history segment requires tau > 0");
    if (!theta_nodes_ || theta_nodes_->size() < 2)
        throw DimensionError("history segment needs at least two theta nodes");
    if (theta_.size() != theta_nodes_->size())
        throw DimensionError("field count does not match theta node count");
    const auto& th = *theta_nodes_;
    if (th.front() != -tau_) throw DomainError("first theta node must equal -tau exactly");
    if (th.back() != 0.0) throw DomainError("last theta node must equal 0 exactly");
    for (std::size_t j = 0; j + 1 < th.size(); ++j) {
        if (!(th[j] < th[j + 1])) throw DomainError("theta nodes must be strictly increasing");
    }
    for (std::size_t j = 1; j < theta_.size(); ++j) {
        if (!theta_[j].same_shape(theta_[0]))
            throw DimensionError("all fields of a segment must share one shape");
    }
}

ThetaGrid HistorySegment::make_theta_grid(double tau, std::size_t node_count) {
    if (!(tau > 0.0)) throw DomainError("theta grid requires tau > 0");
    if (node_count < 2) throw DimensionError("theta grid needs at least two nodes");
    std::vector<double> th(node_count);
    const auto m = static_cast<double>(node_count - 1);
    for (std::size_t j = 0; j < node_count; ++j) {
        // (n-1-j)/(n-1) is exactly 1 at j=0 and exactly 0 at j=n-1.
        th[j] = -tau * (static_cast<double>(node_count - 1 - j) / m);
    }
    th.back() = 0.0;
    return std::make_shared<const std::vector<double>>(std::move(th));
}

HistorySegment HistorySegment::from_function(double tau, std::size_t node_count,
                                             const std::function<SpatialField(double)>& f) {
    auto grid = make_theta_grid(tau, node_count);
    std::vector<SpatialField> fields;
    fields.reserve(node_count);
    for (double th : *grid) fields.push_back(f(th));
    return HistorySegment(tau, std::move(grid), std::move(fields));
}

HistorySegment HistorySegment::constant(double tau, std::size_t node_count,
                                        const SpatialField& value) {
    auto grid = make_theta_grid(tau, node_count);
    std::vector<SpatialField> fields(node_count, value);
    return HistorySegment(tau, std::move(grid), std::move(fields));
}

SpatialField HistorySegment::evaluate(double theta) const {
    const auto& th = *theta_nodes_;
    const double slack = 16.0 * std::numeric_limits<double>::epsilon() * tau_;
    if (theta < -tau_ - slack || theta > slack)
        throw DomainError("segment evaluation outside [-tau, 0]");
    theta = std::clamp(theta, -tau_, 0.0);

    auto it = std::lower_bound(th.begin(), th.end(), theta);
    const auto hi = static_cast<std::size_t>(it - th.begin());
    if (hi < th.size() && th[hi] == theta) return theta_[hi];
    const std::size_t lo = hi - 1;
    const double w = (theta - th[lo]) / (th[hi] - th[lo]);
    return lin_comb(1.0 - w, theta_[lo], w, theta_[hi]);
}

bool HistorySegment::same_layout(const HistorySegment& other) const {
    if (tau_ != other.tau_) return false;
    if (theta_nodes_ != other.theta_nodes_ && *theta_nodes_ != *other.theta_nodes_) return false;
    return theta_[0].same_shape(other.theta_[0]);
}

RenormWeights::RenormWeights(double r_, double tau_) : r(r_), tau(tau_) {
    if (!(r >= 0.0)) throw DomainError("renorm weight requires r >= 0");
    if (!(tau > 0.0)) throw DomainError("renorm weight requires tau > 0");
}

double segment_sup_norm(const HistorySegment& phi) {
    double best = 0.0;
    for (std::size_t j = 0; j < phi.node_count(); ++j)
        best = std::max(best, sup_norm(phi.field(j)));
    return best;
}

double renorm(const HistorySegment& phi, const RenormWeights& w) {
    if (phi.tau() != w.tau) throw DimensionError("renorm: segment tau differs from weight tau");
    const auto& th = phi.theta_nodes();
    double best = 0.0;
    for (std::size_t j = 0; j < phi.node_count(); ++j)
        best = std::max(best, sup_norm(phi.field(j)) * std::exp(w.r * th[j]));
    return best;
}

double renorm_distance(const HistorySegment& a, const HistorySegment& b, const RenormWeights& w) {
    if (!a.same_layout(b)) throw DimensionError("renorm_distance: segment layouts differ");
    if (a.tau() != w.tau) throw DimensionError("renorm_distance: tau differs from weight tau");
    const auto& th = a.theta_nodes();
    double best = 0.0;
    for (std::size_t j = 0; j < a.node_count(); ++j)
        best = std::max(best, max_abs_diff(a.field(j), b.field(j)) * std::exp(w.r * th[j]));
    return best;
}

double sup_distance(const HistorySegment& a, const HistorySegment& b) {
    if (!a.same_layout(b)) throw DimensionError("sup_distance: segment layouts differ");
    double best = 0.0;
    for (std::size_t j = 0; j < a.node_count(); ++j)
        best = std::max(best, max_abs_diff(a.field(j), b.field(j)));
    return best;
}

HistorySegment seg_lin_comb(double a, const HistorySegment& x, double b, const HistorySegment& y) {
    if (!x.same_layout(y)) throw DimensionError("seg_lin_comb: segment layouts differ");
    std::vector<SpatialField> fields;
    fields.reserve(x.node_count());
    for (std::size_t j = 0; j < x.node_count(); ++j)
        fields.push_back(lin_comb(a, x.field(j), b, y.field(j)));
    return HistorySegment(x.tau(), x.theta_grid(), std::move(fields));
}

void write_segment_csv(std::ostream& out, const HistorySegment& phi) {
    out << "theta,component,node,value\n";
    const auto& th = phi.theta_nodes();
    for (std::size_t j = 0; j < phi.node_count(); ++j) {
        const auto& f = phi.field(j);
        for (std::size_t c = 0; c < f.components(); ++c) {
            for (std::size_t k = 0; k < f.node_count(); ++k) {
                csv::write_row(out, {csv::fmt(th[j]), csv::fmt(c), csv::fmt(k),
                                     csv::fmt(f(c, k))});
            }
        }
    }
}

std::string segment_to_csv(const HistorySegment& phi) {
    std::ostringstream out;
    write_segment_csv(out, phi);
    return out.str();
}

} // namespace fdelab
