#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "fdelab/segment.hpp"
#include "fdelab/semigroup.hpp"

namespace fdelab {

/// Right-hand side history functional F(t, u_t). Must be continuous in both
/// arguments and map bounded sets to bounded sets; the solver validates shape
/// and finiteness of every output.
using ForcingFn = std::function<SpatialField(double, const HistorySegment&)>;

/// A delayed evolution problem du/dt = A u + F(t, u_t) with initial history.
struct FdeProblem {
    std::shared_ptr<const SemigroupModel> semigroup;
    ForcingFn forcing;  // null means F == 0
    double tau = 0.0;
    HistorySegment initial;
    std::optional<double> period;  // omega, when F is time-periodic

    FdeProblem(std::shared_ptr<const SemigroupModel> semigroup_, ForcingFn forcing_, double tau_,
               HistorySegment initial_, std::optional<double> period_ = std::nullopt);
};

/// Time-stepping parameters. The step must divide the delay so that delayed
/// arguments always land on stored nodes.
struct SolverConfig {
    double step = 0.0;
    double picard_tol = 1e-10;
    int picard_max_iters = 50;
    double damping_r = 0.0;  // r of the damped reformulation; 0 solves the original equation

    /// Number of steps per delay interval; throws on an inconsistent config.
    std::size_t steps_per_delay(double tau) const;
    void validate(double tau) const;
};

/// Dense solution record on the uniform node grid covering [-tau, t_end].
/// Nodes are addressed by index; times are derived, never accumulated.
class Trajectory {
public:
    Trajectory(double tau, std::size_t steps_per_delay, std::vector<SpatialField> fields);

    double tau() const { return tau_; }
    double step() const { return tau_ / static_cast<double>(delay_steps_); }
    std::size_t steps_per_delay() const { return delay_steps_; }
    std::size_t node_count() const { return fields_.size(); }

    /// time(steps_per_delay) == 0 exactly.
    double time(std::size_t i) const;
    double t_end() const { return time(node_count() - 1); }

    const SpatialField& field(std::size_t i) const { return fields_[i]; }

    /// Index of a grid-aligned time; throws UsageError off the grid.
    std::size_t index_of(double t) const;
    const SpatialField& at_time(double t) const { return fields_[index_of(t)]; }

    /// The history segment u_t for grid-aligned t >= 0.
    HistorySegment segment_at(double t) const;

    /// Max sup_norm over all stored nodes.
    double sup_bound() const;

    /// CSV: header `t,component,node,value`.
    void write_csv(std::ostream& out) const;

private:
    double tau_;
    std::size_t delay_steps_;
    std::vector<SpatialField> fields_;
    ThetaGrid theta_grid_;  // shared by all extracted segments
};

/// March the integral form of the problem with the exponential-trapezoid rule;
/// the implicit right endpoint is resolved by fixed-point iteration to
/// cfg.picard_tol (and polished toward rounding level when cheap). t_end snaps
/// up to the node grid. Throws StiffnessError when the stage iteration fails
/// and ModelError when the forcing returns non-finite values.
Trajectory solve(const FdeProblem& problem, const SolverConfig& cfg, double t_end);

/// Same, from an explicit initial history (resampled onto the solver grid).
Trajectory solve_from(const FdeProblem& problem, const SolverConfig& cfg,
                      const HistorySegment& phi, double t_end);

/// The solution map: phi -> u_t. t must lie on the node grid.
HistorySegment solution_map(const FdeProblem& problem, const SolverConfig& cfg, double t,
                            const HistorySegment& phi);

struct ConvergenceRow {
    double step;
    double error;
    double observed_order;  // NaN in the first row
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;

    /// Median of the pairwise observed orders.
    double observed_order() const;
    void write_csv(std::ostream& out) const;
};

/// Errors of the final history segment against the finest-step reference,
/// measured in segment sup norm. Steps must be descending, at least three,
/// and each must divide the delay.
ConvergenceTable convergence_study(const FdeProblem& problem, const SolverConfig& base_cfg,
                                   std::span<const double> steps, double t_end);

} // namespace fdelab
