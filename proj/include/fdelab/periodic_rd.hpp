#pragma once

#include <optional>
#include <vector>

#include "fdelab/mild_solver.hpp"

namespace fdelab {

/// A time-periodic delayed reaction-diffusion instance on an interval with
/// zero-flux boundaries: scalar logistic growth with delayed crowding and a
/// sinusoidally modulated rate, a(t) = a0 (1 + forcing_amp sin(2 pi t / omega)).
struct RdModel {
    std::vector<double> diffusivities{0.1};
    double length = 1.0;
    double tau = 0.5;
    double omega = 1.0;
    double a0 = 1.0;
    double b = 1.0;           // delayed crowding coefficient; must be positive
    double forcing_amp = 0.0; // relative modulation depth, |amp| <= 1
    std::size_t modes = 16;

    void validate() const;
};

/// Builds the problem with a spatially constant initial history (defaults to
/// a0/(2b)). The reaction is pointwise u(x) * (a(t) - b * u_delayed(x)) and is
/// exactly periodic in t because the phase is reduced modulo omega.
FdeProblem build_delayed_logistic(const RdModel& model,
                                  std::optional<double> initial_value = std::nullopt);

/// One-period solution map Q(omega). Requires the problem period to be set and
/// to lie on the solver node grid.
HistorySegment period_map(const FdeProblem& problem, const SolverConfig& cfg,
                          const HistorySegment& phi);

struct OrbitSearchOptions {
    int max_iters = 100;
    double tol = 1e-8;
    /// Weight rate of the residual norm; defaults to 1/omega.
    std::optional<double> renorm_r;
    /// Finite-difference correction is attempted on stagnation only when the
    /// discretized segment has at most this many unknowns.
    std::size_t newton_dof_cap = 3000;
};

struct PeriodicOrbitResult {
    HistorySegment orbit;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;  // residual per iteration
    double renorm_r = 0.0;
};

/// Damped fixed-point iteration on the period map with adaptive damping and a
/// finite-difference correction fallback on stagnation. Non-convergence is a
/// reported outcome (best iterate returned), not an exception.
PeriodicOrbitResult find_periodic(const FdeProblem& problem, const SolverConfig& cfg,
                                  const HistorySegment& phi0, const OrbitSearchOptions& opts = {});

struct PeriodicityCheck {
    bool passed = false;
    double defect = 0.0;      // max over the second period of sup |u(t+omega) - u(t)|
    double magnitude = 0.0;   // trajectory sup bound
    double tolerance = 0.0;   // defect admitted: tol * (1 + magnitude)
};

/// Integrates two periods from the candidate orbit and measures the shift defect.
PeriodicityCheck verify_periodicity(const FdeProblem& problem, const SolverConfig& cfg,
                                    const HistorySegment& orbit, double tol);

struct BoundednessReport {
    double bound = 0.0;       // sup over probed solutions and times of the segment norm
    bool blow_up = false;
    double blow_up_time = 0.0;
    std::string note;
    double ceiling = 0.0;
};

/// Integrates each probe datum to the horizon and reports the observed bound.
/// Non-finite states, failed stages, or crossing the ceiling are flagged as a
/// hypothesis violation, not thrown.
BoundednessReport boundedness_probe(const FdeProblem& problem, const SolverConfig& cfg,
                                    const std::vector<HistorySegment>& initial_data,
                                    double horizon, double ceiling = 1e8);

/// CSV for an orbit search history: header `iter,residual`.
void write_history_csv(std::ostream& out, const std::vector<double>& history);

} // namespace fdelab
