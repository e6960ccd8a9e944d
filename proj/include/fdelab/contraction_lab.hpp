#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fdelab/mild_solver.hpp"
#include "fdelab/rng.hpp"

namespace fdelab {

/// The part of the solution map that transports the initial history: the
/// damped semigroup flow of the head value where t + theta > 0 and the shifted
/// history where t + theta <= 0. Linear in phi.
HistorySegment transport_part(double t, const HistorySegment& phi, double r,
                              const SemigroupModel& model);

/// The accumulated forcing response: the damped Duhamel integral up to
/// t + theta, evaluated with the solver's own exponential-trapezoid quadrature
/// on an already-solved trajectory. Identically zero where t + theta <= 0.
HistorySegment forcing_part(double t, const Trajectory& traj, const FdeProblem& problem,
                            const SolverConfig& cfg);

/// Convenience overload that solves from phi first.
HistorySegment forcing_part(double t, const FdeProblem& problem, const SolverConfig& cfg,
                            const HistorySegment& phi);

// ---------------------------------------------------------------------------
// Segment sampling

enum class SegmentFamily {
    UniformNoise,  // i.i.d. values in [-1, 1] at every (theta, component, node)
    Constant,      // a random field held constant in theta
    TailSpike,     // support concentrated at theta = -tau
    ExpWeighted,   // exp(-rho * theta) times a random field
};

struct SamplePlan {
    double tau = 1.0;
    std::size_t theta_nodes = 65;
    std::size_t components = 1;
    NodeGrid grid;  // spatial grid; defaults to the model grid where one exists
    std::vector<SegmentFamily> families = {
        SegmentFamily::UniformNoise, SegmentFamily::UniformNoise, SegmentFamily::UniformNoise,
        SegmentFamily::Constant, SegmentFamily::TailSpike, SegmentFamily::ExpWeighted};
};

HistorySegment sample_segment(const SamplePlan& plan, SegmentFamily family, Rng& rng);

/// Deterministic mixed-family sample, cycling through plan.families.
std::vector<HistorySegment> sample_segments(const SamplePlan& plan, std::size_t count,
                                            std::uint64_t seed);

SamplePlan plan_for_model(const SemigroupModel& model, double tau, std::size_t theta_nodes);

// ---------------------------------------------------------------------------
// Verified inequalities

/// Combined record for one (t, r) cell of the decomposition checks.
struct DecompositionReport {
    double t = 0.0;
    double r = 0.0;
    double max_transport_ratio = 0.0;  // worst renorm(Lphi)/renorm(phi) over samples
    double bound = 1.0;                // e^{-rt}
    double margin = 0.0;               // bound - max_transport_ratio
    double consistency_residual = 0.0; // worst sup |Q - transport - forcing|
    double consistency_tol = 0.0;
    std::size_t transport_samples = 0;
    std::size_t consistency_samples = 0;

    bool pass(double slack = 1e-12) const {
        return margin >= -slack && consistency_residual <= consistency_tol;
    }
};

/// Asserts renorm(transport_part(t, phi)) <= e^{-rt} renorm(phi) + slack for
/// every sampled phi, at each t (snapped to the segment grid so the nodal
/// inequality is exact). Throws PropertyFailure carrying the witness.
std::vector<DecompositionReport> verify_transport_contraction(
    const SemigroupModel& model, double r, std::span<const double> t_grid,
    std::size_t sample_count, const SamplePlan& plan, std::uint64_t seed, double slack = 1e-12);

struct NormEquivalenceReport {
    double r = 0.0;
    std::size_t samples = 0;
    double worst_lower_margin = 0.0;  // min renorm - e^{-r tau} sup
    double worst_upper_margin = 0.0;  // min sup - renorm
    double spike_gap = 0.0;           // worst |renorm/sup - e^{-r tau}| over tail spikes
    bool passed = false;
};

/// Sandwich e^{-r tau} ||phi|| <= renorm <= ||phi|| on random and adversarial
/// segments; tail spikes must attain the lower bound. Throws PropertyFailure
/// on violation.
NormEquivalenceReport verify_norm_equivalence(double r, std::size_t sample_count,
                                              const SamplePlan& plan, std::uint64_t seed,
                                              double slack = 1e-12, double spike_tol = 1e-10);

struct EquicontinuityReport {
    double t = 0.0;
    double r = 0.0;
    double eps = 0.0;
    double delta = 0.0;
    double forcing_bound = 0.0;      // K: max sup ||Fhat|| along the sampled solutions
    double measured_modulus = 0.0;   // worst oscillation over node pairs closer than delta
    double bound = 0.0;              // (t+5) K eps for t <= tau, (t+3) K eps for t > tau
    bool short_horizon = false;      // which aggregate applied (t <= tau)
    bool passed = false;
};

/// Measures the oscillation of the forcing response over theta pairs closer
/// than the certified continuity modulus and compares it with the aggregate
/// bound. Requires eps < t (and eps < t - tau when t > tau).
EquicontinuityReport equicontinuity_report(double t, const FdeProblem& problem,
                                           const SolverConfig& cfg,
                                           const std::vector<HistorySegment>& sample,
                                           double eps);

struct DiameterReport {
    double t = 0.0;
    double r = 0.0;
    double diameter_before = 0.0;
    double diameter_after = 0.0;
    double bound = 1.0;  // e^{-rt}
    bool passed = false;
};

/// Pairwise renorm diameter of a finite set contracts under the transport part
/// by e^{-rt}. Throws PropertyFailure with the witness pair on violation.
DiameterReport finite_set_diameter_contraction(const std::vector<HistorySegment>& set, double t,
                                               double r, const SemigroupModel& model,
                                               double slack = 1e-12);

/// Sup-norm residual of Q(t)phi - transport - forcing for a single phi.
double decomposition_residual(double t, const FdeProblem& problem, const SolverConfig& cfg,
                              const HistorySegment& phi);

struct CoveringEstimate {
    double lower = 0.0;  // half the max pairwise distance divided by the sample size
    double upper = 0.0;  // radius of a greedy covering with the requested center count
    std::size_t centers = 0;
};

/// Diagnostic covering-radius estimate of a segment cloud in the weighted
/// history norm. Reported, never asserted: a finite sample cannot certify
/// noncompactness, only suggest scale.
CoveringEstimate covering_estimate(const std::vector<HistorySegment>& segments,
                                   std::size_t centers, const RenormWeights& w);

} // namespace fdelab
