#include "fdelab/contraction_lab.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fdelab/parallel.hpp"

namespace fdelab {

namespace {

double grid_spacing(const HistorySegment& phi) {
    return phi.tau() / static_cast<double>(phi.node_count() - 1);
}

/// Snap t to the segment grid when it is within rounding of a node multiple;
/// the transported inequality is exact only for aligned times.
double snap_to_grid(double t, double spacing) {
    const double q = t / spacing;
    const double rounded = std::round(q);
    if (rounded >= 0.0 && std::abs(q - rounded) <= 1e-9 * std::max(1.0, q))
        return rounded * spacing;
    return t;
}

} // namespace

HistorySegment transport_part(double t, const HistorySegment& phi, double r,
                              const SemigroupModel& model) {
    if (!(t >= 0.0)) throw DomainError("transport part requires t >= 0");
    const auto& th = phi.theta_nodes();
    const double spacing = grid_spacing(phi);
    const double q = t / spacing;
    const double q_round = std::round(q);
    const bool aligned = std::abs(q - q_round) <= 1e-9 * std::max(1.0, q);
    const std::ptrdiff_t shift = aligned ? static_cast<std::ptrdiff_t>(q_round) : 0;
    const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(phi.node_count()) - 1;

    const SpatialField& head = phi.head();
    std::vector<SpatialField> out;
    out.reserve(phi.node_count());
    for (std::size_t j = 0; j < phi.node_count(); ++j) {
        const double s = t + th[j];
        if (s > 0.0) {
            out.push_back(scale(std::exp(-r * s), model.apply(s, head)));
        } else if (aligned) {
            // Exact node lookup: t + theta_j lands on node j + shift.
            const std::ptrdiff_t idx = std::min(last, static_cast<std::ptrdiff_t>(j) + shift);
            out.push_back(phi.field(static_cast<std::size_t>(idx)));
        } else {
            out.push_back(phi.evaluate(s));
        }
    }
    return HistorySegment(phi.tau(), phi.theta_grid(), std::move(out));
}

HistorySegment forcing_part(double t, const Trajectory& traj, const FdeProblem& problem,
                            const SolverConfig& cfg) {
    const std::size_t k = traj.steps_per_delay();
    const double h = traj.step();
    const std::size_t i_t = traj.index_of(t);
    if (i_t < k) throw UsageError("forcing part requires t >= 0 on the node grid");
    const std::size_t m_total = i_t - k;  // steps from 0 to t

    const DampedSemigroup damped(problem.semigroup, cfg.damping_r);
    const auto fhat = [&](std::size_t step_index) {
        const double s = traj.time(k + step_index);
        const HistorySegment seg = traj.segment_at(s);
        SpatialField out = cfg.damping_r == 0.0 ? SpatialField::zeros_like(seg.head())
                                                : scale(cfg.damping_r, seg.head());
        if (problem.forcing) out = out + problem.forcing(s, seg);
        return out;
    };

    // Accumulate the quadrature with the solver's own recurrence; node j of the
    // result is the running integral after m_total - (k - j) steps, identically
    // zero while that count is not positive.
    std::vector<SpatialField> out;
    out.reserve(k + 1);
    const SpatialField zero = SpatialField::zeros_like(traj.field(0));
    const std::size_t zero_prefix = m_total <= k ? (k + 1 - m_total) : 0;
    for (std::size_t j = 0; j < zero_prefix; ++j) out.push_back(zero);

    if (m_total > 0) {
        SpatialField integral = zero;
        SpatialField f_prev = fhat(0);
        for (std::size_t m = 1; m <= m_total; ++m) {
            const SpatialField f_next = fhat(m);
            integral = lin_comb(1.0, damped.apply(h, lin_comb(1.0, integral, 0.5 * h, f_prev)),
                                0.5 * h, f_next);
            f_prev = f_next;
            if (m + k >= m_total) out.push_back(integral);
        }
    }
    return HistorySegment(problem.tau, HistorySegment::make_theta_grid(problem.tau, k + 1),
                          std::move(out));
}

HistorySegment forcing_part(double t, const FdeProblem& problem, const SolverConfig& cfg,
                            const HistorySegment& phi) {
    Trajectory traj = solve_from(problem, cfg, phi, t);
    return forcing_part(t, traj, problem, cfg);
}

// ---------------------------------------------------------------------------
// Sampling

HistorySegment sample_segment(const SamplePlan& plan, SegmentFamily family, Rng& rng) {
    if (!plan.grid) throw UsageError("sample plan needs a spatial grid");
    const std::size_t n = plan.grid->size();
    const std::size_t m = plan.components;

    const auto random_field = [&]() {
        std::vector<double> v(m * n);
        for (double& x : v) x = rng.uniform(-1.0, 1.0);
        return SpatialField(m, plan.grid, std::move(v));
    };

    switch (family) {
        case SegmentFamily::UniformNoise:
            return HistorySegment::from_function(plan.tau, plan.theta_nodes,
                                                 [&](double) { return random_field(); });
        case SegmentFamily::Constant: {
            const SpatialField c = random_field();
            return HistorySegment::constant(plan.tau, plan.theta_nodes, c);
        }
        case SegmentFamily::TailSpike: {
            const SpatialField c = random_field();
            const SpatialField zero = SpatialField::zeros(m, plan.grid);
            bool first = true;
            return HistorySegment::from_function(plan.tau, plan.theta_nodes, [&](double) {
                if (first) {
                    first = false;
                    return c;
                }
                return zero;
            });
        }
        case SegmentFamily::ExpWeighted: {
            const SpatialField c = random_field();
            const double rho = rng.uniform(0.25, 2.5);
            return HistorySegment::from_function(plan.tau, plan.theta_nodes, [&](double th) {
                return scale(std::exp(-rho * th), c);
            });
        }
    }
    throw UsageError("unknown segment family");
}

std::vector<HistorySegment> sample_segments(const SamplePlan& plan, std::size_t count,
                                            std::uint64_t seed) {
    Rng rng(seed);
    std::vector<HistorySegment> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const SegmentFamily family = plan.families[i % plan.families.size()];
        out.push_back(sample_segment(plan, family, rng));
    }
    return out;
}

SamplePlan plan_for_model(const SemigroupModel& model, double tau, std::size_t theta_nodes) {
    SamplePlan plan;
    plan.tau = tau;
    plan.theta_nodes = theta_nodes;
    plan.components = model.components();
    plan.grid = model.default_grid();
    return plan;
}

// ---------------------------------------------------------------------------
// Verifications

std::vector<DecompositionReport> verify_transport_contraction(
    const SemigroupModel& model, double r, std::span<const double> t_grid,
    std::size_t sample_count, const SamplePlan& plan, std::uint64_t seed, double slack) {
    if (sample_count < 1) throw UsageError("contraction sweep needs at least one sample");
    if (!(r >= 0.0)) throw DomainError("contraction sweep requires r >= 0");

    const std::vector<HistorySegment> samples = sample_segments(plan, sample_count, seed);
    const RenormWeights w(r, plan.tau);
    const double spacing = plan.tau / static_cast<double>(plan.theta_nodes - 1);

    std::vector<DecompositionReport> reports;
    reports.reserve(t_grid.size());
    for (double t_raw : t_grid) {
        const double t = snap_to_grid(t_raw, spacing);
        const double bound = std::exp(-r * t);
        DecompositionReport rep;
        rep.t = t;
        rep.r = r;
        rep.bound = bound;
        rep.transport_samples = sample_count;

        // Sample sweep is index-parallel; reduction and witness selection stay
        // sequential so the result is identical for any worker count.
        std::vector<double> before(samples.size()), after(samples.size());
        parallel_for(samples.size(), [&](std::size_t i) {
            before[i] = renorm(samples[i], w);
            after[i] = before[i] == 0.0
                           ? 0.0
                           : renorm(transport_part(t, samples[i], r, model), w);
        });

        double worst = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (before[i] == 0.0) continue;
            if (after[i] > bound * before[i] + slack) {
                std::ostringstream msg;
                msg << "transport contraction violated: renorm " << after[i] << " > " << bound
                    << " * " << before[i] << " + " << slack << " at t = " << t << ", r = " << r;
                throw PropertyFailure(msg.str(), segment_to_csv(samples[i]));
            }
            worst = std::max(worst, after[i] / before[i]);
        }
        rep.max_transport_ratio = worst;
        rep.margin = bound - worst;
        reports.push_back(rep);
    }
    return reports;
}

NormEquivalenceReport verify_norm_equivalence(double r, std::size_t sample_count,
                                              const SamplePlan& plan, std::uint64_t seed,
                                              double slack, double spike_tol) {
    if (sample_count < 1) throw UsageError("norm equivalence needs at least one sample");
    const RenormWeights w(r, plan.tau);
    const double lower_factor = std::exp(-r * plan.tau);

    NormEquivalenceReport rep;
    rep.r = r;
    rep.samples = sample_count;
    rep.worst_lower_margin = std::numeric_limits<double>::infinity();
    rep.worst_upper_margin = std::numeric_limits<double>::infinity();
    rep.spike_gap = 0.0;

    Rng rng(seed);
    for (std::size_t i = 0; i < sample_count; ++i) {
        const SegmentFamily family = plan.families[i % plan.families.size()];
        const HistorySegment phi = sample_segment(plan, family, rng);
        const double sup = segment_sup_norm(phi);
        const double weighted = renorm(phi, w);
        const double lower_margin = weighted - lower_factor * sup;
        const double upper_margin = sup - weighted;
        if (lower_margin < -slack || upper_margin < -slack) {
            std::ostringstream msg;
            msg << "norm sandwich violated at r = " << r << ": sup = " << sup
                << ", weighted = " << weighted;
            throw PropertyFailure(msg.str(), segment_to_csv(phi));
        }
        rep.worst_lower_margin = std::min(rep.worst_lower_margin, lower_margin);
        rep.worst_upper_margin = std::min(rep.worst_upper_margin, upper_margin);
        if (family == SegmentFamily::TailSpike && sup > 0.0) {
            rep.spike_gap = std::max(rep.spike_gap, std::abs(weighted / sup - lower_factor));
            if (rep.spike_gap > spike_tol) {
                std::ostringstream msg;
                msg << "tail spike does not attain the lower bound at r = " << r << " (gap "
                    << rep.spike_gap << ")";
                throw PropertyFailure(msg.str(), segment_to_csv(phi));
            }
        }
    }
    rep.passed = true;
    return rep;
}

EquicontinuityReport equicontinuity_report(double t, const FdeProblem& problem,
                                           const SolverConfig& cfg,
                                           const std::vector<HistorySegment>& sample,
                                           double eps) {
    cfg.validate(problem.tau);
    if (sample.empty()) throw UsageError("equicontinuity needs at least one segment");
    if (!(eps > 0.0) || !(eps < t)) throw UsageError("equicontinuity requires 0 < eps < t");
    const double tau = problem.tau;
    const bool short_horizon = t <= tau;
    if (!short_horizon && !(eps < t - tau))
        throw UsageError("for t > tau the oscillation bound requires eps < t - tau");

    const DampedSemigroup damped(problem.semigroup, cfg.damping_r);
    if (!damped.compact_for_positive_t())
        throw UnsupportedModelError("equicontinuity needs a norm-continuous model");

    EquicontinuityReport rep;
    rep.t = t;
    rep.r = cfg.damping_r;
    rep.eps = eps;
    rep.short_horizon = short_horizon;

    // K: worst combined-functional magnitude along all sampled solutions.
    std::vector<Trajectory> trajectories;
    trajectories.reserve(sample.size());
    double bound_k = 0.0;
    for (const auto& phi : sample) {
        Trajectory traj = solve_from(problem, cfg, phi, t);
        const std::size_t k = traj.steps_per_delay();
        for (std::size_t i = k; i < traj.node_count(); ++i) {
            const double s = traj.time(i);
            const HistorySegment seg = traj.segment_at(s);
            SpatialField f = cfg.damping_r == 0.0 ? SpatialField::zeros_like(seg.head())
                                                  : scale(cfg.damping_r, seg.head());
            if (problem.forcing) f = f + problem.forcing(s, seg);
            bound_k = std::max(bound_k, sup_norm(f));
        }
        trajectories.push_back(std::move(traj));
    }
    rep.forcing_bound = bound_k;

    rep.delta = uniform_continuity_delta(damped, eps, t);

    double modulus = 0.0;
    for (const auto& traj : trajectories) {
        const HistorySegment response = forcing_part(t, traj, problem, cfg);
        const auto& th = response.theta_nodes();
        for (std::size_t j1 = 0; j1 < response.node_count(); ++j1) {
            for (std::size_t j2 = j1 + 1; j2 < response.node_count(); ++j2) {
                if (th[j2] - th[j1] >= rep.delta) break;
                modulus = std::max(modulus, max_abs_diff(response.field(j2), response.field(j1)));
            }
        }
    }
    rep.measured_modulus = modulus;
    rep.bound = (short_horizon ? t + 5.0 : t + 3.0) * bound_k * eps;
    rep.passed = modulus <= rep.bound;
    return rep;
}

DiameterReport finite_set_diameter_contraction(const std::vector<HistorySegment>& set, double t,
                                               double r, const SemigroupModel& model,
                                               double slack) {
    if (set.size() < 2) throw UsageError("diameter contraction needs at least two segments");
    const RenormWeights w(r, set.front().tau());

    std::vector<HistorySegment> image;
    image.reserve(set.size());
    for (const auto& phi : set) image.push_back(transport_part(t, phi, r, model));

    DiameterReport rep;
    rep.t = t;
    rep.r = r;
    rep.bound = std::exp(-r * t);
    for (std::size_t a = 0; a < set.size(); ++a) {
        for (std::size_t b = a + 1; b < set.size(); ++b) {
            const double before = renorm_distance(set[a], set[b], w);
            const double after = renorm_distance(image[a], image[b], w);
            rep.diameter_before = std::max(rep.diameter_before, before);
            rep.diameter_after = std::max(rep.diameter_after, after);
            if (after > rep.bound * before + slack) {
                std::ostringstream msg;
                msg << "pairwise diameter grew beyond the contraction factor at t = " << t
                    << ", r = " << r << " (" << after << " > " << rep.bound << " * " << before
                    << ")";
                throw PropertyFailure(msg.str(),
                                      segment_to_csv(set[a]) + "\n" + segment_to_csv(set[b]));
            }
        }
    }
    rep.passed = rep.diameter_after <= rep.bound * rep.diameter_before + slack;
    return rep;
}

double decomposition_residual(double t, const FdeProblem& problem, const SolverConfig& cfg,
                              const HistorySegment& phi) {
    Trajectory traj = solve_from(problem, cfg, phi, t);
    const HistorySegment q = traj.segment_at(t);
    const HistorySegment initial = traj.segment_at(0.0);
    const HistorySegment transported =
        transport_part(t, initial, cfg.damping_r, *problem.semigroup);
    const HistorySegment response = forcing_part(t, traj, problem, cfg);

    double residual = 0.0;
    for (std::size_t j = 0; j < q.node_count(); ++j) {
        const SpatialField recomposed = transported.field(j) + response.field(j);
        residual = std::max(residual, max_abs_diff(q.field(j), recomposed));
    }
    return residual;
}

CoveringEstimate covering_estimate(const std::vector<HistorySegment>& segments,
                                   std::size_t centers, const RenormWeights& w) {
    if (segments.empty()) throw UsageError("covering estimate needs at least one segment");
    if (centers < 1) throw UsageError("covering estimate needs at least one center");
    centers = std::min(centers, segments.size());

    CoveringEstimate est;
    est.centers = centers;

    double max_pair = 0.0;
    for (std::size_t a = 0; a < segments.size(); ++a)
        for (std::size_t b = a + 1; b < segments.size(); ++b)
            max_pair = std::max(max_pair, renorm_distance(segments[a], segments[b], w));
    est.lower = 0.5 * max_pair / static_cast<double>(segments.size());

    // Greedy farthest-first seeds, then one recentering pass at cluster means.
    std::vector<std::size_t> seed_idx{0};
    std::vector<double> nearest(segments.size(), std::numeric_limits<double>::infinity());
    while (seed_idx.size() < centers) {
        for (std::size_t i = 0; i < segments.size(); ++i)
            nearest[i] = std::min(nearest[i],
                                  renorm_distance(segments[i], segments[seed_idx.back()], w));
        const std::size_t far = static_cast<std::size_t>(
            std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
        if (nearest[far] == 0.0) break;
        seed_idx.push_back(far);
    }

    const auto assign = [&](const std::vector<HistorySegment>& cs) {
        std::vector<std::size_t> owner(segments.size(), 0);
        for (std::size_t i = 0; i < segments.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < cs.size(); ++c) {
                const double d = renorm_distance(segments[i], cs[c], w);
                if (d < best) {
                    best = d;
                    owner[i] = c;
                }
            }
        }
        return owner;
    };

    std::vector<HistorySegment> cs;
    for (std::size_t idx : seed_idx) cs.push_back(segments[idx]);
    std::vector<std::size_t> owner = assign(cs);

    for (std::size_t c = 0; c < cs.size(); ++c) {
        HistorySegment mean = cs[c];
        double count = 0.0;
        bool any = false;
        for (std::size_t i = 0; i < segments.size(); ++i) {
            if (owner[i] != c) continue;
            if (!any) {
                mean = segments[i];
                count = 1.0;
                any = true;
            } else {
                count += 1.0;
                mean = seg_lin_comb((count - 1.0) / count, mean, 1.0 / count, segments[i]);
            }
        }
        if (any) cs[c] = mean;
    }
    owner = assign(cs);

    double radius = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i)
        radius = std::max(radius, renorm_distance(segments[i], cs[owner[i]], w));
    est.upper = radius;
    return est;
}

} // namespace fdelab
