#include "fdelab/periodic_rd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "fdelab/csv.hpp"

namespace fdelab {

void RdModel::validate() const {
    if (diffusivities.size() != 1)
        throw ConfigError("the delayed-logistic instance is scalar (one diffusivity)");
    if (!(diffusivities[0] > 0.0)) throw ConfigError("diffusivity must be positive");
    if (!(length > 0.0)) throw ConfigError("domain length must be positive");
    if (!(tau > 0.0)) throw ConfigError("delay must be positive");
    if (!(omega > 0.0)) throw ConfigError("period must be positive");
    if (!(a0 > 0.0)) throw ConfigError("growth rate a0 must be positive");
    if (!(b > 0.0))
        throw ConfigError("crowding coefficient b must be positive: the model is "
                          "dissipative only with delayed self-limitation");
    if (!(std::abs(forcing_amp) <= 1.0))
        throw ConfigError("forcing amplitude must satisfy |amp| <= 1");
    if (modes < 1) throw ConfigError("mode count must be at least 1");
}

FdeProblem build_delayed_logistic(const RdModel& model, std::optional<double> initial_value) {
    model.validate();
    auto semigroup = std::make_shared<SpectralNeumannSemigroup>(model.diffusivities, model.length,
                                                                model.modes);
    const double a0 = model.a0;
    const double b = model.b;
    const double amp = model.forcing_amp;
    const double omega = model.omega;
    const double tau = model.tau;

    ForcingFn forcing = [a0, b, amp, omega, tau](double t, const HistorySegment& phi) {
        // Reducing the phase first makes the rate exactly periodic in floating
        // point, so long-horizon runs and period-map compositions agree.
        const double rate =
            amp == 0.0
                ? a0
                : a0 * (1.0 + amp * std::sin(2.0 * std::numbers::pi * std::fmod(t, omega) / omega));
        const SpatialField& now = phi.head();
        const SpatialField delayed = phi.evaluate(-tau);
        return combine(now, delayed,
                       [rate, b](double u, double v) { return u * (rate - b * v); });
    };

    const double value = initial_value.value_or(model.a0 / (2.0 * model.b));
    HistorySegment initial = HistorySegment::constant(
        model.tau, 2, SpatialField::constant(1, semigroup->default_grid(), value));
    return FdeProblem(std::move(semigroup), std::move(forcing), model.tau, std::move(initial),
                      model.omega);
}

HistorySegment period_map(const FdeProblem& problem, const SolverConfig& cfg,
                          const HistorySegment& phi) {
    if (!problem.period) throw UsageError("period map needs a problem with a period");
    return solution_map(problem, cfg, *problem.period, phi);
}

namespace {

Eigen::VectorXd flatten(const HistorySegment& phi) {
    const std::size_t per_field = phi.field(0).values().size();
    Eigen::VectorXd v(static_cast<Eigen::Index>(phi.node_count() * per_field));
    Eigen::Index at = 0;
    for (std::size_t j = 0; j < phi.node_count(); ++j)
        for (double x : phi.field(j).values()) v[at++] = x;
    return v;
}

HistorySegment unflatten(const Eigen::VectorXd& v, const HistorySegment& like) {
    const std::size_t per_field = like.field(0).values().size();
    std::vector<SpatialField> fields;
    fields.reserve(like.node_count());
    Eigen::Index at = 0;
    for (std::size_t j = 0; j < like.node_count(); ++j) {
        std::vector<double> vals(per_field);
        for (double& x : vals) x = v[at++];
        fields.push_back(SpatialField(like.field(0).components(), like.field(0).grid(),
                                      std::move(vals)));
    }
    return HistorySegment(like.tau(), like.theta_grid(), std::move(fields));
}

} // namespace

PeriodicOrbitResult find_periodic(const FdeProblem& problem, const SolverConfig& cfg,
                                  const HistorySegment& phi0, const OrbitSearchOptions& opts) {
    if (!problem.period) throw UsageError("orbit search needs a problem with a period");
    if (!(opts.tol > 0.0)) throw UsageError("orbit search tolerance must be positive");

    const double omega = *problem.period;
    const double r = opts.renorm_r.value_or(1.0 / omega);
    const RenormWeights w(r, problem.tau);

    // Work on the solver grid from the start so all residuals are comparable.
    Trajectory warm = solve_from(problem, cfg, phi0, 0.0);
    HistorySegment phi = warm.segment_at(0.0);

    PeriodicOrbitResult result{phi, std::numeric_limits<double>::infinity(), 0, false, {}, r};
    HistorySegment best = phi;
    double best_residual = std::numeric_limits<double>::infinity();
    double damping = 1.0;
    double prev_residual = std::numeric_limits<double>::infinity();
    int stagnant = 0;

    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        const HistorySegment mapped = period_map(problem, cfg, phi);
        const double residual = renorm_distance(mapped, phi, w);
        result.history.push_back(residual);
        result.iterations = iter;

        if (residual < best_residual) {
            best_residual = residual;
            best = phi;
        }
        if (residual <= opts.tol) {
            result.orbit = phi;
            result.residual = residual;
            result.converged = true;
            return result;
        }

        stagnant = residual > 0.97 * prev_residual ? stagnant + 1 : 0;
        const std::size_t dof = phi.node_count() * phi.field(0).values().size();
        if (stagnant >= 4 && dof <= opts.newton_dof_cap) {
            // Finite-difference correction on the fixed-point residual.
            const Eigen::VectorXd v = flatten(phi);
            const Eigen::VectorXd g = flatten(mapped) - v;
            Eigen::MatrixXd jac(v.size(), v.size());
            for (Eigen::Index col = 0; col < v.size(); ++col) {
                Eigen::VectorXd vp = v;
                const double hfd = 1e-6 * (1.0 + std::abs(v[col]));
                vp[col] += hfd;
                const HistorySegment probe = unflatten(vp, phi);
                const Eigen::VectorXd gp = flatten(period_map(problem, cfg, probe)) - vp;
                jac.col(col) = (gp - g) / hfd;
            }
            const Eigen::VectorXd delta = jac.partialPivLu().solve(-g);
            if (delta.allFinite()) {
                phi = unflatten(v + delta, phi);
                damping = 1.0;
                stagnant = 0;
                prev_residual = residual;
                continue;
            }
            stagnant = 0;
        }

        if (residual > prev_residual) damping = std::max(0.1, 0.5 * damping);
        else damping = std::min(1.0, 1.4 * damping);
        prev_residual = residual;
        phi = damping == 1.0 ? mapped : seg_lin_comb(1.0 - damping, phi, damping, mapped);
    }

    result.orbit = best;
    result.residual = best_residual;
    result.converged = false;
    return result;
}

PeriodicityCheck verify_periodicity(const FdeProblem& problem, const SolverConfig& cfg,
                                    const HistorySegment& orbit, double tol) {
    if (!problem.period) throw UsageError("periodicity check needs a problem with a period");
    if (!(tol > 0.0)) throw UsageError("periodicity tolerance must be positive");
    const double omega = *problem.period;

    const Trajectory traj = solve_from(problem, cfg, orbit, 2.0 * omega);
    const std::size_t i0 = traj.index_of(0.0);
    const std::size_t shift = traj.index_of(omega) - i0;

    PeriodicityCheck check;
    check.magnitude = traj.sup_bound();
    for (std::size_t i = i0; i + shift < traj.node_count(); ++i)
        check.defect = std::max(check.defect, max_abs_diff(traj.field(i + shift), traj.field(i)));
    check.tolerance = tol * (1.0 + check.magnitude);
    check.passed = check.defect <= check.tolerance;
    return check;
}

BoundednessReport boundedness_probe(const FdeProblem& problem, const SolverConfig& cfg,
                                    const std::vector<HistorySegment>& initial_data,
                                    double horizon, double ceiling) {
    if (initial_data.empty()) throw UsageError("boundedness probe needs initial data");
    if (!(horizon > 0.0)) throw UsageError("boundedness probe needs a positive horizon");
    if (problem.period && horizon < *problem.period)
        throw UsageError("boundedness horizon should cover at least one period");

    BoundednessReport report;
    report.ceiling = ceiling;
    for (const auto& phi : initial_data) {
        try {
            const Trajectory traj = solve_from(problem, cfg, phi, horizon);
            for (std::size_t i = 0; i < traj.node_count(); ++i) {
                const SpatialField& f = traj.field(i);
                if (!f.is_finite()) {
                    report.blow_up = true;
                    report.blow_up_time = traj.time(i);
                    report.note = "non-finite state";
                    return report;
                }
                const double norm = sup_norm(f);
                if (norm > ceiling) {
                    report.blow_up = true;
                    report.blow_up_time = traj.time(i);
                    report.note = "state crossed the configured ceiling";
                    return report;
                }
                report.bound = std::max(report.bound, norm);
            }
        } catch (const StiffnessError& err) {
            report.blow_up = true;
            report.blow_up_time = err.time();
            report.note = std::string("stage iteration diverged: ") + err.what();
            return report;
        } catch (const ModelError& err) {
            report.blow_up = true;
            report.blow_up_time = horizon;
            report.note = std::string("model output became invalid: ") + err.what();
            return report;
        }
    }
    return report;
}

void write_history_csv(std::ostream& out, const std::vector<double>& history) {
    out << "iter,residual\n";
    for (std::size_t i = 0; i < history.size(); ++i)
        csv::write_row(out, {csv::fmt(i + 1), csv::fmt(history[i])});
}

} // namespace fdelab
