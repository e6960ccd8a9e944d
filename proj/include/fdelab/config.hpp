#pragma once

#include <cstdint>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fdelab/mild_solver.hpp"

namespace fdelab {

/// Flat-sectioned key/value run configuration. Unknown sections or keys are
/// rejected so config drift is caught at parse time, and every downstream
/// constraint is re-validated here before anything runs.
struct RunConfig {
    enum class ModelKind { Spectral, Matrix };
    enum class Reaction { None, Logistic, DelayedFeedback };

    // [model]
    ModelKind kind = ModelKind::Spectral;
    std::vector<double> diffusivities{0.1};
    double length = 1.0;
    std::size_t modes = 16;
    std::size_t matrix_size = 0;
    std::vector<double> matrix_entries;
    double tau = 0.5;
    std::optional<double> omega;
    Reaction reaction = Reaction::Logistic;
    double a0 = 1.0;
    double b = 1.0;
    double forcing_amp = 0.0;
    double feedback_gain = 1.0;
    double initial_value = std::numeric_limits<double>::quiet_NaN();  // NaN: kind-specific default

    // [solver]
    SolverConfig solver{};

    // [experiment]
    std::uint64_t seed = 42;
    std::size_t samples = 200;
    std::vector<double> t_grid;
    std::vector<double> r_grid{0.5, 1.0, 2.0};
    double epsilon = 0.05;
    double horizon = 0.0;
    std::vector<double> steps;
    double order_floor = 1.5;
    double t_end = 0.0;
    int max_iters = 100;
    double tol = 1e-6;
    std::size_t set_size = 10;
    std::size_t consistency_samples = 10;
    std::size_t equicontinuity_samples = 10;

    // [output]
    std::string out_dir = "out";

    /// Builds the configured semigroup model.
    std::shared_ptr<const SemigroupModel> make_semigroup() const;

    /// Builds the configured problem (semigroup + reaction + initial history).
    FdeProblem make_problem() const;

    /// Default theta-node count matching the solver grid.
    std::size_t theta_nodes() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

} // namespace fdelab
