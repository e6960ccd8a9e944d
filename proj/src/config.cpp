#include "fdelab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "fdelab/periodic_rd.hpp"

namespace fdelab {

namespace {

std::string trim(const std::string& s) {
    const auto from = s.find_first_not_of(" \t\r");
    if (from == std::string::npos) return {};
    const auto to = s.find_last_not_of(" \t\r");
    return s.substr(from, to - from + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config value for '" + key + "' is not a number: '" + value + "'");
    }
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty entry in list for '" + key + "'");
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("list for '" + key + "' is empty");
    return out;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    const double v = parse_double(key, value);
    if (!(v >= 0.0) || v != std::floor(v))
        throw ConfigError("config value for '" + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

} // namespace

RunConfig parse_config(std::istream& in) {
    RunConfig cfg;
    std::string section;
    std::string line;
    std::size_t line_no = 0;
    bool omega_set = false;
    bool tgrid_set = false;
    bool reaction_set = false;

    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header: " + line);
            section = trim(line.substr(1, line.size() - 2));
            if (section != "model" && section != "solver" && section != "experiment" &&
                section != "output")
                throw ConfigError("unknown config section [" + section + "]");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value on line " + std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("empty key or value on line " + std::to_string(line_no));

        if (section == "model") {
            if (key == "kind") {
                if (value == "spectral") cfg.kind = RunConfig::ModelKind::Spectral;
                else if (value == "matrix") cfg.kind = RunConfig::ModelKind::Matrix;
                else throw ConfigError("model kind must be 'spectral' or 'matrix'");
            } else if (key == "d") cfg.diffusivities = parse_list(key, value);
            else if (key == "ell") cfg.length = parse_double(key, value);
            else if (key == "modes") cfg.modes = parse_size(key, value);
            else if (key == "size") cfg.matrix_size = parse_size(key, value);
            else if (key == "entries") cfg.matrix_entries = parse_list(key, value);
            else if (key == "tau") cfg.tau = parse_double(key, value);
            else if (key == "omega") { cfg.omega = parse_double(key, value); omega_set = true; }
            else if (key == "reaction") {
                reaction_set = true;
                if (value == "none") cfg.reaction = RunConfig::Reaction::None;
                else if (value == "logistic") cfg.reaction = RunConfig::Reaction::Logistic;
                else if (value == "delayed_feedback")
                    cfg.reaction = RunConfig::Reaction::DelayedFeedback;
                else throw ConfigError("reaction must be none, logistic, or delayed_feedback");
            } else if (key == "a0") cfg.a0 = parse_double(key, value);
            else if (key == "b") cfg.b = parse_double(key, value);
            else if (key == "forcing") cfg.forcing_amp = parse_double(key, value);
            else if (key == "gain") cfg.feedback_gain = parse_double(key, value);
            else if (key == "initial_value") cfg.initial_value = parse_double(key, value);
            else throw ConfigError("unknown key '" + key + "' in [model]");
        } else if (section == "solver") {
            if (key == "h") cfg.solver.step = parse_double(key, value);
            else if (key == "picard_tol") cfg.solver.picard_tol = parse_double(key, value);
            else if (key == "picard_max_iters")
                cfg.solver.picard_max_iters = static_cast<int>(parse_size(key, value));
            else if (key == "r") cfg.solver.damping_r = parse_double(key, value);
            else throw ConfigError("unknown key '" + key + "' in [solver]");
        } else if (section == "experiment") {
            if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_size(key, value));
            else if (key == "samples") cfg.samples = parse_size(key, value);
            else if (key == "t_grid") { cfg.t_grid = parse_list(key, value); tgrid_set = true; }
            else if (key == "r_grid") cfg.r_grid = parse_list(key, value);
            else if (key == "epsilon") cfg.epsilon = parse_double(key, value);
            else if (key == "horizon") cfg.horizon = parse_double(key, value);
            else if (key == "steps") cfg.steps = parse_list(key, value);
            else if (key == "order_floor") cfg.order_floor = parse_double(key, value);
            else if (key == "t_end") cfg.t_end = parse_double(key, value);
            else if (key == "max_iters") cfg.max_iters = static_cast<int>(parse_size(key, value));
            else if (key == "tol") cfg.tol = parse_double(key, value);
            else if (key == "set_size") cfg.set_size = parse_size(key, value);
            else if (key == "consistency_samples") cfg.consistency_samples = parse_size(key, value);
            else if (key == "equicontinuity_samples")
                cfg.equicontinuity_samples = parse_size(key, value);
            else throw ConfigError("unknown key '" + key + "' in [experiment]");
        } else if (section == "output") {
            if (key == "dir") cfg.out_dir = value;
            else throw ConfigError("unknown key '" + key + "' in [output]");
        } else {
            throw ConfigError("key '" + key + "' appears before any section header");
        }
    }

    // Re-validate every downstream constraint now, so commands never start
    // work on a config that a module would reject later.
    if (!(cfg.tau > 0.0)) throw ConfigError("tau must be positive");
    cfg.solver.validate(cfg.tau);
    if (omega_set && !(*cfg.omega > 0.0)) throw ConfigError("omega must be positive");
    if (!reaction_set && cfg.kind == RunConfig::ModelKind::Matrix)
        cfg.reaction = RunConfig::Reaction::None;

    if (cfg.kind == RunConfig::ModelKind::Spectral) {
        if (cfg.diffusivities.empty()) throw ConfigError("spectral model needs diffusivities");
        for (double d : cfg.diffusivities)
            if (!(d > 0.0)) throw ConfigError("diffusivities must be positive");
        if (!(cfg.length > 0.0)) throw ConfigError("ell must be positive");
        if (cfg.modes < 1) throw ConfigError("modes must be at least 1");
    } else {
        if (cfg.matrix_size == 0) throw ConfigError("matrix model needs size >= 1");
        if (cfg.matrix_entries.size() != cfg.matrix_size * cfg.matrix_size)
            throw ConfigError("matrix entries must have size*size values");
    }

    if (cfg.reaction == RunConfig::Reaction::Logistic) {
        if (!(cfg.a0 > 0.0)) throw ConfigError("a0 must be positive");
        if (!(cfg.b > 0.0)) throw ConfigError("b must be positive for a dissipative model");
        if (!(std::abs(cfg.forcing_amp) <= 1.0)) throw ConfigError("|forcing| must be <= 1");
        if (cfg.forcing_amp != 0.0 && !cfg.omega)
            throw ConfigError("time-dependent logistic forcing needs omega");
        if (cfg.kind == RunConfig::ModelKind::Spectral && cfg.diffusivities.size() != 1)
            throw ConfigError("the logistic reaction is scalar; give a single diffusivity");
        if (cfg.kind == RunConfig::ModelKind::Matrix && cfg.matrix_size != 1)
            throw ConfigError("the logistic reaction is scalar; matrix size must be 1");
    }
    if (!(cfg.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(cfg.tol > 0.0)) throw ConfigError("tol must be positive");
    if (cfg.max_iters < 1) throw ConfigError("max_iters must be at least 1");
    if (!tgrid_set) cfg.t_grid = {0.5 * cfg.tau, cfg.tau, 2.0 * cfg.tau};
    for (double r : cfg.r_grid)
        if (!(r >= 0.0)) throw ConfigError("r_grid entries must be >= 0");
    for (double t : cfg.t_grid)
        if (!(t > 0.0)) throw ConfigError("t_grid entries must be positive");

    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

std::shared_ptr<const SemigroupModel> RunConfig::make_semigroup() const {
    if (kind == ModelKind::Spectral)
        return std::make_shared<SpectralNeumannSemigroup>(diffusivities, length, modes);
    return std::make_shared<MatrixSemigroup>(matrix_size, matrix_entries);
}

std::size_t RunConfig::theta_nodes() const {
    return solver.steps_per_delay(tau) + 1;
}

FdeProblem RunConfig::make_problem() const {
    if (kind == ModelKind::Spectral && reaction == Reaction::Logistic) {
        RdModel model;
        model.diffusivities = diffusivities;
        model.length = length;
        model.tau = tau;
        model.omega = omega.value_or(1.0);
        model.a0 = a0;
        model.b = b;
        model.forcing_amp = forcing_amp;
        model.modes = modes;
        std::optional<double> init;
        if (std::isfinite(initial_value)) init = initial_value;
        FdeProblem problem = build_delayed_logistic(model, init);
        if (!omega) problem.period.reset();
        return problem;
    }

    auto semigroup = make_semigroup();
    const double init =
        std::isfinite(initial_value)
            ? initial_value
            : (reaction == Reaction::Logistic ? a0 / (2.0 * b) : 1.0);
    HistorySegment initial = HistorySegment::constant(
        tau, 2, SpatialField::constant(semigroup->components(), semigroup->default_grid(), init));

    ForcingFn forcing;
    if (reaction == Reaction::Logistic) {
        const double a0_ = a0, b_ = b, amp = forcing_amp, tau_ = tau;
        const double omega_ = omega.value_or(1.0);
        forcing = [a0_, b_, amp, omega_, tau_](double t, const HistorySegment& phi) {
            const double rate =
                amp == 0.0 ? a0_
                           : a0_ * (1.0 + amp * std::sin(2.0 * std::numbers::pi *
                                                         std::fmod(t, omega_) / omega_));
            return combine(phi.head(), phi.evaluate(-tau_),
                           [rate, b_](double u, double v) { return u * (rate - b_ * v); });
        };
    } else if (reaction == Reaction::DelayedFeedback) {
        const double gain = feedback_gain, tau_ = tau;
        forcing = [gain, tau_](double, const HistorySegment& phi) {
            return scale(-gain, phi.evaluate(-tau_));
        };
    }
    return FdeProblem(std::move(semigroup), std::move(forcing), tau, std::move(initial), omega);
}

} // namespace fdelab
