#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fdelab/field.hpp"

namespace fdelab {

/// Abstract one-parameter solution operator family T(t), t >= 0, acting on
/// spatial fields. Models are immutable after construction and apply() is a
/// pure function, so concurrent evaluation needs no synchronization.
class SemigroupModel {
public:
    virtual ~SemigroupModel() = default;

    /// T(t)x. t = 0 returns x unchanged, bit-exact.
    /// Throws DomainError for t < 0 and DimensionError on shape mismatch.
    SpatialField apply(double t, const SpatialField& x) const;

    /// M with sup_norm(T(t)x) <= M * sup_norm(x) for all t >= 0.
    virtual double bound() const = 0;

    /// True when M = 1 holds structurally (then orbit sup norms are attained at t = 0).
    virtual bool is_contraction() const = 0;

    /// True when T(t) is a smoothing/compact operator for every t > 0, which on
    /// these finite models means it is continuous in the uniform operator
    /// topology away from t = 0. Gates the continuity-modulus machinery.
    virtual bool compact_for_positive_t() const = 0;

    /// Induced sup-norm operator norm of T(t).
    virtual double operator_norm(double t) const = 0;

    /// Operator-norm estimate of ||e^{-r s1} T(s1) - e^{-r s2} T(s2)||.
    /// Diagonal (spectral) models report the exact mode-wise maximum; matrix
    /// models report the exact induced norm of the difference.
    virtual double damped_norm_difference(double s1, double s2, double r) const = 0;

    /// Slowest strictly positive decay rate, or 0 when some component of the
    /// dynamics does not decay at all. Used to size orbit-norm time grids.
    virtual double slowest_decay_rate() const = 0;

    /// Number of state components this model acts on.
    virtual std::size_t components() const = 0;

    /// The spatial grid the model naturally lives on ({0} for node-local models).
    virtual NodeGrid default_grid() const = 0;

protected:
    virtual SpatialField do_apply(double t, const SpatialField& x) const = 0;
    virtual void check_compatible(const SpatialField& x) const;
};

/// Diffusion semigroup on [0, length] with zero-flux boundaries, realized in
/// the discrete cosine basis of its own grid. All grid modes are evolved with
/// the eigenvalues of the second-order discrete Laplacian, which makes T(t)
/// the exponential of a Metzler generator: rows of the propagator are convex
/// weights, so constants are fixed and the grid sup norm never grows.
class SpectralNeumannSemigroup final : public SemigroupModel {
public:
    /// `modes` sets the resolved bandwidth; the grid carries 2*modes+1 nodes.
    SpectralNeumannSemigroup(std::vector<double> diffusivities, double length, std::size_t modes);

    double bound() const override { return 1.0; }
    bool is_contraction() const override { return true; }
    bool compact_for_positive_t() const override { return true; }
    double operator_norm(double t) const override;
    double damped_norm_difference(double s1, double s2, double r) const override;
    double slowest_decay_rate() const override;
    std::size_t components() const override { return diffusivities_.size(); }
    NodeGrid default_grid() const override { return grid_; }

    std::size_t mode_count() const { return grid_->size(); }
    std::size_t requested_modes() const { return modes_; }
    double eigenvalue(std::size_t component, std::size_t k) const;
    const std::vector<double>& diffusivities() const { return diffusivities_; }
    double length() const { return length_; }

protected:
    SpatialField do_apply(double t, const SpatialField& x) const override;
    void check_compatible(const SpatialField& x) const override;

private:
    std::vector<double> diffusivities_;
    double length_;
    std::size_t modes_;
    NodeGrid grid_;
    std::vector<double> cosine_;  // cosine_[k * n + j] = cos(pi k j / (n-1))
    std::vector<double> inv_weight_;
    std::vector<double> eigen_;   // eigen_[c * n + k]
};

/// Finite-dimensional semigroup e^{tA} acting on the component vector at each
/// spatial node independently. The generator must not produce unbounded
/// growth; construction rejects matrices with spectrum in the open right
/// half-plane or detectable polynomial growth.
class MatrixSemigroup final : public SemigroupModel {
public:
    /// `entries` is row-major of size*size.
    MatrixSemigroup(std::size_t size, std::vector<double> entries);

    double bound() const override { return bound_; }
    bool is_contraction() const override { return contraction_; }
    bool compact_for_positive_t() const override { return nonzero_; }
    double operator_norm(double t) const override;
    double damped_norm_difference(double s1, double s2, double r) const override;
    double slowest_decay_rate() const override { return slowest_decay_; }
    std::size_t components() const override { return size_; }
    NodeGrid default_grid() const override;

    std::size_t size() const { return size_; }

protected:
    SpatialField do_apply(double t, const SpatialField& x) const override;
    void check_compatible(const SpatialField& x) const override;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    std::size_t size_;
    double bound_;
    bool contraction_;
    bool nonzero_;
    double slowest_decay_;
};

/// The damped family e^{-r t} T(t) over a base model.
class DampedSemigroup final : public SemigroupModel {
public:
    DampedSemigroup(std::shared_ptr<const SemigroupModel> base, double r);

    double bound() const override { return base_->bound(); }
    bool is_contraction() const override { return base_->is_contraction(); }
    bool compact_for_positive_t() const override {
        return base_->compact_for_positive_t() || r_ > 0.0;
    }
    double operator_norm(double t) const override;
    double damped_norm_difference(double s1, double s2, double r) const override;
    double slowest_decay_rate() const override;
    std::size_t components() const override { return base_->components(); }
    NodeGrid default_grid() const override { return base_->default_grid(); }

    double damping() const { return r_; }
    const SemigroupModel& base() const { return *base_; }

protected:
    SpatialField do_apply(double t, const SpatialField& x) const override;
    void check_compatible(const SpatialField& x) const override;

private:
    std::shared_ptr<const SemigroupModel> base_;
    double r_;
};

/// Discrete orbit sup norm: max over the time grid of sup_norm(T(t)x).
/// The grid must contain 0. Contraction models short-circuit to sup_norm(x),
/// where the maximum is provably attained.
double orbit_sup_norm(const SemigroupModel& model, const SpatialField& x,
                      std::span<const double> t_grid);

/// Time grid for orbit sup norms: 0 plus a linear early section and a
/// log-spaced tail out to the horizon where the slowest mode has decayed
/// below 1e-12 (capped for models with non-decaying components).
std::vector<double> orbit_time_grid(const SemigroupModel& model, std::size_t points = 200);

/// Largest delta < eps such that the damped operator family moves by less
/// than eps in operator norm between any s1, s2 in [eps, t] with |s1-s2| < delta.
/// Found by bisection on the model's norm-difference modulus with a built-in
/// safety factor. Requires 0 < eps < t and a norm-continuous model.
double uniform_continuity_delta(const DampedSemigroup& model, double eps, double t);

} // namespace fdelab
